#include "vtnav/env/grid.hpp"

#include <algorithm>
#include <set>

namespace vtnav::env {

std::string_view to_string(Action a) {
    switch (a) {
        case Action::MoveAhead: return "MoveAhead";
        case Action::RotateLeft: return "RotateLeft";
        case Action::RotateRight: return "RotateRight";
        case Action::LookUp: return "LookUp";
        case Action::LookDown: return "LookDown";
        case Action::Done: return "Done";
    }
    return "?";
}

std::optional<Action> parse_action(std::string_view name) {
    for (Action a : kAllActions)
        if (to_string(a) == name) return a;
    return std::nullopt;
}

Action action_from_index(int i) {
    if (i < 0 || i >= kNumActions) throw std::out_of_range("action index " + std::to_string(i));
    return static_cast<Action>(i);
}

std::string_view to_string(HeightBand b) {
    switch (b) {
        case HeightBand::Low: return "low";
        case HeightBand::Mid: return "mid";
        case HeightBand::High: return "high";
    }
    return "?";
}

std::optional<HeightBand> parse_band(std::string_view name) {
    for (HeightBand b : {HeightBand::Low, HeightBand::Mid, HeightBand::High})
        if (to_string(b) == name) return b;
    return std::nullopt;
}

std::string to_string(const AgentPose& p) {
    return "(" + std::to_string(p.x) + "," + std::to_string(p.y) + "," + std::to_string(p.heading) + "," +
           std::to_string(p.pitch) + ")";
}

GridScene::GridScene(std::string id, std::uint64_t seed, int width, int height, std::vector<std::uint8_t> obstacles,
                     std::vector<SceneObject> objects, int num_classes)
    : id_(std::move(id)),
      seed_(seed),
      width_(width),
      height_(height),
      obstacles_(std::move(obstacles)),
      objects_(std::move(objects)),
      num_classes_(num_classes) {
    if (width_ <= 0 || height_ <= 0) throw std::invalid_argument("scene dimensions must be positive");
    if (obstacles_.size() != static_cast<std::size_t>(width_ * height_))
        throw std::invalid_argument("obstacle mask size does not match scene dimensions");
    for (const auto& o : objects_) {
        if (o.class_id < 0 || o.class_id >= num_classes_)
            throw std::invalid_argument("object class " + std::to_string(o.class_id) + " outside [0, C)");
        if (!in_bounds(o.x, o.y)) throw std::invalid_argument("object outside scene bounds");
        if (is_obstacle(o.x, o.y)) throw std::invalid_argument("object placed on an obstacle cell");
    }
}

int GridScene::free_cell_count() const {
    return static_cast<int>(std::count(obstacles_.begin(), obstacles_.end(), std::uint8_t{0}));
}

std::vector<int> GridScene::present_classes() const {
    std::set<int> s;
    for (const auto& o : objects_) s.insert(o.class_id);
    return {s.begin(), s.end()};
}

bool GridScene::has_class(int class_id) const {
    return std::any_of(objects_.begin(), objects_.end(), [&](const SceneObject& o) { return o.class_id == class_id; });
}

bool is_valid_pose(const GridScene& scene, const AgentPose& pose) {
    return scene.is_free(pose.x, pose.y) && pose.heading >= 0 && pose.heading < 360 &&
           pose.heading % kRotationStep == 0 && pose.pitch % kPitchStep == 0 && pose.pitch >= -kMaxPitch &&
           pose.pitch <= kMaxPitch;
}

std::array<int, 2> heading_offset(int heading) {
    switch (((heading % 360) + 360) % 360) {
        case 0: return {0, 1};
        case 45: return {1, 1};
        case 90: return {1, 0};
        case 135: return {1, -1};
        case 180: return {0, -1};
        case 225: return {-1, -1};
        case 270: return {-1, 0};
        case 315: return {-1, 1};
        default: throw StateError("heading must be a multiple of 45 degrees");
    }
}

}  // namespace vtnav::env
