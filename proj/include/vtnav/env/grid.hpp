#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vtnav::env {

inline constexpr double kCellSize = 0.25;         // metres per cell, one MoveAhead
inline constexpr double kSuccessDistance = 1.5;   // metres, strict
inline constexpr int kRotationStep = 45;          // degrees
inline constexpr int kPitchStep = 30;             // degrees
inline constexpr int kMaxPitch = 30;
inline constexpr double kFieldOfView = 90.0;      // degrees, horizontal
inline constexpr double kViewRange = 5.0;         // metres
inline constexpr double kStepPenalty = -0.001;
inline constexpr double kSuccessReward = 5.0;
inline constexpr int kDefaultMaxSteps = 50;

struct StateError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

enum class Action : int { MoveAhead = 0, RotateLeft, RotateRight, LookUp, LookDown, Done };
inline constexpr int kNumActions = 6;
inline constexpr std::array<Action, kNumActions> kAllActions{Action::MoveAhead, Action::RotateLeft,
                                                             Action::RotateRight, Action::LookUp,
                                                             Action::LookDown,  Action::Done};

std::string_view to_string(Action a);
std::optional<Action> parse_action(std::string_view name);
inline int index_of(Action a) { return static_cast<int>(a); }
Action action_from_index(int i);

enum class HeightBand : int { Low = 0, Mid = 1, High = 2 };
std::string_view to_string(HeightBand b);
std::optional<HeightBand> parse_band(std::string_view name);

struct SceneObject {
    int class_id = 0;
    int x = 0;
    int y = 0;
    HeightBand band = HeightBand::Mid;
    double radius = 0.2;  // metres
    bool operator==(const SceneObject&) const = default;
};

// heading: degrees clockwise from +y, multiple of 45 in [0, 360).
// pitch: degrees, positive looks up, one of -30, 0, +30.
struct AgentPose {
    int x = 0;
    int y = 0;
    int heading = 0;
    int pitch = 0;
    bool operator==(const AgentPose&) const = default;
    auto operator<=>(const AgentPose&) const = default;
};

std::string to_string(const AgentPose& p);

class GridScene {
public:
    GridScene() = default;
    GridScene(std::string id, std::uint64_t seed, int width, int height, std::vector<std::uint8_t> obstacles,
              std::vector<SceneObject> objects, int num_classes);

    const std::string& id() const { return id_; }
    std::uint64_t seed() const { return seed_; }
    int width() const { return width_; }
    int height() const { return height_; }
    int num_classes() const { return num_classes_; }
    const std::vector<std::uint8_t>& obstacle_mask() const { return obstacles_; }
    const std::vector<SceneObject>& objects() const { return objects_; }

    bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
    bool is_obstacle(int x, int y) const { return obstacles_[static_cast<std::size_t>(y * width_ + x)] != 0; }
    bool is_free(int x, int y) const { return in_bounds(x, y) && !is_obstacle(x, y); }
    int free_cell_count() const;

    // Sorted distinct classes that have at least one instance.
    std::vector<int> present_classes() const;
    bool has_class(int class_id) const;

    bool operator==(const GridScene&) const = default;

private:
    std::string id_;
    std::uint64_t seed_ = 0;
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> obstacles_;
    std::vector<SceneObject> objects_;
    int num_classes_ = 22;
};

bool is_valid_pose(const GridScene& scene, const AgentPose& pose);
// Unit cell offset of MoveAhead for a heading.
std::array<int, 2> heading_offset(int heading);

}  // namespace vtnav::env
