#include "vtnav/env/navigation.hpp"

#include <cmath>
#include <cstdlib>
#include <numbers>

namespace vtnav::env {

std::vector<std::array<int, 2>> supercover_cells(int x0, int y0, int x1, int y1) {
    std::vector<std::array<int, 2>> cells;
    const int dx = x1 - x0, dy = y1 - y0;
    const int nx = std::abs(dx), ny = std::abs(dy);
    const int sx = dx > 0 ? 1 : -1, sy = dy > 0 ? 1 : -1;
    int px = x0, py = y0;
    int ix = 0, iy = 0;
    while (ix < nx || iy < ny) {
        // Compare where the segment crosses the next vertical vs horizontal grid line.
        const long decision = static_cast<long>(1 + 2 * ix) * ny - static_cast<long>(1 + 2 * iy) * nx;
        if (decision == 0) {
            // Exactly through a corner: both side cells are touched.
            cells.push_back({px + sx, py});
            cells.push_back({px, py + sy});
            px += sx;
            py += sy;
            ++ix;
            ++iy;
        } else if (decision < 0) {
            px += sx;
            ++ix;
        } else {
            py += sy;
            ++iy;
        }
        if (px != x1 || py != y1) cells.push_back({px, py});
    }
    // Corner cells adjacent to the endpoint may coincide with it.
    std::erase_if(cells, [&](const std::array<int, 2>& c) {
        return (c[0] == x1 && c[1] == y1) || (c[0] == x0 && c[1] == y0);
    });
    return cells;
}

bool line_of_sight(const GridScene& scene, int x0, int y0, int x1, int y1) {
    for (const auto& c : supercover_cells(x0, y0, x1, y1))
        if (!scene.in_bounds(c[0], c[1]) || scene.is_obstacle(c[0], c[1])) return false;
    return true;
}

double bearing_to(const AgentPose& pose, int x, int y) {
    const double dx = x - pose.x, dy = y - pose.y;
    const double absolute = std::atan2(dx, dy) * 180.0 / std::numbers::pi;  // clockwise from +y
    double b = absolute - pose.heading;
    while (b > 180.0) b -= 360.0;
    while (b <= -180.0) b += 360.0;
    return b;
}

bool band_visible_at_pitch(HeightBand band, int pitch) {
    switch (band) {
        case HeightBand::Low: return pitch <= 0;
        case HeightBand::Mid: return true;
        case HeightBand::High: return pitch >= 0;
    }
    return false;
}

std::vector<VisibleObject> visible_objects(const GridScene& scene, const AgentPose& pose) {
    if (!is_valid_pose(scene, pose)) throw StateError("invalid pose " + to_string(pose));
    std::vector<VisibleObject> out;
    const auto& objects = scene.objects();
    for (std::size_t i = 0; i < objects.size(); ++i) {
        const auto& o = objects[i];
        if (o.x == pose.x && o.y == pose.y) continue;  // underfoot, outside the frustum
        const double dist = std::hypot(o.x - pose.x, o.y - pose.y) * kCellSize;
        if (dist > kViewRange) continue;
        const double bearing = bearing_to(pose, o.x, o.y);
        if (std::abs(bearing) > kFieldOfView / 2 + 1e-9) continue;
        if (!band_visible_at_pitch(o.band, pose.pitch)) continue;
        if (!line_of_sight(scene, pose.x, pose.y, o.x, o.y)) continue;
        out.push_back({i, o, dist, bearing});
    }
    return out;
}

bool within_success_distance(double metres) {
    return metres < kSuccessDistance;
}

bool is_success(const GridScene& scene, const AgentPose& pose, int target_class) {
    for (const auto& v : visible_objects(scene, pose))
        if (v.object.class_id == target_class && within_success_distance(v.distance)) return true;
    return false;
}

StepOutcome step(const GridScene& scene, const AgentPose& pose, Action action, int target_class) {
    if (!is_valid_pose(scene, pose)) throw StateError("invalid pose " + to_string(pose));
    StepOutcome out;
    out.pose = pose;
    out.reward = kStepPenalty;
    switch (action) {
        case Action::MoveAhead: {
            const auto [ox, oy] = heading_offset(pose.heading);
            const int nx = pose.x + ox, ny = pose.y + oy;
            bool blocked = !scene.is_free(nx, ny);
            // Diagonal moves may not cut an obstacle corner.
            if (!blocked && ox != 0 && oy != 0) blocked = !scene.is_free(pose.x + ox, pose.y) || !scene.is_free(pose.x, pose.y + oy);
            if (blocked) {
                out.collision = true;
            } else {
                out.pose.x = nx;
                out.pose.y = ny;
            }
            break;
        }
        case Action::RotateLeft: out.pose.heading = (pose.heading + 360 - kRotationStep) % 360; break;
        case Action::RotateRight: out.pose.heading = (pose.heading + kRotationStep) % 360; break;
        case Action::LookUp:
            if (pose.pitch >= kMaxPitch) out.noop = true;
            else out.pose.pitch = pose.pitch + kPitchStep;
            break;
        case Action::LookDown:
            if (pose.pitch <= -kMaxPitch) out.noop = true;
            else out.pose.pitch = pose.pitch - kPitchStep;
            break;
        case Action::Done:
            out.done = true;
            out.success = is_success(scene, pose, target_class);
            if (out.success) out.reward += kSuccessReward;
            break;
    }
    return out;
}

Episode::Episode(const GridScene& scene, EpisodeSpec spec) : scene_(&scene), spec_(std::move(spec)), pose_(spec_.start) {
    if (!is_valid_pose(scene, pose_)) throw StateError("invalid start pose " + to_string(pose_));
    if (spec_.max_steps < 1) throw StateError("max_steps must be positive");
}

StepOutcome Episode::step(Action action) {
    if (done_) throw StateError("episode already finished");
    StepOutcome out = env::step(*scene_, pose_, action, spec_.target_class);
    ++steps_;
    out.step_index = steps_;
    pose_ = out.pose;
    total_reward_ += out.reward;
    actions_.push_back(action);
    if (out.done) {
        done_ = true;
        success_ = out.success;
    } else if (steps_ >= spec_.max_steps) {
        out.done = true;
        done_ = true;
    }
    return out;
}

}  // namespace vtnav::env
