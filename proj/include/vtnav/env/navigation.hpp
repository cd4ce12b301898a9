#pragma once

#include <optional>
#include <vector>

#include "vtnav/env/grid.hpp"

namespace vtnav::env {

struct VisibleObject {
    std::size_t object_index = 0;  // into GridScene::objects()
    SceneObject object;
    double distance = 0.0;  // metres, cell centre to cell centre
    double bearing = 0.0;   // degrees, positive to the right of the heading
};

struct StepOutcome {
    AgentPose pose;
    double reward = 0.0;
    bool done = false;
    bool success = false;
    bool collision = false;
    bool noop = false;  // LookUp/LookDown at the pitch limit
    int step_index = 0;
};

struct EpisodeSpec {
    std::string scene_id;
    int target_class = 0;
    AgentPose start;
    int max_steps = kDefaultMaxSteps;
};

// Cells crossed by the segment between two cell centres (closed-square supercover),
// excluding both endpoints.
std::vector<std::array<int, 2>> supercover_cells(int x0, int y0, int x1, int y1);
bool line_of_sight(const GridScene& scene, int x0, int y0, int x1, int y1);

// Horizontal bearing of a cell centre relative to the pose heading, in (-180, 180].
double bearing_to(const AgentPose& pose, int x, int y);
bool band_visible_at_pitch(HeightBand band, int pitch);

std::vector<VisibleObject> visible_objects(const GridScene& scene, const AgentPose& pose);

bool within_success_distance(double metres);
// Target visible and strictly closer than the success distance. Whether Done was
// issued is the caller's concern.
bool is_success(const GridScene& scene, const AgentPose& pose, int target_class);

// Pure transition. Done evaluates success for `target_class`.
StepOutcome step(const GridScene& scene, const AgentPose& pose, Action action, int target_class);

// Stateful wrapper enforcing the step budget.
class Episode {
public:
    Episode(const GridScene& scene, EpisodeSpec spec);

    StepOutcome step(Action action);

    const GridScene& scene() const { return *scene_; }
    const EpisodeSpec& spec() const { return spec_; }
    const AgentPose& pose() const { return pose_; }
    int steps_taken() const { return steps_; }
    bool done() const { return done_; }
    bool success() const { return success_; }
    double total_reward() const { return total_reward_; }
    const std::vector<Action>& actions() const { return actions_; }

private:
    const GridScene* scene_;
    EpisodeSpec spec_;
    AgentPose pose_;
    int steps_ = 0;
    bool done_ = false;
    bool success_ = false;
    double total_reward_ = 0.0;
    std::vector<Action> actions_;
};

}  // namespace vtnav::env
