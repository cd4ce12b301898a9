#pragma once

#include <array>
#include <optional>
#include <vector>

#include "vtnav/env/grid.hpp"

namespace vtnav::env {

inline constexpr int kHeadingCount = 8;
inline constexpr int kPitchCount = 3;
inline constexpr int kMotionActions = 5;  // every action except Done

// Dense indexing of the (x, y, heading, pitch) state space of a scene.
class StateSpace {
public:
    explicit StateSpace(const GridScene& scene) : width_(scene.width()), height_(scene.height()) {}
    int size() const { return width_ * height_ * kHeadingCount * kPitchCount; }
    int index(const AgentPose& p) const {
        return ((p.y * width_ + p.x) * kHeadingCount + p.heading / kRotationStep) * kPitchCount +
               (p.pitch + kMaxPitch) / kPitchStep;
    }
    AgentPose pose(int index) const;

private:
    int width_;
    int height_;
};

// Unit-cost action graph of a scene, shared by every target class.
class NavigationGraph {
public:
    explicit NavigationGraph(const GridScene& scene);

    const GridScene& scene() const { return *scene_; }
    const StateSpace& states() const { return states_; }
    // Successor of `state` under motion action a (0..4); -1 for states on obstacles.
    int successor(int state, int action) const { return successors_[static_cast<std::size_t>(state) * kMotionActions + action]; }
    bool valid(int state) const { return successors_[static_cast<std::size_t>(state) * kMotionActions] >= 0; }
    const std::vector<int>& predecessors(int state) const { return preds_[static_cast<std::size_t>(state)]; }

private:
    const GridScene* scene_;
    StateSpace states_;
    std::vector<int> successors_;
    std::vector<std::vector<int>> preds_;
};

// Number of motion actions from every state to the nearest success state of one
// target class (-1 where unreachable), by multi-source breadth-first search over
// reversed edges. Unit costs make this identical to uniform-cost search.
class DistanceField {
public:
    DistanceField(const NavigationGraph& graph, int target_class);

    int target_class() const { return target_; }
    std::optional<int> moves_to_goal(const AgentPose& pose) const;
    bool is_goal(const AgentPose& pose) const;
    // Optimal action count including the final Done.
    std::optional<int> shortest_path_length(const AgentPose& start) const;
    // First action of a minimal path; ties broken by action order. nullopt if unreachable.
    std::optional<Action> best_action(const AgentPose& pose) const;

    const NavigationGraph& graph() const { return *graph_; }

private:
    const NavigationGraph* graph_;
    int target_;
    std::vector<int> dist_;
};

// Convenience wrapper; builds the graph and field for a single query.
std::optional<int> shortest_path_length(const GridScene& scene, const AgentPose& start, int target_class);

}  // namespace vtnav::env
