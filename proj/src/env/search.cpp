#include "vtnav/env/search.hpp"

#include <deque>

#include "vtnav/env/navigation.hpp"

namespace vtnav::env {

AgentPose StateSpace::pose(int index) const {
    AgentPose p;
    p.pitch = (index % kPitchCount) * kPitchStep - kMaxPitch;
    index /= kPitchCount;
    p.heading = (index % kHeadingCount) * kRotationStep;
    index /= kHeadingCount;
    p.x = index % width_;
    p.y = index / width_;
    return p;
}

NavigationGraph::NavigationGraph(const GridScene& scene) : scene_(&scene), states_(scene) {
    const int n = states_.size();
    successors_.assign(static_cast<std::size_t>(n) * kMotionActions, -1);
    preds_.resize(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
        const AgentPose p = states_.pose(s);
        if (!scene.is_free(p.x, p.y)) continue;
        for (int a = 0; a < kMotionActions; ++a) {
            const int t = states_.index(step(scene, p, action_from_index(a), -1).pose);
            successors_[static_cast<std::size_t>(s) * kMotionActions + a] = t;
            if (t != s) preds_[static_cast<std::size_t>(t)].push_back(s);
        }
    }
}

DistanceField::DistanceField(const NavigationGraph& graph, int target_class)
    : graph_(&graph), target_(target_class), dist_(static_cast<std::size_t>(graph.states().size()), -1) {
    std::deque<int> frontier;
    for (int s = 0; s < graph.states().size(); ++s) {
        if (!graph.valid(s)) continue;
        if (is_success(graph.scene(), graph.states().pose(s), target_class)) {
            dist_[static_cast<std::size_t>(s)] = 0;
            frontier.push_back(s);
        }
    }
    while (!frontier.empty()) {
        const int s = frontier.front();
        frontier.pop_front();
        for (int p : graph.predecessors(s)) {
            if (dist_[static_cast<std::size_t>(p)] >= 0) continue;
            dist_[static_cast<std::size_t>(p)] = dist_[static_cast<std::size_t>(s)] + 1;
            frontier.push_back(p);
        }
    }
}

std::optional<int> DistanceField::moves_to_goal(const AgentPose& pose) const {
    if (!is_valid_pose(graph_->scene(), pose)) throw StateError("invalid pose " + to_string(pose));
    const int d = dist_[static_cast<std::size_t>(graph_->states().index(pose))];
    if (d < 0) return std::nullopt;
    return d;
}

bool DistanceField::is_goal(const AgentPose& pose) const {
    const auto d = moves_to_goal(pose);
    return d && *d == 0;
}

std::optional<int> DistanceField::shortest_path_length(const AgentPose& start) const {
    const auto d = moves_to_goal(start);
    if (!d) return std::nullopt;
    return *d + 1;
}

std::optional<Action> DistanceField::best_action(const AgentPose& pose) const {
    const auto d = moves_to_goal(pose);
    if (!d) return std::nullopt;
    if (*d == 0) return Action::Done;
    const int s = graph_->states().index(pose);
    for (int a = 0; a < kMotionActions; ++a) {
        const int t = graph_->successor(s, a);
        if (dist_[static_cast<std::size_t>(t)] == *d - 1) return action_from_index(a);
    }
    return std::nullopt;  // unreachable for a consistent field
}

std::optional<int> shortest_path_length(const GridScene& scene, const AgentPose& start, int target_class) {
    NavigationGraph graph(scene);
    return DistanceField(graph, target_class).shortest_path_length(start);
}

}  // namespace vtnav::env
