#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "vtnav/env/scene_gen.hpp"
#include "vtnav/eval/metrics.hpp"
#include "vtnav/policy/a3c.hpp"

namespace vtnav::eval {

// Anything that can play an episode. Implementations must be deterministic in
// `episode_seed` and must not mutate shared state.
class Navigator {
public:
    virtual ~Navigator() = default;
    virtual std::string name() const = 0;
    // Actions issued from `task.start`; the harness replays them to score the episode.
    virtual std::vector<env::Action> play(const env::GridScene& scene, const policy::EpisodeTask& task,
                                          std::uint64_t episode_seed, int max_steps) const = 0;
};

// Shortest-path expert; issues Done immediately when the target is unreachable.
class ExpertNavigator final : public Navigator {
public:
    std::string name() const override { return "expert"; }
    std::vector<env::Action> play(const env::GridScene& scene, const policy::EpisodeTask& task,
                                  std::uint64_t episode_seed, int max_steps) const override;
};

// Uniform over all six actions, Done included.
class RandomNavigator final : public Navigator {
public:
    std::string name() const override { return "random"; }
    std::vector<env::Action> play(const env::GridScene& scene, const policy::EpisodeTask& task,
                                  std::uint64_t episode_seed, int max_steps) const override;
};

// Argmax actions of a trained actor-critic.
class NeuralNavigator final : public Navigator {
public:
    NeuralNavigator(const policy::ActorCritic<float>& agent, perception::NoiseConfig noise)
        : agent_(&agent), noise_(noise) {}
    std::string name() const override { return policy::to_string(agent_->variant()); }
    std::vector<env::Action> play(const env::GridScene& scene, const policy::EpisodeTask& task,
                                  std::uint64_t episode_seed, int max_steps) const override;

private:
    const policy::ActorCritic<float>* agent_;
    perception::NoiseConfig noise_;
};

// Metres from the pose cell to the nearest instance of the target class.
double distance_to_nearest(const env::GridScene& scene, const env::AgentPose& pose, int target_class);

// Replays `actions` through the environment and fills every record field.
EpisodeRecord score_episode(const env::GridScene& scene, const policy::EpisodeTask& task,
                            const std::vector<env::Action>& actions, int max_steps);

struct Evaluation {
    std::vector<EpisodeRecord> records;
    MetricsReport report;
};

// Plays every task once. Episode i uses derive_seed(seed, i).
Evaluation evaluate(const Navigator& navigator, const std::vector<env::GridScene>& scenes,
                    const std::vector<policy::EpisodeTask>& tasks, std::uint64_t seed,
                    int max_steps = env::kDefaultMaxSteps);

void write_records(const std::filesystem::path& path, const std::vector<EpisodeRecord>& records);
std::vector<EpisodeRecord> read_records(const std::filesystem::path& path);

// Expert trajectories compared with a forward search driven only by the
// transition function.
struct ExpertCheck {
    int scenes = 0;
    int scenes_matched = 0;  // every query in the scene agreed
    int queries = 0;
    int mismatches = 0;
    std::vector<std::string> failures;  // one line per mismatch
};

// Plain forward breadth-first search over poses; shares no code with the
// distance fields behind the expert.
std::optional<int> forward_search_length(const env::GridScene& scene, const env::AgentPose& start, int target_class);

// Scenes generated from seeds 0..count-1; `starts` seeded free poses per present class.
ExpertCheck expert_check(int count, int starts, const env::SceneConfig& config, std::uint64_t seed = 0);

}  // namespace vtnav::eval
