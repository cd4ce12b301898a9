#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <shared_mutex>
#include <string>
#include <vector>

#include "vtnav/ad/adam.hpp"
#include "vtnav/env/navigation.hpp"
#include "vtnav/perception/observation.hpp"
#include "vtnav/policy/network.hpp"

namespace vtnav::policy {

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct TrainConfig {
    int workers = 16;
    long long episodes = 50000;
    double gamma = 0.99;
    int n_step = 20;
    double value_weight = 0.5;
    double entropy_weight = 0.01;
    double lr_policy = 1e-4;
    double lr_vt = 1e-5;
    double grad_clip = 40.0;  // global gradient norm per segment; 0 disables
    std::uint64_t seed = 0;
    int max_steps = env::kDefaultMaxSteps;
    long long eval_every = 1000;  // episodes between validation runs; 0 disables
    int eval_episodes_per_scene = 20;
    double stop_success = 0.0;    // stop once validation success reaches this; 0 disables
    perception::NoiseConfig noise;

    void validate() const;
};

std::string to_text(const TrainConfig& config);
// Every field must be present.
TrainConfig parse_train_config(const std::string& text);

// R_t = r_t + gamma R_{t+1}, seeded with `bootstrap` after the last reward.
std::vector<double> n_step_returns(const std::vector<double>& rewards, double bootstrap, double gamma);

template <typename T>
struct SegmentStep {
    PolicyOutput<T> output;
    env::Action action;
    double reward = 0.0;
};

template <typename T>
struct A3CLoss {
    ad::Tensor<T> total;  // policy + value_weight * value - entropy_weight * entropy
    double policy = 0.0;
    double value = 0.0;
    double entropy = 0.0;
};

// Loss of one rollout segment. Advantages use detached value estimates.
template <typename T>
A3CLoss<T> a3c_loss(const std::vector<SegmentStep<T>>& segment, double bootstrap, const TrainConfig& config);

// Parameter store shared by workers. Reads and writes lock one tensor at a time;
// each write is one Adam update of that tensor.
class SharedParameters {
public:
    SharedParameters(ad::ParameterSet<float>& params, const TrainConfig& config);

    void pull(ad::ParameterSet<float>& local) const;
    // Adam step on every tensor from the gradients held by `local`.
    void apply(const ad::ParameterSet<float>& local);
    std::size_t updates() const { return updates_.load(); }

private:
    ad::ParameterSet<float>* params_;
    ad::AdamHyper hyper_;
    std::vector<double> lr_;
    std::vector<ad::AdamMoments<float>> moments_;
    std::vector<std::unique_ptr<std::shared_mutex>> locks_;
    std::atomic<std::size_t> updates_{0};
};

// Fixed (scene, target, start) triple used for validation and evaluation.
struct EpisodeTask {
    int scene_index = 0;
    int target_class = 0;
    env::AgentPose start;
};

// Uniform scene, uniform present class, uniform free start with the target reachable.
EpisodeTask sample_task(const std::vector<env::GridScene>& scenes, Rng& rng);
std::vector<EpisodeTask> make_tasks(const std::vector<env::GridScene>& scenes, int per_scene, std::uint64_t seed);

struct EpisodeRun {
    std::vector<env::Action> actions;
    bool success = false;
    double total_reward = 0.0;
    double mean_entropy = 0.0;
    env::AgentPose final_pose;
};

// Runs one episode without recording a graph. Observation noise is seeded from
// `render_seed` and the step index.
EpisodeRun run_episode(const ActorCritic<float>& agent, const env::GridScene& scene, const EpisodeTask& task,
                       SelectMode mode, Rng& rng, const perception::NoiseConfig& noise, std::uint64_t render_seed,
                       int max_steps);

struct ValidationResult {
    double success_rate = 0.0;
    double mean_length = 0.0;
};

// Argmax episodes over `tasks`; deterministic in `seed`.
ValidationResult validate_agent(const ActorCritic<float>& agent, const std::vector<env::GridScene>& scenes,
                                const std::vector<EpisodeTask>& tasks, const perception::NoiseConfig& noise,
                                std::uint64_t seed, int max_steps);

struct EpisodeLog {
    long long episode = 0;
    int worker = 0;
    bool success = false;
    int steps = 0;
    double total_reward = 0.0;
    double entropy = 0.0;  // mean per-step policy entropy
};

struct EvaluationPoint {
    long long episode = 0;
    ValidationResult result;
};

struct TrainResult {
    std::vector<EpisodeLog> episodes;  // in completion order
    std::vector<EvaluationPoint> evaluations;
    long long best_episode = -1;
    double best_success = 0.0;
    bool stopped_early = false;
};

struct TrainCallbacks {
    std::function<void(const EpisodeLog&)> on_episode;
    std::function<void(const EvaluationPoint&, const ad::ParameterSet<float>&)> on_evaluation;
};

std::string episode_csv_header();
std::string to_csv(const EpisodeLog& log);

struct WindowSummary {
    double success_rate = 0.0;
    double mean_length = 0.0;
    double mean_reward = 0.0;
};
WindowSummary summarize(const std::vector<EpisodeLog>& logs, std::size_t begin, std::size_t end);

// Asynchronous advantage actor-critic over `params` (the shared store). Each worker
// owns a copy of `agent`'s architecture and an Rng seeded with seed + worker id.
// With validation enabled, `params` ends holding the best-validation snapshot.
TrainResult train(const TrainConfig& config, const ActorCritic<float>& agent, ad::ParameterSet<float>& params,
                  const std::vector<env::GridScene>& scenes, const std::vector<EpisodeTask>& validation_tasks,
                  const TrainCallbacks& callbacks = {});
// As above, with validation tasks indexing into `validation_scenes`.
TrainResult train(const TrainConfig& config, const ActorCritic<float>& agent, ad::ParameterSet<float>& params,
                  const std::vector<env::GridScene>& scenes, const std::vector<env::GridScene>& validation_scenes,
                  const std::vector<EpisodeTask>& validation_tasks, const TrainCallbacks& callbacks = {});

}  // namespace vtnav::policy
