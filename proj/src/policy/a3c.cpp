#include "vtnav/policy/a3c.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "vtnav/env/search.hpp"

namespace vtnav::policy {

void TrainConfig::validate() const {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError("invalid train config: " + what);
    };
    require(workers >= 1, "workers must be at least 1");
    require(episodes >= 1, "episodes must be positive");
    require(gamma > 0.0 && gamma <= 1.0, "gamma must lie in (0, 1]");
    require(n_step >= 1, "n_step must be positive");
    require(value_weight >= 0.0 && entropy_weight >= 0.0, "loss weights must be non-negative");
    require(lr_policy > 0.0 && lr_vt >= 0.0, "learning rates must be positive");
    require(grad_clip >= 0.0, "grad_clip must be non-negative");
    require(max_steps >= 1, "max_steps must be positive");
    require(eval_every >= 0 && eval_episodes_per_scene >= 1, "bad validation schedule");
    require(stop_success >= 0.0 && stop_success <= 1.0, "stop_success must lie in [0, 1]");
}

std::string to_text(const TrainConfig& c) {
    const nlohmann::ordered_json j = {
        {"workers", c.workers},
        {"episodes", c.episodes},
        {"gamma", c.gamma},
        {"n_step", c.n_step},
        {"value_weight", c.value_weight},
        {"entropy_weight", c.entropy_weight},
        {"lr_policy", c.lr_policy},
        {"lr_vt", c.lr_vt},
        {"grad_clip", c.grad_clip},
        {"seed", c.seed},
        {"max_steps", c.max_steps},
        {"eval_every", c.eval_every},
        {"eval_episodes_per_scene", c.eval_episodes_per_scene},
        {"stop_success", c.stop_success},
        {"noise",
         {{"sigma_bbox", c.noise.sigma_bbox},
          {"sigma_feat", c.noise.sigma_feat},
          {"p_miss", c.noise.p_miss},
          {"p_fp", c.noise.p_fp}}}};
    return j.dump(2) + "\n";
}

TrainConfig parse_train_config(const std::string& text) {
    TrainConfig c;
    try {
        const auto j = nlohmann::json::parse(text);
        c.workers = j.at("workers").get<int>();
        c.episodes = j.at("episodes").get<long long>();
        c.gamma = j.at("gamma").get<double>();
        c.n_step = j.at("n_step").get<int>();
        c.value_weight = j.at("value_weight").get<double>();
        c.entropy_weight = j.at("entropy_weight").get<double>();
        c.lr_policy = j.at("lr_policy").get<double>();
        c.lr_vt = j.at("lr_vt").get<double>();
        c.grad_clip = j.at("grad_clip").get<double>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.max_steps = j.at("max_steps").get<int>();
        c.eval_every = j.at("eval_every").get<long long>();
        c.eval_episodes_per_scene = j.at("eval_episodes_per_scene").get<int>();
        c.stop_success = j.at("stop_success").get<double>();
        const auto& n = j.at("noise");
        c.noise = {n.at("sigma_bbox").get<double>(), n.at("sigma_feat").get<double>(), n.at("p_miss").get<double>(),
                   n.at("p_fp").get<double>()};
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed train config: ") + e.what());
    }
    c.validate();
    return c;
}

std::vector<double> n_step_returns(const std::vector<double>& rewards, double bootstrap, double gamma) {
    std::vector<double> out(rewards.size());
    double running = bootstrap;
    for (std::size_t i = rewards.size(); i-- > 0;) out[i] = running = rewards[i] + gamma * running;
    return out;
}

template <typename T>
A3CLoss<T> a3c_loss(const std::vector<SegmentStep<T>>& segment, double bootstrap, const TrainConfig& config) {
    if (segment.empty()) throw std::invalid_argument("empty rollout segment");
    if (static_cast<int>(segment.size()) > config.n_step)
        throw std::invalid_argument("segment longer than the n-step horizon");
    std::vector<ad::Tensor<T>> logit_rows, value_rows;
    std::vector<double> rewards;
    std::vector<int> actions;
    for (const auto& s : segment) {
        logit_rows.push_back(s.output.logits);
        value_rows.push_back(s.output.value);
        rewards.push_back(s.reward);
        actions.push_back(env::index_of(s.action));
    }
    const auto returns = n_step_returns(rewards, bootstrap, config.gamma);
    const auto logits = ad::concat_rows(logit_rows);
    const auto values = ad::concat_rows(value_rows);
    const std::size_t n = segment.size();

    std::vector<T> advantage(n), target(n);
    for (std::size_t i = 0; i < n; ++i) {
        target[i] = static_cast<T>(returns[i]);
        advantage[i] = static_cast<T>(returns[i] - static_cast<double>(values.values()[i]));
    }
    const auto log_probs = ad::log_softmax_rows(logits);
    const auto chosen = ad::pick(log_probs, std::span<const int>(actions));
    const auto policy_loss = ad::scale(ad::sum(ad::mul(chosen, ad::Tensor<T>::from({n, 1}, advantage))), T(-1));
    const auto error = ad::sub(ad::Tensor<T>::from({n, 1}, target), values);
    const auto value_loss = ad::sum(ad::mul(error, error));
    const auto entropy = ad::scale(ad::sum(ad::mul(ad::exp(log_probs), log_probs)), T(-1));

    A3CLoss<T> out;
    out.total = ad::sub(ad::add(policy_loss, ad::scale(value_loss, static_cast<T>(config.value_weight))),
                        ad::scale(entropy, static_cast<T>(config.entropy_weight)));
    out.policy = static_cast<double>(policy_loss.item());
    out.value = static_cast<double>(value_loss.item());
    out.entropy = static_cast<double>(entropy.item());
    return out;
}

template A3CLoss<float> a3c_loss(const std::vector<SegmentStep<float>>&, double, const TrainConfig&);
template A3CLoss<double> a3c_loss(const std::vector<SegmentStep<double>>&, double, const TrainConfig&);

SharedParameters::SharedParameters(ad::ParameterSet<float>& params, const TrainConfig& config) : params_(&params) {
    for (const auto& e : params.entries()) {
        lr_.push_back(e.name.rfind("vt.", 0) == 0 ? config.lr_vt : config.lr_policy);
        moments_.push_back({std::vector<float>(e.tensor.numel(), 0.f), std::vector<float>(e.tensor.numel(), 0.f), 0});
        locks_.push_back(std::make_unique<std::shared_mutex>());
    }
}

void SharedParameters::pull(ad::ParameterSet<float>& local) const {
    auto& dst = local.entries();
    const auto& src = params_->entries();
    for (std::size_t i = 0; i < src.size(); ++i) {
        std::shared_lock lock(*locks_[i]);
        std::ranges::copy(src[i].tensor.values(), dst[i].tensor.mutable_values().begin());
    }
}

void SharedParameters::apply(const ad::ParameterSet<float>& local) {
    const auto& src = local.entries();
    auto& dst = params_->entries();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        if (!src[i].tensor.has_grad()) continue;
        std::unique_lock lock(*locks_[i]);
        ad::adam_update<float>(dst[i].tensor.mutable_values(), src[i].tensor.grad(), moments_[i], hyper_, lr_[i]);
    }
    ++updates_;
}

EpisodeTask sample_task(const std::vector<env::GridScene>& scenes, Rng& rng) {
    if (scenes.empty()) throw std::invalid_argument("no scenes to sample a task from");
    for (int tries = 0; tries < 100000; ++tries) {
        EpisodeTask task;
        task.scene_index = uniform_int(rng, 0, static_cast<int>(scenes.size()) - 1);
        const auto& scene = scenes[static_cast<std::size_t>(task.scene_index)];
        const auto classes = scene.present_classes();
        if (classes.empty()) continue;
        task.target_class = classes[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(classes.size()) - 1))];
        task.start = {uniform_int(rng, 0, scene.width() - 1), uniform_int(rng, 0, scene.height() - 1),
                      env::kRotationStep * uniform_int(rng, 0, 7), env::kPitchStep * uniform_int(rng, -1, 1)};
        if (!scene.is_free(task.start.x, task.start.y)) continue;
        if (env::shortest_path_length(scene, task.start, task.target_class)) return task;
    }
    throw std::runtime_error("no reachable episode task in the scene set");
}

std::vector<EpisodeTask> make_tasks(const std::vector<env::GridScene>& scenes, int per_scene, std::uint64_t seed) {
    std::vector<EpisodeTask> tasks;
    for (std::size_t si = 0; si < scenes.size(); ++si) {
        Rng rng(derive_seed(seed, si));
        const std::vector<env::GridScene> one{scenes[si]};
        for (int k = 0; k < per_scene; ++k) {
            auto t = sample_task(one, rng);
            t.scene_index = static_cast<int>(si);
            tasks.push_back(t);
        }
    }
    return tasks;
}

EpisodeRun run_episode(const ActorCritic<float>& agent, const env::GridScene& scene, const EpisodeTask& task,
                       SelectMode mode, Rng& rng, const perception::NoiseConfig& noise, std::uint64_t render_seed,
                       int max_steps) {
    ad::NoGradGuard no_grad;
    const auto& oracle = perception::default_oracle();
    env::Episode ep(scene, {scene.id(), task.target_class, task.start, max_steps});
    auto state = PolicyState<float>::zeros();
    std::optional<env::Action> previous;
    EpisodeRun run;
    while (!ep.done()) {
        const int t = ep.steps_taken();
        const auto obs = oracle.render(scene, ep.pose(), noise, derive_seed(render_seed, static_cast<std::uint64_t>(t)), t);
        const auto out = agent.step(obs, task.target_class, previous, state);
        const auto dist = out.distribution();
        run.mean_entropy += dist.entropy();
        const auto action = select_action(dist, mode, rng);
        ep.step(action);
        state = out.state;
        previous = action;
    }
    run.actions = ep.actions();
    run.success = ep.success();
    run.total_reward = ep.total_reward();
    run.mean_entropy /= static_cast<double>(run.actions.size());
    run.final_pose = ep.pose();
    return run;
}

ValidationResult validate_agent(const ActorCritic<float>& agent, const std::vector<env::GridScene>& scenes,
                                const std::vector<EpisodeTask>& tasks, const perception::NoiseConfig& noise,
                                std::uint64_t seed, int max_steps) {
    if (tasks.empty()) throw std::invalid_argument("no validation tasks");
    ValidationResult r;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        Rng rng(derive_seed(seed, i, 0));
        const auto run = run_episode(agent, scenes.at(static_cast<std::size_t>(tasks[i].scene_index)), tasks[i],
                                     SelectMode::Argmax, rng, noise, derive_seed(seed, i, 1), max_steps);
        r.success_rate += run.success ? 1.0 : 0.0;
        r.mean_length += static_cast<double>(run.actions.size());
    }
    r.success_rate /= static_cast<double>(tasks.size());
    r.mean_length /= static_cast<double>(tasks.size());
    return r;
}

std::string episode_csv_header() {
    return "episode,worker,success,steps,return,entropy";
}

std::string to_csv(const EpisodeLog& log) {
    std::ostringstream out;
    out.precision(9);
    out << log.episode << ',' << log.worker << ',' << (log.success ? 1 : 0) << ',' << log.steps << ','
        << log.total_reward << ',' << log.entropy;
    return out.str();
}

WindowSummary summarize(const std::vector<EpisodeLog>& logs, std::size_t begin, std::size_t end) {
    end = std::min(end, logs.size());
    WindowSummary s;
    if (begin >= end) return s;
    for (std::size_t i = begin; i < end; ++i) {
        s.success_rate += logs[i].success ? 1.0 : 0.0;
        s.mean_length += logs[i].steps;
        s.mean_reward += logs[i].total_reward;
    }
    const auto n = static_cast<double>(end - begin);
    s.success_rate /= n;
    s.mean_length /= n;
    s.mean_reward /= n;
    return s;
}

namespace {

double gradient_norm(const ad::ParameterSet<float>& params) {
    double sq = 0.0;
    for (const auto& e : params.entries())
        if (e.tensor.has_grad())
            for (float g : e.tensor.grad()) sq += static_cast<double>(g) * g;
    return std::sqrt(sq);
}

void scale_gradients(ad::ParameterSet<float>& params, double factor) {
    for (auto& e : params.entries())
        if (e.tensor.has_grad())
            for (float& g : e.tensor.mutable_grad()) g = static_cast<float>(g * factor);
}

std::vector<std::vector<float>> snapshot(const ad::ParameterSet<float>& params) {
    std::vector<std::vector<float>> out;
    for (const auto& e : params.entries()) out.emplace_back(e.tensor.values().begin(), e.tensor.values().end());
    return out;
}

struct TrainingRun {
    const TrainConfig& config;
    const ActorCritic<float>& prototype;
    ad::ParameterSet<float>& params;
    const std::vector<env::GridScene>& scenes;
    const std::vector<env::GridScene>& validation_scenes;
    const std::vector<EpisodeTask>& validation_tasks;
    const TrainCallbacks& callbacks;
    SharedParameters shared;

    std::atomic<long long> claimed{0};
    std::atomic<bool> stop{false};
    std::mutex metrics_mutex;
    TrainResult result;
    std::vector<std::vector<float>> best;
    std::exception_ptr failure;

    TrainingRun(const TrainConfig& c, const ActorCritic<float>& a, ad::ParameterSet<float>& p,
                const std::vector<env::GridScene>& s, const std::vector<env::GridScene>& vs,
                const std::vector<EpisodeTask>& v, const TrainCallbacks& cb)
        : config(c), prototype(a), params(p), scenes(s), validation_scenes(vs), validation_tasks(v), callbacks(cb),
          shared(p, c) {}

    void record_evaluation(long long episode, const ActorCritic<float>& agent, const ad::ParameterSet<float>& values) {
        const auto r = validate_agent(agent, validation_scenes, validation_tasks, config.noise, derive_seed(config.seed, 0xe7a1ULL),
                                      config.max_steps);
        std::lock_guard lock(metrics_mutex);
        EvaluationPoint point{episode, r};
        result.evaluations.push_back(point);
        if (result.best_episode < 0 || r.success_rate > result.best_success) {
            result.best_episode = episode;
            result.best_success = r.success_rate;
            best = snapshot(values);
        }
        if (config.stop_success > 0.0 && r.success_rate >= config.stop_success) {
            result.stopped_early = true;
            stop = true;
        }
        if (callbacks.on_evaluation) callbacks.on_evaluation(point, values);
    }

    void worker(int id) {
        try {
            ad::ParameterSet<float> local;
            Rng init_rng(0);
            ActorCritic<float> agent(prototype.variant(), prototype.config(), local, init_rng);
            shared.pull(local);
            Rng rng(config.seed + static_cast<std::uint64_t>(id));
            const auto& oracle = perception::default_oracle();
            while (!stop) {
                const long long index = claimed.fetch_add(1);
                if (index >= config.episodes) break;
                run_training_episode(id, index, agent, local, rng, oracle);
                const bool eval_due = config.eval_every > 0 && !validation_tasks.empty() &&
                                      (index + 1) % config.eval_every == 0;
                if (eval_due) {
                    shared.pull(local);
                    record_evaluation(index + 1, agent, local);
                }
            }
        } catch (...) {
            std::lock_guard lock(metrics_mutex);
            if (!failure) failure = std::current_exception();
            stop = true;
        }
    }

    void run_training_episode(int id, long long index, const ActorCritic<float>& agent, ad::ParameterSet<float>& local,
                              Rng& rng, const perception::PerceptionOracle& oracle) {
        const auto task = sample_task(scenes, rng);
        const auto& scene = scenes[static_cast<std::size_t>(task.scene_index)];
        const std::uint64_t render_seed = rng();
        env::Episode ep(scene, {scene.id(), task.target_class, task.start, config.max_steps});
        auto state = PolicyState<float>::zeros();
        std::optional<env::Action> previous;
        double entropy_sum = 0.0;
        auto observe = [&] {
            const int t = ep.steps_taken();
            return oracle.render(scene, ep.pose(), config.noise, derive_seed(render_seed, static_cast<std::uint64_t>(t)), t);
        };
        while (!ep.done()) {
            std::vector<SegmentStep<float>> segment;
            while (!ep.done() && static_cast<int>(segment.size()) < config.n_step) {
                auto out = agent.step(observe(), task.target_class, previous, state);
                const auto dist = out.distribution();
                entropy_sum += dist.entropy();
                const auto action = select_action(dist, SelectMode::Sample, rng);
                const auto outcome = ep.step(action);
                state = out.state;
                previous = action;
                segment.push_back({std::move(out), action, outcome.reward});
            }
            double bootstrap = 0.0;
            if (!ep.done()) {
                ad::NoGradGuard no_grad;
                bootstrap = agent.step(observe(), task.target_class, previous, state).value.item();
            }
            auto loss = a3c_loss(segment, bootstrap, config);
            if (!std::isfinite(loss.total.item()))
                throw ad::NumericError("worker " + std::to_string(id) + ": non-finite A3C loss in episode " +
                                       std::to_string(index) + " at step " + std::to_string(ep.steps_taken()) +
                                       " (policy " + std::to_string(loss.policy) + ", value " +
                                       std::to_string(loss.value) + ", entropy " + std::to_string(loss.entropy) + ")");
            local.zero_grad();
            loss.total.backward();
            const double norm = gradient_norm(local);
            if (!std::isfinite(norm))
                throw ad::NumericError("worker " + std::to_string(id) + ": non-finite gradient in episode " +
                                       std::to_string(index));
            if (config.grad_clip > 0.0 && norm > config.grad_clip) scale_gradients(local, config.grad_clip / norm);
            shared.apply(local);
            shared.pull(local);
            state = state.detached();
        }
        EpisodeLog log{index, id, ep.success(), ep.steps_taken(), ep.total_reward(),
                       entropy_sum / static_cast<double>(ep.steps_taken())};
        std::lock_guard lock(metrics_mutex);
        result.episodes.push_back(log);
        if (callbacks.on_episode) callbacks.on_episode(log);
    }
};

}  // namespace

TrainResult train(const TrainConfig& config, const ActorCritic<float>& agent, ad::ParameterSet<float>& params,
                  const std::vector<env::GridScene>& scenes, const std::vector<EpisodeTask>& validation_tasks,
                  const TrainCallbacks& callbacks) {
    return train(config, agent, params, scenes, scenes, validation_tasks, callbacks);
}

TrainResult train(const TrainConfig& config, const ActorCritic<float>& agent, ad::ParameterSet<float>& params,
                  const std::vector<env::GridScene>& scenes, const std::vector<env::GridScene>& validation_scenes,
                  const std::vector<EpisodeTask>& validation_tasks, const TrainCallbacks& callbacks) {
    config.validate();
    if (scenes.empty()) throw std::invalid_argument("no training scenes");
    for (const auto& t : validation_tasks)
        if (t.scene_index < 0 || static_cast<std::size_t>(t.scene_index) >= validation_scenes.size())
            throw std::invalid_argument("validation task refers to a missing scene");
    auto run = std::make_unique<TrainingRun>(config, agent, params, scenes, validation_scenes, validation_tasks,
                                             callbacks);
    if (config.workers == 1) {
        run->worker(0);
    } else {
        std::vector<std::jthread> threads;
        for (int w = 0; w < config.workers; ++w) threads.emplace_back([&run, w] { run->worker(w); });
    }
    if (run->failure) std::rethrow_exception(run->failure);

    if (!validation_tasks.empty() && config.eval_every > 0) {
        const long long done = std::min(run->claimed.load(), config.episodes);
        const bool evaluated_last =
            !run->result.evaluations.empty() && run->result.evaluations.back().episode == done;
        if (!evaluated_last && !run->result.stopped_early) run->record_evaluation(done, agent, params);
        auto& entries = params.entries();
        for (std::size_t i = 0; i < entries.size(); ++i)
            std::ranges::copy(run->best[i], entries[i].tensor.mutable_values().begin());
    }
    return std::move(run->result);
}

}  // namespace vtnav::policy
