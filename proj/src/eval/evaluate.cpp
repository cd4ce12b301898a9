#include "vtnav/eval/evaluate.hpp"

#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include "vtnav/env/scene_gen.hpp"
#include "vtnav/env/search.hpp"
#include "vtnav/train/expert.hpp"

namespace vtnav::eval {

std::vector<env::Action> ExpertNavigator::play(const env::GridScene& scene, const policy::EpisodeTask& task,
                                               std::uint64_t, int max_steps) const {
    const train::Expert expert(scene);
    if (!expert.shortest_path_length(task.start, task.target_class)) return {env::Action::Done};
    auto actions = expert.rollout(task.start, task.target_class);
    if (static_cast<int>(actions.size()) > max_steps) actions.resize(static_cast<std::size_t>(max_steps));
    return actions;
}

std::vector<env::Action> RandomNavigator::play(const env::GridScene& scene, const policy::EpisodeTask& task,
                                               std::uint64_t episode_seed, int max_steps) const {
    Rng rng(episode_seed);
    env::Episode ep(scene, {scene.id(), task.target_class, task.start, max_steps});
    while (!ep.done()) ep.step(env::kAllActions[static_cast<std::size_t>(uniform_int(rng, 0, env::kNumActions - 1))]);
    return ep.actions();
}

std::vector<env::Action> NeuralNavigator::play(const env::GridScene& scene, const policy::EpisodeTask& task,
                                               std::uint64_t episode_seed, int max_steps) const {
    Rng rng(derive_seed(episode_seed, 0));
    return policy::run_episode(*agent_, scene, task, policy::SelectMode::Argmax, rng, noise_,
                               derive_seed(episode_seed, 1), max_steps)
        .actions;
}

double distance_to_nearest(const env::GridScene& scene, const env::AgentPose& pose, int target_class) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& o : scene.objects()) {
        if (o.class_id != target_class) continue;
        best = std::min(best, env::kCellSize * std::hypot(o.x - pose.x, o.y - pose.y));
    }
    return best;
}

namespace {

EpisodeRecord replay(const env::GridScene& scene, const policy::EpisodeTask& task,
                     const std::vector<env::Action>& actions, int max_steps, std::optional<int> optimal) {
    env::Episode ep(scene, {scene.id(), task.target_class, task.start, max_steps});
    for (env::Action a : actions) {
        if (ep.done()) throw std::logic_error("navigator issued actions after the episode ended");
        ep.step(a);
    }
    if (!ep.done()) throw std::logic_error("navigator stopped before the episode ended");
    EpisodeRecord r;
    r.scene_id = scene.id();
    r.target_class = task.target_class;
    r.start = task.start;
    r.actions = actions;
    r.success = ep.success();
    r.length = ep.steps_taken();
    r.optimal_length = optimal;
    r.terminal_distance = distance_to_nearest(scene, ep.pose(), task.target_class);
    return r;
}

}  // namespace

EpisodeRecord score_episode(const env::GridScene& scene, const policy::EpisodeTask& task,
                            const std::vector<env::Action>& actions, int max_steps) {
    return replay(scene, task, actions, max_steps, env::shortest_path_length(scene, task.start, task.target_class));
}

Evaluation evaluate(const Navigator& navigator, const std::vector<env::GridScene>& scenes,
                    const std::vector<policy::EpisodeTask>& tasks, std::uint64_t seed, int max_steps) {
    if (tasks.empty()) throw MetricsError("no evaluation tasks");
    std::map<int, train::Expert> experts;
    Evaluation out;
    out.records.reserve(tasks.size());
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const auto& task = tasks[i];
        const auto& scene = scenes.at(static_cast<std::size_t>(task.scene_index));
        auto it = experts.try_emplace(task.scene_index, scene).first;
        const auto optimal = it->second.shortest_path_length(task.start, task.target_class);
        const auto actions = navigator.play(scene, task, derive_seed(seed, i), max_steps);
        out.records.push_back(replay(scene, task, actions, max_steps, optimal));
    }
    out.report = make_report(out.records);
    out.report.agent = navigator.name();
    out.report.seed = seed;
    for (const auto& s : scenes) out.report.scenes.push_back(s.id());
    return out;
}

void write_records(const std::filesystem::path& path, const std::vector<EpisodeRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& r : records) out << to_json_line(r) << '\n';
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<EpisodeRecord> read_records(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<EpisodeRecord> records;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) records.push_back(record_from_json_line(line));
    return records;
}

std::optional<int> forward_search_length(const env::GridScene& scene, const env::AgentPose& start, int target_class) {
    std::map<env::AgentPose, int> depth{{start, 0}};
    std::deque<env::AgentPose> queue{start};
    while (!queue.empty()) {
        const auto pose = queue.front();
        queue.pop_front();
        const int d = depth[pose];
        if (env::is_success(scene, pose, target_class)) return d + 1;
        for (env::Action a : env::kAllActions) {
            if (a == env::Action::Done) continue;
            const auto next = env::step(scene, pose, a, target_class).pose;
            if (depth.emplace(next, d + 1).second) queue.push_back(next);
        }
    }
    return std::nullopt;
}

ExpertCheck expert_check(int count, int starts, const env::SceneConfig& config, std::uint64_t seed) {
    if (count < 1 || starts < 1) throw std::invalid_argument("expert check needs positive scene and start counts");
    ExpertCheck check;
    for (int s = 0; s < count; ++s) {
        const auto scene = env::generate_scene(seed + static_cast<std::uint64_t>(s), config);
        const train::Expert expert(scene);
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
        bool all_match = true;
        for (int target : scene.present_classes()) {
            for (int k = 0; k < starts; ++k) {
                env::AgentPose start;
                do {
                    start = {uniform_int(rng, 0, scene.width() - 1), uniform_int(rng, 0, scene.height() - 1),
                             env::kRotationStep * uniform_int(rng, 0, 7), env::kPitchStep * uniform_int(rng, -1, 1)};
                } while (!scene.is_free(start.x, start.y));
                ++check.queries;
                const auto reference = forward_search_length(scene, start, target);
                const auto planned = expert.shortest_path_length(start, target);
                std::optional<int> rolled;
                if (planned) rolled = static_cast<int>(expert.rollout(start, target).size());
                if (reference == planned && planned == rolled) continue;
                all_match = false;
                ++check.mismatches;
                auto show = [](const std::optional<int>& v) { return v ? std::to_string(*v) : std::string("none"); };
                check.failures.push_back("scene seed " + std::to_string(seed + static_cast<std::uint64_t>(s)) +
                                         " target " + std::to_string(target) + " start " + env::to_string(start) +
                                         ": search " + show(reference) + " planned " + show(planned) + " rollout " +
                                         show(rolled));
            }
        }
        ++check.scenes;
        check.scenes_matched += all_match ? 1 : 0;
    }
    return check;
}

}  // namespace vtnav::eval
