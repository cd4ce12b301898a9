#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "support/gradcheck.hpp"
#include "support/scenes.hpp"
#include "support/vt_fixtures.hpp"
#include "vtnav/env/scene_gen.hpp"
#include "vtnav/env/scene_io.hpp"
#include "vtnav/env/search.hpp"
#include "vtnav/eval/artifacts.hpp"
#include "vtnav/eval/evaluate.hpp"
#include "vtnav/train/pretrain.hpp"
#include "vtnav/util/hash.hpp"

using namespace vtnav;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and budgets.
constexpr double kEmbeddingTolerance = 1e-5;
constexpr double kAttentionTolerance = 1e-4;
constexpr double kFiniteDifferenceStep = 1e-5;
constexpr double kPrimitiveRelError = 1e-4;
constexpr double kEndToEndRelError = 1e-3;
constexpr double kPermutationTolerance = 1e-5;
constexpr double kPretrainMargin = 0.15;

// Imitation pre-training on generated 10x10 scenes.
constexpr int kPretrainScenes = 20;
constexpr int kPretrainStarts = 42;  // about 5k expert samples over 20 scenes
constexpr int kPretrainEpochs = 20;
constexpr std::uint64_t kPretrainSceneSeed = 606;

// Toy scenes: open 8x8 rooms shared by the reinforcement-learning criteria.
constexpr int kToyScenes = 5;
constexpr int kToySize = 8;
constexpr std::uint64_t kToySceneSeed = 777;
constexpr int kToyEncoderStarts = 200;
constexpr int kToyEncoderEpochs = 10;
constexpr int kWorkers = 4;
constexpr double kToyPolicyLr = 2.5e-4;
constexpr double kToyEncoderLr = 2.5e-5;
constexpr int kValidationPerScene = 20;
constexpr long long kEvalEvery = 250;

constexpr long long kNecessityBudget = 3000;
constexpr long long kNecessityWindow = 500;
constexpr double kCollapsedLength = 3.0;    // mean episode length of the early-termination regime
constexpr double kMaterialLengthRatio = 1.5;

constexpr double kTargetSuccess = 0.8;
constexpr long long kMaxEpisodes = 50000;
constexpr int kTestPerScene = 40;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Positional embedding written out directly: channel c < d/2 encodes u, the rest v;
// even offsets take sin and odd take cos of pos / 10000^(2i/d) with i = offset/2 + 1.
double embedding_oracle(double u, double v, int d, int channel) {
    const int half = d / 2;
    const double pos = channel < half ? u : v;
    const int offset = channel % half;
    const int i = offset / 2 + 1;
    const double angle = pos / std::pow(10000.0, 2.0 * i / d);
    return offset % 2 == 0 ? std::sin(angle) : std::cos(angle);
}

ad::Tensor<double> rows_of(std::vector<std::vector<double>> rows) {
    std::vector<double> flat;
    for (auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
    return ad::Tensor<double>::from({rows.size(), rows[0].size()}, std::move(flat));
}

Outcome equation_oracles() {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> coord(0.0, 7.0);
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
        const double u = coord(rng), v = coord(rng);
        const int c = static_cast<int>(rng() % 256);
        const double got = model::positional_embedding(u, v, 256)[static_cast<std::size_t>(c)];
        worst = std::max(worst, std::abs(got - embedding_oracle(u, v, 256, c)));
    }

    // Global query [1,0] against encoded locals [[1,0],[0,1]] through a single-head
    // module with identity projections.
    ad::ParameterSet<double> ps;
    Rng init(1);
    model::MultiHeadAttention<double> mha(ps, "toy", 2, 1, init);
    for (auto* lin : {&mha.query, &mha.key, &mha.value, &mha.output}) {
        auto w = lin->weight.mutable_values();
        std::fill(w.begin(), w.end(), 0.0);
        w[0] = w[3] = 1.0;
        auto b = lin->bias.mutable_values();
        std::fill(b.begin(), b.end(), 0.0);
    }
    const auto locals = rows_of({{1, 0}, {0, 1}});
    const auto out = mha(rows_of({{1, 0}}), locals);
    ad::Tensor<double> weights;
    model::scaled_dot_attention<double>(rows_of({{1, 0}}), locals, locals, std::nullopt, &weights);
    const double attn_err = std::max({std::abs(out.at(0, 0) - 0.6698), std::abs(out.at(0, 1) - 0.3302),
                                      std::abs(weights.at(0, 0) - 0.6698), std::abs(weights.at(0, 1) - 0.3302)});
    return {worst <= kEmbeddingTolerance && attn_err <= kAttentionTolerance,
            fmt("embedding max err %.2e over 50 points, decode weights [%.4f, %.4f] err %.2e", worst,
                weights.at(0, 0), weights.at(0, 1), attn_err)};
}

Outcome gradient_suite() {
    using namespace vtnav::testing;
    using namespace vtnav::ad;
    std::mt19937_64 rng(2024);
    auto x = random_leaf_away_from_zero({3, 5}, rng);
    auto y = random_leaf({3, 5}, rng);
    auto row = random_leaf({1, 5}, rng);
    auto pos = random_leaf({3, 5}, rng, 0.5, 2.0);
    auto gain = random_leaf({1, 5}, rng);
    auto bias = random_leaf({1, 5}, rng);
    auto z = random_leaf({3, 2}, rng);
    auto w = random_leaf({5, 4}, rng);
    std::vector<int> labels{0, 4, 2};
    const std::span<const int> lab(labels);
    const double h = kFiniteDifferenceStep;

    std::vector<std::pair<const char*, GradCheckResult>> results = {
        {"add", gradcheck({x, y}, [&] { return weighted_sum(add(x, y), 1); }, h)},
        {"add_row", gradcheck({x, row}, [&] { return weighted_sum(add(x, row), 2); }, h)},
        {"sub_row", gradcheck({x, row}, [&] { return weighted_sum(sub(x, row), 3); }, h)},
        {"mul", gradcheck({x, y}, [&] { return weighted_sum(mul(x, y), 4); }, h)},
        {"mul_row", gradcheck({x, row}, [&] { return weighted_sum(mul(x, row), 5); }, h)},
        {"scale", gradcheck({x}, [&] { return weighted_sum(scale(x, 2.5), 6); }, h)},
        {"relu", gradcheck({x}, [&] { return weighted_sum(relu(x), 7); }, h)},
        {"tanh", gradcheck({x}, [&] { return weighted_sum(ad::tanh(x), 8); }, h)},
        {"sigmoid", gradcheck({x}, [&] { return weighted_sum(sigmoid(x), 9); }, h)},
        {"exp", gradcheck({x}, [&] { return weighted_sum(ad::exp(x), 10); }, h)},
        {"log", gradcheck({pos}, [&] { return weighted_sum(ad::log(pos), 11); }, h)},
        {"layer_norm", gradcheck({y, gain, bias}, [&] { return weighted_sum(layer_norm(y, gain, bias), 12); }, h)},
        {"softmax", gradcheck({y}, [&] { return weighted_sum(softmax_rows(y), 13); }, h)},
        {"log_softmax", gradcheck({y}, [&] { return weighted_sum(log_softmax_rows(y), 14); }, h)},
        {"cross_entropy", gradcheck({y}, [&] { return cross_entropy(y, lab); }, h)},
        {"pick", gradcheck({y}, [&] { return weighted_sum(pick(y, lab), 15); }, h)},
        {"concat_cols", gradcheck({x, z}, [&] { return weighted_sum(concat_cols<double>({x, z, x}), 16); }, h)},
        {"concat_rows", gradcheck({x, row}, [&] { return weighted_sum(concat_rows<double>({x, row}), 17); }, h)},
        {"slice_cols", gradcheck({x}, [&] { return weighted_sum(slice_cols(x, 1, 3), 18); }, h)},
        {"slice_rows", gradcheck({x}, [&] { return weighted_sum(slice_rows(x, 1, 2), 19); }, h)},
        {"reshape", gradcheck({x}, [&] { return weighted_sum(reshape(x, {5, 3}), 20); }, h)},
        {"transpose", gradcheck({x}, [&] { return weighted_sum(transpose(x), 21); }, h)},
        {"sum", gradcheck({x}, [&] { return ad::sum(mul(x, y)); }, h)},
        {"mean", gradcheck({x}, [&] { return ad::mean(mul(x, x)); }, h)},
        {"mean_rows", gradcheck({x}, [&] { return weighted_sum(mean_rows(x), 22); }, h)},
        {"sum_rows", gradcheck({x}, [&] { return weighted_sum(sum_rows(x), 23); }, h)},
        {"matmul", gradcheck({x, w}, [&] { return weighted_sum(matmul(x, w), 24); }, h)},
    };
    double worst_primitive = 0.0;
    const char* worst_name = "";
    for (const auto& [name, r] : results)
        if (r.max_rel_error >= worst_primitive) {
            worst_primitive = r.max_rel_error;
            worst_name = name;
        }

    double worst_model = 0.0;
    for (bool compact : {true, false}) {
        auto cfg = shrunk_vt_config();
        cfg.compact_slots = compact;
        ad::ParameterSet<double> ps;
        Rng init(15);
        model::VisualTransformer<double> vt(cfg, ps, init);
        std::mt19937_64 gen(16);
        auto obs = synthetic_observation(cfg, 2, gen);
        auto locals = model::local_inputs<double>(obs.detections, obs.detections.slots[0].class_id, cfg, compact);
        locals.rows.set_requires_grad(true);
        auto g = model::global_input<double>(obs.global, cfg);
        g.set_requires_grad(true);
        std::vector<ad::Tensor<double>> inputs{locals.rows, g};
        for (auto& e : ps.entries()) inputs.push_back(e.tensor);
        worst_model = std::max(
            worst_model,
            gradcheck(inputs, [&] { return weighted_sum(vt.forward(locals, g), 99); }, h).max_rel_error);
    }
    return {worst_primitive <= kPrimitiveRelError && worst_model <= kEndToEndRelError,
            fmt("%zu primitives worst rel err %.2e (%s), shrunk VT end to end %.2e", results.size(), worst_primitive,
                worst_name, worst_model)};
}

Outcome expert_optimality() {
    int queries = 0, mismatches = 0, unreachable = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto scene = env::generate_scene(seed, {});
        const train::Expert expert(scene);
        Rng rng(derive_seed(seed, 42));
        for (int target : scene.present_classes()) {
            for (int k = 0; k < 5; ++k) {
                env::AgentPose start;
                do {
                    start = {uniform_int(rng, 0, scene.width() - 1), uniform_int(rng, 0, scene.height() - 1),
                             env::kRotationStep * uniform_int(rng, 0, 7), env::kPitchStep * uniform_int(rng, -1, 1)};
                } while (!scene.is_free(start.x, start.y));
                ++queries;
                const auto oracle = testing::bfs_oracle_path_length(scene, start, target);
                const auto planned = env::shortest_path_length(scene, start, target);
                if (oracle != planned) {
                    ++mismatches;
                    continue;
                }
                if (!planned) {
                    ++unreachable;
                    continue;
                }
                int length = 0;
                env::AgentPose pose = start;
                while (true) {
                    const auto a = train::expert_action(scene, pose, target);
                    ++length;
                    if (a == env::Action::Done || length > 200) break;
                    pose = env::step(scene, pose, a, target).pose;
                }
                if (length != *planned || !env::is_success(scene, pose, target)) ++mismatches;
            }
        }
    }
    return {mismatches == 0 && queries > 0,
            fmt("100 scenes, %d start/target queries (%d unreachable), %d mismatches", queries, unreachable, mismatches)};
}

Outcome permutation_invariance() {
    const auto cfg = model::VTConfig::desk();
    ad::ParameterSet<float> ps;
    Rng init(13);
    const model::VisualTransformer<float> vt(cfg, ps, init);
    std::mt19937_64 gen(14);
    perception::NoiseConfig noise;
    noise.p_fp = 0.2;
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        const auto scene = env::generate_scene(gen(), {});
        Rng pick(gen());
        const auto task = policy::sample_task({scene}, pick);
        const auto obs = perception::render_observation(scene, task.start, noise, gen());
        const auto base = vt.forward(obs, task.target_class);
        for (int p = 0; p < 5; ++p) {
            const auto shuffled = testing::permute_slots(obs, gen);
            worst = std::max(worst, testing::max_abs_diff(base.values(), vt.forward(shuffled, task.target_class).values()));
        }
    }
    return {worst <= kPermutationTolerance, fmt("20 observations x 5 permutations, max element diff %.2e", worst)};
}

Outcome metric_properties() {
    Rng rng(5);
    int violations = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<eval::EpisodeRecord> records;
        const int n = uniform_int(rng, 1, 50);
        for (int i = 0; i < n; ++i) {
            eval::EpisodeRecord r;
            r.optimal_length = uniform_int(rng, 1, 25);
            r.success = uniform01(rng) < 0.6;
            r.length = r.success ? *r.optimal_length + uniform_int(rng, 0, 25) : uniform_int(rng, 1, 50);
            records.push_back(r);
        }
        const auto report = eval::make_report(records);
        for (const auto* m : {&report.all, &report.long_paths})
            if (m->spl < 0.0 || m->spl > m->success_rate + 1e-12 || m->success_rate > 1.0) ++violations;
    }

    std::vector<env::GridScene> scenes;
    for (int i = 0; i < 10; ++i) scenes.push_back(env::generate_scene(derive_seed(55, i), {}, "m" + std::to_string(i)));
    const auto expert = eval::evaluate(eval::ExpertNavigator{}, scenes, policy::make_tasks(scenes, 20, 3), 3);

    eval::EpisodeRecord four, five;
    four.optimal_length = 4;
    five.optimal_length = 5;
    const auto split = eval::split_long({four, five});
    const bool boundary = split.all.size() == 2 && split.long_paths.size() == 1 && *split.long_paths[0].optimal_length == 5;
    const auto& e = expert.report.all;
    return {violations == 0 && e.success_rate == 1.0 && e.spl == 1.0 && boundary,
            fmt("%d violations over 1000 random sets; expert over %zu episodes: success %.3f SPL %.3f; boundary %s",
                violations, e.episodes, e.success_rate, e.spl, boundary ? "ok" : "wrong")};
}

Outcome determinism_and_serialization() {
    std::vector<env::GridScene> scenes;
    for (int i = 0; i < 3; ++i) scenes.push_back(env::generate_scene(derive_seed(9, i), {}, "d" + std::to_string(i)));
    policy::TrainConfig config;
    config.workers = 1;
    config.episodes = 40;
    config.seed = 21;
    config.eval_every = 20;
    config.eval_episodes_per_scene = 2;
    const auto tasks = policy::make_tasks(scenes, 2, 4);

    auto run = [&](ad::ParameterSet<float>& ps) {
        Rng init(config.seed);
        const policy::ActorCritic<float> agent(policy::Variant::VTNet, model::VTConfig::desk(), ps, init);
        return policy::train(config, agent, ps, scenes, tasks);
    };
    ad::ParameterSet<float> a, b;
    const auto ra = run(a);
    const auto rb = run(b);
    bool same_logs = ra.episodes.size() == rb.episodes.size();
    for (std::size_t i = 0; same_logs && i < ra.episodes.size(); ++i)
        same_logs = policy::to_csv(ra.episodes[i]) == policy::to_csv(rb.episodes[i]);
    bool same_params = true;
    for (std::size_t i = 0; i < a.entries().size(); ++i) {
        const auto va = a.entries()[i].tensor.values(), vb = b.entries()[i].tensor.values();
        same_params = same_params && std::memcmp(va.data(), vb.data(), va.size() * sizeof(float)) == 0;
    }

    const fs::path dir = fs::temp_directory_path() / ("vtnav_accept_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir);
    ad::Checkpoint ck;
    ck.store(a);
    eval::describe(ck, {policy::Variant::VTNet, model::VTConfig::desk()}, eval::kKindAgent, eval::scene_fingerprints(scenes));
    ck.save(dir / "a.ckpt");
    const auto loaded = ad::Checkpoint::load(dir / "a.ckpt");
    loaded.save(dir / "b.ckpt");
    ad::ParameterSet<float> restored;
    {
        Rng init(0);
        const policy::ActorCritic<float> agent(policy::Variant::VTNet, model::VTConfig::desk(), restored, init);
    }
    loaded.restore(restored);
    bool ckpt_ok = loaded == ck && hash_file(dir / "a.ckpt") == hash_file(dir / "b.ckpt");
    for (std::size_t i = 0; i < a.entries().size(); ++i) {
        const auto va = a.entries()[i].tensor.values(), vb = restored.entries()[i].tensor.values();
        ckpt_ok = ckpt_ok && std::memcmp(va.data(), vb.data(), va.size() * sizeof(float)) == 0;
    }

    const auto manifest = eval::generate_scene_set(dir / "scenes", 12, 5, {});
    bool scenes_ok = true;
    for (const auto& f : manifest.train) {
        const auto scene = env::load_scene(dir / "scenes" / f);
        env::save_scene(scene, dir / "copy.json");
        scenes_ok = scenes_ok && hash_file(dir / "scenes" / f) == hash_file(dir / "copy.json") &&
                    env::load_scene(dir / "copy.json") == scene;
    }
    fs::remove_all(dir);
    return {same_logs && same_params && ckpt_ok && scenes_ok,
            fmt("training replay: logs %s, parameters %s; checkpoint round trip %s; scene round trip %s",
                same_logs ? "identical" : "differ", same_params ? "bit-identical" : "differ", ckpt_ok ? "ok" : "FAILED",
                scenes_ok ? "ok" : "FAILED")};
}

Outcome pretraining() {
    std::vector<env::GridScene> scenes;
    for (int i = 0; i < kPretrainScenes; ++i)
        scenes.push_back(env::generate_scene(derive_seed(kPretrainSceneSeed, i), {}, "p" + std::to_string(i)));
    std::string detail;
    int passed = 0;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto data = train::generate_dataset(scenes, kPretrainStarts, {}, seed);
        ad::ParameterSet<float> ps;
        Rng init(seed);
        const model::VisualTransformer<float> vt(model::VTConfig::desk(), ps, init);
        const train::PretrainHead<float> head(ps, static_cast<std::size_t>(vt.config().d_model), 512, init);
        train::PretrainConfig config;
        config.epochs = kPretrainEpochs;
        config.seed = seed;
        const auto r = train::pretrain(vt, head, ps, data, scenes, config);
        const double margin = r.best_val_accuracy - r.majority_val_accuracy;
        passed += margin >= kPretrainMargin ? 1 : 0;
        detail += fmt("%sseed %d: %zu samples, val %.3f vs majority %.3f (+%.3f)", seed ? "; " : "", int(seed),
                      data.samples.size(), r.best_val_accuracy, r.majority_val_accuracy, margin);
    }
    return {passed == 3, detail};
}

std::vector<env::GridScene> toy_scenes() {
    env::SceneConfig config;
    config.width = config.height = kToySize;
    config.obstacle_density = 0.0;
    std::vector<env::GridScene> scenes;
    for (int i = 0; i < kToyScenes; ++i)
        scenes.push_back(env::generate_scene(derive_seed(kToySceneSeed, i), config, "toy" + std::to_string(i)));
    return scenes;
}

// VT weights after imitation pre-training on the toy scenes, one set per seed.
const ad::Checkpoint& toy_encoder(std::uint64_t seed) {
    static std::map<std::uint64_t, ad::Checkpoint> cache;
    if (auto it = cache.find(seed); it != cache.end()) return it->second;
    const auto scenes = toy_scenes();
    const auto data = train::generate_dataset(scenes, kToyEncoderStarts, {}, seed);
    ad::ParameterSet<float> ps;
    Rng init(derive_seed(seed, 1));
    const model::VisualTransformer<float> vt(model::VTConfig::desk(), ps, init);
    const train::PretrainHead<float> head(ps, static_cast<std::size_t>(vt.config().d_model), 512, init);
    train::PretrainConfig config;
    config.epochs = kToyEncoderEpochs;
    config.seed = seed;
    train::pretrain(vt, head, ps, data, scenes, config);
    ad::Checkpoint ck;
    ck.store(ps, "vt.");
    return cache[seed] = std::move(ck);
}

policy::TrainConfig toy_train_config(std::uint64_t seed, long long episodes) {
    policy::TrainConfig c;
    c.workers = kWorkers;
    c.episodes = episodes;
    c.seed = seed;
    c.lr_policy = kToyPolicyLr;
    c.lr_vt = kToyEncoderLr;
    c.eval_every = kEvalEvery;
    c.eval_episodes_per_scene = kValidationPerScene;
    return c;
}

struct ToyRun {
    policy::TrainResult result;
    double final_success = 0.0;  // last validation point, taken on the final parameters
    double tail_length = 0.0;    // mean training episode length over the final window
    double test_success = 0.0;   // best snapshot on held-out tasks
    long long episodes = 0;
};

ToyRun toy_run(policy::Variant variant, bool pretrained, const policy::TrainConfig& config) {
    const auto scenes = toy_scenes();
    ad::ParameterSet<float> ps;
    Rng init(config.seed);
    const policy::ActorCritic<float> agent(variant, model::VTConfig::desk(), ps, init);
    if (pretrained) toy_encoder(config.seed).restore(ps, "vt.");
    ToyRun run;
    policy::TrainCallbacks progress;
    progress.on_evaluation = [&](const policy::EvaluationPoint& p, const ad::ParameterSet<float>&) {
        std::fprintf(stderr, "  %s seed %d: episode %lld validation %.3f\n", policy::to_string(variant).c_str(),
                     int(config.seed), p.episode, p.result.success_rate);
    };
    run.result =
        policy::train(config, agent, ps, scenes, scenes, policy::make_tasks(scenes, kValidationPerScene, 999), progress);
    run.episodes = static_cast<long long>(run.result.episodes.size());
    run.final_success = run.result.evaluations.back().result.success_rate;
    const auto n = run.result.episodes.size();
    run.tail_length = policy::summarize(run.result.episodes, n - std::min<std::size_t>(n, kNecessityWindow), n).mean_length;
    const auto test = eval::evaluate(eval::NeuralNavigator(agent, config.noise), scenes,
                                     policy::make_tasks(scenes, kTestPerScene, 4242), 4242);
    run.test_success = test.report.all.success_rate;
    return run;
}

Outcome pretraining_necessity() {
    int passed = 0;
    std::string detail;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto config = toy_train_config(seed, kNecessityBudget);
        const auto with = toy_run(policy::Variant::VTNet, true, config);
        const auto without = toy_run(policy::Variant::VTNet, false, config);
        const bool collapsed = without.tail_length <= kCollapsedLength;
        const bool longer = with.tail_length >= kMaterialLengthRatio * without.tail_length;
        const bool better = with.final_success > without.final_success;
        passed += collapsed && longer && better ? 1 : 0;
        detail += fmt("%sseed %d: length %.2f vs %.2f, success %.3f vs %.3f", seed ? "; " : "", int(seed),
                      with.tail_length, without.tail_length, with.final_success, without.final_success);
    }
    return {passed >= 2, fmt("%d/3 seeds (pretrained vs not) ", passed) + detail};
}

Outcome desk_training() {
    int reached = 0, ordered = 0;
    std::string detail;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        auto config = toy_train_config(seed, kMaxEpisodes);
        config.stop_success = kTargetSuccess;
        const auto vtnet = toy_run(policy::Variant::VTNet, true, config);
        config.stop_success = 0.0;
        config.episodes = vtnet.episodes;
        const auto baseline = toy_run(policy::Variant::Baseline, false, config);
        reached += vtnet.result.best_success >= kTargetSuccess ? 1 : 0;
        ordered += baseline.test_success <= vtnet.test_success ? 1 : 0;
        detail += fmt("%sseed %d: VTNet val %.3f after %lld episodes, test %.3f vs Baseline %.3f", seed ? "; " : "",
                      int(seed), vtnet.result.best_success, vtnet.episodes, vtnet.test_success, baseline.test_success);
    }
    return {reached == 3 && ordered >= 2, fmt("reached %d/3, Baseline not above VTNet %d/3; ", reached, ordered) + detail};
}

struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> only;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
            only.push_back(std::atoi(argv[++i]));
        } else {
            std::fprintf(stderr, "usage: %s [--only N]...\n", argv[0]);
            return 2;
        }
    }
    const std::vector<Criterion> criteria = {
        {1, "equation oracles", equation_oracles},
        {2, "gradient suite", gradient_suite},
        {3, "expert optimality", expert_optimality},
        {4, "permutation invariance", permutation_invariance},
        {5, "metric properties", metric_properties},
        {6, "imitation pre-training", pretraining},
        {7, "pre-training necessity", pretraining_necessity},
        {8, "desk-scale training", desk_training},
        {9, "determinism and serialization", determinism_and_serialization},
    };
    bool all = true;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s criterion %d (%s): %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
        std::fflush(stdout);
        all = all && o.pass;
    }
    return all ? 0 : 1;
}
