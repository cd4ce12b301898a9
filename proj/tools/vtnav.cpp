#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>

#include "CLI11.hpp"
#include "json.hpp"
#include "vtnav/eval/artifacts.hpp"
#include "vtnav/eval/evaluate.hpp"
#include "vtnav/train/pretrain.hpp"
#include "vtnav/util/hash.hpp"

using namespace vtnav;
namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int fail(const std::string& code, const std::string& message, int exit_code) {
    std::cerr << nlohmann::json{{"error", code}, {"message", message}}.dump() << std::endl;
    return exit_code;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw eval::IoError("cannot open " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw eval::IoError("cannot write " + path.string());
    return out;
}

eval::Split split_arg(const std::string& name) {
    const auto split = eval::parse_split(name);
    if (!split) throw UsageError("unknown split " + name + " (train, val, test)");
    return *split;
}

ad::Checkpoint load_checkpoint(const fs::path& path) {
    if (!fs::exists(path)) throw eval::IoError("missing checkpoint " + path.string());
    return ad::Checkpoint::load(path);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct GenScenesArgs {
    int count = 40;
    std::string out;
    std::uint64_t seed = 0;
    env::SceneConfig config;
};

int gen_scenes(const GenScenesArgs& a) {
    const auto m = eval::generate_scene_set(a.out, a.count, a.seed, a.config);
    std::cout << "wrote " << a.count << " scenes to " << a.out << " (train " << m.train.size() << ", val "
              << m.val.size() << ", test " << m.test.size() << ", config " << hex64(m.config_hash) << ")\n";
    return 0;
}

struct PretrainArgs {
    std::string scenes;
    std::string split = "train";
    int starts = 250;
    train::PretrainConfig config;
    int d_model = model::VTConfig::desk().d_model;
    bool noiseless = false;
    std::string out;
    std::string log;
    std::string dataset;
};

int pretrain_cmd(const PretrainArgs& a) {
    const auto manifest = eval::load_manifest(a.scenes);
    const auto scenes = eval::load_split(a.scenes, manifest, split_arg(a.split));
    auto vt_config = model::VTConfig::desk();
    vt_config.d_model = a.d_model;
    try {
        vt_config.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const auto noise = a.noiseless ? perception::NoiseConfig::none() : perception::NoiseConfig{};
    const auto data = train::generate_dataset(scenes, a.starts, noise, a.config.seed, manifest.config_hash);
    if (!a.dataset.empty()) train::save_dataset(data, a.dataset);

    ad::ParameterSet<float> params;
    Rng rng(a.config.seed);
    const model::VisualTransformer<float> vt(vt_config, params, rng);
    const train::PretrainHead<float> head(params, static_cast<std::size_t>(vt_config.d_model),
                                          static_cast<std::size_t>(a.config.hidden), rng);
    std::ofstream log;
    if (!a.log.empty()) {
        log = open_out(a.log);
        log << "epoch,train_loss,train_accuracy,val_accuracy\n";
    }
    const auto t0 = std::chrono::steady_clock::now();
    std::cout << "samples " << data.samples.size() << ", epochs " << a.config.epochs << "\n";
    const auto result = train::pretrain(vt, head, params, data, scenes, a.config, [&](const train::EpochStats& s) {
        std::printf("epoch %3d  loss %.4f  train %.4f  val %.4f  (%.0fs)\n", s.epoch, s.train_loss, s.train_accuracy,
                    s.val_accuracy, seconds_since(t0));
        std::fflush(stdout);
        if (log) log << s.epoch << ',' << s.train_loss << ',' << s.train_accuracy << ',' << s.val_accuracy << '\n';
    });
    std::printf("best val %.4f at epoch %d, majority baseline %.4f\n", result.best_val_accuracy, result.best_epoch,
                result.majority_val_accuracy);

    ad::Checkpoint ck;
    ck.store(params, "vt.");
    eval::describe(ck, {policy::Variant::VTNet, vt_config}, eval::kKindEncoder, eval::scene_fingerprints(scenes));
    ck.metadata["best_val_accuracy"] = std::to_string(result.best_val_accuracy);
    ck.save(a.out);
    std::cout << "saved " << a.out << "\n";
    return 0;
}

struct TrainArgs {
    std::string scenes;
    std::string split = "train";
    std::string val_split = "val";
    std::string config;
    std::string variant = "vtnet";
    std::string vt;
    std::string out;
    std::string log;
    int d_model = model::VTConfig::desk().d_model;
    bool print_config = false;
};

int train_cmd(const TrainArgs& a) {
    if (a.print_config) {
        std::cout << policy::to_text(policy::TrainConfig{});
        return 0;
    }
    if (a.scenes.empty() || a.config.empty() || a.out.empty())
        throw UsageError("train needs --scenes, --config and --out");
    const auto config = policy::parse_train_config(read_file(a.config));
    const auto variant = policy::parse_variant(a.variant);
    if (!variant) throw UsageError("unknown variant " + a.variant + " (vtnet, baseline)");

    const auto manifest = eval::load_manifest(a.scenes);
    const auto scenes = eval::load_split(a.scenes, manifest, split_arg(a.split));
    const auto val_scenes = eval::load_split(a.scenes, manifest, split_arg(a.val_split));

    eval::AgentSpec spec{*variant, model::VTConfig::desk()};
    spec.vt.d_model = a.d_model;
    std::optional<ad::Checkpoint> encoder;
    if (!a.vt.empty()) {
        if (*variant != policy::Variant::VTNet) throw UsageError("--vt applies only to the vtnet variant");
        encoder = load_checkpoint(a.vt);
        spec.vt = eval::agent_spec(*encoder).vt;
    }

    ad::ParameterSet<float> params;
    Rng rng(config.seed);
    const policy::ActorCritic<float> agent(spec.variant, spec.vt, params, rng);
    if (encoder) encoder->restore(params, "vt.");

    const auto val_tasks = policy::make_tasks(val_scenes, config.eval_episodes_per_scene, derive_seed(config.seed, 1));

    std::ofstream log;
    if (!a.log.empty()) {
        log = open_out(a.log);
        log << policy::episode_csv_header() << '\n';
    }
    std::vector<policy::EpisodeLog> logs;
    const auto t0 = std::chrono::steady_clock::now();
    policy::TrainCallbacks callbacks;
    callbacks.on_episode = [&](const policy::EpisodeLog& e) {
        logs.push_back(e);
        if (log) log << policy::to_csv(e) << '\n';
        if (logs.size() % 500 == 0) {
            const auto s = policy::summarize(logs, logs.size() - 500, logs.size());
            std::printf("episodes %zu  success %.3f  length %.2f  return %.3f  (%.0fs)\n", logs.size(), s.success_rate,
                        s.mean_length, s.mean_reward, seconds_since(t0));
            std::fflush(stdout);
        }
    };
    callbacks.on_evaluation = [&](const policy::EvaluationPoint& p, const ad::ParameterSet<float>&) {
        std::printf("validation at %lld: success %.3f  length %.2f\n", p.episode, p.result.success_rate,
                    p.result.mean_length);
        std::fflush(stdout);
    };
    const auto result = policy::train(config, agent, params, scenes, val_scenes, val_tasks, callbacks);
    if (result.best_episode >= 0)
        std::printf("best validation success %.3f at episode %lld%s\n", result.best_success, result.best_episode,
                    result.stopped_early ? " (stopped early)" : "");

    ad::Checkpoint ck;
    ck.store(params);
    eval::describe(ck, spec, eval::kKindAgent, eval::scene_fingerprints(scenes));
    ck.metadata[eval::kTrainConfigKey] = policy::to_text(config);
    ck.save(a.out);
    std::cout << "saved " << a.out << "\n";
    return 0;
}

struct EvalArgs {
    std::string ckpt;
    std::string agent = "neural";
    std::string scenes;
    std::string split = "test";
    int episodes_per_scene = 20;
    std::uint64_t seed = 0;
    int max_steps = env::kDefaultMaxSteps;
    std::string records;
    std::string csv;
    std::string json;
    bool allow_train_scenes = false;
};

int eval_cmd(const EvalArgs& a) {
    const auto manifest = eval::load_manifest(a.scenes);
    const auto scenes = eval::load_split(a.scenes, manifest, split_arg(a.split));

    std::unique_ptr<eval::Navigator> navigator;
    std::optional<ad::Checkpoint> ck;
    ad::ParameterSet<float> params;
    std::unique_ptr<policy::ActorCritic<float>> agent;
    std::string checkpoint_hash;
    if (a.agent == "expert") {
        navigator = std::make_unique<eval::ExpertNavigator>();
    } else if (a.agent == "random") {
        navigator = std::make_unique<eval::RandomNavigator>();
    } else if (a.agent == "neural") {
        if (a.ckpt.empty()) throw UsageError("--agent neural needs --ckpt");
        ck = load_checkpoint(a.ckpt);
        checkpoint_hash = hex64(hash_file(a.ckpt));
        if (ck->metadata[eval::kKindKey] != eval::kKindAgent)
            throw UsageError("checkpoint " + a.ckpt + " is not a trained agent");
        const auto spec = eval::agent_spec(*ck);
        if (!a.allow_train_scenes) {
            const auto trained = eval::training_fingerprints(*ck);
            const std::set<std::string> seen(trained.begin(), trained.end());
            for (const auto& f : eval::scene_fingerprints(scenes))
                if (seen.count(f))
                    throw UsageError("scene " + f + " was used for training; pass --allow-train-scenes to evaluate on it");
        }
        perception::NoiseConfig noise;
        if (auto it = ck->metadata.find(eval::kTrainConfigKey); it != ck->metadata.end())
            noise = policy::parse_train_config(it->second).noise;
        Rng rng(0);
        agent = std::make_unique<policy::ActorCritic<float>>(spec.variant, spec.vt, params, rng);
        ck->restore(params);
        navigator = std::make_unique<eval::NeuralNavigator>(*agent, noise);
    } else {
        throw UsageError("unknown agent " + a.agent + " (neural, expert, random)");
    }

    const auto tasks = policy::make_tasks(scenes, a.episodes_per_scene, a.seed);
    auto result = eval::evaluate(*navigator, scenes, tasks, a.seed, a.max_steps);
    result.report.checkpoint_hash = checkpoint_hash;
    if (result.report.all.excluded > 0)
        std::cerr << "excluded " << result.report.all.excluded << " episodes with unreachable targets from SPL\n";
    std::cout << eval::report_table(result.report);
    if (!a.records.empty()) eval::write_records(a.records, result.records);
    if (!a.csv.empty()) open_out(a.csv) << eval::report_csv(result.report);
    if (!a.json.empty()) open_out(a.json) << eval::report_json(result.report);
    return 0;
}

struct ExpertCheckArgs {
    int seeds = 100;
    int starts = 5;
    std::uint64_t base = 0;
};

int expert_check_cmd(const ExpertCheckArgs& a) {
    const auto check = eval::expert_check(a.seeds, a.starts, env::SceneConfig{}, a.base);
    for (const auto& f : check.failures) std::cout << "mismatch: " << f << "\n";
    std::cout << check.scenes_matched << "/" << check.scenes << " scenes exact matches (" << check.queries
              << " queries, " << check.mismatches << " mismatches)\n";
    return check.mismatches == 0 ? 0 : 1;
}

struct InspectArgs {
    std::string ckpt;
    bool tensors = false;
};

int inspect_cmd(const InspectArgs& a) {
    const auto ck = load_checkpoint(a.ckpt);
    std::size_t scalars = 0;
    for (const auto& [name, e] : ck.tensors) scalars += e.values.size();
    std::cout << "file " << a.ckpt << "\n";
    std::cout << "content hash " << hex64(hash_file(a.ckpt)) << "\n";
    std::cout << "tensors " << ck.tensors.size() << ", scalars " << scalars << "\n";
    for (const auto& [k, v] : ck.metadata) {
        if (k == eval::kTrainScenesKey) {
            std::cout << k << ": " << eval::training_fingerprints(ck).size() << " scenes\n";
            continue;
        }
        std::string flat = v;
        std::erase(flat, '\n');
        std::cout << k << ": " << flat << "\n";
    }
    if (a.tensors)
        for (const auto& [name, e] : ck.tensors) std::cout << "  " << name << " " << ad::to_string(e.shape) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Object-goal navigation with a visual transformer: scenes, training and evaluation"};
    app.require_subcommand(1);

    GenScenesArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-scenes", "Generate a seeded scene set with a train/val/test manifest");
    gen_cmd->add_option("--count", gen.count, "Number of scenes")->capture_default_str()->check(CLI::Range(3, 100000));
    gen_cmd->add_option("--out", gen.out, "Output directory")->required();
    gen_cmd->add_option("--seed", gen.seed, "Base seed")->capture_default_str();
    gen_cmd->add_option("--width", gen.config.width, "Grid width in cells")->capture_default_str();
    gen_cmd->add_option("--height", gen.config.height, "Grid height in cells")->capture_default_str();
    gen_cmd->add_option("--density", gen.config.obstacle_density, "Obstacle density")->capture_default_str();

    PretrainArgs pre;
    auto* pre_cmd = app.add_subcommand("pretrain", "Imitation pre-training of the visual transformer");
    pre_cmd->add_option("--scenes", pre.scenes, "Scene set directory")->required();
    pre_cmd->add_option("--split", pre.split, "Scene split to draw samples from")->capture_default_str();
    pre_cmd->add_option("--starts", pre.starts, "Expert trajectories per scene")->capture_default_str();
    pre_cmd->add_option("--epochs", pre.config.epochs, "Training epochs")->capture_default_str();
    pre_cmd->add_option("--lr", pre.config.lr, "Adam learning rate")->capture_default_str();
    pre_cmd->add_option("--batch", pre.config.batch, "Minibatch size")->capture_default_str();
    pre_cmd->add_option("--hidden", pre.config.hidden, "Classifier hidden width")->capture_default_str();
    pre_cmd->add_option("--val-fraction", pre.config.val_fraction, "Held-out sample fraction")->capture_default_str();
    pre_cmd->add_option("--seed", pre.config.seed, "Seed")->capture_default_str();
    pre_cmd->add_option("--d-model", pre.d_model, "Transformer width")->capture_default_str();
    pre_cmd->add_flag("--noiseless", pre.noiseless, "Render observations without perception noise");
    pre_cmd->add_option("--out", pre.out, "Output checkpoint")->required();
    pre_cmd->add_option("--log", pre.log, "Per-epoch CSV log");
    pre_cmd->add_option("--dataset", pre.dataset, "Also save the expert dataset here");

    TrainArgs tr;
    auto* tr_cmd = app.add_subcommand("train", "A3C training of the navigation policy");
    tr_cmd->add_option("--scenes", tr.scenes, "Scene set directory");
    tr_cmd->add_option("--split", tr.split, "Training split")->capture_default_str();
    tr_cmd->add_option("--val-split", tr.val_split, "Validation split")->capture_default_str();
    tr_cmd->add_option("--config", tr.config, "Training config JSON (every field required)");
    tr_cmd->add_option("--variant", tr.variant, "vtnet or baseline")->capture_default_str();
    tr_cmd->add_option("--vt", tr.vt, "Pre-trained transformer checkpoint");
    tr_cmd->add_option("--d-model", tr.d_model, "Transformer width without --vt")->capture_default_str();
    tr_cmd->add_option("--out", tr.out, "Output checkpoint");
    tr_cmd->add_option("--log", tr.log, "Per-episode CSV log");
    tr_cmd->add_flag("--print-config", tr.print_config, "Print the default training config and exit");

    EvalArgs ev;
    auto* ev_cmd = app.add_subcommand("eval", "Evaluate an agent: success rate and SPL on ALL and L>=5");
    ev_cmd->add_option("--ckpt", ev.ckpt, "Trained agent checkpoint");
    ev_cmd->add_option("--agent", ev.agent, "neural, expert or random")->capture_default_str();
    ev_cmd->add_option("--scenes", ev.scenes, "Scene set directory")->required();
    ev_cmd->add_option("--split", ev.split, "Scene split")->capture_default_str();
    ev_cmd->add_option("--episodes-per-scene", ev.episodes_per_scene, "Episodes per scene")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    ev_cmd->add_option("--seed", ev.seed, "Seed for tasks and observation noise")->capture_default_str();
    ev_cmd->add_option("--max-steps", ev.max_steps, "Step budget per episode")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    ev_cmd->add_option("--records", ev.records, "Per-episode JSON lines output");
    ev_cmd->add_option("--csv", ev.csv, "Metrics CSV output");
    ev_cmd->add_option("--json", ev.json, "Metrics JSON output");
    ev_cmd->add_flag("--allow-train-scenes", ev.allow_train_scenes, "Permit scenes the agent was trained on");

    ExpertCheckArgs ec;
    auto* ec_cmd = app.add_subcommand("expert-check", "Compare the expert with a forward breadth-first search");
    ec_cmd->add_option("--seeds", ec.seeds, "Scenes to generate")->capture_default_str()->check(CLI::PositiveNumber);
    ec_cmd->add_option("--starts", ec.starts, "Start poses per target class")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    ec_cmd->add_option("--base-seed", ec.base, "First scene seed")->capture_default_str();

    InspectArgs in;
    auto* in_cmd = app.add_subcommand("inspect-ckpt", "Print checkpoint metadata and contents");
    in_cmd->add_option("--ckpt", in.ckpt, "Checkpoint file")->required();
    in_cmd->add_flag("--tensors", in.tensors, "List every tensor");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what(), 2);
    }

    try {
        if (*gen_cmd) return gen_scenes(gen);
        if (*pre_cmd) return pretrain_cmd(pre);
        if (*tr_cmd) return train_cmd(tr);
        if (*ev_cmd) return eval_cmd(ev);
        if (*ec_cmd) return expert_check_cmd(ec);
        if (*in_cmd) return inspect_cmd(in);
    } catch (const UsageError& e) {
        return fail("usage", e.what(), 2);
    } catch (const eval::IoError& e) {
        return fail("io", e.what(), 1);
    } catch (const ad::CheckpointError& e) {
        return fail("checkpoint", e.what(), 1);
    } catch (const policy::ConfigError& e) {
        return fail("config", e.what(), 1);
    } catch (const std::exception& e) {
        return fail("runtime", e.what(), 1);
    }
    return 2;
}
