#include "vtnav/train/expert.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "vtnav/env/navigation.hpp"
#include "vtnav/util/random.hpp"

namespace vtnav::train {

namespace {
constexpr int kDatasetFormatVersion = 1;
}

Expert::Expert(const env::GridScene& scene) : scene_(&scene), graph_(std::make_unique<env::NavigationGraph>(scene)) {}

const env::DistanceField& Expert::field(int target_class) const {
    auto it = fields_.find(target_class);
    if (it == fields_.end())
        it = fields_.emplace(target_class, std::make_unique<env::DistanceField>(*graph_, target_class)).first;
    return *it->second;
}

env::Action Expert::action(const env::AgentPose& pose, int target_class) const {
    const auto a = field(target_class).best_action(pose);
    if (!a) throw UnreachableError("target class " + std::to_string(target_class) + " unreachable from " + env::to_string(pose));
    return *a;
}

std::optional<int> Expert::shortest_path_length(const env::AgentPose& pose, int target_class) const {
    return field(target_class).shortest_path_length(pose);
}

std::vector<env::Action> Expert::rollout(const env::AgentPose& start, int target_class) const {
    std::vector<env::Action> actions;
    env::AgentPose pose = start;
    while (true) {
        const env::Action a = action(pose, target_class);
        actions.push_back(a);
        if (a == env::Action::Done) return actions;
        pose = env::step(*scene_, pose, a, target_class).pose;
    }
}

env::Action expert_action(const env::GridScene& scene, const env::AgentPose& pose, int target_class) {
    return Expert(scene).action(pose, target_class);
}

ExpertDataset generate_dataset(const std::vector<env::GridScene>& scenes, int starts_per_scene,
                               const perception::NoiseConfig& noise, std::uint64_t seed,
                               std::uint64_t scene_config_hash) {
    if (scenes.empty()) throw std::invalid_argument("no scenes to generate a dataset from");
    if (starts_per_scene < 1) throw std::invalid_argument("starts_per_scene must be positive");
    ExpertDataset data;
    data.noise = noise;
    data.seed = seed;
    data.scene_config_hash = scene_config_hash;
    for (const auto& s : scenes) data.scene_ids.push_back(s.id());

    // One random stream per scene.
    for (std::size_t si = 0; si < scenes.size(); ++si) {
        const auto& scene = scenes[si];
        const auto classes = scene.present_classes();
        if (classes.empty()) continue;
        const Expert expert(scene);
        Rng rng(derive_seed(seed, si, 0));
        Rng render_rng(derive_seed(seed, si, 1));
        for (int k = 0; k < starts_per_scene; ++k) {
            env::AgentPose start;
            int target = 0;
            for (int tries = 0;; ++tries) {
                if (tries > 10000) throw UnreachableError("no reachable start in scene " + scene.id());
                start = {uniform_int(rng, 0, scene.width() - 1), uniform_int(rng, 0, scene.height() - 1),
                         env::kRotationStep * uniform_int(rng, 0, 7), env::kPitchStep * uniform_int(rng, -1, 1)};
                target = classes[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(classes.size()) - 1))];
                if (scene.is_free(start.x, start.y) && expert.shortest_path_length(start, target)) break;
            }
            env::AgentPose pose = start;
            for (int t = 0;; ++t) {
                ExpertSample sample;
                sample.scene_index = static_cast<int>(si);
                sample.pose = pose;
                sample.target = target;
                sample.label = expert.action(pose, target);
                sample.timestep = t;
                sample.render_seed = render_rng();
                data.samples.push_back(sample);
                if (sample.label == env::Action::Done) break;
                pose = env::step(scene, pose, sample.label, target).pose;
            }
        }
    }
    return data;
}

perception::Observation render_sample(const ExpertSample& sample, const std::vector<env::GridScene>& scenes,
                                      const perception::NoiseConfig& noise, const perception::PerceptionOracle& oracle) {
    if (sample.scene_index < 0 || sample.scene_index >= static_cast<int>(scenes.size()))
        throw std::out_of_range("sample refers to a missing scene");
    return oracle.render(scenes[static_cast<std::size_t>(sample.scene_index)], sample.pose, noise, sample.render_seed,
                         sample.timestep);
}

std::array<int, env::kNumActions> label_histogram(const std::vector<ExpertSample>& samples) {
    std::array<int, env::kNumActions> h{};
    for (const auto& s : samples) ++h[static_cast<std::size_t>(env::index_of(s.label))];
    return h;
}

namespace {

nlohmann::json header_json(const ExpertDataset& data, bool with_observations) {
    return {{"version", kDatasetFormatVersion},
            {"scene_config_hash", data.scene_config_hash},
            {"sample_count", data.samples.size()},
            {"seed", data.seed},
            {"noise",
             {{"sigma_bbox", data.noise.sigma_bbox},
              {"sigma_feat", data.noise.sigma_feat},
              {"p_miss", data.noise.p_miss},
              {"p_fp", data.noise.p_fp}}},
            {"scenes", data.scene_ids},
            {"observations", with_observations}};
}

void write_dataset(std::ostream& out, const ExpertDataset& data, const std::vector<env::GridScene>* scenes) {
    out << header_json(data, scenes != nullptr).dump() << '\n';
    const auto& oracle = perception::default_oracle();
    for (const auto& s : data.samples) {
        const nlohmann::json j = {{"scene", s.scene_index},  {"x", s.pose.x},         {"y", s.pose.y},
                                  {"heading", s.pose.heading}, {"pitch", s.pose.pitch}, {"target", s.target},
                                  {"label", env::to_string(s.label)}, {"t", s.timestep}, {"seed", s.render_seed}};
        out << j.dump() << '\n';
        if (scenes) perception::write_observation(out, render_sample(s, *scenes, data.noise, oracle), oracle.config());
    }
}

}  // namespace

std::string dataset_bytes(const ExpertDataset& data, const std::vector<env::GridScene>* scenes) {
    std::ostringstream out;
    write_dataset(out, data, scenes);
    return out.str();
}

void save_dataset(const ExpertDataset& data, const std::filesystem::path& path,
                  const std::vector<env::GridScene>* scenes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_dataset(out, data, scenes);
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

ExpertDataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw DatasetFormatError("empty dataset file");
    try {
        const auto h = nlohmann::json::parse(line);
        if (h.at("version").get<int>() != kDatasetFormatVersion) throw DatasetFormatError("unsupported dataset version");
        ExpertDataset data;
        data.scene_config_hash = h.at("scene_config_hash").get<std::uint64_t>();
        data.seed = h.at("seed").get<std::uint64_t>();
        const auto& n = h.at("noise");
        data.noise = {n.at("sigma_bbox").get<double>(), n.at("sigma_feat").get<double>(), n.at("p_miss").get<double>(),
                      n.at("p_fp").get<double>()};
        data.scene_ids = h.at("scenes").get<std::vector<std::string>>();
        const bool with_obs = h.at("observations").get<bool>();
        const auto count = h.at("sample_count").get<std::size_t>();
        for (std::size_t i = 0; i < count; ++i) {
            if (!std::getline(in, line)) throw DatasetFormatError("dataset ends after " + std::to_string(i) + " samples");
            const auto j = nlohmann::json::parse(line);
            ExpertSample s;
            s.scene_index = j.at("scene").get<int>();
            s.pose = {j.at("x").get<int>(), j.at("y").get<int>(), j.at("heading").get<int>(), j.at("pitch").get<int>()};
            s.target = j.at("target").get<int>();
            const auto label = env::parse_action(j.at("label").get<std::string>());
            if (!label) throw DatasetFormatError("unknown action label in sample " + std::to_string(i));
            s.label = *label;
            s.timestep = j.at("t").get<int>();
            s.render_seed = j.at("seed").get<std::uint64_t>();
            if (s.scene_index < 0 || s.scene_index >= static_cast<int>(data.scene_ids.size()))
                throw DatasetFormatError("sample " + std::to_string(i) + " refers to an unknown scene");
            data.samples.push_back(s);
            if (with_obs) perception::read_observation(in);
        }
        return data;
    } catch (const nlohmann::json::exception& e) {
        throw DatasetFormatError(std::string("malformed dataset: ") + e.what());
    } catch (const perception::ObservationFormatError& e) {
        throw DatasetFormatError(std::string("malformed observation block: ") + e.what());
    }
}

}  // namespace vtnav::train
