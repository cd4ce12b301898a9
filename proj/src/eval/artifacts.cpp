#include "vtnav/eval/artifacts.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "vtnav/env/scene_io.hpp"
#include "vtnav/util/hash.hpp"
#include "vtnav/util/random.hpp"

namespace vtnav::eval {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Split split) {
    switch (split) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "?";
}

std::optional<Split> parse_split(std::string_view name) {
    for (Split s : {Split::Train, Split::Val, Split::Test})
        if (to_string(s) == name) return s;
    return std::nullopt;
}

const std::vector<std::string>& SceneManifest::files(Split split) const {
    switch (split) {
        case Split::Train: return train;
        case Split::Val: return val;
        case Split::Test: break;
    }
    return test;
}

namespace {

ordered_json scene_config_json(const env::SceneConfig& c) {
    return {{"width", c.width},
            {"height", c.height},
            {"obstacle_density", c.obstacle_density},
            {"objects_per_class", c.objects_per_class},
            {"classes_per_scene", c.classes_per_scene},
            {"num_classes", c.num_classes},
            {"max_attempts", c.max_attempts}};
}

env::SceneConfig scene_config_from(const json& j) {
    env::SceneConfig c;
    c.width = j.at("width").get<int>();
    c.height = j.at("height").get<int>();
    c.obstacle_density = j.at("obstacle_density").get<double>();
    c.objects_per_class = j.at("objects_per_class").get<int>();
    c.classes_per_scene = j.at("classes_per_scene").get<int>();
    c.num_classes = j.at("num_classes").get<int>();
    c.max_attempts = j.at("max_attempts").get<int>();
    return c;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ',';
        out += items[i];
    }
    return out;
}

}  // namespace

std::string to_text(const SceneManifest& m) {
    const ordered_json j = {{"version", 1},
                            {"seed", m.seed},
                            {"config_hash", hex64(m.config_hash)},
                            {"config", scene_config_json(m.config)},
                            {"train", m.train},
                            {"val", m.val},
                            {"test", m.test}};
    return j.dump(2) + "\n";
}

SceneManifest parse_manifest(const std::string& text) {
    try {
        const auto j = json::parse(text);
        if (j.at("version").get<int>() != 1) throw IoError("unsupported manifest version");
        SceneManifest m;
        m.seed = j.at("seed").get<std::uint64_t>();
        m.config = scene_config_from(j.at("config"));
        m.config_hash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
        m.train = j.at("train").get<std::vector<std::string>>();
        m.val = j.at("val").get<std::vector<std::string>>();
        m.test = j.at("test").get<std::vector<std::string>>();
        validate(m);
        return m;
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed manifest: ") + e.what());
    } catch (const std::logic_error& e) {
        throw IoError(std::string("malformed manifest: ") + e.what());
    }
}

void validate(const SceneManifest& m) {
    if (env::config_hash(m.config) != m.config_hash) throw IoError("manifest config hash does not match its config");
    std::set<std::string> seen;
    for (const auto* list : {&m.train, &m.val, &m.test})
        for (const auto& f : *list)
            if (!seen.insert(f).second) throw IoError("scene file listed twice in manifest: " + f);
}

SceneManifest generate_scene_set(const std::filesystem::path& dir, int count, std::uint64_t seed,
                                 const env::SceneConfig& config) {
    if (count < 3) throw std::invalid_argument("a scene set needs at least 3 scenes");
    env::validate(config);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

    SceneManifest m;
    m.config = config;
    m.config_hash = env::config_hash(config);
    m.seed = seed;
    const int n_train = count / 2;
    const int n_val = std::max(1, count / 4);
    for (int i = 0; i < count; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "scene_%03d", i);
        const auto scene = env::generate_scene(derive_seed(seed, static_cast<std::uint64_t>(i)), config, id);
        const std::string file = std::string(id) + ".json";
        try {
            env::save_scene(scene, dir / file);
        } catch (const std::exception& e) {
            throw IoError(e.what());
        }
        (i < n_train ? m.train : i < n_train + n_val ? m.val : m.test).push_back(file);
    }
    write_text(dir / kManifestName, to_text(m));
    return m;
}

SceneManifest load_manifest(const std::filesystem::path& dir) {
    return parse_manifest(read_text(dir / kManifestName));
}

std::vector<env::GridScene> load_split(const std::filesystem::path& dir, const SceneManifest& manifest, Split split) {
    std::vector<env::GridScene> scenes;
    for (const auto& f : manifest.files(split)) {
        if (!std::filesystem::exists(dir / f)) throw IoError("missing scene file " + (dir / f).string());
        try {
            scenes.push_back(env::load_scene(dir / f));
        } catch (const std::exception& e) {
            throw IoError(std::string("cannot load ") + (dir / f).string() + ": " + e.what());
        }
    }
    if (scenes.empty()) throw IoError("split " + std::string(to_string(split)) + " is empty");
    return scenes;
}

std::string to_text(const model::VTConfig& c) {
    const ordered_json j = {{"d_model", c.d_model},
                            {"num_slots", c.num_slots},
                            {"grid_h", c.grid_h},
                            {"grid_w", c.grid_w},
                            {"global_channels", c.global_channels},
                            {"feature_dim", c.feature_dim},
                            {"heads", c.heads},
                            {"encoder_layers", c.encoder_layers},
                            {"decoder_layers", c.decoder_layers},
                            {"ff_width", c.ff_width},
                            {"num_classes", c.num_classes},
                            {"decoder_self_attention", c.decoder_self_attention},
                            {"positional_encoding", c.positional_encoding},
                            {"compact_slots", c.compact_slots}};
    return j.dump();
}

model::VTConfig parse_vt_config(const std::string& text) {
    try {
        const auto j = json::parse(text);
        model::VTConfig c;
        c.d_model = j.at("d_model").get<int>();
        c.num_slots = j.at("num_slots").get<int>();
        c.grid_h = j.at("grid_h").get<int>();
        c.grid_w = j.at("grid_w").get<int>();
        c.global_channels = j.at("global_channels").get<int>();
        c.feature_dim = j.at("feature_dim").get<int>();
        c.heads = j.at("heads").get<int>();
        c.encoder_layers = j.at("encoder_layers").get<int>();
        c.decoder_layers = j.at("decoder_layers").get<int>();
        c.ff_width = j.at("ff_width").get<int>();
        c.num_classes = j.at("num_classes").get<int>();
        c.decoder_self_attention = j.at("decoder_self_attention").get<bool>();
        c.positional_encoding = j.at("positional_encoding").get<bool>();
        c.compact_slots = j.at("compact_slots").get<bool>();
        c.validate();
        return c;
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed VT config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw IoError(std::string("invalid VT config: ") + e.what());
    }
}

void describe(ad::Checkpoint& checkpoint, const AgentSpec& spec, const std::string& kind,
              const std::vector<std::string>& training_fingerprints) {
    checkpoint.metadata[kKindKey] = kind;
    checkpoint.metadata[kVariantKey] = policy::to_string(spec.variant);
    checkpoint.metadata[kVTConfigKey] = to_text(spec.vt);
    checkpoint.metadata[kTrainScenesKey] = join(training_fingerprints);
}

AgentSpec agent_spec(const ad::Checkpoint& checkpoint) {
    auto field = [&](const char* key) {
        auto it = checkpoint.metadata.find(key);
        if (it == checkpoint.metadata.end()) throw IoError(std::string("checkpoint metadata lacks ") + key);
        return it->second;
    };
    AgentSpec spec;
    const auto variant = policy::parse_variant(field(kVariantKey));
    if (!variant) throw IoError("unknown variant in checkpoint: " + field(kVariantKey));
    spec.variant = *variant;
    spec.vt = parse_vt_config(field(kVTConfigKey));
    return spec;
}

std::vector<std::string> training_fingerprints(const ad::Checkpoint& checkpoint) {
    std::vector<std::string> ids;
    auto it = checkpoint.metadata.find(kTrainScenesKey);
    if (it == checkpoint.metadata.end() || it->second.empty()) return ids;
    std::stringstream s(it->second);
    std::string id;
    while (std::getline(s, id, ',')) ids.push_back(id);
    return ids;
}

std::string scene_fingerprint(const env::GridScene& scene) {
    return scene.id() + ":" + hex64(fnv1a(env::dump_scene(scene)));
}

std::vector<std::string> scene_fingerprints(const std::vector<env::GridScene>& scenes) {
    std::vector<std::string> out;
    for (const auto& s : scenes) out.push_back(scene_fingerprint(s));
    return out;
}

}  // namespace vtnav::eval
