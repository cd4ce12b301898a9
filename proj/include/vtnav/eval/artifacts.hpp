#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vtnav/ad/checkpoint.hpp"
#include "vtnav/env/scene_gen.hpp"
#include "vtnav/model/vt.hpp"
#include "vtnav/policy/network.hpp"

namespace vtnav::eval {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Split { Train, Val, Test };
std::string_view to_string(Split split);
std::optional<Split> parse_split(std::string_view name);

// Scene set on disk: one JSON file per scene plus manifest.json listing the
// train/val/test partition by file name.
struct SceneManifest {
    env::SceneConfig config;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> train;
    std::vector<std::string> val;
    std::vector<std::string> test;

    const std::vector<std::string>& files(Split split) const;
    bool operator==(const SceneManifest&) const = default;
};

inline constexpr const char* kManifestName = "manifest.json";

std::string to_text(const SceneManifest& manifest);
SceneManifest parse_manifest(const std::string& text);
// Rejects files listed in more than one split and config hashes that do not match.
void validate(const SceneManifest& manifest);

// Half train, a quarter val, the rest test (40 -> 20/10/10). Scene i uses
// derive_seed(seed, i).
SceneManifest generate_scene_set(const std::filesystem::path& dir, int count, std::uint64_t seed,
                                 const env::SceneConfig& config);
SceneManifest load_manifest(const std::filesystem::path& dir);
std::vector<env::GridScene> load_split(const std::filesystem::path& dir, const SceneManifest& manifest, Split split);

std::string to_text(const model::VTConfig& config);
model::VTConfig parse_vt_config(const std::string& text);

// Checkpoint metadata keys.
inline constexpr const char* kKindKey = "kind";
inline constexpr const char* kVariantKey = "variant";
inline constexpr const char* kVTConfigKey = "vt_config";
inline constexpr const char* kTrainScenesKey = "train_scenes";
inline constexpr const char* kTrainConfigKey = "train_config";
inline constexpr const char* kKindEncoder = "vt";
inline constexpr const char* kKindAgent = "agent";

struct AgentSpec {
    policy::Variant variant = policy::Variant::VTNet;
    model::VTConfig vt;
};

// "id:hash" of the serialized scene; identifies a scene across scene sets.
std::string scene_fingerprint(const env::GridScene& scene);
std::vector<std::string> scene_fingerprints(const std::vector<env::GridScene>& scenes);

void describe(ad::Checkpoint& checkpoint, const AgentSpec& spec, const std::string& kind,
              const std::vector<std::string>& training_fingerprints);
AgentSpec agent_spec(const ad::Checkpoint& checkpoint);
std::vector<std::string> training_fingerprints(const ad::Checkpoint& checkpoint);

}  // namespace vtnav::eval
