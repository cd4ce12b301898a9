#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "vtnav/env/search.hpp"
#include "vtnav/perception/observation.hpp"

namespace vtnav::train {

struct UnreachableError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shortest-path teacher for one scene. Distance fields are built per target on
// first use.
class Expert {
public:
    explicit Expert(const env::GridScene& scene);

    const env::GridScene& scene() const { return *scene_; }
    const env::DistanceField& field(int target_class) const;
    // First action of a minimal path; ties broken by the action enum order.
    env::Action action(const env::AgentPose& pose, int target_class) const;
    std::optional<int> shortest_path_length(const env::AgentPose& pose, int target_class) const;
    // Actions the expert takes from `start` until its Done.
    std::vector<env::Action> rollout(const env::AgentPose& start, int target_class) const;

private:
    const env::GridScene* scene_;
    std::unique_ptr<env::NavigationGraph> graph_;
    mutable std::map<int, std::unique_ptr<env::DistanceField>> fields_;
};

env::Action expert_action(const env::GridScene& scene, const env::AgentPose& pose, int target_class);

// One supervised step. The observation is regenerated from `render_seed` on demand.
struct ExpertSample {
    int scene_index = 0;
    env::AgentPose pose;
    int target = 0;
    env::Action label = env::Action::Done;
    int timestep = 0;
    std::uint64_t render_seed = 0;
    bool operator==(const ExpertSample&) const = default;
};

struct ExpertDataset {
    std::vector<std::string> scene_ids;
    perception::NoiseConfig noise;
    std::uint64_t seed = 0;
    std::uint64_t scene_config_hash = 0;
    std::vector<ExpertSample> samples;
    bool operator==(const ExpertDataset&) const = default;
};

ExpertDataset generate_dataset(const std::vector<env::GridScene>& scenes, int starts_per_scene,
                               const perception::NoiseConfig& noise, std::uint64_t seed,
                               std::uint64_t scene_config_hash = 0);

perception::Observation render_sample(const ExpertSample& sample, const std::vector<env::GridScene>& scenes,
                                      const perception::NoiseConfig& noise,
                                      const perception::PerceptionOracle& oracle = perception::default_oracle());

std::array<int, env::kNumActions> label_histogram(const std::vector<ExpertSample>& samples);

struct DatasetFormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Header line (version, config hash, sample count, noise, seed, scene ids) followed
// by one line per sample. With `scenes` supplied, each sample line is followed by
// its rendered observation dump.
void save_dataset(const ExpertDataset& data, const std::filesystem::path& path,
                  const std::vector<env::GridScene>* scenes = nullptr);
ExpertDataset load_dataset(const std::filesystem::path& path);
std::string dataset_bytes(const ExpertDataset& data, const std::vector<env::GridScene>* scenes = nullptr);

}  // namespace vtnav::train
