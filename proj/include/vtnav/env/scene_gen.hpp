#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "vtnav/env/grid.hpp"

namespace vtnav::env {

struct GenerationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SceneConfig {
    int width = 10;
    int height = 10;
    double obstacle_density = 0.15;
    int objects_per_class = 1;
    int classes_per_scene = 4;  // at least 4 distinct target classes per scene
    int num_classes = 22;
    int max_attempts = 200;

    bool operator==(const SceneConfig&) const = default;
};

inline constexpr int kMinTargetClassesPerScene = 4;

void validate(const SceneConfig& config);
std::uint64_t config_hash(const SceneConfig& config);

// Deterministic in (seed, config). Retries with derived seeds until the free cells
// are connected and every placed class has a reachable success state.
GridScene generate_scene(std::uint64_t seed, const SceneConfig& config, std::string id = {});

// Free cells form a single 4-connected component.
bool free_space_connected(const GridScene& scene);

}  // namespace vtnav::env
