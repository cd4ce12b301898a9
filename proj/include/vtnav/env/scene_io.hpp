#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "vtnav/env/grid.hpp"

namespace vtnav::env {

inline constexpr int kSceneFormatVersion = 1;

struct SceneFormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Obstacle rows are run-length encoded: alternating free/obstacle run lengths,
// starting with a (possibly zero) free run.
nlohmann::json scene_to_json(const GridScene& scene);
GridScene scene_from_json(const nlohmann::json& j);

std::string dump_scene(const GridScene& scene);
GridScene parse_scene(const std::string& text);

void save_scene(const GridScene& scene, const std::filesystem::path& path);
GridScene load_scene(const std::filesystem::path& path);

}  // namespace vtnav::env
