#include "vtnav/env/scene_gen.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "vtnav/env/navigation.hpp"
#include "vtnav/env/search.hpp"
#include "vtnav/util/hash.hpp"
#include "vtnav/util/random.hpp"

namespace vtnav::env {

void validate(const SceneConfig& c) {
    if (c.width < 3 || c.height < 3) throw std::invalid_argument("scene must be at least 3x3");
    if (c.obstacle_density < 0.0 || c.obstacle_density >= 1.0)
        throw std::invalid_argument("obstacle_density must be in [0, 1)");
    if (c.num_classes < kMinTargetClassesPerScene) throw std::invalid_argument("need at least 4 object classes");
    if (c.classes_per_scene < kMinTargetClassesPerScene || c.classes_per_scene > c.num_classes)
        throw std::invalid_argument("classes_per_scene must be in [4, num_classes]");
    if (c.objects_per_class < 1) throw std::invalid_argument("objects_per_class must be positive");
    if (c.classes_per_scene * c.objects_per_class >= c.width * c.height)
        throw std::invalid_argument("too many objects for the scene area");
    if (c.max_attempts < 1) throw std::invalid_argument("max_attempts must be positive");
}

std::uint64_t config_hash(const SceneConfig& c) {
    Fnv1a h;
    auto put = [&](auto v) { h.update(&v, sizeof(v)); };
    put(c.width);
    put(c.height);
    put(c.obstacle_density);
    put(c.objects_per_class);
    put(c.classes_per_scene);
    put(c.num_classes);
    return h.digest();
}

bool free_space_connected(const GridScene& scene) {
    const int w = scene.width(), h = scene.height();
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(w * h), 0);
    int start = -1;
    for (int i = 0; i < w * h && start < 0; ++i)
        if (!scene.obstacle_mask()[static_cast<std::size_t>(i)]) start = i;
    if (start < 0) return false;
    std::vector<int> stack{start};
    seen[static_cast<std::size_t>(start)] = 1;
    int reached = 0;
    while (!stack.empty()) {
        const int c = stack.back();
        stack.pop_back();
        ++reached;
        const int x = c % w, y = c / w;
        const int nbr[4][2] = {{x + 1, y}, {x - 1, y}, {x, y + 1}, {x, y - 1}};
        for (const auto& n : nbr) {
            if (!scene.is_free(n[0], n[1])) continue;
            const int id = n[1] * w + n[0];
            if (seen[static_cast<std::size_t>(id)]) continue;
            seen[static_cast<std::size_t>(id)] = 1;
            stack.push_back(id);
        }
    }
    return reached == scene.free_cell_count();
}

namespace {

bool every_class_has_goal(const GridScene& scene) {
    const StateSpace states(scene);
    for (int cls : scene.present_classes()) {
        bool found = false;
        for (int s = 0; s < states.size() && !found; ++s) {
            const AgentPose p = states.pose(s);
            found = scene.is_free(p.x, p.y) && is_success(scene, p, cls);
        }
        if (!found) return false;
    }
    return true;
}

}  // namespace

GridScene generate_scene(std::uint64_t seed, const SceneConfig& config, std::string id) {
    validate(config);
    if (id.empty()) id = "scene_" + hex64(seed).substr(8);
    const int n = config.width * config.height;
    for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(attempt)));
        std::vector<std::uint8_t> mask(static_cast<std::size_t>(n), 0);
        std::bernoulli_distribution obstacle(config.obstacle_density);
        for (auto& m : mask) m = obstacle(rng) ? 1 : 0;

        std::vector<int> free_cells;
        for (int i = 0; i < n; ++i)
            if (!mask[static_cast<std::size_t>(i)]) free_cells.push_back(i);
        const int needed = config.classes_per_scene * config.objects_per_class;
        if (static_cast<int>(free_cells.size()) < needed + 1) continue;

        std::vector<int> classes(static_cast<std::size_t>(config.num_classes));
        std::iota(classes.begin(), classes.end(), 0);
        std::shuffle(classes.begin(), classes.end(), rng);
        classes.resize(static_cast<std::size_t>(config.classes_per_scene));
        std::sort(classes.begin(), classes.end());
        std::shuffle(free_cells.begin(), free_cells.end(), rng);

        std::vector<SceneObject> objects;
        std::size_t next_cell = 0;
        std::uniform_real_distribution<double> radius(0.1, 0.4);
        for (int cls : classes) {
            for (int k = 0; k < config.objects_per_class; ++k) {
                const int cell = free_cells[next_cell++];
                SceneObject o;
                o.class_id = cls;
                o.x = cell % config.width;
                o.y = cell / config.width;
                o.band = static_cast<HeightBand>(uniform_int(rng, 0, 2));
                o.radius = radius(rng);
                objects.push_back(o);
            }
        }
        GridScene scene(id, seed, config.width, config.height, std::move(mask), std::move(objects),
                        config.num_classes);
        if (!free_space_connected(scene)) continue;
        if (!every_class_has_goal(scene)) continue;
        return scene;
    }
    throw GenerationError("could not generate a connected scene for seed " + std::to_string(seed) + " after " +
                          std::to_string(config.max_attempts) + " attempts");
}

}  // namespace vtnav::env
