#include "vtnav/env/scene_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace vtnav::env {

using nlohmann::json;

nlohmann::json scene_to_json(const GridScene& scene) {
    json rows = json::array();
    for (int y = 0; y < scene.height(); ++y) {
        json runs = json::array();
        bool obstacle = false;
        int run = 0;
        for (int x = 0; x < scene.width(); ++x) {
            if (scene.is_obstacle(x, y) != obstacle) {
                runs.push_back(run);
                obstacle = !obstacle;
                run = 0;
            }
            ++run;
        }
        runs.push_back(run);
        rows.push_back(std::move(runs));
    }
    json objects = json::array();
    for (const auto& o : scene.objects()) {
        objects.push_back({{"class", o.class_id},
                           {"x", o.x},
                           {"y", o.y},
                           {"band", std::string(to_string(o.band))},
                           {"radius", o.radius}});
    }
    return json{{"version", kSceneFormatVersion},
                {"id", scene.id()},
                {"seed", scene.seed()},
                {"width", scene.width()},
                {"height", scene.height()},
                {"num_classes", scene.num_classes()},
                {"obstacles", std::move(rows)},
                {"objects", std::move(objects)}};
}

GridScene scene_from_json(const nlohmann::json& j) {
    try {
        const int version = j.at("version").get<int>();
        if (version != kSceneFormatVersion)
            throw SceneFormatError("unsupported scene version " + std::to_string(version));
        const int width = j.at("width").get<int>();
        const int height = j.at("height").get<int>();
        const auto& rows = j.at("obstacles");
        if (!rows.is_array() || static_cast<int>(rows.size()) != height)
            throw SceneFormatError("obstacles must list one run-length row per scene row");
        std::vector<std::uint8_t> mask;
        mask.reserve(static_cast<std::size_t>(width * height));
        for (const auto& row : rows) {
            bool obstacle = false;
            std::size_t before = mask.size();
            for (const auto& run : row) {
                const int n = run.get<int>();
                if (n < 0) throw SceneFormatError("negative run length");
                mask.insert(mask.end(), static_cast<std::size_t>(n), obstacle ? 1 : 0);
                obstacle = !obstacle;
            }
            if (mask.size() - before != static_cast<std::size_t>(width))
                throw SceneFormatError("run-length row does not sum to the scene width");
        }
        std::vector<SceneObject> objects;
        for (const auto& o : j.at("objects")) {
            SceneObject so;
            so.class_id = o.at("class").get<int>();
            so.x = o.at("x").get<int>();
            so.y = o.at("y").get<int>();
            const auto band = parse_band(o.at("band").get<std::string>());
            if (!band) throw SceneFormatError("unknown height band");
            so.band = *band;
            so.radius = o.at("radius").get<double>();
            objects.push_back(so);
        }
        return GridScene(j.value("id", std::string{}), j.at("seed").get<std::uint64_t>(), width, height,
                         std::move(mask), std::move(objects), j.value("num_classes", 22));
    } catch (const json::exception& e) {
        throw SceneFormatError(std::string("malformed scene: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw SceneFormatError(std::string("invalid scene: ") + e.what());
    }
}

std::string dump_scene(const GridScene& scene) {
    return scene_to_json(scene).dump(1);
}

GridScene parse_scene(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw SceneFormatError(std::string("malformed scene: ") + e.what());
    }
    return scene_from_json(j);
}

void save_scene(const GridScene& scene, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw SceneFormatError("cannot open " + path.string() + " for writing");
    f << dump_scene(scene) << '\n';
}

GridScene load_scene(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw SceneFormatError("cannot open " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_scene(ss.str());
}

}  // namespace vtnav::env
