#include "vtnav/perception/observation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <ostream>

#include "json.hpp"
#include "vtnav/env/navigation.hpp"
#include "vtnav/util/random.hpp"

namespace vtnav::perception {

namespace {

constexpr int kObservationFormatVersion = 1;

std::vector<float> random_unit_vector(std::uint64_t seed, int dim) {
    Rng rng(seed);
    std::vector<double> v(static_cast<std::size_t>(dim));
    double norm = 0.0;
    for (auto& x : v) {
        x = gaussian(rng, 1.0);
        norm += x * x;
    }
    norm = std::sqrt(norm);
    std::vector<float> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] / norm);
    return out;
}

double cosine(const std::vector<float>& a, const std::vector<float>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    return dot / std::sqrt(na * nb);
}

float clamp01(double x) {
    return static_cast<float>(std::clamp(x, 0.0, 1.0));
}

}  // namespace

std::vector<std::vector<float>> class_embedding_table(int count, std::uint64_t seed, int dim) {
    std::vector<std::vector<float>> table;
    table.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        for (std::uint64_t attempt = 0;; ++attempt) {
            auto v = random_unit_vector(derive_seed(seed, static_cast<std::uint64_t>(k), attempt), dim);
            const bool ok = std::all_of(table.begin(), table.end(),
                                        [&](const std::vector<float>& u) { return std::abs(cosine(u, v)) < kMaxEmbeddingCosine; });
            if (ok) {
                table.push_back(std::move(v));
                break;
            }
        }
    }
    return table;
}

std::vector<float> class_embedding(int class_id, std::uint64_t seed, int dim) {
    if (class_id < 0) throw std::invalid_argument("negative class id");
    return class_embedding_table(class_id + 1, seed, dim).back();
}

std::array<float, 4> detection_bbox(double bearing_deg, env::HeightBand band, int pitch, double distance_m,
                                    double radius_m) {
    const double x = 0.5 + bearing_deg / env::kFieldOfView;
    // Image rows grow downwards; looking up moves objects down in the frame.
    const double band_level = static_cast<int>(band) - 1;
    const double y = 0.5 - 0.25 * (band_level - static_cast<double>(pitch) / env::kPitchStep);
    const double w = radius_m / (radius_m + distance_m);
    return {clamp01(x), clamp01(y), clamp01(w), clamp01(1.5 * w)};
}

float detection_confidence(double distance_m) {
    return clamp01(1.0 - distance_m / env::kViewRange);
}

PerceptionOracle::PerceptionOracle(PerceptionConfig config) : config_(config) {
    if (config_.num_slots < 1 || config_.feature_dim < 1 || config_.grid_h < 1 || config_.grid_w < 1 ||
        config_.global_channels < 1 || config_.num_classes < 1)
        throw std::invalid_argument("perception config dimensions must be positive");
    embeddings_ = class_embedding_table(config_.num_classes + 1, config_.embedding_seed, config_.feature_dim);
    distance_direction_ = random_unit_vector(derive_seed(config_.embedding_seed, 0xd157ULL), config_.feature_dim);
    const int rc = config_.raster_channels();
    projection_.resize(static_cast<std::size_t>(rc) * config_.global_channels);
    Rng rng(derive_seed(config_.embedding_seed, 0x9b0bULL));
    const double scale = 1.0 / std::sqrt(static_cast<double>(rc));
    for (auto& p : projection_) p = static_cast<float>(gaussian(rng, scale));
}

Detection PerceptionOracle::background() const {
    Detection d;
    d.feature = embeddings_.back();
    d.class_id = config_.num_classes;
    return d;
}

std::vector<float> PerceptionOracle::raster(const env::GridScene& scene, const env::AgentPose& pose) const {
    const int gh = config_.grid_h, gw = config_.grid_w, C = config_.num_classes, rc = config_.raster_channels();
    std::vector<float> r(static_cast<std::size_t>(gh * gw * rc), 0.0f);
    std::vector<int> cells(static_cast<std::size_t>(gh * gw), 0);
    auto bin = [&](double bearing, double dist) {
        const int v = std::clamp(static_cast<int>((bearing / env::kFieldOfView + 0.5) * gw), 0, gw - 1);
        const int u = gh - 1 - std::clamp(static_cast<int>(dist / env::kViewRange * gh), 0, gh - 1);
        return u * gw + v;
    };
    for (int y = 0; y < scene.height(); ++y) {
        for (int x = 0; x < scene.width(); ++x) {
            if (x == pose.x && y == pose.y) continue;
            const double dist = std::hypot(x - pose.x, y - pose.y) * env::kCellSize;
            if (dist > env::kViewRange) continue;
            const double bearing = env::bearing_to(pose, x, y);
            if (std::abs(bearing) > env::kFieldOfView / 2 + 1e-9) continue;
            if (!env::line_of_sight(scene, pose.x, pose.y, x, y)) continue;
            const int b = bin(bearing, dist);
            ++cells[static_cast<std::size_t>(b)];
            r[static_cast<std::size_t>(b * rc + (scene.is_obstacle(x, y) ? C + 1 : C))] += 1.0f;
        }
    }
    for (int b = 0; b < gh * gw; ++b) {
        const int n = cells[static_cast<std::size_t>(b)];
        if (n > 0) {
            r[static_cast<std::size_t>(b * rc + C)] /= static_cast<float>(n);
            r[static_cast<std::size_t>(b * rc + C + 1)] /= static_cast<float>(n);
        }
        r[static_cast<std::size_t>(b * rc + C + 2)] = static_cast<float>(pose.pitch) / env::kMaxPitch;
    }
    for (const auto& v : env::visible_objects(scene, pose)) {
        if (v.object.class_id >= C) continue;
        r[static_cast<std::size_t>(bin(v.bearing, v.distance) * rc + v.object.class_id)] += 1.0f;
    }
    return r;
}

Observation PerceptionOracle::render(const env::GridScene& scene, const env::AgentPose& pose, const NoiseConfig& noise,
                                     std::uint64_t seed, int timestep) const {
    if (!env::is_valid_pose(scene, pose)) throw env::StateError("invalid pose " + env::to_string(pose));
    if (scene.num_classes() != config_.num_classes)
        throw std::invalid_argument("scene class count does not match the perception config");
    Rng rng(seed);
    const int dim = config_.feature_dim;
    Observation obs;
    obs.timestep = timestep;
    auto& slots = obs.detections.slots;
    slots.reserve(static_cast<std::size_t>(config_.num_slots));

    auto add_noise = [&](std::vector<float>& f) {
        if (noise.sigma_feat > 0.0)
            for (auto& x : f) x += static_cast<float>(gaussian(rng, noise.sigma_feat));
    };

    for (const auto& v : env::visible_objects(scene, pose)) {
        if (static_cast<int>(slots.size()) >= config_.num_slots) break;
        const bool missed = uniform01(rng) < noise.p_miss;
        if (missed) continue;
        Detection d;
        d.class_id = v.object.class_id;
        d.object_index = static_cast<int>(v.object_index);
        d.bbox = detection_bbox(v.bearing, v.object.band, pose.pitch, v.distance, v.object.radius);
        for (auto& b : d.bbox) b = clamp01(b + gaussian(rng, noise.sigma_bbox));
        d.confidence = clamp01(detection_confidence(v.distance) + gaussian(rng, noise.sigma_bbox));
        d.feature = embeddings_[static_cast<std::size_t>(d.class_id)];
        const float scale = static_cast<float>(v.distance / env::kViewRange);
        for (int i = 0; i < dim; ++i) d.feature[static_cast<std::size_t>(i)] += scale * distance_direction_[static_cast<std::size_t>(i)];
        add_noise(d.feature);
        slots.push_back(std::move(d));
    }

    const int remaining = config_.num_slots - static_cast<int>(slots.size());
    for (int s = 0; s < remaining; ++s) {
        if (!(noise.p_fp > 0.0 && uniform01(rng) < noise.p_fp)) continue;
        Detection d;
        d.false_positive = true;
        d.class_id = uniform_int(rng, 0, config_.num_classes - 1);
        d.bbox = {static_cast<float>(uniform01(rng)), static_cast<float>(uniform01(rng)),
                  static_cast<float>(0.05 + 0.2 * uniform01(rng)), static_cast<float>(0.05 + 0.3 * uniform01(rng))};
        d.confidence = static_cast<float>(0.05 + 0.3 * uniform01(rng));
        d.feature = embeddings_[static_cast<std::size_t>(d.class_id)];
        add_noise(d.feature);
        slots.push_back(std::move(d));
    }
    obs.detections.detections = static_cast<int>(slots.size());
    while (static_cast<int>(slots.size()) < config_.num_slots) slots.push_back(background());

    const int rc = config_.raster_channels(), D = config_.global_channels, cells = config_.grid_h * config_.grid_w;
    auto r = raster(scene, pose);
    if (noise.sigma_feat > 0.0)
        for (auto& x : r) x += static_cast<float>(gaussian(rng, noise.sigma_feat));
    obs.global.h = config_.grid_h;
    obs.global.w = config_.grid_w;
    obs.global.channels = D;
    obs.global.values.assign(static_cast<std::size_t>(cells) * D, 0.0f);
    for (int b = 0; b < cells; ++b) {
        float* out = obs.global.values.data() + static_cast<std::size_t>(b) * D;
        for (int k = 0; k < rc; ++k) {
            const float a = r[static_cast<std::size_t>(b * rc + k)];
            const float* p = projection_.data() + static_cast<std::size_t>(k) * D;
            for (int c = 0; c < D; ++c) out[c] += a * p[c];
        }
    }
    return obs;
}

const PerceptionOracle& default_oracle() {
    static const PerceptionOracle oracle{};
    return oracle;
}

Observation render_observation(const env::GridScene& scene, const env::AgentPose& pose, const NoiseConfig& noise,
                               std::uint64_t seed, const PerceptionOracle& oracle) {
    return oracle.render(scene, pose, noise, seed);
}

namespace {

static_assert(std::endian::native == std::endian::little, "float blocks are written in native little-endian order");

void write_floats(std::ostream& out, const std::vector<float>& v) {
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
}

std::vector<float> read_floats(std::istream& in, std::size_t n) {
    std::vector<float> v(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(float)));
    if (!in) throw ObservationFormatError("truncated observation float block");
    return v;
}

}  // namespace

void write_observation(std::ostream& out, const Observation& obs, const PerceptionConfig& config) {
    nlohmann::json h;
    h["version"] = kObservationFormatVersion;
    h["slots"] = obs.detections.size();
    h["feature_dim"] = config.feature_dim;
    h["grid"] = {obs.global.h, obs.global.w};
    h["channels"] = obs.global.channels;
    h["timestep"] = obs.timestep;
    auto& dets = h["detections"] = nlohmann::json::array();
    for (int i = 0; i < obs.detections.detections; ++i) {
        const auto& d = obs.detections.slots[static_cast<std::size_t>(i)];
        dets.push_back({{"class", d.class_id},
                        {"bbox", d.bbox},
                        {"confidence", d.confidence},
                        {"false_positive", d.false_positive},
                        {"object", d.object_index}});
    }
    out << h.dump() << '\n';
    for (int i = 0; i < obs.detections.detections; ++i) write_floats(out, obs.detections.slots[static_cast<std::size_t>(i)].feature);
    write_floats(out, obs.global.values);
}

Observation read_observation(std::istream& in, const PerceptionOracle& oracle) {
    std::string line;
    if (!std::getline(in, line)) throw ObservationFormatError("missing observation header");
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ObservationFormatError(std::string("bad observation header: ") + e.what());
    }
    try {
        if (h.at("version").get<int>() != kObservationFormatVersion)
            throw ObservationFormatError("unsupported observation version");
        const auto& cfg = oracle.config();
        const int slots = h.at("slots").get<int>();
        const int dim = h.at("feature_dim").get<int>();
        if (slots != cfg.num_slots || dim != cfg.feature_dim)
            throw ObservationFormatError("observation dimensions do not match the perception config");
        Observation obs;
        obs.timestep = h.at("timestep").get<int>();
        obs.global.h = h.at("grid").at(0).get<int>();
        obs.global.w = h.at("grid").at(1).get<int>();
        obs.global.channels = h.at("channels").get<int>();
        const auto& dets = h.at("detections");
        if (static_cast<int>(dets.size()) > slots) throw ObservationFormatError("too many detections");
        for (const auto& j : dets) {
            Detection d;
            d.class_id = j.at("class").get<int>();
            d.bbox = j.at("bbox").get<std::array<float, 4>>();
            d.confidence = j.at("confidence").get<float>();
            d.false_positive = j.at("false_positive").get<bool>();
            d.object_index = j.at("object").get<int>();
            obs.detections.slots.push_back(std::move(d));
        }
        obs.detections.detections = static_cast<int>(dets.size());
        for (auto& d : obs.detections.slots) d.feature = read_floats(in, static_cast<std::size_t>(dim));
        while (obs.detections.size() < slots) obs.detections.slots.push_back(oracle.background());
        obs.global.values = read_floats(
            in, static_cast<std::size_t>(obs.global.h) * obs.global.w * static_cast<std::size_t>(obs.global.channels));
        return obs;
    } catch (const nlohmann::json::exception& e) {
        throw ObservationFormatError(std::string("bad observation header: ") + e.what());
    }
}

}  // namespace vtnav::perception
