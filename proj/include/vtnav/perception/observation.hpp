#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "vtnav/env/grid.hpp"

namespace vtnav::perception {

struct PerceptionConfig {
    int num_slots = 100;
    int feature_dim = 256;
    int grid_h = 7;
    int grid_w = 7;
    int global_channels = 512;
    int num_classes = 22;  // background id == num_classes
    std::uint64_t embedding_seed = 0x7674656d62ULL;

    int raster_channels() const { return num_classes + 3; }
    bool operator==(const PerceptionConfig&) const = default;
};

struct NoiseConfig {
    double sigma_bbox = 0.05;
    double sigma_feat = 0.05;
    double p_miss = 0.1;
    double p_fp = 0.05;

    static NoiseConfig none() { return {0.0, 0.0, 0.0, 0.0}; }
    bool operator==(const NoiseConfig&) const = default;
};

struct Detection {
    std::vector<float> feature;
    std::array<float, 4> bbox{};  // x_center, y_center, width, height
    float confidence = 0.0f;
    int class_id = 0;
    bool false_positive = false;  // bookkeeping only, never fed to models
    int object_index = -1;        // index into GridScene::objects() for real detections
};

struct DetectionSet {
    std::vector<Detection> slots;
    int detections = 0;  // non-background slots, stored first

    int size() const { return static_cast<int>(slots.size()); }
};

// Position-major h*w*D values: index ((u * w) + v) * D + c.
struct GlobalFeature {
    int h = 0;
    int w = 0;
    int channels = 0;
    std::vector<float> values;

    float at(int u, int v, int c) const {
        return values[(static_cast<std::size_t>(u) * w + v) * channels + c];
    }
};

struct Observation {
    DetectionSet detections;
    GlobalFeature global;
    int timestep = 0;
};

struct ObservationFormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Unit-norm per-class vectors, pairwise |cos| < kMaxEmbeddingCosine. Row C is the
// background embedding.
inline constexpr double kMaxEmbeddingCosine = 0.5;
std::vector<std::vector<float>> class_embedding_table(int count, std::uint64_t seed, int dim);
std::vector<float> class_embedding(int class_id, std::uint64_t seed, int dim = 256);

// Holds the seeded fixed tables (embeddings, global projection) for one config.
class PerceptionOracle {
public:
    explicit PerceptionOracle(PerceptionConfig config = {});

    const PerceptionConfig& config() const { return config_; }
    const std::vector<float>& embedding(int class_id) const { return embeddings_.at(static_cast<std::size_t>(class_id)); }

    Observation render(const env::GridScene& scene, const env::AgentPose& pose, const NoiseConfig& noise,
                       std::uint64_t seed, int timestep = 0) const;

    // Egocentric 7x7 rasterization before projection: class presence, free and
    // obstacle fractions, pitch.
    std::vector<float> raster(const env::GridScene& scene, const env::AgentPose& pose) const;

    Detection background() const;

private:
    PerceptionConfig config_;
    std::vector<std::vector<float>> embeddings_;
    std::vector<float> distance_direction_;
    std::vector<float> projection_;  // raster_channels x global_channels
};

const PerceptionOracle& default_oracle();

Observation render_observation(const env::GridScene& scene, const env::AgentPose& pose, const NoiseConfig& noise,
                               std::uint64_t seed, const PerceptionOracle& oracle = default_oracle());

// Zero-noise geometry of one detection, used by the renderer and by tests.
std::array<float, 4> detection_bbox(double bearing_deg, env::HeightBand band, int pitch, double distance_m,
                                    double radius_m);
float detection_confidence(double distance_m);

// Dump format: one JSON header line, then raw little-endian float32 blocks for the
// non-background slot features followed by the global feature.
void write_observation(std::ostream& out, const Observation& obs, const PerceptionConfig& config);
Observation read_observation(std::istream& in, const PerceptionOracle& oracle = default_oracle());

}  // namespace vtnav::perception
