#pragma once

#include <algorithm>
#include <random>

#include "vtnav/model/vt.hpp"
#include "vtnav/perception/observation.hpp"

namespace vtnav::testing {

// N=4 slots, d=8, 2x2 grid: small enough for exhaustive finite differences.
inline model::VTConfig shrunk_vt_config() {
    model::VTConfig c;
    c.d_model = 8;
    c.num_slots = 4;
    c.grid_h = 2;
    c.grid_w = 2;
    c.global_channels = 6;
    c.feature_dim = 5;
    c.heads = 2;
    c.encoder_layers = 2;
    c.decoder_layers = 2;
    c.ff_width = 12;
    c.num_classes = 3;
    return c;
}

// Random detections in the first `real` slots, identical background rows after.
inline perception::Observation synthetic_observation(const model::VTConfig& c, int real, std::mt19937_64& rng) {
    std::uniform_real_distribution<float> unit(0.0f, 1.0f);
    std::normal_distribution<float> normal(0.0f, 1.0f);
    perception::Observation obs;
    std::vector<float> background(static_cast<std::size_t>(c.feature_dim));
    for (auto& x : background) x = normal(rng);
    for (int s = 0; s < c.num_slots; ++s) {
        perception::Detection d;
        if (s < real) {
            d.feature.resize(static_cast<std::size_t>(c.feature_dim));
            for (auto& x : d.feature) x = normal(rng);
            d.bbox = {unit(rng), unit(rng), unit(rng), unit(rng)};
            d.confidence = unit(rng);
            d.class_id = std::uniform_int_distribution<int>(0, c.num_classes - 1)(rng);
        } else {
            d.feature = background;
            d.class_id = c.num_classes;
        }
        obs.detections.slots.push_back(std::move(d));
    }
    obs.detections.detections = real;
    obs.global.h = c.grid_h;
    obs.global.w = c.grid_w;
    obs.global.channels = c.global_channels;
    obs.global.values.resize(static_cast<std::size_t>(c.positions() * c.global_channels));
    for (auto& x : obs.global.values) x = normal(rng);
    return obs;
}

inline perception::Observation permute_slots(perception::Observation obs, std::mt19937_64& rng) {
    std::shuffle(obs.detections.slots.begin(), obs.detections.slots.end(), rng);
    return obs;
}

inline double max_abs_diff(std::span<const float> a, std::span<const float> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
    return m;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace vtnav::testing
