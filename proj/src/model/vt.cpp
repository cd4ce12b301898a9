#include "vtnav/model/vt.hpp"

#include <algorithm>
#include <cmath>

namespace vtnav::model {

VTConfig VTConfig::desk() {
    VTConfig c;
    c.d_model = 64;
    c.heads = 4;
    return c;
}

void VTConfig::validate() const {
    if (d_model <= 0 || d_model % 2 != 0) throw std::invalid_argument("d_model must be positive and even");
    if (heads <= 0 || d_model % heads != 0) throw std::invalid_argument("d_model must be divisible by heads");
    if (num_slots <= 0 || grid_h <= 0 || grid_w <= 0 || global_channels <= 0 || feature_dim <= 0 || num_classes <= 0)
        throw std::invalid_argument("VT dimensions must be positive");
    if (encoder_layers < 0 || decoder_layers < 0 || ff_width < 0) throw std::invalid_argument("negative layer count");
}

std::vector<double> positional_embedding(double u, double v, int d) {
    if (d <= 0 || d % 2 != 0) throw std::invalid_argument("positional embedding width must be positive and even");
    std::vector<double> pe(static_cast<std::size_t>(d));
    const int half = d / 2;
    for (int part = 0; part < 2; ++part) {
        const double pos = part == 0 ? u : v;
        for (int c = 0; c < half; ++c) {
            const int i = c / 2 + 1;
            const double angle = pos / std::pow(10000.0, 2.0 * i / d);
            pe[static_cast<std::size_t>(part * half + c)] = c % 2 == 0 ? std::sin(angle) : std::cos(angle);
        }
    }
    return pe;
}

template <typename T>
LocalInput<T> local_inputs(const perception::DetectionSet& dets, int target_class, const VTConfig& config,
                           bool compact) {
    const int width = config.local_input_width();
    if (dets.size() != config.num_slots) throw ad::ShapeError("detection set has the wrong number of slots");
    std::vector<T> rows;
    std::vector<int> counts;
    LocalInput<T> out;
    out.slot_row.reserve(dets.slots.size());
    std::vector<T> row(static_cast<std::size_t>(width));
    const T inv_classes = T(1) / static_cast<T>(config.num_classes);
    for (const auto& d : dets.slots) {
        if (static_cast<int>(d.feature.size()) != config.feature_dim) throw ad::ShapeError("detection feature width mismatch");
        std::copy(d.feature.begin(), d.feature.end(), row.begin());
        auto* tail = row.data() + config.feature_dim;
        for (int b = 0; b < 4; ++b) tail[b] = static_cast<T>(d.bbox[static_cast<std::size_t>(b)]);
        tail[4] = static_cast<T>(d.confidence);
        tail[5] = static_cast<T>(d.class_id) * inv_classes;
        tail[6] = d.class_id == target_class && d.class_id != config.num_classes ? T(1) : T(0);

        int found = -1;
        if (compact) {
            for (int r = 0; r < static_cast<int>(counts.size()) && found < 0; ++r)
                if (std::equal(row.begin(), row.end(), rows.begin() + static_cast<std::ptrdiff_t>(r) * width)) found = r;
        }
        if (found < 0) {
            found = static_cast<int>(counts.size());
            rows.insert(rows.end(), row.begin(), row.end());
            counts.push_back(0);
        }
        ++counts[static_cast<std::size_t>(found)];
        out.slot_row.push_back(found);
    }
    const std::size_t k = counts.size();
    out.rows = Tensor<T>::from({k, static_cast<std::size_t>(width)}, std::move(rows));
    if (compact) {
        std::vector<T> lm(k);
        for (std::size_t r = 0; r < k; ++r) lm[r] = static_cast<T>(std::log(static_cast<double>(counts[r])));
        out.log_mult = Tensor<T>::from({1, k}, std::move(lm));
    }
    return out;
}

template <typename T>
Tensor<T> global_input(const perception::GlobalFeature& g, const VTConfig& config) {
    if (g.h != config.grid_h || g.w != config.grid_w || g.channels != config.global_channels)
        throw ad::ShapeError("global feature shape does not match the VT config");
    return Tensor<T>::from({static_cast<std::size_t>(g.h * g.w), static_cast<std::size_t>(g.channels)},
                           std::vector<T>(g.values.begin(), g.values.end()));
}

template <typename T>
VisualTransformer<T>::VisualTransformer(const VTConfig& config, ParameterSet<T>& params, Rng& rng,
                                        const std::string& prefix)
    : config_(config) {
    config_.validate();
    const auto d = static_cast<std::size_t>(config_.d_model);
    const auto heads = static_cast<std::size_t>(config_.heads);
    const auto ff = static_cast<std::size_t>(config_.feed_forward_width());
    local_fc1 = Linear<T>(params, prefix + "local.fc1", static_cast<std::size_t>(config_.local_input_width()), d, rng);
    local_fc2 = Linear<T>(params, prefix + "local.fc2", d, d, rng);
    reduce = Linear<T>(params, prefix + "global.reduce", static_cast<std::size_t>(config_.global_channels), d, rng);
    for (int l = 0; l < config_.encoder_layers; ++l) {
        const std::string n = prefix + "encoder." + std::to_string(l);
        EncoderLayer layer;
        layer.norm_attn = LayerNorm<T>(params, n + ".norm_attn", d);
        layer.attn = MultiHeadAttention<T>(params, n + ".attn", d, heads, rng);
        layer.norm_ff = LayerNorm<T>(params, n + ".norm_ff", d);
        layer.ff = FeedForward<T>(params, n + ".ff", d, ff, rng);
        encoder_.push_back(std::move(layer));
    }
    encoder_norm_ = LayerNorm<T>(params, prefix + "encoder.norm", d);
    for (int l = 0; l < config_.decoder_layers; ++l) {
        const std::string n = prefix + "decoder." + std::to_string(l);
        DecoderLayer layer;
        if (config_.decoder_self_attention) {
            layer.norm_self = LayerNorm<T>(params, n + ".norm_self", d);
            layer.self_attn = MultiHeadAttention<T>(params, n + ".self_attn", d, heads, rng);
        }
        layer.norm_cross = LayerNorm<T>(params, n + ".norm_cross", d);
        layer.cross_attn = MultiHeadAttention<T>(params, n + ".cross_attn", d, heads, rng);
        layer.norm_ff = LayerNorm<T>(params, n + ".norm_ff", d);
        layer.ff = FeedForward<T>(params, n + ".ff", d, ff, rng);
        decoder_.push_back(std::move(layer));
    }
    decoder_norm_ = LayerNorm<T>(params, prefix + "decoder.norm", d);

    std::vector<T> pe;
    pe.reserve(static_cast<std::size_t>(config_.positions()) * d);
    for (int u = 0; u < config_.grid_h; ++u)
        for (int v = 0; v < config_.grid_w; ++v)
            for (double x : positional_embedding(u, v, config_.d_model)) pe.push_back(static_cast<T>(x));
    positional_ = Tensor<T>::from({static_cast<std::size_t>(config_.positions()), d}, std::move(pe));
}

template <typename T>
Tensor<T> VisualTransformer<T>::local_descriptors(const Tensor<T>& inputs) const {
    return local_fc2(ad::relu(local_fc1(inputs)));
}

template <typename T>
Tensor<T> VisualTransformer<T>::build_local_descriptors(const perception::DetectionSet& dets, int target_class) const {
    return local_descriptors(local_inputs<T>(dets, target_class, config_, false).rows);
}

template <typename T>
Tensor<T> VisualTransformer<T>::build_global_descriptors(const Tensor<T>& global) const {
    if (global.rows() != static_cast<std::size_t>(config_.positions()) ||
        global.cols() != static_cast<std::size_t>(config_.global_channels))
        throw ad::ShapeError("global feature must be [hw, D], got " + ad::to_string(global.shape()));
    auto g = reduce(global);
    return config_.positional_encoding ? ad::add(g, positional_) : g;
}

template <typename T>
Tensor<T> VisualTransformer<T>::build_global_descriptors(const perception::GlobalFeature& global) const {
    return build_global_descriptors(global_input<T>(global, config_));
}

template <typename T>
Tensor<T> VisualTransformer<T>::encode(const Tensor<T>& locals, const std::optional<Tensor<T>>& log_mult,
                                       AttentionCapture* capture) const {
    auto x = locals;
    for (std::size_t l = 0; l < encoder_.size(); ++l) {
        const auto& layer = encoder_[l];
        const auto n = layer.norm_attn(x);
        x = ad::add(x, layer.attn(n, n, log_mult, capture, "encoder." + std::to_string(l)));
        x = ad::add(x, layer.ff(layer.norm_ff(x)));
    }
    return encoder_norm_(x);
}

template <typename T>
Tensor<T> VisualTransformer<T>::decode(const Tensor<T>& globals, const Tensor<T>& encoded,
                                       const std::optional<Tensor<T>>& log_mult, AttentionCapture* capture) const {
    auto q = globals;
    for (std::size_t l = 0; l < decoder_.size(); ++l) {
        const auto& layer = decoder_[l];
        const std::string label = "decoder." + std::to_string(l);
        if (config_.decoder_self_attention) {
            const auto n = layer.norm_self(q);
            q = ad::add(q, layer.self_attn(n, n, std::nullopt, capture, label + ".self"));
        }
        q = ad::add(q, layer.cross_attn(layer.norm_cross(q), encoded, log_mult, capture, label + ".cross"));
        q = ad::add(q, layer.ff(layer.norm_ff(q)));
    }
    return decoder_norm_(q);
}

template <typename T>
Tensor<T> VisualTransformer<T>::forward(const LocalInput<T>& locals, const Tensor<T>& global,
                                        AttentionCapture* capture) const {
    const auto encoded = encode(local_descriptors(locals.rows), locals.log_mult, capture);
    return decode(build_global_descriptors(global), encoded, locals.log_mult, capture);
}

template <typename T>
Tensor<T> VisualTransformer<T>::forward(const perception::Observation& obs, int target_class,
                                        AttentionCapture* capture) const {
    return forward(local_inputs<T>(obs.detections, target_class, config_, config_.compact_slots),
                   global_input<T>(obs.global, config_), capture);
}

template LocalInput<float> local_inputs(const perception::DetectionSet&, int, const VTConfig&, bool);
template LocalInput<double> local_inputs(const perception::DetectionSet&, int, const VTConfig&, bool);
template Tensor<float> global_input(const perception::GlobalFeature&, const VTConfig&);
template Tensor<double> global_input(const perception::GlobalFeature&, const VTConfig&);
template class VisualTransformer<float>;
template class VisualTransformer<double>;

}  // namespace vtnav::model
