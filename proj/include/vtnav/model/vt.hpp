#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vtnav/model/layers.hpp"
#include "vtnav/perception/observation.hpp"

namespace vtnav::model {

struct VTConfig {
    int d_model = 256;
    int num_slots = 100;
    int grid_h = 7;
    int grid_w = 7;
    int global_channels = 512;
    int feature_dim = 256;
    int heads = 4;
    int encoder_layers = 2;
    int decoder_layers = 2;
    int ff_width = 0;  // 0 means 4 * d_model
    int num_classes = 22;
    bool decoder_self_attention = false;
    bool positional_encoding = true;
    // Collapse identical detection slots into one key row weighted by its count.
    // Numerically equivalent to the dense computation.
    bool compact_slots = true;

    // Width used by the training pipeline on a single CPU core.
    static VTConfig desk();

    int feed_forward_width() const { return ff_width > 0 ? ff_width : 4 * d_model; }
    int positions() const { return grid_h * grid_w; }
    // instance feature + bbox(4) + confidence + class/C + target bit
    int local_input_width() const { return feature_dim + 7; }
    void validate() const;
    bool operator==(const VTConfig&) const = default;
};

// Sinusoidal 2-D embedding. Channels [0, d/2) encode u and [d/2, d) encode v; within a
// half, offset 2j holds sin(pos / 10000^(2(j+1)/d)) and offset 2j+1 the matching cos.
std::vector<double> positional_embedding(double u, double v, int d);

// Per-slot model input rows, optionally deduplicated.
template <typename T>
struct LocalInput {
    Tensor<T> rows;                     // [k, local_input_width]
    std::optional<Tensor<T>> log_mult;  // [1, k] log multiplicities when compacted
    std::vector<int> slot_row;          // slot index -> row in `rows`
};

template <typename T>
LocalInput<T> local_inputs(const perception::DetectionSet& dets, int target_class, const VTConfig& config,
                           bool compact);

template <typename T>
Tensor<T> global_input(const perception::GlobalFeature& g, const VTConfig& config);

template <typename T>
class VisualTransformer {
public:
    VisualTransformer(const VTConfig& config, ParameterSet<T>& params, Rng& rng, const std::string& prefix = "vt.");

    const VTConfig& config() const { return config_; }

    // Two-layer ReLU MLP over slot input rows -> [rows, d].
    Tensor<T> local_descriptors(const Tensor<T>& inputs) const;
    Tensor<T> build_local_descriptors(const perception::DetectionSet& dets, int target_class) const;
    // 1x1 reduction D -> d plus positional embedding -> [hw, d].
    Tensor<T> build_global_descriptors(const Tensor<T>& global) const;
    Tensor<T> build_global_descriptors(const perception::GlobalFeature& global) const;

    Tensor<T> encode(const Tensor<T>& locals, const std::optional<Tensor<T>>& log_mult = std::nullopt,
                     AttentionCapture* capture = nullptr) const;
    Tensor<T> decode(const Tensor<T>& globals, const Tensor<T>& encoded,
                     const std::optional<Tensor<T>>& log_mult = std::nullopt,
                     AttentionCapture* capture = nullptr) const;

    // Visual representation [hw, d].
    Tensor<T> forward(const perception::Observation& obs, int target_class, AttentionCapture* capture = nullptr) const;
    Tensor<T> forward(const LocalInput<T>& locals, const Tensor<T>& global, AttentionCapture* capture = nullptr) const;

    const Tensor<T>& positional_table() const { return positional_; }

private:
    struct EncoderLayer {
        LayerNorm<T> norm_attn, norm_ff;
        MultiHeadAttention<T> attn;
        FeedForward<T> ff;
    };
    struct DecoderLayer {
        LayerNorm<T> norm_self, norm_cross, norm_ff;
        MultiHeadAttention<T> self_attn, cross_attn;
        FeedForward<T> ff;
    };

    VTConfig config_;
    Linear<T> local_fc1, local_fc2;
    Linear<T> reduce;
    std::vector<EncoderLayer> encoder_;
    std::vector<DecoderLayer> decoder_;
    LayerNorm<T> encoder_norm_, decoder_norm_;
    Tensor<T> positional_;  // [hw, d], constant
};

extern template class VisualTransformer<float>;
extern template class VisualTransformer<double>;

}  // namespace vtnav::model
