#pragma once

#include <functional>
#include <vector>

#include "vtnav/ad/checkpoint.hpp"
#include "vtnav/model/vt.hpp"
#include "vtnav/train/expert.hpp"

namespace vtnav::train {

using model::Linear;
using model::VisualTransformer;

// Mean over the hw positions, then Linear -> ReLU -> Linear to action logits.
template <typename T>
struct PretrainHead {
    Linear<T> hidden;
    Linear<T> logits;

    PretrainHead(ad::ParameterSet<T>& params, std::size_t width, std::size_t hidden_width, Rng& rng,
                 const std::string& prefix = "head.");
    ad::Tensor<T> operator()(const ad::Tensor<T>& representation) const;  // [1, 6]
};

struct PretrainConfig {
    int epochs = 20;
    double lr = 1e-4;
    int batch = 64;
    double val_fraction = 0.1;
    int hidden = 512;
    std::uint64_t seed = 0;
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double val_accuracy = 0.0;
};

struct PretrainResult {
    std::vector<EpochStats> epochs;
    int best_epoch = -1;
    double best_val_accuracy = 0.0;
    int majority_label = 0;           // most frequent label in the training split
    double majority_val_accuracy = 0.0;  // accuracy of always predicting it on validation
    std::size_t train_size = 0;
    std::size_t val_size = 0;
};

// Seeded split of sample indices into (train, validation).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t count, double val_fraction,
                                                                            std::uint64_t seed);

// Minimises mean cross-entropy against expert labels with Adam. On return the
// parameters hold the best-validation-accuracy snapshot.
PretrainResult pretrain(const VisualTransformer<float>& vt, const PretrainHead<float>& head,
                        ad::ParameterSet<float>& params, const ExpertDataset& data,
                        const std::vector<env::GridScene>& scenes, const PretrainConfig& config,
                        const std::function<void(const EpochStats&)>& on_epoch = {});

// Fraction of samples whose argmax prediction equals the label.
double action_accuracy(const VisualTransformer<float>& vt, const PretrainHead<float>& head, const ExpertDataset& data,
                       const std::vector<std::size_t>& indices, const std::vector<env::GridScene>& scenes);

// Mean-pooled representation of each sample, computed without recording a graph.
std::vector<std::vector<float>> pooled_features(const VisualTransformer<float>& vt, const ExpertDataset& data,
                                                const std::vector<std::size_t>& indices,
                                                const std::vector<env::GridScene>& scenes);

}  // namespace vtnav::train
