#include "vtnav/train/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vtnav/ad/adam.hpp"

namespace vtnav::train {

template <typename T>
PretrainHead<T>::PretrainHead(ad::ParameterSet<T>& params, std::size_t width, std::size_t hidden_width, Rng& rng,
                              const std::string& prefix)
    : hidden(params, prefix + "hidden", width, hidden_width, rng),
      logits(params, prefix + "logits", hidden_width, env::kNumActions, rng) {}

template <typename T>
ad::Tensor<T> PretrainHead<T>::operator()(const ad::Tensor<T>& representation) const {
    return logits(ad::relu(hidden(ad::mean_rows(representation))));
}

template struct PretrainHead<float>;
template struct PretrainHead<double>;

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t count, double val_fraction,
                                                                            std::uint64_t seed) {
    std::vector<std::size_t> idx(count);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(derive_seed(seed, 0x5b117ULL));
    std::shuffle(idx.begin(), idx.end(), rng);
    auto val = static_cast<std::size_t>(std::round(val_fraction * static_cast<double>(count)));
    if (count >= 2) val = std::clamp<std::size_t>(val, 1, count - 1);
    std::vector<std::size_t> validation(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(val));
    std::vector<std::size_t> training(idx.begin() + static_cast<std::ptrdiff_t>(val), idx.end());
    return {training, validation};
}

namespace {

int argmax(std::span<const float> v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

double action_accuracy(const VisualTransformer<float>& vt, const PretrainHead<float>& head, const ExpertDataset& data,
                       const std::vector<std::size_t>& indices, const std::vector<env::GridScene>& scenes) {
    if (indices.empty()) return 0.0;
    ad::NoGradGuard no_grad;
    std::size_t correct = 0;
    for (std::size_t i : indices) {
        const auto& s = data.samples[i];
        const auto obs = render_sample(s, scenes, data.noise);
        const auto logits = head(vt.forward(obs, s.target));
        if (argmax(logits.values()) == env::index_of(s.label)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(indices.size());
}

std::vector<std::vector<float>> pooled_features(const VisualTransformer<float>& vt, const ExpertDataset& data,
                                                const std::vector<std::size_t>& indices,
                                                const std::vector<env::GridScene>& scenes) {
    ad::NoGradGuard no_grad;
    std::vector<std::vector<float>> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) {
        const auto& s = data.samples[i];
        const auto pooled = ad::mean_rows(vt.forward(render_sample(s, scenes, data.noise), s.target));
        out.emplace_back(pooled.values().begin(), pooled.values().end());
    }
    return out;
}

PretrainResult pretrain(const VisualTransformer<float>& vt, const PretrainHead<float>& head,
                        ad::ParameterSet<float>& params, const ExpertDataset& data,
                        const std::vector<env::GridScene>& scenes, const PretrainConfig& config,
                        const std::function<void(const EpochStats&)>& on_epoch) {
    if (data.samples.empty()) throw std::invalid_argument("empty expert dataset");
    if (config.epochs < 1 || config.batch < 1) throw std::invalid_argument("epochs and batch must be positive");
    PretrainResult result;
    auto [train_idx, val_idx] = data.samples.size() >= 2 ? split_indices(data.samples.size(), config.val_fraction, config.seed)
                                                          : std::pair{std::vector<std::size_t>{0}, std::vector<std::size_t>{0}};
    result.train_size = train_idx.size();
    result.val_size = val_idx.size();

    std::array<int, env::kNumActions> counts{};
    for (std::size_t i : train_idx) ++counts[static_cast<std::size_t>(env::index_of(data.samples[i].label))];
    result.majority_label = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    std::size_t majority_hits = 0;
    for (std::size_t i : val_idx) majority_hits += env::index_of(data.samples[i].label) == result.majority_label;
    result.majority_val_accuracy = static_cast<double>(majority_hits) / static_cast<double>(val_idx.size());

    ad::Adam<float> adam(params, {config.lr});
    std::vector<std::vector<float>> best;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        Rng rng(derive_seed(config.seed, 0xe90cULL, static_cast<std::uint64_t>(epoch)));
        std::shuffle(train_idx.begin(), train_idx.end(), rng);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < train_idx.size(); start += static_cast<std::size_t>(config.batch)) {
            const std::size_t end = std::min(train_idx.size(), start + static_cast<std::size_t>(config.batch));
            std::vector<ad::Tensor<float>> rows;
            std::vector<int> labels;
            for (std::size_t b = start; b < end; ++b) {
                const auto& s = data.samples[train_idx[b]];
                rows.push_back(head(vt.forward(render_sample(s, scenes, data.noise), s.target)));
                labels.push_back(env::index_of(s.label));
                if (argmax(rows.back().values()) == labels.back()) ++correct;
            }
            auto loss = ad::cross_entropy(ad::concat_rows(rows), std::span<const int>(labels));
            const double value = loss.item();
            if (!std::isfinite(value))
                throw ad::NumericError("pretraining diverged: loss " + std::to_string(value) + " at epoch " +
                                       std::to_string(epoch) + ", batch starting at " + std::to_string(start));
            loss_sum += value * static_cast<double>(end - start);
            params.zero_grad();
            loss.backward();
            adam.step(params);
        }
        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = loss_sum / static_cast<double>(train_idx.size());
        stats.train_accuracy = static_cast<double>(correct) / static_cast<double>(train_idx.size());
        stats.val_accuracy = action_accuracy(vt, head, data, val_idx, scenes);
        result.epochs.push_back(stats);
        if (result.best_epoch < 0 || stats.val_accuracy > result.best_val_accuracy) {
            result.best_epoch = epoch;
            result.best_val_accuracy = stats.val_accuracy;
            best.clear();
            for (const auto& e : params.entries()) best.emplace_back(e.tensor.values().begin(), e.tensor.values().end());
        }
        if (on_epoch) on_epoch(stats);
    }
    auto& entries = params.entries();
    for (std::size_t i = 0; i < entries.size(); ++i) std::ranges::copy(best[i], entries[i].tensor.mutable_values().begin());
    return result;
}

}  // namespace vtnav::train
