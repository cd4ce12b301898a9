#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>

#include "vtnav/env/grid.hpp"
#include "vtnav/model/vt.hpp"
#include "vtnav/util/random.hpp"

namespace vtnav::policy {

using model::Linear;

inline constexpr std::size_t kHiddenWidth = 512;
inline constexpr std::size_t kActionEmbeddingWidth = 32;
// Channels kept per global position by the Baseline's reduction.
inline constexpr std::size_t kBaselineGlobalChannels = 2;

template <typename T>
struct PolicyState {
    ad::Tensor<T> hidden;  // [1, 512]
    ad::Tensor<T> cell;    // [1, 512]

    static PolicyState zeros();
    bool finite() const { return hidden.all_finite() && cell.all_finite(); }
    PolicyState detached() const { return {hidden.detach(), cell.detach()}; }
};

struct ActionDistribution {
    std::array<double, env::kNumActions> probs{};

    double entropy() const;
    bool valid(double tol = 1e-6) const;
};

template <typename T>
struct PolicyOutput {
    ad::Tensor<T> logits;  // [1, 6]
    ad::Tensor<T> value;   // [1, 1]
    PolicyState<T> state;

    ActionDistribution distribution() const;
};

// gates = [x, h] W + b, split into input, forget, candidate and output.
template <typename T>
struct LSTMCell {
    Linear<T> gates;
    std::size_t width;

    LSTMCell(ad::ParameterSet<T>& params, const std::string& name, std::size_t in, std::size_t width, Rng& rng);
    PolicyState<T> operator()(const ad::Tensor<T>& x, const PolicyState<T>& state) const;
};

// Mean over rows of the representation, projection to 512, previous-action
// embedding, one LSTM step, then actor and critic heads.
template <typename T>
struct PolicyHead {
    Linear<T> project;
    ad::Tensor<T> action_embedding;  // [6, 32]
    LSTMCell<T> recurrent;
    Linear<T> actor;
    Linear<T> critic;

    PolicyHead(ad::ParameterSet<T>& params, std::size_t representation_width, Rng& rng,
               const std::string& prefix = "policy.");
    PolicyOutput<T> operator()(const ad::Tensor<T>& representation, std::optional<env::Action> previous,
                               const PolicyState<T>& state) const;
};

enum class Variant { VTNet, Baseline };
std::string to_string(Variant v);
std::optional<Variant> parse_variant(const std::string& s);

// The navigation agent: visual encoder plus recurrent actor-critic. VTNet encodes
// observations with the VT; Baseline concatenates mean-pooled raw local inputs with
// a flattened channel reduction of the global feature.
template <typename T>
class ActorCritic {
public:
    ActorCritic(Variant variant, const model::VTConfig& config, ad::ParameterSet<T>& params, Rng& rng);

    Variant variant() const { return variant_; }
    const model::VTConfig& config() const { return config_; }
    const model::VisualTransformer<T>* vt() const { return vt_.get(); }
    const PolicyHead<T>& head() const { return *head_; }

    ad::Tensor<T> represent(const perception::Observation& obs, int target_class) const;
    PolicyOutput<T> step(const perception::Observation& obs, int target_class, std::optional<env::Action> previous,
                         const PolicyState<T>& state) const;

private:
    Variant variant_;
    model::VTConfig config_;
    std::unique_ptr<model::VisualTransformer<T>> vt_;
    std::unique_ptr<Linear<T>> global_reduce_;
    std::unique_ptr<PolicyHead<T>> head_;
};

enum class SelectMode { Sample, Argmax };

// Argmax breaks ties toward the lowest action index.
env::Action select_action(const ActionDistribution& dist, SelectMode mode, Rng& rng);

}  // namespace vtnav::policy
