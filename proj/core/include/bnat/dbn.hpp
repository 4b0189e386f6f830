#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bnat/dataset.hpp"
#include "bnat/errors.hpp"
#include "bnat/rng.hpp"

namespace bnat {

/// Layer sizes of a network: input width, one entry per hidden layer
/// (the first hidden layer sits on Gaussian visible units, the rest are
/// binary-binary), and the class count of the softmax output.
struct Architecture {
    std::size_t input_dim = 10;
    std::vector<std::size_t> hidden = {16, 8};
    std::size_t classes = kDefaultClassCount;

    void validate() const;
    /// Full size chain [input, hidden..., classes].
    std::vector<std::size_t> dims() const;
    std::size_t rbm_count() const { return hidden.empty() ? 0 : hidden.size() - 1; }
    std::size_t last_hidden() const { return hidden.back(); }
    /// Total number of trainable parameters in canonical flat order.
    std::size_t param_count() const;

    bool operator==(const Architecture&) const = default;
};

/// Gaussian-visible layer. `sigma` is the per-unit visible standard
/// deviation; it is part of the energy but fixed (not trained), the inputs
/// are standardized instead.
struct GrbmLayer {
    Eigen::MatrixXd weights;      // visible x hidden
    Eigen::VectorXd visible_bias; // visible
    Eigen::VectorXd hidden_bias;  // hidden
    Eigen::VectorXd sigma;        // visible, fixed

    std::size_t visible_units() const { return static_cast<std::size_t>(weights.rows()); }
    std::size_t hidden_units() const { return static_cast<std::size_t>(weights.cols()); }
};

/// Binary-binary layer.
struct RbmLayer {
    Eigen::MatrixXd weights;      // visible x hidden
    Eigen::VectorXd visible_bias; // visible
    Eigen::VectorXd hidden_bias;  // hidden

    std::size_t visible_units() const { return static_cast<std::size_t>(weights.rows()); }
    std::size_t hidden_units() const { return static_cast<std::size_t>(weights.cols()); }
};

/// Softmax classifier on top of the last hidden layer.
struct SoftmaxHead {
    Eigen::MatrixXd weights; // last hidden x classes
    Eigen::VectorXd bias;    // classes

    std::size_t input_dim() const { return static_cast<std::size_t>(weights.rows()); }
    std::size_t classes() const { return static_cast<std::size_t>(weights.cols()); }
};

/// One node's full parameter set.
struct DbnModel {
    GrbmLayer grbm;
    std::vector<RbmLayer> rbms;
    SoftmaxHead head;
    Architecture arch;

    void validate() const;
};

/// Gradient of one energy layer, shape-congruent with the layer.
struct LayerGradient {
    Eigen::MatrixXd weights;
    Eigen::VectorXd visible_bias;
    Eigen::VectorXd hidden_bias;
};

struct HeadGradient {
    Eigen::MatrixXd weights;
    Eigen::VectorXd bias;
};

/// Structured gradient mirroring DbnModel: one block per layer plus the
/// head, no cross-layer mixing.
struct GradientBundle {
    LayerGradient grbm;
    std::vector<LayerGradient> rbms;
    HeadGradient head;
    std::size_t batch_size = 0;
};

struct TrainConfig {
    double learning_rate = 0.01;
    int cd_steps = 1;
    std::size_t batch_size = 64;
    std::size_t iterations = 700;
    std::uint64_t seed = 0;
    Architecture arch;

    void validate() const;
};

// --- energies ---------------------------------------------------------------

/// Gaussian-visible energy:
///   sum_p (v_p - b1_p)^2 / (2 sigma_p^2)
///   - sum_{p,g} w_pg h_g v_p / sigma_p - sum_g b2_g h_g
double grbm_energy(const GrbmLayer& layer, const Eigen::VectorXd& v,
                   const Eigen::VectorXd& h);

/// Binary-binary energy: -b1.v - v'Wh - b2.h
double rbm_energy(const RbmLayer& layer, const Eigen::VectorXd& v,
                  const Eigen::VectorXd& h);

// --- conditionals ------------------------------------------------------------

/// P(h_g = 1 | v) = logistic(b2_g + sum_p w_pg v_p / sigma_p)
Eigen::VectorXd grbm_hidden_conditional(const GrbmLayer& layer, const Eigen::VectorXd& v);
Eigen::MatrixXd grbm_hidden_conditional(const GrbmLayer& layer, const Eigen::MatrixXd& batch);

/// P(h_g = 1 | v) = logistic(b2_g + sum_p w_pg v_p)
Eigen::VectorXd rbm_hidden_conditional(const RbmLayer& layer, const Eigen::VectorXd& v);
Eigen::MatrixXd rbm_hidden_conditional(const RbmLayer& layer, const Eigen::MatrixXd& batch);

/// Mean of the Gaussian visible conditional: b1 + sigma .* (W h).
Eigen::VectorXd grbm_visible_mean(const GrbmLayer& layer, const Eigen::VectorXd& h);
Eigen::MatrixXd grbm_visible_mean(const GrbmLayer& layer, const Eigen::MatrixXd& hidden);

/// P(v_p = 1 | h) = logistic(b1_p + sum_g w_pg h_g)
Eigen::VectorXd rbm_visible_conditional(const RbmLayer& layer, const Eigen::VectorXd& h);
Eigen::MatrixXd rbm_visible_conditional(const RbmLayer& layer, const Eigen::MatrixXd& hidden);

// --- layer gradients ---------------------------------------------------------

/// First- and second-moment statistics of one side of the gradient
/// difference: weight_pg pairs the visible statistic with the hidden
/// probability, visible/hidden are the bias statistics.
struct LayerMoments {
    Eigen::MatrixXd weight;
    Eigen::VectorXd visible;
    Eigen::VectorXd hidden;
};

/// Data-side moments: hidden conditional probabilities on the batch.
/// For the Gaussian layer the weight statistic is v_p h_g / sigma_p and the
/// visible statistic (v_p - b1_p) / sigma_p^2.
LayerMoments grbm_data_moments(const GrbmLayer& layer, const Eigen::MatrixXd& batch);
LayerMoments rbm_data_moments(const RbmLayer& layer, const Eigen::MatrixXd& batch);

/// Model-side moments after k alternating Gibbs steps started at the batch
/// (hidden states sampled, visible reconstructed at its conditional mean).
LayerMoments grbm_chain_moments(const GrbmLayer& layer, const Eigen::MatrixXd& batch,
                                int cd_steps, Rng& rng);
LayerMoments rbm_chain_moments(const RbmLayer& layer, const Eigen::MatrixXd& batch,
                               int cd_steps, Rng& rng);

LayerGradient gradient_from_moments(const LayerMoments& data, const LayerMoments& model);

/// CD-k estimate of the log-likelihood gradient: data moments minus chain
/// moments. Deterministic given the RNG state.
LayerGradient grbm_cd_gradient(const GrbmLayer& layer, const Eigen::MatrixXd& batch,
                               int cd_steps, Rng& rng);
LayerGradient rbm_cd_gradient(const RbmLayer& layer, const Eigen::MatrixXd& batch,
                              int cd_steps, Rng& rng);

// --- forward / head ----------------------------------------------------------

/// Deterministic mean-field pass: every layer feeds its hidden conditional
/// probabilities to the next. Returns the last hidden activation.
Eigen::VectorXd forward(const DbnModel& model, const Eigen::VectorXd& x);
Eigen::MatrixXd forward(const DbnModel& model, const Eigen::MatrixXd& batch);

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

/// Class probabilities for one input; sums to 1.
Eigen::VectorXd predict_proba(const DbnModel& model, const Eigen::VectorXd& x);
/// Argmax class; ties break toward the lowest index.
ClassLabel predict(const DbnModel& model, const Eigen::VectorXd& x);
std::vector<ClassLabel> predict(const DbnModel& model, const Eigen::MatrixXd& batch);

Eigen::MatrixXd head_probs(const SoftmaxHead& head, const Eigen::MatrixXd& hidden);

/// Mean log-likelihood of the true classes under the head.
double head_log_likelihood(const SoftmaxHead& head, const Eigen::MatrixXd& hidden,
                           const std::vector<ClassLabel>& labels);

/// Ascent gradient of the mean class log-likelihood:
/// per sample X* (onehot(u) - p)' for the weights, onehot(u) - p for the bias.
HeadGradient head_gradient(const SoftmaxHead& head, const Eigen::MatrixXd& hidden,
                           const std::vector<ClassLabel>& labels);

// --- assembled gradient and update -------------------------------------------

/// Combined ascent gradient of the whole network: the Gaussian layer's CD
/// gradient on the raw inputs, each upper layer's CD gradient on the
/// mean-field output below it, and the head gradient on the final hidden
/// activation. Each block draws its chain randomness from an independent
/// stream of `seed`, so blocks can be recomputed in isolation.
GradientBundle total_gradient(const DbnModel& model, const Eigen::MatrixXd& batch,
                              const std::vector<ClassLabel>& labels, int cd_steps,
                              std::uint64_t seed);

/// Seed-stream tags used by total_gradient, one per block index
/// (0 = Gaussian layer, 1.. = upper layers in stack order).
std::uint64_t gradient_block_seed(std::uint64_t seed, std::size_t block);

/// Gradient ascent step: every parameter block += eps * gradient block.
/// sigma is untouched.
void apply_update(DbnModel& model, const GradientBundle& gradient, double eps);

// --- flat encoding -----------------------------------------------------------

// Canonical flat order (normative for the wire and the model file):
// Gaussian layer (W row-major, b1, b2), each upper layer in stack order
// (W row-major, b1, b2), head (W row-major, b).
std::vector<double> flatten(const GradientBundle& bundle);
std::vector<double> flatten(const DbnModel& model);
GradientBundle unflatten_gradient(std::span<const double> flat, const Architecture& arch);
DbnModel unflatten_model(std::span<const double> flat, const Architecture& arch);

/// Weights ~ N(0, 0.01^2), biases 0, sigma 1. Seed 0 is an ordinary seed
/// (the all-defaults model), not a sentinel.
DbnModel init_model(const Architecture& arch, std::uint64_t seed);

} // namespace bnat
