#pragma once

#include <Eigen/Core>

#include "bnat/dbn.hpp"

/// Exact quantities for small binary-binary layers, computed by summing over
/// every joint (visible, hidden) state. Only usable when visible + hidden
/// unit count is at most 16; intended for test oracles and tiny models.
namespace bnat::exact {

inline constexpr std::size_t kMaxEnumUnits = 16;

/// Mean log-likelihood of the batch rows under the layer's distribution.
double log_likelihood(const RbmLayer& layer, const Eigen::MatrixXd& batch);

/// Exact model-side expectations <v h'>, <v>, <h> under the joint
/// distribution. Plugs into gradient_from_moments as the exact counterpart
/// of the k-step chain moments.
LayerMoments model_moments(const RbmLayer& layer);

/// Exact gradient of the mean log-likelihood: data moments minus the exact
/// model moments.
LayerGradient loglik_gradient(const RbmLayer& layer, const Eigen::MatrixXd& batch);

} // namespace bnat::exact
