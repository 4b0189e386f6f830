#include "bnat/enumeration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "bnat/errors.hpp"

namespace bnat::exact {

namespace {

void check_size(const RbmLayer& layer, const char* what) {
    const std::size_t units = layer.visible_units() + layer.hidden_units();
    if (units > kMaxEnumUnits)
        throw ConfigError(std::string(what) + ": " + std::to_string(units) +
                          " units, enumeration capped at " + std::to_string(kMaxEnumUnits));
}

Eigen::VectorXd bits_to_vector(std::uint32_t mask, std::size_t n) {
    Eigen::VectorXd v(n);
    for (std::size_t i = 0; i < n; ++i) v(i) = (mask >> i) & 1u ? 1.0 : 0.0;
    return v;
}

} // namespace

double log_likelihood(const RbmLayer& layer, const Eigen::MatrixXd& batch) {
    check_size(layer, "exact log-likelihood");
    if (batch.rows() == 0) throw ConfigError("exact log-likelihood: empty batch");
    if (static_cast<std::size_t>(batch.cols()) != layer.visible_units())
        throw ConfigError("exact log-likelihood: batch width disagrees with layer");

    const std::size_t p_units = layer.visible_units();
    const std::size_t g_units = layer.hidden_units();
    const std::uint32_t v_states = 1u << p_units;
    const std::uint32_t h_states = 1u << g_units;

    // log Z over every joint state, max-shifted.
    std::vector<double> neg_energy;
    neg_energy.reserve(static_cast<std::size_t>(v_states) * h_states);
    double peak = -std::numeric_limits<double>::infinity();
    for (std::uint32_t vm = 0; vm < v_states; ++vm) {
        const Eigen::VectorXd v = bits_to_vector(vm, p_units);
        for (std::uint32_t hm = 0; hm < h_states; ++hm) {
            const double e = -rbm_energy(layer, v, bits_to_vector(hm, g_units));
            neg_energy.push_back(e);
            peak = std::max(peak, e);
        }
    }
    double z_shifted = 0.0;
    for (double e : neg_energy) z_shifted += std::exp(e - peak);
    const double log_z = peak + std::log(z_shifted);

    // log p(v) = log sum_h exp(-E(v,h)) - log Z, per batch row.
    double total = 0.0;
    for (Eigen::Index r = 0; r < batch.rows(); ++r) {
        const Eigen::VectorXd v = batch.row(r).transpose();
        double row_peak = -std::numeric_limits<double>::infinity();
        std::vector<double> row_terms(h_states);
        for (std::uint32_t hm = 0; hm < h_states; ++hm) {
            row_terms[hm] = -rbm_energy(layer, v, bits_to_vector(hm, g_units));
            row_peak = std::max(row_peak, row_terms[hm]);
        }
        double row_sum = 0.0;
        for (double e : row_terms) row_sum += std::exp(e - row_peak);
        total += row_peak + std::log(row_sum) - log_z;
    }
    return total / static_cast<double>(batch.rows());
}

LayerMoments model_moments(const RbmLayer& layer) {
    check_size(layer, "exact model moments");

    const std::size_t p_units = layer.visible_units();
    const std::size_t g_units = layer.hidden_units();
    const std::uint32_t v_states = 1u << p_units;
    const std::uint32_t h_states = 1u << g_units;

    // First pass: the max-shift for stable weights.
    double peak = -std::numeric_limits<double>::infinity();
    for (std::uint32_t vm = 0; vm < v_states; ++vm) {
        const Eigen::VectorXd v = bits_to_vector(vm, p_units);
        for (std::uint32_t hm = 0; hm < h_states; ++hm)
            peak = std::max(peak, -rbm_energy(layer, v, bits_to_vector(hm, g_units)));
    }

    Eigen::MatrixXd weight = Eigen::MatrixXd::Zero(p_units, g_units);
    Eigen::VectorXd visible = Eigen::VectorXd::Zero(p_units);
    Eigen::VectorXd hidden = Eigen::VectorXd::Zero(g_units);
    double z_shifted = 0.0;
    for (std::uint32_t vm = 0; vm < v_states; ++vm) {
        const Eigen::VectorXd v = bits_to_vector(vm, p_units);
        for (std::uint32_t hm = 0; hm < h_states; ++hm) {
            const Eigen::VectorXd h = bits_to_vector(hm, g_units);
            const double w = std::exp(-rbm_energy(layer, v, h) - peak);
            z_shifted += w;
            weight += w * v * h.transpose();
            visible += w * v;
            hidden += w * h;
        }
    }

    LayerMoments m;
    m.weight = weight / z_shifted;
    m.visible = visible / z_shifted;
    m.hidden = hidden / z_shifted;
    return m;
}

LayerGradient loglik_gradient(const RbmLayer& layer, const Eigen::MatrixXd& batch) {
    check_size(layer, "exact gradient");
    return gradient_from_moments(rbm_data_moments(layer, batch), model_moments(layer));
}

} // namespace bnat::exact
