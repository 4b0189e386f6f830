#include <doctest.h>

#include <cmath>

#include "bnat/dbn.hpp"
#include "bnat/enumeration.hpp"
#include "bnat/rng.hpp"
#include "support/fd_oracle.hpp"

using namespace bnat;

namespace {

RbmLayer random_rbm(std::size_t p, std::size_t g, Rng& rng, double scale = 0.3) {
    RbmLayer layer;
    layer.weights.resize(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(g));
    layer.visible_bias.resize(static_cast<Eigen::Index>(p));
    layer.hidden_bias.resize(static_cast<Eigen::Index>(g));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
        for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
            layer.weights(r, c) = scale * rng.gaussian();
    for (Eigen::Index r = 0; r < layer.visible_bias.size(); ++r)
        layer.visible_bias(r) = scale * rng.gaussian();
    for (Eigen::Index r = 0; r < layer.hidden_bias.size(); ++r)
        layer.hidden_bias(r) = scale * rng.gaussian();
    return layer;
}

Eigen::MatrixXd random_binary(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.bernoulli(0.5) ? 1.0 : 0.0;
    return m;
}

} // namespace

TEST_CASE("enumerated log-likelihood agrees with the independent oracle") {
    Rng rng(100);
    for (int trial = 0; trial < 5; ++trial) {
        const RbmLayer layer = random_rbm(3, 2, rng);
        const Eigen::MatrixXd batch = random_binary(4, 3, rng);
        CHECK(exact::log_likelihood(layer, batch) ==
              doctest::Approx(testsupport::enum_rbm_loglik(layer, batch)).epsilon(1e-10));
    }
}

TEST_CASE("closed form at zero parameters: weight gradient 0.25") {
    RbmLayer layer;
    layer.weights = Eigen::MatrixXd::Zero(1, 1);
    layer.visible_bias = Eigen::VectorXd::Zero(1);
    layer.hidden_bias = Eigen::VectorXd::Zero(1);
    const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(2, 1);
    const LayerGradient g = exact::loglik_gradient(layer, ones);
    CHECK(g.weights(0, 0) == doctest::Approx(0.25).epsilon(1e-15));

    // each visible configuration has marginal 1/2, so log-likelihood is -log 2
    CHECK(exact::log_likelihood(layer, ones) == doctest::Approx(-std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("gradient vanishes when data moments equal model moments") {
    RbmLayer layer;
    layer.weights = Eigen::MatrixXd::Zero(1, 1);
    layer.visible_bias = Eigen::VectorXd::Zero(1);
    layer.hidden_bias = Eigen::VectorXd::Zero(1);
    Eigen::MatrixXd batch(2, 1);
    batch << 0, 1; // data mean 1/2 matches the uniform model marginal
    const LayerGradient g = exact::loglik_gradient(layer, batch);
    CHECK(std::abs(g.weights(0, 0)) <= 1e-15);
    CHECK(std::abs(g.visible_bias(0)) <= 1e-15);
    CHECK(std::abs(g.hidden_bias(0)) <= 1e-15);
}

TEST_CASE("exact gradient matches central finite differences") {
    Rng rng(200);
    for (int trial = 0; trial < 3; ++trial) {
        const RbmLayer layer = random_rbm(3, 2, rng);
        const Eigen::MatrixXd batch = random_binary(5, 3, rng);
        const LayerGradient analytic = exact::loglik_gradient(layer, batch);
        const LayerGradient fd = testsupport::fd_rbm_gradient(layer, batch);
        CHECK(testsupport::max_abs_diff(analytic, fd) <= 1e-6);
    }
}

TEST_CASE("exact gradient equals data moments minus exact model moments bitwise") {
    Rng rng(300);
    const RbmLayer layer = random_rbm(4, 3, rng);
    const Eigen::MatrixXd batch = random_binary(6, 4, rng);
    const LayerGradient via_moments =
        gradient_from_moments(rbm_data_moments(layer, batch), exact::model_moments(layer));
    const LayerGradient direct = exact::loglik_gradient(layer, batch);
    CHECK(via_moments.weights == direct.weights);
    CHECK(via_moments.visible_bias == direct.visible_bias);
    CHECK(via_moments.hidden_bias == direct.hidden_bias);
}

TEST_CASE("enumeration refuses oversized layers") {
    Rng rng(400);
    const RbmLayer big = random_rbm(9, 8, rng);
    CHECK_THROWS_AS(exact::model_moments(big), ConfigError);
    CHECK_THROWS_AS(exact::log_likelihood(big, Eigen::MatrixXd::Zero(1, 9)), ConfigError);
}
