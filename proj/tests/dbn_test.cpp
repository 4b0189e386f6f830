#include <doctest.h>

#include <cmath>
#include <vector>

#include "bnat/dbn.hpp"
#include "bnat/enumeration.hpp"
#include "bnat/rng.hpp"
#include "support/fd_oracle.hpp"

using namespace bnat;

namespace {

GrbmLayer make_grbm(std::size_t p, std::size_t g) {
    GrbmLayer layer;
    layer.weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(g));
    layer.visible_bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    layer.hidden_bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g));
    layer.sigma = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(p));
    return layer;
}

RbmLayer make_rbm(std::size_t p, std::size_t g) {
    RbmLayer layer;
    layer.weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(g));
    layer.visible_bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    layer.hidden_bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g));
    return layer;
}

SoftmaxHead make_head(std::size_t in, std::size_t classes) {
    SoftmaxHead head;
    head.weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(in), static_cast<Eigen::Index>(classes));
    head.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(classes));
    return head;
}

Eigen::VectorXd vec(std::initializer_list<double> xs) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

} // namespace

TEST_CASE("grbm energy on worked instances") {
    CHECK(grbm_energy(make_grbm(1, 1), vec({0}), vec({0})) == 0.0);

    CHECK(grbm_energy(make_grbm(2, 1), vec({1, 0}), vec({1})) == 0.5);

    GrbmLayer layer = make_grbm(1, 1);
    layer.visible_bias(0) = 0.5;
    layer.hidden_bias(0) = 0.25;
    layer.weights(0, 0) = 0.1;
    CHECK(grbm_energy(layer, vec({1}), vec({1})) == doctest::Approx(-0.225).epsilon(1e-15));

    // zero weights/biases, unit sigma: energy is ||v||^2 / 2 regardless of h
    const Eigen::VectorXd v = vec({1.5, -2.0, 0.5});
    CHECK(grbm_energy(make_grbm(3, 2), v, vec({1, 0})) ==
          doctest::Approx(v.squaredNorm() / 2.0).epsilon(1e-15));

    CHECK_THROWS_AS(grbm_energy(make_grbm(2, 1), vec({1}), vec({1})), ConfigError);
}

TEST_CASE("rbm energy on worked instances") {
    CHECK(rbm_energy(make_rbm(1, 1), vec({0}), vec({0})) == 0.0);

    RbmLayer layer = make_rbm(1, 1);
    layer.visible_bias(0) = 0.5;
    layer.hidden_bias(0) = 0.25;
    layer.weights(0, 0) = 0.1;
    CHECK(rbm_energy(layer, vec({1}), vec({1})) == doctest::Approx(-0.85).epsilon(1e-15));

    RbmLayer negated = layer;
    negated.visible_bias = -layer.visible_bias;
    negated.hidden_bias = -layer.hidden_bias;
    negated.weights = -layer.weights;
    CHECK(rbm_energy(negated, vec({1}), vec({1})) ==
          doctest::Approx(-rbm_energy(layer, vec({1}), vec({1}))).epsilon(1e-15));

    CHECK_THROWS_AS(rbm_energy(layer, vec({1, 0}), vec({1})), ConfigError);
}

TEST_CASE("hidden and visible conditionals") {
    CHECK(rbm_hidden_conditional(make_rbm(2, 3), vec({1, 0}))(1) == 0.5);
    CHECK(grbm_hidden_conditional(make_grbm(2, 3), vec({0.7, -0.3}))(0) == 0.5);
    CHECK(grbm_visible_mean(make_grbm(2, 3), vec({1, 0, 1}))(0) == 0.0);
    CHECK(rbm_visible_conditional(make_rbm(2, 3), vec({1, 0, 1}))(0) == 0.5);

    RbmLayer biased = make_rbm(1, 1);
    biased.hidden_bias(0) = std::log(3.0);
    CHECK(rbm_hidden_conditional(biased, vec({0}))(0) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(rbm_hidden_conditional(biased, vec({1}))(0) == doctest::Approx(0.75).epsilon(1e-12));

    // monotone in w when v = 1
    RbmLayer low = make_rbm(1, 1), high = make_rbm(1, 1);
    low.weights(0, 0) = 0.2;
    high.weights(0, 0) = 0.9;
    CHECK(rbm_hidden_conditional(high, vec({1}))(0) > rbm_hidden_conditional(low, vec({1}))(0));

    // GRBM visible mean: b1 + sigma .* (W h)
    GrbmLayer g = make_grbm(1, 1);
    g.visible_bias(0) = 0.3;
    g.weights(0, 0) = 2.0;
    CHECK(grbm_visible_mean(g, vec({1}))(0) == doctest::Approx(2.3).epsilon(1e-12));
}

TEST_CASE("softmax, predict_proba and predict") {
    Architecture arch;
    arch.input_dim = 2;
    arch.hidden = {3};
    arch.classes = 4;
    const DbnModel model = init_model(arch, 5);

    const Eigen::VectorXd probs = predict_proba(model, vec({0.1, -0.2}));
    CHECK(probs.size() == 4);
    CHECK(std::abs(probs.sum() - 1.0) <= 1e-12);

    CHECK(softmax(vec({1.0, 1.0, 1.0, 1.0})) == vec({0.25, 0.25, 0.25, 0.25}));

    const Eigen::VectorXd two = softmax(vec({std::log(2.0), 0.0}));
    CHECK(two(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(two(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    // argmax with tie: lowest index wins
    CHECK(softmax(vec({3.0, 3.0, 1.0})).maxCoeff() == softmax(vec({3.0, 3.0, 1.0}))(0));
    Eigen::VectorXd logits = vec({1.0, 5.0, 2.0});
    const Eigen::VectorXd plain = softmax(logits);
    logits.array() += 100.0;
    const Eigen::VectorXd shifted = softmax(logits);
    CHECK((shifted - plain).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("prediction picks the argmax and breaks ties low") {
    Architecture arch;
    arch.input_dim = 1;
    arch.hidden = {1};
    arch.classes = 4;
    DbnModel model = init_model(arch, 0);
    // zero head: all probabilities 0.25, tie broken to class index 0
    model.head.weights.setZero();
    model.head.bias.setZero();
    CHECK(predict(model, vec({0.4})) == kNormal);
    model.head.bias = vec({0, 0.7, 0, 0});
    CHECK(predict(model, vec({0.4})) == kBrutePass);
}

TEST_CASE("forward pass is a pure mean-field map into (0,1)") {
    Architecture arch;
    arch.input_dim = 4;
    arch.hidden = {5, 3};
    arch.classes = 4;
    DbnModel zero = init_model(arch, 1);
    zero.grbm.weights.setZero();
    zero.grbm.hidden_bias.setZero();
    for (auto& r : zero.rbms) {
        r.weights.setZero();
        r.hidden_bias.setZero();
    }
    const Eigen::VectorXd out = forward(zero, vec({1, 2, 3, 4}));
    REQUIRE(out.size() == 3);
    for (Eigen::Index i = 0; i < out.size(); ++i) CHECK(out(i) == 0.5);

    const DbnModel model = init_model(arch, 2);
    const Eigen::VectorXd a = forward(model, vec({0.5, -1, 2, 0}));
    const Eigen::VectorXd b = forward(model, vec({0.5, -1, 2, 0}));
    CHECK(a == b);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        CHECK(a(i) > 0.0);
        CHECK(a(i) < 1.0);
    }

    // batch overload consistent with the vector one
    Eigen::MatrixXd batch(2, 4);
    batch.row(0) = vec({0.5, -1, 2, 0}).transpose();
    batch.row(1) = vec({1, 1, 1, 1}).transpose();
    const Eigen::MatrixXd outs = forward(model, batch);
    CHECK(outs.row(0).transpose() == a);
    CHECK(outs.row(1).transpose() == forward(model, vec({1, 1, 1, 1})));
}

TEST_CASE("head gradient matches the worked example and stationarity") {
    // single sample X*=[1], U=2, zero head, true class index 0
    SoftmaxHead head = make_head(1, 2);
    Eigen::MatrixXd x(1, 1);
    x << 1.0;
    const HeadGradient g = head_gradient(head, x, {kNormal});
    CHECK(g.weights(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(g.weights(0, 1) == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(g.bias(0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(g.bias(1) == doctest::Approx(-0.5).epsilon(1e-15));

    // probabilities one-hot on the true label: gradient vanishes
    SoftmaxHead peaked = make_head(1, 2);
    peaked.bias = vec({500.0, -500.0});
    const HeadGradient zero = head_gradient(peaked, x, {kNormal});
    CHECK(zero.weights.cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(zero.bias.cwiseAbs().maxCoeff() <= 1e-12);

    CHECK_THROWS_AS(head_gradient(head, x, {ClassLabel{3}}), DataError);
}

TEST_CASE("head gradient agrees with finite differences on random instances") {
    Rng rng(2024);
    for (int trial = 0; trial < 5; ++trial) {
        SoftmaxHead head = make_head(3, 4);
        for (Eigen::Index r = 0; r < 3; ++r)
            for (Eigen::Index c = 0; c < 4; ++c) head.weights(r, c) = 0.3 * rng.gaussian();
        for (Eigen::Index c = 0; c < 4; ++c) head.bias(c) = 0.3 * rng.gaussian();
        Eigen::MatrixXd x(6, 3);
        std::vector<ClassLabel> labels;
        for (Eigen::Index r = 0; r < 6; ++r) {
            for (Eigen::Index c = 0; c < 3; ++c) x(r, c) = rng.uniform();
            labels.push_back(ClassLabel::from_index(rng.below(4)));
        }
        const HeadGradient analytic = head_gradient(head, x, labels);
        const HeadGradient fd = testsupport::fd_head_gradient(head, x, labels);
        CHECK(testsupport::max_abs_diff(analytic, fd) <= 1e-6);
    }
}

TEST_CASE("data moments use hidden probabilities and average over the batch") {
    // zero-parameter 1x1 RBM, all-ones batch: hidden probability 1/2
    RbmLayer layer = make_rbm(1, 1);
    Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(4, 1);
    const LayerMoments m = rbm_data_moments(layer, ones);
    CHECK(m.weight(0, 0) == 0.5);
    CHECK(m.visible(0) == 1.0);
    CHECK(m.hidden(0) == 0.5);

    // GRBM statistic carries the 1/sigma factor
    GrbmLayer g = make_grbm(1, 1);
    g.sigma(0) = 2.0;
    Eigen::MatrixXd x(1, 1);
    x << 3.0;
    const LayerMoments gm = grbm_data_moments(g, x);
    CHECK(gm.weight(0, 0) == doctest::Approx(3.0 / 2.0 * 0.5).epsilon(1e-12));
    CHECK(gm.visible(0) == doctest::Approx(3.0 / 4.0).epsilon(1e-12)); // (v - b1)/sigma^2
}

TEST_CASE("closed-form cd gradient at zero parameters") {
    // expectation form: data term 1*0.5, exact model term 0.25
    RbmLayer layer = make_rbm(1, 1);
    Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(3, 1);
    const LayerGradient g =
        gradient_from_moments(rbm_data_moments(layer, ones), exact::model_moments(layer));
    CHECK(g.weights(0, 0) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(g.visible_bias(0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(g.hidden_bias(0) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("expectation-form gradient is invariant under batch duplication") {
    Rng rng(5);
    RbmLayer layer = make_rbm(3, 2);
    for (Eigen::Index r = 0; r < 3; ++r)
        for (Eigen::Index c = 0; c < 2; ++c) layer.weights(r, c) = 0.3 * rng.gaussian();
    Eigen::MatrixXd batch(4, 3);
    for (Eigen::Index r = 0; r < 4; ++r)
        for (Eigen::Index c = 0; c < 3; ++c) batch(r, c) = rng.bernoulli(0.5) ? 1.0 : 0.0;
    Eigen::MatrixXd doubled(8, 3);
    doubled << batch, batch;

    const LayerMoments model_m = exact::model_moments(layer);
    const LayerGradient once = gradient_from_moments(rbm_data_moments(layer, batch), model_m);
    const LayerGradient twice = gradient_from_moments(rbm_data_moments(layer, doubled), model_m);
    CHECK(testsupport::max_abs_diff(once, twice) <= 1e-12);
}

TEST_CASE("cd gradients are deterministic per seed") {
    Rng rng(6);
    RbmLayer layer = make_rbm(4, 3);
    for (Eigen::Index r = 0; r < 4; ++r)
        for (Eigen::Index c = 0; c < 3; ++c) layer.weights(r, c) = 0.3 * rng.gaussian();
    Eigen::MatrixXd batch(5, 4);
    for (Eigen::Index r = 0; r < 5; ++r)
        for (Eigen::Index c = 0; c < 4; ++c) batch(r, c) = rng.bernoulli(0.5) ? 1.0 : 0.0;

    Rng chain_a(77), chain_b(77), chain_c(78);
    const LayerGradient a = rbm_cd_gradient(layer, batch, 1, chain_a);
    const LayerGradient b = rbm_cd_gradient(layer, batch, 1, chain_b);
    CHECK(a.weights == b.weights);
    CHECK(a.visible_bias == b.visible_bias);
    CHECK(a.hidden_bias == b.hidden_bias);
    const LayerGradient c = rbm_cd_gradient(layer, batch, 1, chain_c);
    CHECK(a.weights != c.weights);

    GrbmLayer g = make_grbm(3, 2);
    Eigen::MatrixXd gx = Eigen::MatrixXd::Random(6, 3);
    Rng ga(9), gb(9);
    const LayerGradient g1 = grbm_cd_gradient(g, gx, 2, ga);
    const LayerGradient g2 = grbm_cd_gradient(g, gx, 2, gb);
    CHECK(g1.weights == g2.weights);
}

TEST_CASE("total gradient decomposes into independently recomputed blocks") {
    Architecture arch;
    arch.input_dim = 3;
    arch.hidden = {4, 3, 2}; // grbm plus two stacked binary layers
    arch.classes = 4;
    DbnModel model = init_model(arch, 31);
    REQUIRE(model.rbms.size() == 2);

    Eigen::MatrixXd batch = Eigen::MatrixXd::Random(5, 3);
    std::vector<ClassLabel> labels = {kNormal, kDos, kBrutePass, kTxFlood, kNormal};
    const std::uint64_t seed = 1234;
    const GradientBundle bundle = total_gradient(model, batch, labels, 1, seed);
    CHECK(bundle.batch_size == 5);

    // block 0: GRBM on the raw batch
    Rng grbm_rng(gradient_block_seed(seed, 0));
    const LayerGradient grbm_ref = grbm_cd_gradient(model.grbm, batch, 1, grbm_rng);
    CHECK(bundle.grbm.weights == grbm_ref.weights);
    CHECK(bundle.grbm.visible_bias == grbm_ref.visible_bias);
    CHECK(bundle.grbm.hidden_bias == grbm_ref.hidden_bias);

    // block 1: first RBM on the mean-field output of the GRBM
    const Eigen::MatrixXd h1 = grbm_hidden_conditional(model.grbm, batch);
    Rng rbm_rng(gradient_block_seed(seed, 1));
    const LayerGradient rbm_ref = rbm_cd_gradient(model.rbms[0], h1, 1, rbm_rng);
    CHECK(bundle.rbms[0].weights == rbm_ref.weights);

    // block 2: second RBM on the stacked conditionals
    const Eigen::MatrixXd h2 = rbm_hidden_conditional(model.rbms[0], h1);
    Rng rbm2_rng(gradient_block_seed(seed, 2));
    const LayerGradient rbm2_ref = rbm_cd_gradient(model.rbms[1], h2, 1, rbm2_rng);
    CHECK(bundle.rbms[1].weights == rbm2_ref.weights);

    // head block on the forward outputs
    const HeadGradient head_ref = head_gradient(model.head, forward(model, batch), labels);
    CHECK(bundle.head.weights == head_ref.weights);
    CHECK(bundle.head.bias == head_ref.bias);
}

TEST_CASE("total gradient with a zero-rbm architecture") {
    Architecture arch;
    arch.input_dim = 3;
    arch.hidden = {4};
    arch.classes = 4;
    DbnModel model = init_model(arch, 8);
    CHECK(model.rbms.empty());
    Eigen::MatrixXd batch = Eigen::MatrixXd::Random(2, 3);
    const GradientBundle bundle = total_gradient(model, batch, {kNormal, kDos}, 1, 99);
    CHECK(bundle.rbms.empty());
    CHECK(bundle.grbm.weights.rows() == 3);
    CHECK(bundle.head.weights.rows() == 4);
}

TEST_CASE("apply_update is linear gradient ascent that leaves sigma alone") {
    Architecture arch;
    arch.input_dim = 2;
    arch.hidden = {2};
    arch.classes = 2;
    DbnModel model = init_model(arch, 3);
    const DbnModel before = model;

    GradientBundle zero = total_gradient(model, Eigen::MatrixXd::Zero(1, 2), {kNormal}, 1, 0);
    zero.grbm.weights.setZero();
    zero.grbm.visible_bias.setZero();
    zero.grbm.hidden_bias.setZero();
    zero.head.weights.setZero();
    zero.head.bias.setZero();
    apply_update(model, zero, 0.1);
    CHECK(model.grbm.weights == before.grbm.weights);
    CHECK(model.head.weights == before.head.weights);

    GradientBundle two = zero;
    two.grbm.weights.setConstant(2.0);
    DbnModel scalar = before;
    scalar.grbm.weights.setConstant(1.0);
    apply_update(scalar, two, 0.1);
    CHECK(scalar.grbm.weights(0, 0) == doctest::Approx(1.2).epsilon(1e-15));
    CHECK(scalar.grbm.sigma == before.grbm.sigma);

    // apply(g, eps) twice == apply(g, 2 eps) once
    DbnModel twice = before, once = before;
    apply_update(twice, two, 0.1);
    apply_update(twice, two, 0.1);
    apply_update(once, two, 0.2);
    CHECK((twice.grbm.weights - once.grbm.weights).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("flatten/unflatten round-trips models and gradients") {
    Architecture arch;
    arch.input_dim = 3;
    arch.hidden = {4, 2};
    arch.classes = 4;
    const DbnModel model = init_model(arch, 17);

    REQUIRE(model.rbms.size() == 1);
    const std::vector<double> flat = flatten(model);
    CHECK(flat.size() == arch.param_count());
    const DbnModel back = unflatten_model(flat, arch);
    CHECK(flatten(back) == flat);
    CHECK(back.grbm.weights == model.grbm.weights);
    CHECK(back.rbms[0].hidden_bias == model.rbms[0].hidden_bias);
    CHECK(back.head.bias == model.head.bias);

    const GradientBundle bundle =
        total_gradient(model, Eigen::MatrixXd::Random(3, 3), {kNormal, kDos, kTxFlood}, 1, 4);
    const std::vector<double> gflat = flatten(bundle);
    CHECK(gflat.size() == arch.param_count());
    const GradientBundle gback = unflatten_gradient(gflat, arch);
    CHECK(flatten(gback) == gflat);

    std::vector<double> wrong(flat.size() + 1, 0.0);
    CHECK_THROWS_AS(unflatten_model(wrong, arch), ConfigError);
    CHECK_THROWS_AS(unflatten_gradient(wrong, arch), ConfigError);
}

TEST_CASE("init_model is seed-deterministic with chained dimensions") {
    Architecture arch;
    arch.input_dim = 10;
    arch.hidden = {16, 8};
    arch.classes = 4;
    const DbnModel a = init_model(arch, 42);
    const DbnModel b = init_model(arch, 42);
    CHECK(flatten(a) == flatten(b));
    const DbnModel c = init_model(arch, 43);
    CHECK(flatten(a) != flatten(c));

    CHECK(a.grbm.weights.rows() == 10);
    CHECK(a.grbm.weights.cols() == 16);
    REQUIRE(a.rbms.size() == 1);
    CHECK(a.rbms[0].weights.rows() == 16);
    CHECK(a.rbms[0].weights.cols() == 8);
    CHECK(a.head.weights.rows() == 8);
    CHECK(a.head.weights.cols() == 4);
    CHECK(a.grbm.sigma == Eigen::VectorXd::Ones(10));
    CHECK(a.grbm.visible_bias.isZero());
    CHECK(a.head.bias.isZero());
    CHECK_NOTHROW(a.validate());

    const DbnModel zero_seed = init_model(arch, 0); // zero seed is an ordinary seed
    CHECK(flatten(zero_seed) == flatten(init_model(arch, 0)));
}
