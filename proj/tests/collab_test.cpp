#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "bnat/collab.hpp"
#include "bnat/dataset.hpp"
#include "bnat/dbn.hpp"
#include "bnat/eval.hpp"

using namespace bnat;
namespace fs = std::filesystem;

namespace {

CollabConfig small_config(std::size_t nodes, std::size_t iterations = 10) {
    CollabConfig cfg;
    cfg.nodes = nodes;
    cfg.train.arch.input_dim = 4;
    cfg.train.arch.hidden = {5, 3};
    cfg.train.arch.classes = 4;
    cfg.train.batch_size = 16;
    cfg.train.iterations = iterations;
    cfg.train.seed = 2024;
    return cfg;
}

std::vector<Dataset> small_data(std::size_t nodes, std::uint64_t seed = 6) {
    SynthConfig sc;
    sc.nodes = nodes;
    sc.per_class_counts = {{30, 10, 10, 10}};
    sc.feature_dim = 4;
    sc.seed = seed;
    return generate_synthetic(sc);
}

GradientBundle constant_bundle(const Architecture& arch, double value) {
    const DbnModel model = init_model(arch, 0);
    GradientBundle g = total_gradient(model, Eigen::MatrixXd::Zero(1, static_cast<Eigen::Index>(arch.input_dim)),
                                      {kNormal}, 1, 0);
    g.grbm.weights.setConstant(value);
    g.grbm.visible_bias.setConstant(value);
    g.grbm.hidden_bias.setConstant(value);
    for (auto& r : g.rbms) {
        r.weights.setConstant(value);
        r.visible_bias.setConstant(value);
        r.hidden_bias.setConstant(value);
    }
    g.head.weights.setConstant(value);
    g.head.bias.setConstant(value);
    g.batch_size = 1;
    return g;
}

} // namespace

TEST_CASE("averaging identical bundles reproduces them bitwise") {
    Architecture arch;
    arch.input_dim = 3;
    arch.hidden = {4};
    arch.classes = 4;
    const DbnModel model = init_model(arch, 11);
    const GradientBundle g = total_gradient(model, Eigen::MatrixXd::Random(4, 3),
                                            {kNormal, kDos, kBrutePass, kTxFlood}, 1, 5);
    const GradientBundle avg = average_gradients({g, g, g}, 3);
    CHECK(flatten(avg) == flatten(g));
    CHECK(avg.batch_size == 12);
}

TEST_CASE("averaging takes the elementwise mean, order-independently") {
    Architecture arch;
    arch.input_dim = 2;
    arch.hidden = {2};
    arch.classes = 2;
    const GradientBundle one = constant_bundle(arch, 1.0);
    GradientBundle three = constant_bundle(arch, 3.0);
    three.grbm.weights(0, 0) = -1.0;

    const GradientBundle ab = average_gradients({one, three}, 2);
    CHECK(ab.grbm.weights(0, 1) == 2.0);
    CHECK(ab.grbm.weights(0, 0) == 0.0);
    CHECK(ab.head.bias(0) == 2.0);

    const GradientBundle ba = average_gradients({three, one}, 2);
    CHECK(flatten(ab) == flatten(ba));
}

TEST_CASE("averaging validates count and shapes") {
    Architecture arch;
    arch.input_dim = 2;
    arch.hidden = {2};
    arch.classes = 2;
    const GradientBundle g = constant_bundle(arch, 1.0);
    CHECK_THROWS_AS(average_gradients({g, g}, 3), ProtocolError);
    CHECK_THROWS_AS(average_gradients({}, 0), ProtocolError);

    Architecture other = arch;
    other.hidden = {3};
    const GradientBundle mismatched = constant_bundle(other, 1.0);
    CHECK_THROWS_AS(average_gradients({g, mismatched}, 2), ProtocolError);
}

TEST_CASE("canonical prep erases source row order") {
    const Dataset d = small_data(1)[0];
    std::vector<std::size_t> reversed(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) reversed[i] = d.size() - 1 - i;
    const Dataset permuted = d.select(reversed);

    const Dataset a = canonical_prep(d, 9);
    const Dataset b = canonical_prep(permuted, 9);
    CHECK(a.features() == b.features());
    CHECK(a.labels() == b.labels());

    const Dataset c = canonical_prep(d, 10);
    CHECK_FALSE(a.features() == c.features()); // different seed, different shuffle
}

TEST_CASE("node seeds derive from the training seed unless overridden") {
    CollabConfig cfg = small_config(3);
    const auto s0 = cfg.seed_for(0);
    const auto s1 = cfg.seed_for(1);
    CHECK(s0 != s1);
    CHECK(s0 != cfg.train.seed);

    cfg.node_seeds = {111, 111, 111};
    CHECK(cfg.seed_for(0) == 111);
    CHECK(cfg.seed_for(2) == 111);

    cfg.node_seeds = {1, 2};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("a single-node round is one local gradient step") {
    CollabConfig cfg = small_config(1);
    const auto data = small_data(1);
    std::vector<NodeState> nodes = prepare_nodes(data, cfg);
    std::vector<NodeState> clone = prepare_nodes(data, cfg);

    const RoundRecord rec = run_round(nodes, {nullptr}, cfg, 1);
    const double loss = participant_step(clone[0], nullptr, cfg, 1);
    CHECK(rec.iteration == 1);
    REQUIRE(rec.loss.size() == 1);
    CHECK(rec.loss[0] == loss);
    CHECK(flatten(nodes[0].model) == flatten(clone[0].model));
}

TEST_CASE("zero iterations return the initial model") {
    CollabConfig cfg = small_config(1, 0);
    cfg.train.iterations = 0;
    const auto data = small_data(1);
    const DbnModel initial = init_model(cfg.train.arch, cfg.train.seed);
    const SchemeResult r = train_llm(data, cfg);
    CHECK(flatten(r.models[0]) == flatten(initial));
    CHECK(r.history.empty());
}

TEST_CASE("llm nodes are isolated from each other's data") {
    CollabConfig cfg = small_config(2, 5);
    auto data = small_data(2);
    const SchemeResult a = train_llm(data, cfg);
    // different data on node 2 must not affect node 1
    auto altered = data;
    altered[1] = small_data(2, 999)[1];
    const SchemeResult b = train_llm(altered, cfg);
    CHECK(flatten(a.models[0]) == flatten(b.models[0]));
    CHECK(flatten(a.models[1]) != flatten(b.models[1]));
}

TEST_CASE("clm pools the data and is insensitive to node order") {
    CollabConfig cfg = small_config(2, 5);
    auto data = small_data(2);
    const SchemeResult forward_order = train_clm(data, cfg);
    std::swap(data[0], data[1]);
    const SchemeResult reversed = train_clm(data, cfg);
    CHECK(flatten(forward_order.models[0]) == flatten(reversed.models[0]));
    CHECK(forward_order.scheme == "clm");
    CHECK(forward_order.node_ids == std::vector<std::uint16_t>{1});
}

TEST_CASE("pclm trains all nodes onto one shared model") {
    CollabConfig cfg = small_config(3, 5);
    const auto data = small_data(3);
    const SchemeResult r = train_pclm(data, cfg);
    REQUIRE(r.models.size() == 3);
    CHECK(flatten(r.models[0]) == flatten(r.models[1]));
    CHECK(flatten(r.models[0]) == flatten(r.models[2]));
    CHECK(r.history.size() == 5);
    for (std::size_t i = 0; i < r.history.size(); ++i) {
        CHECK(r.history[i].iteration == i + 1);
        CHECK(r.history[i].loss.size() == 3);
    }
}

TEST_CASE("training rejects mismatched configuration") {
    CollabConfig cfg = small_config(2, 3);
    const auto data = small_data(3);
    CHECK_THROWS_AS(train_pclm(data, cfg), ConfigError);

    CollabConfig plateau = small_config(1, 3);
    plateau.plateau_stop = true;
    CHECK_THROWS_AS(train_pclm(small_data(1), plateau), ConfigError);

    CollabConfig wrongdim = small_config(1, 3);
    wrongdim.train.arch.input_dim = 7;
    CHECK_THROWS_AS(train_llm(small_data(1), wrongdim), ConfigError);
}

TEST_CASE("evaluation cadence lands on the configured iterations") {
    CollabConfig cfg = small_config(1, 6);
    cfg.eval_every = 2;
    const auto data = small_data(1);
    const auto eval = small_data(1, 77);
    const SchemeResult r = train_llm(data, cfg, &eval);
    REQUIRE(r.history.size() == 6);
    for (std::size_t i = 1; i <= 6; ++i) {
        const RoundRecord& rec = r.history[i - 1];
        const bool should_eval = i % 2 == 0 || i == 6;
        if (should_eval) {
            REQUIRE(rec.accuracy.size() == 1);
            CHECK(std::isfinite(rec.accuracy[0]));
            CHECK(rec.accuracy[0] >= 0.0);
            CHECK(rec.accuracy[0] <= 1.0);
        } else {
            CHECK(rec.accuracy.empty());
        }
    }
}

TEST_CASE("plateau stop ends no-transport training early") {
    CollabConfig cfg = small_config(1, 200);
    cfg.eval_every = 1;
    cfg.plateau_stop = true;
    cfg.plateau_window = 3;
    cfg.plateau_delta = 2.0; // any change counts as a plateau
    const auto data = small_data(1);
    const auto eval = small_data(1, 77);
    const SchemeResult r = train_llm(data, cfg, &eval);
    CHECK(r.history.size() == 4); // stops at the first eligible comparison
}

TEST_CASE("missing class shows up as zero recall for llm") {
    SynthConfig sc;
    sc.nodes = 1;
    sc.per_class_counts = {{40, 20, 20, 0}}; // no transaction-flood traffic
    sc.feature_dim = 4;
    sc.seed = 5;
    const auto data = generate_synthetic(sc);

    CollabConfig cfg = small_config(1, 60);
    cfg.train.batch_size = 32;
    const SchemeResult r = train_llm(data, cfg);

    SynthConfig tc = sc;
    tc.per_class_counts = {{20, 10, 10, 10}};
    tc.seed = 99;
    const Dataset test = generate_synthetic(tc)[0];
    const Dataset test_std = apply_scaler(test, r.scalers[0]);
    const ConfusionMatrix cm = evaluate_model(r.models[0], test_std);
    const Metrics m = compute_metrics(cm);
    CHECK(m.per_class_recall[3] == 0.0);
}

TEST_CASE("history csv has the documented shape") {
    CollabConfig cfg = small_config(2, 3);
    cfg.eval_every = 3;
    const auto data = small_data(2);
    const auto eval = small_data(2, 31);
    const SchemeResult r = train_pclm(data, cfg, &eval);

    const fs::path p = fs::temp_directory_path() / "bnat_test_history.csv";
    write_history_csv(p.string(), r);
    std::ifstream in(p);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "iteration,scheme,node,loss,accuracy");
    std::size_t rows = 0;
    std::size_t with_acc = 0;
    while (std::getline(in, line)) {
        ++rows;
        std::stringstream ss(line);
        std::string iter, scheme, node, loss, acc;
        std::getline(ss, iter, ',');
        std::getline(ss, scheme, ',');
        std::getline(ss, node, ',');
        std::getline(ss, loss, ',');
        std::getline(ss, acc, ',');
        CHECK(scheme == "pclm");
        CHECK_FALSE(loss.empty());
        if (!acc.empty()) ++with_acc;
    }
    CHECK(rows == 6);     // 3 iterations x 2 nodes
    CHECK(with_acc == 2); // final iteration only
    fs::remove(p);
}

TEST_CASE("pclm rejects peers that disagree on gradient shape") {
    // participant against a hand-driven mesh endpoint sending a short gradient
    CollabConfig cfg = small_config(2, 1);
    auto mesh = make_inproc_mesh({1, 2});
    const auto data = small_data(2);

    std::vector<NodeState> nodes = prepare_nodes(data, cfg);
    RoundMessage bogus;
    bogus.round = 1;
    bogus.node_id = 2;
    bogus.gradient = {1.0, 2.0, 3.0};
    mesh[1]->broadcast(bogus);
    CHECK_THROWS_AS(participant_step(nodes[0], mesh[0].get(), cfg, 1), ProtocolError);
}
