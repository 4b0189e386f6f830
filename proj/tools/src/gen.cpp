#include <CLI11.hpp>

#include "bnat/dataset.hpp"
#include "bnat/errors.hpp"
#include "bnat/rng.hpp"
#include "cli.hpp"
#include "util.hpp"

namespace bnat::cli {

namespace fs = std::filesystem;

int run_gen(const std::vector<std::string>& args) {
    CLI::App app{"generate synthetic per-node traffic datasets", "bnat gen"};
    std::string out_dir;
    std::size_t nodes = 3;
    std::string per_class = "3000,300,300,300";
    std::vector<std::string> node_per_class;
    std::size_t features = 10;
    double overlap = 0.3;
    double node_shift = 0.3;
    std::uint64_t seed = 42;
    double split_fraction = 0.0;
    std::uint64_t split_seed = 0;
    bool split_seed_set = false;
    std::size_t pca_k = 0;

    app.add_option("--out", out_dir, "output directory")->required();
    app.add_option("--nodes", nodes, "number of mining nodes")->capture_default_str();
    app.add_option("--per-class", per_class,
                   "per-class sample counts shared by every node, comma separated")
        ->capture_default_str();
    app.add_option("--node-per-class", node_per_class,
                   "per-class counts for one node; repeat the flag once per node "
                   "to give each node its own mix (overrides --per-class)");
    app.add_option("--features", features, "feature dimension")->capture_default_str();
    app.add_option("--overlap", overlap, "class overlap in [0,1]; higher is harder")
        ->capture_default_str();
    app.add_option("--node-shift", node_shift, "per-node distribution drift magnitude")
        ->capture_default_str();
    app.add_option("--seed", seed, "generator seed")->capture_default_str();
    app.add_option("--split", split_fraction,
                   "held-out test fraction in (0,1); writes node{l}.train.csv and "
                   "node{l}.test.csv instead of node{l}.csv");
    app.add_option("--split-seed", split_seed, "seed for the train/test split (defaults to --seed)")
        ->each([&](const std::string&) { split_seed_set = true; });
    app.add_option("--pca", pca_k, "also write pca.csv with the pooled data's top-k projection");

    try {
        app.parse(cli11_args(args));
    } catch (const CLI::ParseError& e) {
        // help exits clean; every other parse problem is the documented usage code
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    if (!split_seed_set) split_seed = seed;

    SynthConfig config;
    config.nodes = nodes;
    config.feature_dim = features;
    config.overlap = overlap;
    config.node_shift = node_shift;
    config.seed = seed;
    if (node_per_class.empty()) {
        config.per_class_counts = {parse_counts(per_class, "--per-class")};
    } else {
        for (const std::string& row : node_per_class)
            config.per_class_counts.push_back(parse_counts(row, "--node-per-class"));
    }

    const std::vector<Dataset> data = generate_synthetic(config);
    fs::create_directories(out_dir);

    ManifestSink sink("gen", args);
    sink.config() = {{"nodes", nodes},
                     {"per_class_counts", config.per_class_counts},
                     {"features", features},
                     {"overlap", overlap},
                     {"node_shift", node_shift},
                     {"seed", seed}};

    for (std::size_t l = 0; l < data.size(); ++l) {
        const std::string stem = "node" + std::to_string(l + 1);
        if (split_fraction > 0.0) {
            const auto [train, test] =
                split(data[l], split_fraction, mix_seed(split_seed, 0x73706c74 /*"splt"*/, l));
            const fs::path train_path = fs::path(out_dir) / (stem + ".train.csv");
            const fs::path test_path = fs::path(out_dir) / (stem + ".test.csv");
            save_csv(train, train_path);
            save_csv(test, test_path);
            sink.add_output(train_path);
            sink.add_output(test_path);
            log_info(stem + ": " + std::to_string(train.size()) + " train, " +
                     std::to_string(test.size()) + " test rows");
        } else {
            const fs::path path = fs::path(out_dir) / (stem + ".csv");
            save_csv(data[l], path);
            sink.add_output(path);
            log_info(stem + ": " + std::to_string(data[l].size()) + " rows");
        }
    }
    if (split_fraction > 0.0) {
        sink.config()["split"] = split_fraction;
        sink.config()["split_seed"] = split_seed;
    }

    if (pca_k > 0) {
        const Dataset pooled = pool_datasets(data);
        const PcaResult pca = pca_project(pooled, pca_k);
        const fs::path pca_path = fs::path(out_dir) / "pca.csv";
        save_pca_csv(pca, pooled, pca_path);
        sink.add_output(pca_path);
        sink.config()["pca_components"] = pca_k;
        std::vector<double> variance(pca.explained_variance.data(),
                                     pca.explained_variance.data() + pca.explained_variance.size());
        sink.config()["pca_explained_variance"] = variance;
        log_info("pca.csv: " + std::to_string(pooled.size()) + " projected rows");
    }

    sink.write(out_dir);
    return 0;
}

} // namespace bnat::cli
