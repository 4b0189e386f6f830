#include "bnat/dataset.hpp"
#include "bnat/rng.hpp"

#include <cmath>
#include <string>

namespace bnat {

void SynthConfig::validate() const {
    if (nodes < 1) throw ConfigError("synth: nodes must be >= 1");
    if (classes < 2) throw ConfigError("synth: at least 2 classes required");
    if (feature_dim < 1) throw ConfigError("synth: feature_dim must be >= 1");
    if (!(overlap >= 0.0 && overlap <= 1.0)) {
        throw ConfigError("synth: overlap must be in [0,1]");
    }
    if (node_shift < 0.0) throw ConfigError("synth: node_shift must be >= 0");
    if (per_class_counts.empty() ||
        (per_class_counts.size() != 1 && per_class_counts.size() != nodes)) {
        throw ConfigError("synth: per_class_counts needs 1 row or one row per node");
    }
    for (const auto& row : per_class_counts) {
        if (row.size() != classes) {
            throw ConfigError("synth: counts row has " + std::to_string(row.size()) +
                              " entries, expected " + std::to_string(classes));
        }
    }
    if (class_means) {
        if (static_cast<std::size_t>(class_means->rows()) != classes ||
            static_cast<std::size_t>(class_means->cols()) != feature_dim) {
            throw ConfigError("synth: class_means must be classes x feature_dim");
        }
    }
    if (class_stddev) {
        if (static_cast<std::size_t>(class_stddev->size()) != classes) {
            throw ConfigError("synth: class_stddev needs one entry per class");
        }
        if ((class_stddev->array() <= 0.0).any()) {
            throw ConfigError("synth: class covariance must be positive definite");
        }
    }
}

const std::vector<std::size_t>& SynthConfig::counts_for_node(std::size_t l) const {
    return per_class_counts.size() == 1 ? per_class_counts.front()
                                        : per_class_counts[l - 1];
}

namespace {

// Cluster layout: normal at the origin, brute-pass and transaction-flood at
// radius s forming an equilateral triangle with it, DoS far out on its own
// axis. s shrinks to 0 as overlap goes to 1; the DoS radius is fixed.
Eigen::MatrixXd default_means(std::size_t classes, std::size_t d, double overlap) {
    const double s = 4.0 * (1.0 - overlap);
    const double dos_radius = 6.0;
    Eigen::MatrixXd means = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(classes),
                                                  static_cast<Eigen::Index>(d));
    auto axis = [&](std::size_t i) { return static_cast<Eigen::Index>(i % d); };
    for (std::size_t u = 1; u < classes; ++u) {
        const Eigen::Index row = static_cast<Eigen::Index>(u);
        if (u == 1) {
            means(row, axis(0)) = s;
        } else if (u == 2) {
            means(row, axis(2)) = dos_radius;
        } else if (u == 3) {
            means(row, axis(0)) += 0.5 * s;
            means(row, axis(1)) += std::sqrt(3.0) / 2.0 * s;
        } else {
            means(row, axis(u - 1)) = s;
        }
    }
    return means;
}

Eigen::VectorXd node_drift(const SynthConfig& cfg, std::size_t l) {
    Eigen::VectorXd drift = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cfg.feature_dim));
    if (cfg.node_shift <= 0.0) return drift;
    Rng rng(mix_seed(cfg.drift_seed.value_or(cfg.seed), 0x73686674ULL /* "shft" */, l));
    for (Eigen::Index j = 0; j < drift.size(); ++j) drift[j] = rng.gaussian();
    const double norm = drift.norm();
    if (norm > 0.0) drift *= cfg.node_shift / norm;
    return drift;
}

} // namespace

std::vector<Dataset> generate_synthetic(const SynthConfig& config) {
    config.validate();
    const std::size_t d = config.feature_dim;
    const Eigen::MatrixXd means =
        config.class_means ? *config.class_means
                           : default_means(config.classes, d, config.overlap);

    std::vector<Dataset> out;
    out.reserve(config.nodes);
    for (std::size_t l = 1; l <= config.nodes; ++l) {
        const std::vector<std::size_t>& counts = config.counts_for_node(l);
        std::size_t total = 0;
        for (std::size_t c : counts) total += c;

        const Eigen::VectorXd drift = node_drift(config, l);
        Rng rng(mix_seed(config.seed, 0x73796e74ULL /* "synt" */, l));

        Eigen::MatrixXd features(static_cast<Eigen::Index>(total),
                                 static_cast<Eigen::Index>(d));
        std::vector<ClassLabel> labels;
        labels.reserve(total);
        Eigen::Index row = 0;
        for (std::size_t u = 0; u < config.classes; ++u) {
            const double sigma = config.class_stddev ? (*config.class_stddev)[static_cast<Eigen::Index>(u)] : 1.0;
            for (std::size_t i = 0; i < counts[u]; ++i, ++row) {
                for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(d); ++j) {
                    features(row, j) = drift[j] + means(static_cast<Eigen::Index>(u), j) +
                                       sigma * rng.gaussian();
                }
                labels.push_back(ClassLabel::from_index(u));
            }
        }

        // Interleave classes so file order carries no signal.
        std::vector<std::size_t> perm(total);
        for (std::size_t i = 0; i < total; ++i) perm[i] = i;
        rng.shuffle(perm);
        Eigen::MatrixXd shuffled(features.rows(), features.cols());
        std::vector<ClassLabel> shuffled_labels(total, ClassLabel{});
        for (std::size_t i = 0; i < total; ++i) {
            shuffled.row(static_cast<Eigen::Index>(i)) =
                features.row(static_cast<Eigen::Index>(perm[i]));
            shuffled_labels[i] = labels[perm[i]];
        }

        out.emplace_back(std::move(shuffled), std::move(shuffled_labels),
                         "synthetic seed " + std::to_string(config.seed) + " node " +
                             std::to_string(l));
    }
    return out;
}

} // namespace bnat
