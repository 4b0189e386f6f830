#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "bnat/errors.hpp"

namespace bnat {

/// Number of traffic classes in the default taxonomy.
inline constexpr std::size_t kDefaultClassCount = 4;

/// Class label of a traffic record. On disk and in reports labels are
/// 1-based; index() gives the 0-based class index used by the math.
struct ClassLabel {
    std::uint16_t value = 1;

    std::size_t index() const { return static_cast<std::size_t>(value) - 1; }
    static ClassLabel from_index(std::size_t u) {
        return ClassLabel{static_cast<std::uint16_t>(u + 1)};
    }

    bool operator==(const ClassLabel&) const = default;
};

// The four canonical classes: normal traffic plus the three attack types.
inline constexpr ClassLabel kNormal{1};
inline constexpr ClassLabel kBrutePass{2};
inline constexpr ClassLabel kDos{3};
inline constexpr ClassLabel kTxFlood{4};

const char* class_name(ClassLabel label);

/// One labeled feature record.
struct Sample {
    Eigen::VectorXd features;
    ClassLabel label;
};

/// An ordered collection of labeled feature vectors with uniform dimension.
/// Immutable after construction; safe to share read-only across threads.
class Dataset {
public:
    Dataset() = default;
    /// `features` is n x d, one row per sample; labels.size() must equal n.
    Dataset(Eigen::MatrixXd features, std::vector<ClassLabel> labels,
            std::string provenance);

    std::size_t size() const { return labels_.size(); }
    std::size_t dim() const { return static_cast<std::size_t>(features_.cols()); }
    bool empty() const { return labels_.empty(); }

    const Eigen::MatrixXd& features() const { return features_; }
    const std::vector<ClassLabel>& labels() const { return labels_; }
    ClassLabel label(std::size_t i) const { return labels_[i]; }
    Eigen::VectorXd row(std::size_t i) const { return features_.row(static_cast<Eigen::Index>(i)); }
    Sample sample(std::size_t i) const { return Sample{row(i), labels_[i]}; }
    const std::string& provenance() const { return provenance_; }

    /// Per-class sample counts under a `classes`-way taxonomy.
    std::vector<std::size_t> class_counts(std::size_t classes) const;

    /// Throws DataError if any label falls outside 1..classes.
    void validate_labels(std::size_t classes) const;

    /// New dataset containing rows `idx` in the given order.
    Dataset select(const std::vector<std::size_t>& idx) const;

private:
    Eigen::MatrixXd features_;
    std::vector<ClassLabel> labels_;
    std::string provenance_;
};

/// Concatenates datasets in the given order. Dimensions must agree.
Dataset pool_datasets(const std::vector<Dataset>& parts);

/// Configuration of the synthetic traffic generator. Samples are drawn from
/// per-class Gaussian clusters; `overlap` in [0,1] moves the benign-looking
/// clusters (normal / brute-pass / transaction-flood) together while the DoS
/// cluster stays well separated.
struct SynthConfig {
    std::size_t nodes = 3;
    /// Per-node, per-class sample counts. One row is replicated to all
    /// nodes; otherwise exactly `nodes` rows are required.
    std::vector<std::vector<std::size_t>> per_class_counts = {{3000, 300, 300, 300}};
    std::size_t feature_dim = 10;
    std::size_t classes = kDefaultClassCount;
    double overlap = 0.3;
    /// Magnitude of the per-node drift applied to every cluster mean, so
    /// that different nodes observe slightly shifted traffic distributions.
    double node_shift = 0.3;
    std::uint64_t seed = 0;
    /// When set, per-node drift offsets derive from this seed instead of
    /// `seed`, so fresh traffic can be drawn for the same deployment: two
    /// configs sharing a drift_seed place every node's clusters identically
    /// while `seed` varies the sampled rows.
    std::optional<std::uint64_t> drift_seed;
    /// Optional explicit geometry overriding the overlap-derived layout.
    std::optional<Eigen::MatrixXd> class_means;   // classes x feature_dim
    std::optional<Eigen::VectorXd> class_stddev;  // per-class spherical stddev

    void validate() const;
    /// Counts row for node l (1-based).
    const std::vector<std::size_t>& counts_for_node(std::size_t l) const;
};

/// Generates one dataset per node. Deterministic for a fixed config.
std::vector<Dataset> generate_synthetic(const SynthConfig& config);

/// Reads the `f0,...,f{d-1},label` CSV schema. Labels must be integers in
/// 1..classes. Errors name the offending 1-based line.
Dataset load_csv(const std::filesystem::path& path,
                 std::optional<std::size_t> expected_dim = std::nullopt,
                 std::size_t classes = kDefaultClassCount);

void save_csv(const Dataset& dataset, const std::filesystem::path& path);

/// Feature records whose label column may be absent (streaming input).
struct FeatureRecords {
    Eigen::MatrixXd features;
    std::optional<std::vector<ClassLabel>> labels;

    std::size_t size() const { return static_cast<std::size_t>(features.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }
};

/// Like load_csv but tolerates a missing `label` column.
FeatureRecords load_feature_csv(const std::filesystem::path& path,
                                std::optional<std::size_t> expected_dim = std::nullopt,
                                std::size_t classes = kDefaultClassCount);

/// Per-feature affine normalization parameters fitted on a training set.
struct ScalerParams {
    Eigen::VectorXd means;
    Eigen::VectorXd stds; // strictly positive; constant features get 1
};

/// Population mean/std per feature. Constant features get std = 1 so the
/// transform stays defined.
ScalerParams fit_scaler(const Dataset& train);

Dataset apply_scaler(const Dataset& dataset, const ScalerParams& params);
Eigen::MatrixXd apply_scaler(const Eigen::MatrixXd& features, const ScalerParams& params);

struct StandardizeResult {
    ScalerParams params;
    Dataset train;
    std::vector<Dataset> others;
};

/// Fits on `train` only, then applies to train and all `others`.
StandardizeResult standardize(const Dataset& train, const std::vector<Dataset>& others);

/// Stratified split into (train, test). Per class, the test side gets
/// round(test_fraction * count) samples. A class present with fewer than
/// two samples cannot be stratified and raises DataError; absent classes
/// are skipped.
std::pair<Dataset, Dataset> split(const Dataset& dataset, double test_fraction,
                                  std::uint64_t seed,
                                  std::size_t classes = kDefaultClassCount);

struct PcaResult {
    Eigen::MatrixXd projections;        // n x k
    Eigen::VectorXd explained_variance; // k, non-increasing
    Eigen::MatrixXd components;         // d x k, orthonormal columns
    Eigen::VectorXd mean;               // d, of the input data
};

/// Top-k principal components of the centered data (population covariance).
/// Component signs are canonicalized: the entry of largest magnitude is
/// made positive.
PcaResult pca_project(const Dataset& dataset, std::size_t k);

/// Writes `pc0,...,pc{k-1},label` rows for plotting.
void save_pca_csv(const PcaResult& pca, const Dataset& dataset,
                  const std::filesystem::path& path);

} // namespace bnat
