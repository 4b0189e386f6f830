#include "bnat/dataset.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "bnat/rng.hpp"

namespace bnat {

const char* class_name(ClassLabel label) {
    switch (label.value) {
    case 1: return "normal";
    case 2: return "brute-pass";
    case 3: return "dos";
    case 4: return "tx-flood";
    default: return "class";
    }
}

Dataset::Dataset(Eigen::MatrixXd features, std::vector<ClassLabel> labels,
                 std::string provenance)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      provenance_(std::move(provenance)) {
    if (static_cast<std::size_t>(features_.rows()) != labels_.size()) {
        throw DataError("dataset: feature rows (" + std::to_string(features_.rows()) +
                        ") and labels (" + std::to_string(labels_.size()) + ") disagree");
    }
    if (!features_.allFinite()) {
        throw DataError("dataset: non-finite feature value");
    }
}

std::vector<std::size_t> Dataset::class_counts(std::size_t classes) const {
    std::vector<std::size_t> counts(classes, 0);
    for (const ClassLabel& l : labels_) {
        if (l.index() < classes) ++counts[l.index()];
    }
    return counts;
}

void Dataset::validate_labels(std::size_t classes) const {
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        const std::uint16_t v = labels_[i].value;
        if (v < 1 || static_cast<std::size_t>(v) > classes) {
            throw DataError("dataset: sample " + std::to_string(i) + " has label " +
                            std::to_string(v) + " outside 1.." + std::to_string(classes));
        }
    }
}

Dataset Dataset::select(const std::vector<std::size_t>& idx) const {
    Eigen::MatrixXd f(static_cast<Eigen::Index>(idx.size()), features_.cols());
    std::vector<ClassLabel> l;
    l.reserve(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        f.row(static_cast<Eigen::Index>(i)) = features_.row(static_cast<Eigen::Index>(idx[i]));
        l.push_back(labels_[idx[i]]);
    }
    return Dataset(std::move(f), std::move(l), provenance_);
}

Dataset pool_datasets(const std::vector<Dataset>& parts) {
    if (parts.empty()) throw DataError("pool: no datasets");
    const std::size_t d = parts.front().dim();
    std::size_t n = 0;
    for (const Dataset& p : parts) {
        if (p.dim() != d) {
            throw DataError("pool: feature dimension mismatch (" + std::to_string(p.dim()) +
                            " vs " + std::to_string(d) + ")");
        }
        n += p.size();
    }
    Eigen::MatrixXd f(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    std::vector<ClassLabel> labels;
    labels.reserve(n);
    Eigen::Index at = 0;
    for (const Dataset& p : parts) {
        f.middleRows(at, p.features().rows()) = p.features();
        at += p.features().rows();
        labels.insert(labels.end(), p.labels().begin(), p.labels().end());
    }
    return Dataset(std::move(f), std::move(labels), "pooled");
}

// ---------------------------------------------------------------------------
// CSV

namespace {

void format_double(char* buf, std::size_t cap, double v) {
    std::snprintf(buf, cap, "%.17g", v);
}

struct CsvHeader {
    std::size_t dim = 0;
    bool has_label = false;
};

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

CsvHeader parse_header(const std::string& file, const std::string& line, bool label_required) {
    const std::vector<std::string> cols = split_line(line);
    CsvHeader h;
    std::size_t nfeat = cols.size();
    if (!cols.empty() && cols.back() == "label") {
        h.has_label = true;
        --nfeat;
    } else if (label_required) {
        throw DataError(file + ":1: header must end with a 'label' column");
    }
    if (nfeat == 0) throw DataError(file + ":1: no feature columns");
    for (std::size_t i = 0; i < nfeat; ++i) {
        const std::string expect = "f" + std::to_string(i);
        if (cols[i] != expect) {
            throw DataError(file + ":1: expected column '" + expect + "', found '" +
                            cols[i] + "'");
        }
    }
    h.dim = nfeat;
    return h;
}

double parse_feature(const std::string& file, std::size_t lineno, const std::string& tok) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (tok.empty() || end != tok.c_str() + tok.size() || errno == ERANGE || !std::isfinite(v)) {
        throw DataError(file + ":" + std::to_string(lineno) + ": non-numeric feature '" +
                        tok + "'");
    }
    return v;
}

ClassLabel parse_label(const std::string& file, std::size_t lineno, const std::string& tok,
                       std::size_t classes) {
    errno = 0;
    char* end = nullptr;
    const long v = std::strtol(tok.c_str(), &end, 10);
    if (tok.empty() || end != tok.c_str() + tok.size() || errno == ERANGE) {
        throw DataError(file + ":" + std::to_string(lineno) + ": non-integer label '" +
                        tok + "'");
    }
    if (v < 1 || static_cast<std::size_t>(v) > classes) {
        throw DataError(file + ":" + std::to_string(lineno) + ": label " + std::to_string(v) +
                        " outside 1.." + std::to_string(classes));
    }
    return ClassLabel{static_cast<std::uint16_t>(v)};
}

FeatureRecords load_records(const std::filesystem::path& path,
                            std::optional<std::size_t> expected_dim, std::size_t classes,
                            bool label_required) {
    std::ifstream in(path);
    const std::string file = path.string();
    if (!in) throw DataError(file + ": cannot open");

    std::string line;
    if (!std::getline(in, line)) throw DataError(file + ": empty file");
    const CsvHeader header = parse_header(file, line, label_required);
    if (expected_dim && header.dim != *expected_dim) {
        throw DataError(file + ":1: expected " + std::to_string(*expected_dim) +
                        " features, header has " + std::to_string(header.dim));
    }

    std::vector<double> values;
    std::vector<ClassLabel> labels;
    std::size_t rows = 0;
    std::size_t lineno = 1;
    const std::size_t want = header.dim + (header.has_label ? 1 : 0);
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> cols = split_line(line);
        if (cols.size() != want) {
            throw DataError(file + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(want) + " columns, found " +
                            std::to_string(cols.size()));
        }
        for (std::size_t i = 0; i < header.dim; ++i) {
            values.push_back(parse_feature(file, lineno, cols[i]));
        }
        if (header.has_label) {
            labels.push_back(parse_label(file, lineno, cols.back(), classes));
        }
        ++rows;
    }

    Eigen::MatrixXd f(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(header.dim));
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < header.dim; ++j) {
            f(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                values[i * header.dim + j];
        }
    }
    FeatureRecords rec;
    rec.features = std::move(f);
    if (header.has_label) rec.labels = std::move(labels);
    return rec;
}

} // namespace

Dataset load_csv(const std::filesystem::path& path, std::optional<std::size_t> expected_dim,
                 std::size_t classes) {
    FeatureRecords rec = load_records(path, expected_dim, classes, /*label_required=*/true);
    return Dataset(std::move(rec.features), std::move(*rec.labels), path.string());
}

FeatureRecords load_feature_csv(const std::filesystem::path& path,
                                std::optional<std::size_t> expected_dim, std::size_t classes) {
    return load_records(path, expected_dim, classes, /*label_required=*/false);
}

void save_csv(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(path.string() + ": cannot write");
    const std::size_t d = dataset.dim();
    for (std::size_t j = 0; j < d; ++j) {
        out << 'f' << j << ',';
    }
    out << "label\n";
    char buf[64];
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            format_double(buf, sizeof(buf),
                          dataset.features()(static_cast<Eigen::Index>(i),
                                             static_cast<Eigen::Index>(j)));
            out << buf << ',';
        }
        out << dataset.label(i).value << '\n';
    }
    if (!out) throw DataError(path.string() + ": write failed");
}

// ---------------------------------------------------------------------------
// Standardization

ScalerParams fit_scaler(const Dataset& train) {
    if (train.empty()) throw DataError("standardize: empty training set");
    const Eigen::MatrixXd& x = train.features();
    const double n = static_cast<double>(x.rows());
    ScalerParams p;
    p.means = x.colwise().sum() / n;
    Eigen::MatrixXd centered = x.rowwise() - p.means.transpose();
    Eigen::VectorXd var = centered.array().square().colwise().sum() / n;
    p.stds = var.array().sqrt();
    for (Eigen::Index j = 0; j < p.stds.size(); ++j) {
        if (p.stds[j] <= 0.0) p.stds[j] = 1.0; // constant feature
    }
    return p;
}

Eigen::MatrixXd apply_scaler(const Eigen::MatrixXd& features, const ScalerParams& params) {
    if (features.cols() != params.means.size()) {
        throw DataError("standardize: dimension mismatch");
    }
    Eigen::MatrixXd out = features.rowwise() - params.means.transpose();
    out.array().rowwise() /= params.stds.transpose().array();
    return out;
}

Dataset apply_scaler(const Dataset& dataset, const ScalerParams& params) {
    return Dataset(apply_scaler(dataset.features(), params), dataset.labels(),
                   dataset.provenance());
}

StandardizeResult standardize(const Dataset& train, const std::vector<Dataset>& others) {
    StandardizeResult r;
    r.params = fit_scaler(train);
    r.train = apply_scaler(train, r.params);
    r.others.reserve(others.size());
    for (const Dataset& d : others) r.others.push_back(apply_scaler(d, r.params));
    return r;
}

// ---------------------------------------------------------------------------
// Split

std::pair<Dataset, Dataset> split(const Dataset& dataset, double test_fraction,
                                  std::uint64_t seed, std::size_t classes) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ConfigError("split: test fraction must be in (0,1)");
    }
    dataset.validate_labels(classes);

    std::vector<std::vector<std::size_t>> by_class(classes);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        by_class[dataset.label(i).index()].push_back(i);
    }

    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> test_idx;
    for (std::size_t u = 0; u < classes; ++u) {
        std::vector<std::size_t>& idx = by_class[u];
        if (idx.empty()) continue; // absent class: nothing to stratify
        if (idx.size() < 2) {
            throw DataError("split: class " + std::to_string(u + 1) + " has only " +
                            std::to_string(idx.size()) + " sample(s)");
        }
        Rng rng(mix_seed(seed, 0x73706c69ULL /* "spli" */, u));
        rng.shuffle(idx);
        const std::size_t n_test = static_cast<std::size_t>(
            std::llround(test_fraction * static_cast<double>(idx.size())));
        for (std::size_t i = 0; i < idx.size(); ++i) {
            (i < n_test ? test_idx : train_idx).push_back(idx[i]);
        }
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());
    return {dataset.select(train_idx), dataset.select(test_idx)};
}

// ---------------------------------------------------------------------------
// PCA

PcaResult pca_project(const Dataset& dataset, std::size_t k) {
    if (dataset.empty()) throw DataError("pca: empty dataset");
    const std::size_t d = dataset.dim();
    if (k == 0 || k > d) {
        throw ConfigError("pca: k must be in 1.." + std::to_string(d));
    }
    const Eigen::MatrixXd& x = dataset.features();
    const double n = static_cast<double>(x.rows());

    PcaResult r;
    r.mean = x.colwise().sum() / n;
    Eigen::MatrixXd centered = x.rowwise() - r.mean.transpose();
    Eigen::MatrixXd cov = (centered.adjoint() * centered) / n;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw NumericError("pca: eigensolver failed");

    // Eigen returns ascending eigenvalues; take the top k in descending order.
    r.components.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(k));
    r.explained_variance.resize(static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) {
        const Eigen::Index src = static_cast<Eigen::Index>(d - 1 - i);
        Eigen::VectorXd comp = solver.eigenvectors().col(src);
        // Deterministic sign: largest-magnitude entry positive.
        Eigen::Index at = 0;
        comp.cwiseAbs().maxCoeff(&at);
        if (comp[at] < 0.0) comp = -comp;
        r.components.col(static_cast<Eigen::Index>(i)) = comp;
        r.explained_variance[static_cast<Eigen::Index>(i)] =
            std::max(solver.eigenvalues()[src], 0.0);
    }
    r.projections = centered * r.components;
    return r;
}

void save_pca_csv(const PcaResult& pca, const Dataset& dataset,
                  const std::filesystem::path& path) {
    if (static_cast<std::size_t>(pca.projections.rows()) != dataset.size()) {
        throw DataError("pca export: projection rows and dataset size disagree");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(path.string() + ": cannot write");
    const Eigen::Index k = pca.projections.cols();
    for (Eigen::Index j = 0; j < k; ++j) out << "pc" << j << ',';
    out << "label\n";
    char buf[64];
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        for (Eigen::Index j = 0; j < k; ++j) {
            format_double(buf, sizeof(buf), pca.projections(static_cast<Eigen::Index>(i), j));
            out << buf << ',';
        }
        out << dataset.label(i).value << '\n';
    }
    if (!out) throw DataError(path.string() + ": write failed");
}

} // namespace bnat
