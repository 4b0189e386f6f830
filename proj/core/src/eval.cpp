#include "bnat/eval.hpp"

#include <numeric>

#include "bnat/errors.hpp"

namespace bnat {

ConfusionMatrix::ConfusionMatrix(std::size_t classes)
    : classes_(classes), counts_(classes * classes, 0) {
    if (classes < 2) throw ConfigError("confusion matrix: need at least 2 classes");
}

std::int64_t ConfusionMatrix::at(std::size_t truth, std::size_t predicted) const {
    if (truth >= classes_ || predicted >= classes_)
        throw ConfigError("confusion matrix: index out of range");
    return counts_[truth * classes_ + predicted];
}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted, std::int64_t count) {
    if (truth >= classes_ || predicted >= classes_)
        throw DataError("confusion matrix: label out of range");
    if (count < 0) throw ConfigError("confusion matrix: negative count");
    counts_[truth * classes_ + predicted] += count;
}

std::int64_t ConfusionMatrix::total() const {
    return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0});
}

std::int64_t ConfusionMatrix::row_sum(std::size_t truth) const {
    std::int64_t s = 0;
    for (std::size_t p = 0; p < classes_; ++p) s += at(truth, p);
    return s;
}

std::int64_t ConfusionMatrix::col_sum(std::size_t predicted) const {
    std::int64_t s = 0;
    for (std::size_t t = 0; t < classes_; ++t) s += at(t, predicted);
    return s;
}

ConfusionMatrix confusion(const std::vector<ClassLabel>& truth,
                          const std::vector<ClassLabel>& predicted, std::size_t classes) {
    if (truth.size() != predicted.size())
        throw DataError("confusion: label list lengths differ");
    ConfusionMatrix cm(classes);
    for (std::size_t i = 0; i < truth.size(); ++i)
        cm.add(truth[i].index(), predicted[i].index());
    return cm;
}

ConfusionMatrix merge(const ConfusionMatrix& a, const ConfusionMatrix& b) {
    if (a.classes() != b.classes())
        throw ConfigError("confusion merge: class counts differ");
    ConfusionMatrix out(a.classes());
    for (std::size_t t = 0; t < a.classes(); ++t)
        for (std::size_t p = 0; p < a.classes(); ++p)
            out.add(t, p, a.at(t, p) + b.at(t, p));
    return out;
}

namespace {

struct BinaryCounts {
    std::int64_t tp, fp, fn, tn;
};

BinaryCounts one_vs_rest(const ConfusionMatrix& cm, std::size_t u) {
    const std::int64_t n = cm.total();
    BinaryCounts c{};
    c.tp = cm.at(u, u);
    c.fn = cm.row_sum(u) - c.tp;
    c.fp = cm.col_sum(u) - c.tp;
    c.tn = n - c.tp - c.fn - c.fp;
    return c;
}

void require_nonempty(const ConfusionMatrix& cm, const char* what) {
    if (cm.total() == 0) throw DataError(std::string(what) + ": empty confusion matrix");
}

} // namespace

double macro_binary_accuracy(const ConfusionMatrix& cm) {
    require_nonempty(cm, "accuracy");
    const double n = static_cast<double>(cm.total());
    double sum = 0.0;
    for (std::size_t u = 0; u < cm.classes(); ++u) {
        const BinaryCounts c = one_vs_rest(cm, u);
        sum += static_cast<double>(c.tp + c.tn) / n;
    }
    return sum / static_cast<double>(cm.classes());
}

double plain_accuracy(const ConfusionMatrix& cm) {
    require_nonempty(cm, "accuracy");
    std::int64_t diag = 0;
    for (std::size_t u = 0; u < cm.classes(); ++u) diag += cm.at(u, u);
    return static_cast<double>(diag) / static_cast<double>(cm.total());
}

Metrics compute_metrics(const ConfusionMatrix& cm) {
    require_nonempty(cm, "metrics");
    Metrics m;
    m.accuracy_macro_binary = macro_binary_accuracy(cm);
    m.accuracy_plain = plain_accuracy(cm);
    m.per_class_precision.resize(cm.classes());
    m.per_class_recall.resize(cm.classes());
    for (std::size_t u = 0; u < cm.classes(); ++u) {
        const BinaryCounts c = one_vs_rest(cm, u);
        if (c.tp + c.fp > 0) {
            m.per_class_precision[u] =
                static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
        } else {
            m.per_class_precision[u] = 0.0;
            m.degenerate_precision = true;
        }
        if (c.tp + c.fn > 0) {
            m.per_class_recall[u] =
                static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
        } else {
            m.per_class_recall[u] = 0.0;
            m.degenerate_recall = true;
        }
    }
    const double classes = static_cast<double>(cm.classes());
    m.macro_precision =
        std::accumulate(m.per_class_precision.begin(), m.per_class_precision.end(), 0.0) /
        classes;
    m.macro_recall =
        std::accumulate(m.per_class_recall.begin(), m.per_class_recall.end(), 0.0) /
        classes;
    return m;
}

ConfusionMatrix evaluate_model(const DbnModel& model, const Dataset& data) {
    if (data.empty()) throw DataError("evaluate: empty dataset");
    if (data.dim() != model.arch.input_dim)
        throw DataError("evaluate: dataset dimension " + std::to_string(data.dim()) +
                        " disagrees with model input " +
                        std::to_string(model.arch.input_dim));
    const std::vector<ClassLabel> predicted = predict(model, data.features());
    return confusion(data.labels(), predicted, model.arch.classes);
}

nlohmann::json metrics_report(const std::string& scheme, std::uint16_t node,
                              const ConfusionMatrix& cm) {
    const Metrics m = compute_metrics(cm);
    nlohmann::json per_class = nlohmann::json::array();
    for (std::size_t u = 0; u < cm.classes(); ++u) {
        per_class.push_back({{"label", u + 1},
                             {"name", class_name(ClassLabel::from_index(u))},
                             {"precision", m.per_class_precision[u]},
                             {"recall", m.per_class_recall[u]}});
    }
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t t = 0; t < cm.classes(); ++t) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t p = 0; p < cm.classes(); ++p) row.push_back(cm.at(t, p));
        rows.push_back(std::move(row));
    }
    return nlohmann::json{{"scheme", scheme},
                          {"node", node},
                          {"accuracy_eq15", m.accuracy_macro_binary},
                          {"accuracy_plain", m.accuracy_plain},
                          {"macro_precision", m.macro_precision},
                          {"macro_recall", m.macro_recall},
                          {"per_class", std::move(per_class)},
                          {"confusion", std::move(rows)}};
}

} // namespace bnat
