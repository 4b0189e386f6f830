#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bnat/dataset.hpp"
#include "bnat/dbn.hpp"

namespace bnat {

/// Square count matrix, rows indexed by true class, columns by predicted.
class ConfusionMatrix {
  public:
    explicit ConfusionMatrix(std::size_t classes);

    std::size_t classes() const { return classes_; }
    std::int64_t at(std::size_t truth, std::size_t predicted) const;
    void add(std::size_t truth, std::size_t predicted, std::int64_t count = 1);
    std::int64_t total() const;

    std::int64_t row_sum(std::size_t truth) const;
    std::int64_t col_sum(std::size_t predicted) const;

    bool operator==(const ConfusionMatrix&) const = default;

  private:
    std::size_t classes_;
    std::vector<std::int64_t> counts_; // row-major
};

ConfusionMatrix confusion(const std::vector<ClassLabel>& truth,
                          const std::vector<ClassLabel>& predicted, std::size_t classes);

/// Element-wise sum; equals the matrix of the concatenated label lists.
ConfusionMatrix merge(const ConfusionMatrix& a, const ConfusionMatrix& b);

/// Macro-averaged one-vs-rest binary accuracy:
/// (1/U) sum_u (TP_u + TN_u) / (TP_u + TN_u + FP_u + FN_u).
double macro_binary_accuracy(const ConfusionMatrix& cm);

/// Plain multiclass accuracy: trace / total.
double plain_accuracy(const ConfusionMatrix& cm);

struct Metrics {
    double accuracy_macro_binary = 0.0;
    double accuracy_plain = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    std::vector<double> per_class_precision;
    std::vector<double> per_class_recall;
    // A class with zero predicted (resp. actual) instances contributes
    // precision (resp. recall) 0; these flag that the zero was forced.
    bool degenerate_precision = false;
    bool degenerate_recall = false;
};

Metrics compute_metrics(const ConfusionMatrix& cm);

/// Predictions of `model` over every row of `data` tallied against the
/// dataset's labels.
ConfusionMatrix evaluate_model(const DbnModel& model, const Dataset& data);

/// Report object with the documented shape:
/// {scheme, node, accuracy_eq15, accuracy_plain, macro_precision,
///  macro_recall, per_class, confusion}.
nlohmann::json metrics_report(const std::string& scheme, std::uint16_t node,
                              const ConfusionMatrix& cm);

} // namespace bnat
