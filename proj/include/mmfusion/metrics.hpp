#ifndef MMFUSION_METRICS_HPP
#define MMFUSION_METRICS_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace mmfusion {

// Square tally of (actual, predicted) label pairs. Rows index the actual
// class, columns the predicted class.
class ConfusionMatrix {
public:
    ConfusionMatrix() = default;
    explicit ConfusionMatrix(std::size_t n_classes)
        : n_(n_classes), counts_(n_classes * n_classes, 0) {}

    void add(std::size_t actual, std::size_t predicted);

    std::uint64_t at(std::size_t actual, std::size_t predicted) const;
    std::uint64_t& cell(std::size_t actual, std::size_t predicted);

    std::size_t n_classes() const { return n_; }
    std::uint64_t total() const;
    std::uint64_t trace() const;
    std::uint64_t row_sum(std::size_t i) const;
    std::uint64_t col_sum(std::size_t j) const;

    bool operator==(const ConfusionMatrix&) const = default;

private:
    std::size_t n_ = 0;
    std::vector<std::uint64_t> counts_;
};

// Tally labels into an n_classes matrix. Lengths must match and every label
// must lie in [0, n_classes).
ConfusionMatrix confusion(const std::vector<int>& actual,
                          const std::vector<int>& predicted, std::size_t n_classes);

// Same, sizing the matrix to max(label) + 1. Empty input gives a 0x0 matrix.
ConfusionMatrix confusion(const std::vector<int>& actual,
                          const std::vector<int>& predicted);

// Fraction of correct predictions, trace/total. Empty matrix is an error.
double accuracy(const ConfusionMatrix& cm);

struct WeightedPRF {
    double precision;
    double recall;
    double f1;
};

// Support-weighted precision, recall and F1. Per-class precision is
// diag/col_sum (0 when the column is empty), recall is diag/row_sum, F1 the
// harmonic mean (0 when p + r == 0); averages weight each class by its row
// sum. Weighted recall equals accuracy bit for bit.
WeightedPRF weighted_prf(const ConfusionMatrix& cm);

struct EvalReport {
    ConfusionMatrix confusion;
    double accuracy = 0.0;
    double precision_weighted = 0.0;
    double recall_weighted = 0.0;
    double f1_weighted = 0.0;
};

EvalReport evaluate(const ConfusionMatrix& cm);
EvalReport evaluate(const std::vector<int>& actual, const std::vector<int>& predicted,
                    std::size_t n_classes);

// Counts as CSV with header `actual\predicted,0,1,...` and one row per
// actual class, first field the class index.
void write_confusion_csv(const ConfusionMatrix& cm, const std::string& path);

// Inverse of write_confusion_csv. Missing file raises an I/O error, anything
// that does not parse back to a square count table a format error.
ConfusionMatrix read_confusion_csv(const std::string& path);

// Binary P5 graymap, one zoom x zoom block per cell. Each row is scaled by
// its own sum so cells hold proportions; darker means larger, and an empty
// row renders white.
void write_heatmap_pgm(const ConfusionMatrix& cm, const std::string& path,
                       unsigned zoom = 1);

// Writes the count CSV and the graymap in one call.
void export_heatmap(const ConfusionMatrix& cm, const std::string& csv_path,
                    const std::string& pgm_path, unsigned zoom = 1);

// One row of the summary table written by the CLI.
struct MetricsRow {
    std::string model;
    double accuracy = 0.0;
    double precision_weighted = 0.0;
    double recall_weighted = 0.0;
    double f1_weighted = 0.0;
    std::size_t epochs_ran = 0;
};

void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path);

}  // namespace mmfusion

#endif
