#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace rescnn {

/// counts[t * classes + p]: rows are true classes, columns predictions.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes = 5);

  std::size_t classes() const { return classes_; }
  std::size_t operator()(std::size_t truth, std::size_t pred) const { return counts_[truth * classes_ + pred]; }
  void add(int truth, int pred);
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);

  std::size_t total() const;
  std::size_t row_sum(std::size_t c) const;
  std::size_t col_sum(std::size_t c) const;

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t classes_;
  std::vector<std::size_t> counts_;
};

/// Throws DimensionError for unequal lengths, IndexError for a label outside
/// [0, classes).
ConfusionMatrix confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred, std::size_t classes = 5);

struct ClassMetrics {
  std::string name;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
  std::size_t predicted = 0;
  // Set when the corresponding denominator was zero and the value forced to 0.
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

struct AverageMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetricsReport {
  std::vector<ClassMetrics> classes;
  /// Unweighted mean over classes that occur in the truth or the predictions.
  AverageMetrics macro;
  /// Support-weighted mean over all classes.
  AverageMetrics weighted;
  double accuracy = 0.0;
  std::size_t samples = 0;
  /// Classes with neither support nor predictions, left out of the macro mean.
  std::vector<std::size_t> absent;
};

/// Per class P = cm[c][c] / colsum, R = cm[c][c] / rowsum, F1 = 2PR / (P + R).
/// Names default to "Class <i>".
MetricsReport precision_recall_f1(const ConfusionMatrix& cm, const std::vector<std::string>& names = {});

enum class ReportFormat { kTable, kJson, kCsv };

ReportFormat parse_report_format(const std::string& name);

struct RenderOptions {
  /// Digits after the decimal point for percentages; 0 gives integer percents.
  int decimals = 1;
};

/// table: aligned text with one row per class plus "macro avg" and
/// "weighted avg" rows, values as percentages.
/// json: raw fractions (see README for field names); round-trips through
/// report_from_json.
/// csv: header `row,name,precision,recall,f1,support` and one line per class
/// plus `macro` and `weighted`, values as percentages.
std::string render_report(const MetricsReport& report, ReportFormat format, const RenderOptions& options = {});

MetricsReport report_from_json(const std::string& json);

}  // namespace rescnn
