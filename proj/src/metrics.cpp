#include "rescnn/metrics.hpp"

#include <numeric>

#include <fmt/format.h>
#include <json.hpp>

#include "rescnn/errors.hpp"

namespace rescnn {

ConfusionMatrix::ConfusionMatrix(std::size_t classes) : classes_(classes), counts_(classes * classes, 0) {
  if (classes == 0) throw DimensionError("confusion matrix needs at least one class");
}

void ConfusionMatrix::add(int truth, int pred) {
  const auto k = static_cast<int>(classes_);
  if (truth < 0 || truth >= k) throw IndexError(fmt::format("true label {} out of range [0, {})", truth, k));
  if (pred < 0 || pred >= k) throw IndexError(fmt::format("predicted label {} out of range [0, {})", pred, k));
  ++counts_[static_cast<std::size_t>(truth) * classes_ + static_cast<std::size_t>(pred)];
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.classes_ != classes_) throw DimensionError("cannot add confusion matrices of different sizes");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

std::size_t ConfusionMatrix::total() const { return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0}); }

std::size_t ConfusionMatrix::row_sum(std::size_t c) const {
  std::size_t s = 0;
  for (std::size_t p = 0; p < classes_; ++p) s += (*this)(c, p);
  return s;
}

std::size_t ConfusionMatrix::col_sum(std::size_t c) const {
  std::size_t s = 0;
  for (std::size_t t = 0; t < classes_; ++t) s += (*this)(t, c);
  return s;
}

ConfusionMatrix confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred, std::size_t classes) {
  if (y_true.size() != y_pred.size()) {
    throw DimensionError(fmt::format("confusion: {} true labels but {} predictions", y_true.size(), y_pred.size()));
  }
  ConfusionMatrix cm(classes);
  for (std::size_t i = 0; i < y_true.size(); ++i) cm.add(y_true[i], y_pred[i]);
  return cm;
}

MetricsReport precision_recall_f1(const ConfusionMatrix& cm, const std::vector<std::string>& names) {
  const std::size_t k = cm.classes();
  if (!names.empty() && names.size() != k) {
    throw DimensionError(fmt::format("{} class names for {} classes", names.size(), k));
  }
  MetricsReport r;
  r.samples = cm.total();
  std::size_t diag = 0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < k; ++c) {
    ClassMetrics m;
    m.name = names.empty() ? fmt::format("Class {}", c) : names[c];
    const std::size_t tp = cm(c, c);
    m.support = cm.row_sum(c);
    m.predicted = cm.col_sum(c);
    diag += tp;
    if (m.predicted > 0) m.precision = static_cast<double>(tp) / static_cast<double>(m.predicted);
    else m.precision_undefined = true;
    if (m.support > 0) m.recall = static_cast<double>(tp) / static_cast<double>(m.support);
    else m.recall_undefined = true;
    if (m.precision + m.recall > 0.0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    else m.f1_undefined = true;

    if (m.support == 0 && m.predicted == 0) {
      r.absent.push_back(c);
    } else {
      ++present;
      r.macro.precision += m.precision;
      r.macro.recall += m.recall;
      r.macro.f1 += m.f1;
    }
    if (r.samples > 0) {
      const double w = static_cast<double>(m.support) / static_cast<double>(r.samples);
      r.weighted.precision += w * m.precision;
      r.weighted.recall += w * m.recall;
      r.weighted.f1 += w * m.f1;
    }
    r.classes.push_back(std::move(m));
  }
  if (present > 0) {
    r.macro.precision /= static_cast<double>(present);
    r.macro.recall /= static_cast<double>(present);
    r.macro.f1 /= static_cast<double>(present);
  }
  if (r.samples > 0) r.accuracy = static_cast<double>(diag) / static_cast<double>(r.samples);
  return r;
}

ReportFormat parse_report_format(const std::string& name) {
  if (name == "table") return ReportFormat::kTable;
  if (name == "json") return ReportFormat::kJson;
  if (name == "csv") return ReportFormat::kCsv;
  throw ConfigError("unknown report format '" + name + "' (expected table, json or csv)");
}

namespace {

std::string pct(double v, int decimals) { return fmt::format("{:.{}f}", 100.0 * v, decimals); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string render_report(const MetricsReport& report, ReportFormat format, const RenderOptions& options) {
  const int d = options.decimals;
  switch (format) {
    case ReportFormat::kTable: {
      std::size_t width = 12;
      for (const auto& c : report.classes) width = std::max(width, c.name.size() + 9);
      std::string s = fmt::format("{:<{}} {:>10} {:>10} {:>10} {:>8}\n", "", width, "precision", "recall", "f1", "support");
      for (std::size_t i = 0; i < report.classes.size(); ++i) {
        const auto& c = report.classes[i];
        const std::string label = c.name == fmt::format("Class {}", i) ? c.name : fmt::format("Class {} ({})", i, c.name);
        std::string flag;
        if (c.precision_undefined || c.recall_undefined) flag = "  *";
        s += fmt::format("{:<{}} {:>10} {:>10} {:>10} {:>8}{}\n", label, width, pct(c.precision, d) + "%",
                         pct(c.recall, d) + "%", pct(c.f1, d) + "%", c.support, flag);
      }
      s += fmt::format("{:<{}} {:>10} {:>10} {:>10} {:>8}\n", "macro avg", width, pct(report.macro.precision, d) + "%",
                       pct(report.macro.recall, d) + "%", pct(report.macro.f1, d) + "%", report.samples);
      s += fmt::format("{:<{}} {:>10} {:>10} {:>10} {:>8}\n", "weighted avg", width,
                       pct(report.weighted.precision, d) + "%", pct(report.weighted.recall, d) + "%",
                       pct(report.weighted.f1, d) + "%", report.samples);
      s += fmt::format("accuracy {}%\n", pct(report.accuracy, d));
      bool any = false;
      for (const auto& c : report.classes) any = any || c.precision_undefined || c.recall_undefined;
      if (any) s += "* zero denominator: the value is reported as 0\n";
      return s;
    }
    case ReportFormat::kJson: {
      nlohmann::ordered_json j;
      j["samples"] = report.samples;
      j["accuracy"] = report.accuracy;
      auto& classes = j["classes"] = nlohmann::ordered_json::array();
      for (std::size_t i = 0; i < report.classes.size(); ++i) {
        const auto& c = report.classes[i];
        classes.push_back({{"index", i},
                           {"name", c.name},
                           {"precision", c.precision},
                           {"recall", c.recall},
                           {"f1", c.f1},
                           {"support", c.support},
                           {"predicted", c.predicted},
                           {"precision_undefined", c.precision_undefined},
                           {"recall_undefined", c.recall_undefined},
                           {"f1_undefined", c.f1_undefined}});
      }
      j["macro"] = {{"precision", report.macro.precision}, {"recall", report.macro.recall}, {"f1", report.macro.f1}};
      j["weighted"] = {
          {"precision", report.weighted.precision}, {"recall", report.weighted.recall}, {"f1", report.weighted.f1}};
      j["absent_classes"] = report.absent;
      return j.dump(2) + "\n";
    }
    case ReportFormat::kCsv: {
      std::string s = "row,name,precision,recall,f1,support\n";
      for (std::size_t i = 0; i < report.classes.size(); ++i) {
        const auto& c = report.classes[i];
        s += fmt::format("{},{},{},{},{},{}\n", i, csv_field(c.name), pct(c.precision, d), pct(c.recall, d),
                         pct(c.f1, d), c.support);
      }
      s += fmt::format("macro,macro avg,{},{},{},{}\n", pct(report.macro.precision, d), pct(report.macro.recall, d),
                       pct(report.macro.f1, d), report.samples);
      s += fmt::format("weighted,weighted avg,{},{},{},{}\n", pct(report.weighted.precision, d),
                       pct(report.weighted.recall, d), pct(report.weighted.f1, d), report.samples);
      return s;
    }
  }
  return {};
}

MetricsReport report_from_json(const std::string& text) {
  MetricsReport r;
  try {
    const auto j = nlohmann::json::parse(text);
    r.samples = j.at("samples").get<std::size_t>();
    r.accuracy = j.at("accuracy").get<double>();
    for (const auto& c : j.at("classes")) {
      ClassMetrics m;
      m.name = c.at("name").get<std::string>();
      m.precision = c.at("precision").get<double>();
      m.recall = c.at("recall").get<double>();
      m.f1 = c.at("f1").get<double>();
      m.support = c.at("support").get<std::size_t>();
      m.predicted = c.at("predicted").get<std::size_t>();
      m.precision_undefined = c.at("precision_undefined").get<bool>();
      m.recall_undefined = c.at("recall_undefined").get<bool>();
      m.f1_undefined = c.at("f1_undefined").get<bool>();
      r.classes.push_back(std::move(m));
    }
    auto avg = [](const nlohmann::json& a) {
      return AverageMetrics{a.at("precision").get<double>(), a.at("recall").get<double>(), a.at("f1").get<double>()};
    };
    r.macro = avg(j.at("macro"));
    r.weighted = avg(j.at("weighted"));
    r.absent = j.at("absent_classes").get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed metrics JSON: ") + e.what());
  }
  return r;
}

}  // namespace rescnn
