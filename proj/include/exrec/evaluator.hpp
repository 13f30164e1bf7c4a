#pragma once

#include <Eigen/Core>

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "exrec/csv.hpp"
#include "exrec/error.hpp"
#include "exrec/features.hpp"
#include "exrec/seqnet/model.hpp"

namespace exrec::eval {

/// Lowest index wins ties.
inline std::size_t argmax(const Eigen::Ref<const Eigen::VectorXd>& v) {
  std::size_t best = 0;
  for (Eigen::Index k = 1; k < v.size(); ++k)
    if (v(k) > v(static_cast<Eigen::Index>(best))) best = static_cast<std::size_t>(k);
  return best;
}

/// Column-wise argmax of a K x N probability matrix.
inline std::vector<std::size_t> argmax_columns(const Eigen::MatrixXd& probabilities) {
  std::vector<std::size_t> out(static_cast<std::size_t>(probabilities.cols()));
  for (Eigen::Index n = 0; n < probabilities.cols(); ++n) out[static_cast<std::size_t>(n)] = argmax(probabilities.col(n));
  return out;
}

// Confusion matrix -----------------------------------------------------------

/// Rows are true classes, columns predicted.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::vector<ExerciseLabel> labels)
      : labels_(std::move(labels)), counts_(labels_.size() * labels_.size(), 0) {}

  std::size_t classes() const { return labels_.size(); }
  const std::vector<ExerciseLabel>& labels() const { return labels_; }

  long at(std::size_t truth, std::size_t predicted) const { return counts_.at(truth * classes() + predicted); }

  void add(std::size_t truth, std::size_t predicted, long n = 1) {
    if (truth >= classes() || predicted >= classes()) throw Error(ErrorKind::ShapeMismatch, "class index out of range");
    counts_[truth * classes() + predicted] += n;
  }

  long total() const {
    long t = 0;
    for (long c : counts_) t += c;
    return t;
  }

  long trace() const {
    long t = 0;
    for (std::size_t k = 0; k < classes(); ++k) t += at(k, k);
    return t;
  }

  long row_sum(std::size_t truth) const {
    long t = 0;
    for (std::size_t p = 0; p < classes(); ++p) t += at(truth, p);
    return t;
  }

  long col_sum(std::size_t predicted) const {
    long t = 0;
    for (std::size_t r = 0; r < classes(); ++r) t += at(r, predicted);
    return t;
  }

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::vector<ExerciseLabel> labels_;
  std::vector<long> counts_;
};

inline ConfusionMatrix confusion(const std::vector<std::size_t>& truth, const std::vector<std::size_t>& predicted,
                                 std::vector<ExerciseLabel> labels) {
  if (truth.size() != predicted.size()) throw Error(ErrorKind::ShapeMismatch, "truth and prediction counts differ");
  ConfusionMatrix cm(std::move(labels));
  for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
  return cm;
}

// Classification report ------------------------------------------------------

struct ClassMetrics {
  ExerciseLabel label;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long support = 0;
};

struct ClassificationReport {
  std::vector<ClassMetrics> classes;
  double accuracy = 0.0;
  ClassMetrics macro;     // label "macro avg"
  ClassMetrics weighted;  // label "weighted avg"
  long total = 0;
};

namespace detail {
inline double ratio(long num, long den) { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); }
}  // namespace detail

/// Undefined ratios (no predictions, no support) are reported as 0.
inline ClassificationReport report(const ConfusionMatrix& cm) {
  ClassificationReport r;
  r.total = cm.total();
  r.accuracy = detail::ratio(cm.trace(), r.total);
  r.macro.label = "macro avg";
  r.weighted.label = "weighted avg";
  const double k = static_cast<double>(cm.classes());
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    ClassMetrics m;
    m.label = cm.labels()[c];
    m.support = cm.row_sum(c);
    m.precision = detail::ratio(cm.at(c, c), cm.col_sum(c));
    m.recall = detail::ratio(cm.at(c, c), m.support);
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    const double w = r.total == 0 ? 0.0 : static_cast<double>(m.support) / static_cast<double>(r.total);
    r.macro.precision += m.precision / k;
    r.macro.recall += m.recall / k;
    r.macro.f1 += m.f1 / k;
    r.weighted.precision += w * m.precision;
    r.weighted.recall += w * m.recall;
    r.weighted.f1 += w * m.f1;
    r.classes.push_back(std::move(m));
  }
  r.macro.support = r.weighted.support = r.total;
  return r;
}

// Rendering --------------------------------------------------------------------

/// Fixed-width table, two decimals.
inline std::string render_text(const ClassificationReport& r) {
  std::size_t width = 12;
  for (const auto& c : r.classes) width = std::max(width, c.label.size());
  auto pad = [&](const std::string& s) { return std::string(width - s.size(), ' ') + s; };
  auto row = [&](const ClassMetrics& m) {
    char buf[96];
    std::snprintf(buf, sizeof buf, " %9.2f %9.2f %9.2f %9ld\n", m.precision, m.recall, m.f1, m.support);
    return pad(m.label) + buf;
  };
  std::string out = pad("") + " precision    recall  f1-score   support\n\n";
  for (const auto& c : r.classes) out += row(c);
  char buf[96];
  std::snprintf(buf, sizeof buf, " %9s %9s %9.2f %9ld\n", "", "", r.accuracy, r.total);
  out += "\n" + pad("accuracy") + buf;
  out += row(r.macro);
  out += row(r.weighted);
  return out;
}

/// label,precision,recall,f1,support; then accuracy, macro avg, weighted avg.
inline void write_report_csv(const ClassificationReport& r, std::ostream& sink) {
  std::string text = "label,precision,recall,f1,support\n";
  auto row = [&](const ClassMetrics& m) {
    csv::check_cell_text(m.label, "label");
    text += m.label + "," + csv::fixed(m.precision, 6) + "," + csv::fixed(m.recall, 6) + "," + csv::fixed(m.f1, 6) + "," +
            std::to_string(m.support) + "\n";
  };
  for (const auto& c : r.classes) row(c);
  text += "accuracy,,," + csv::fixed(r.accuracy, 6) + "," + std::to_string(r.total) + "\n";
  row(r.macro);
  row(r.weighted);
  csv::write_or_throw(sink, text);
}

/// Header row and first column carry the label names.
inline void write_confusion_csv(const ConfusionMatrix& cm, std::ostream& sink) {
  std::string text = "true\\predicted";
  for (const auto& l : cm.labels()) {
    csv::check_cell_text(l, "label");
    text += "," + l;
  }
  text += "\n";
  for (std::size_t t = 0; t < cm.classes(); ++t) {
    text += cm.labels()[t];
    for (std::size_t p = 0; p < cm.classes(); ++p) text += "," + std::to_string(cm.at(t, p));
    text += "\n";
  }
  csv::write_or_throw(sink, text);
}

// Model evaluation -----------------------------------------------------------

struct Evaluation {
  ClassificationReport report;
  ConfusionMatrix confusion;
  std::vector<std::size_t> predicted;
};

inline Evaluation evaluate_predictions(const std::vector<std::size_t>& truth, const std::vector<std::size_t>& predicted,
                                       const LabelTable& labels) {
  Evaluation e;
  e.confusion = confusion(truth, predicted, labels.classes());
  e.report = report(e.confusion);
  e.predicted = predicted;
  return e;
}

/// Windows are raw features; the model applies its own scaler.
inline Evaluation evaluate(const seqnet::SequenceModel& model, const std::vector<WindowSample>& windows) {
  if (windows.empty()) throw Error(ErrorKind::EmptyTrainingSet, "no windows to evaluate");
  model.check_windows(windows);
  std::vector<std::size_t> truth;
  truth.reserve(windows.size());
  for (const auto& w : windows) truth.push_back(model.labels.index(w.label));
  return evaluate_predictions(truth, argmax_columns(model.predict_proba(windows)), model.labels);
}

}  // namespace exrec::eval
