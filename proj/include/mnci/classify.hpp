#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "mnci/common.hpp"
#include "mnci/graph.hpp"
#include "mnci/io.hpp"

namespace mnci {

/// Per-class F1 weighted by true-class support.
inline double weighted_f1(const std::vector<int>& truth, const std::vector<int>& predicted) {
  if (truth.empty()) throw std::invalid_argument("empty label sequence");
  if (truth.size() != predicted.size()) throw std::invalid_argument("label length mismatch");
  std::map<int, double> tp, fp, fn, support;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    support[truth[i]] += 1.0;
    if (truth[i] == predicted[i]) {
      tp[truth[i]] += 1.0;
    } else {
      fn[truth[i]] += 1.0;
      fp[predicted[i]] += 1.0;
    }
  }
  double score = 0.0;
  const double n = static_cast<double>(truth.size());
  for (const auto& [cls, sup] : support) {
    const double p_den = tp[cls] + fp[cls];
    const double r_den = tp[cls] + fn[cls];
    const double precision = p_den > 0.0 ? tp[cls] / p_den : 0.0;
    const double recall = r_den > 0.0 ? tp[cls] / r_den : 0.0;
    const double f1 = (precision + recall) > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    score += (sup / n) * f1;
  }
  return score;
}

inline double accuracy(const std::vector<int>& truth, const std::vector<int>& predicted) {
  if (truth.empty()) throw std::invalid_argument("empty label sequence");
  if (truth.size() != predicted.size()) throw std::invalid_argument("label length mismatch");
  int hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += truth[i] == predicted[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

struct LogisticRegressionOptions {
  double l2 = 1.0;
  double tol = 1e-6;  // stop when the objective improves by less than this
  int max_iters = 10000;
};

/// Multinomial logistic regression fit by full-batch gradient descent with a
/// backtracking line search. L2 penalty on the weights, bias unregularized.
class LogisticRegression {
 public:
  using Options = LogisticRegressionOptions;

  void fit(const Mat& x, const std::vector<int>& y, int num_classes,
           const Options& opts = Options()) {
    if (x.rows() != static_cast<int>(y.size())) throw std::invalid_argument("row/label mismatch");
    if (num_classes < 1) throw std::invalid_argument("need at least one class");
    const int d = static_cast<int>(x.cols());
    w_ = Mat::Zero(num_classes, d);
    b_ = Vec::Zero(num_classes);
    if (num_classes == 1) return;

    Mat grad_w(num_classes, d);
    Vec grad_b(num_classes);
    double obj = objective(x, y, w_, b_, opts.l2, &grad_w, &grad_b);
    double step = 1.0;
    for (int iter = 0; iter < opts.max_iters; ++iter) {
      const double g2 = grad_w.squaredNorm() + grad_b.squaredNorm();
      if (g2 < 1e-24) break;
      // Armijo backtracking from a mildly optimistic step.
      step = std::min(step * 2.0, 1e4);
      double next_obj = 0.0;
      Mat w_next;
      Vec b_next;
      for (;;) {
        w_next = w_ - step * grad_w;
        b_next = b_ - step * grad_b;
        next_obj = objective(x, y, w_next, b_next, opts.l2, nullptr, nullptr);
        if (next_obj <= obj - 1e-4 * step * g2 || step < 1e-16) break;
        step *= 0.5;
      }
      const double gain = obj - next_obj;
      w_ = std::move(w_next);
      b_ = std::move(b_next);
      obj = objective(x, y, w_, b_, opts.l2, &grad_w, &grad_b);
      if (gain < opts.tol) break;
    }
  }

  std::vector<int> predict(const Mat& x) const {
    if (x.cols() != w_.cols()) throw std::invalid_argument("feature dimension mismatch");
    std::vector<int> out(x.rows());
    for (int i = 0; i < x.rows(); ++i) {
      const Vec scores = w_ * x.row(i).transpose() + b_;
      int best = 0;
      for (int c = 1; c < scores.size(); ++c) {
        if (scores[c] > scores[best]) best = c;
      }
      out[i] = best;
    }
    return out;
  }

  const Mat& weights() const { return w_; }
  const Vec& bias() const { return b_; }

 private:
  static double objective(const Mat& x, const std::vector<int>& y, const Mat& w, const Vec& b,
                          double l2, Mat* grad_w, Vec* grad_b) {
    const int n = static_cast<int>(x.rows());
    if (grad_w) {
      *grad_w = l2 * w;
      grad_b->setZero();
    }
    double nll = 0.0;
    for (int i = 0; i < n; ++i) {
      Vec scores = w * x.row(i).transpose() + b;
      const double mx = scores.maxCoeff();
      Vec p = (scores.array() - mx).exp();
      const double z = p.sum();
      p /= z;
      nll -= std::log(std::max(p[y[i]], 1e-300));
      if (grad_w) {
        Vec err = p;
        err[y[i]] -= 1.0;
        grad_w->noalias() += err * x.row(i);
        *grad_b += err;
      }
    }
    return nll + 0.5 * l2 * w.squaredNorm();
  }

  Mat w_;
  Vec b_;
};

struct EvalReport {
  double accuracy = 0.0;
  double weighted_f1 = 0.0;
  std::vector<double> fold_accuracy;
  std::vector<double> fold_weighted_f1;
  int folds = 0;
  std::uint64_t seed = 0;
};

/// Class-stratified fold assignment: rows of each class are shuffled, then
/// dealt round-robin, so per-class fold loads differ by at most one.
inline std::vector<std::vector<int>> stratified_folds(const std::vector<int>& class_of_row, int k,
                                                      std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("need at least two folds");
  std::map<int, std::vector<int>> by_class;
  for (std::size_t i = 0; i < class_of_row.size(); ++i) {
    by_class[class_of_row[i]].push_back(static_cast<int>(i));
  }
  Rng rng(seed, 7);
  std::vector<std::vector<int>> folds(k);
  for (auto& [cls, rows] : by_class) {
    rng.shuffle(rows);
    for (std::size_t j = 0; j < rows.size(); ++j) folds[j % k].push_back(rows[j]);
  }
  return folds;
}

/// Stratified k-fold logistic-regression classification over node embeddings.
/// Labeled nodes missing from the table are an error (up to ten are listed);
/// unlabeled nodes are simply not used.
inline EvalReport kfold_classify(const EmbeddingTable& table, const LabelMap& labels, int k = 5,
                                 std::uint64_t seed = 0) {
  if (k < 2) throw std::invalid_argument("need at least two folds");
  std::vector<NodeId> missing;
  for (const auto& [id, label] : labels) {
    if (!table.index.count(id)) missing.push_back(id);
  }
  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end());
    std::string msg = "labeled nodes missing from embeddings:";
    for (std::size_t i = 0; i < missing.size() && i < 10; ++i) {
      msg += ' ' + std::to_string(missing[i]);
    }
    if (missing.size() > 10) msg += " ...";
    throw DataError(msg);
  }

  // Deterministic ordering: iterate the table, not the unordered label map.
  std::map<int, std::vector<int>> by_class;  // class -> table rows
  std::map<int, int> class_ids;
  std::vector<int> rows, row_class;
  for (int i = 0; i < table.size(); ++i) {
    auto it = labels.find(table.ids[i]);
    if (it == labels.end()) continue;
    by_class[it->second].push_back(i);
  }
  if (by_class.empty()) throw DataError("no labeled nodes");
  int next_class = 0;
  for (const auto& [cls, members] : by_class) {
    if (static_cast<int>(members.size()) < k) {
      throw DataError("class " + std::to_string(cls) + " has fewer members than folds");
    }
    class_ids[cls] = next_class++;
    for (int r : members) {
      rows.push_back(r);
      row_class.push_back(class_ids[cls]);
    }
  }
  const int num_classes = next_class;

  const std::vector<std::vector<int>> folds = stratified_folds(row_class, k, seed);
  std::vector<std::vector<int>> fold_rows(k);
  std::vector<std::vector<int>> fold_labels(k);
  for (int f = 0; f < k; ++f) {
    for (int local : folds[f]) {
      fold_rows[f].push_back(rows[local]);
      fold_labels[f].push_back(row_class[local]);
    }
  }

  EvalReport report;
  report.folds = k;
  report.seed = seed;
  for (int fold = 0; fold < k; ++fold) {
    int train_n = 0;
    for (int f = 0; f < k; ++f) {
      if (f != fold) train_n += static_cast<int>(fold_rows[f].size());
    }
    Mat x_train(train_n, table.dim());
    std::vector<int> y_train;
    y_train.reserve(train_n);
    int r = 0;
    for (int f = 0; f < k; ++f) {
      if (f == fold) continue;
      for (std::size_t j = 0; j < fold_rows[f].size(); ++j) {
        x_train.row(r++) = table.vectors.row(fold_rows[f][j]);
        y_train.push_back(fold_labels[f][j]);
      }
    }
    Mat x_test(fold_rows[fold].size(), table.dim());
    for (std::size_t j = 0; j < fold_rows[fold].size(); ++j) {
      x_test.row(static_cast<int>(j)) = table.vectors.row(fold_rows[fold][j]);
    }

    LogisticRegression clf;
    clf.fit(x_train, y_train, num_classes);
    const std::vector<int> pred = clf.predict(x_test);
    report.fold_accuracy.push_back(accuracy(fold_labels[fold], pred));
    report.fold_weighted_f1.push_back(weighted_f1(fold_labels[fold], pred));
  }
  for (int f = 0; f < k; ++f) {
    report.accuracy += report.fold_accuracy[f] / k;
    report.weighted_f1 += report.fold_weighted_f1[f] / k;
  }
  return report;
}

inline void write_eval_report(const EvalReport& report, std::ostream& out) {
  out << "accuracy " << detail::fmt17(report.accuracy) << '\n';
  out << "weighted_f1 " << detail::fmt17(report.weighted_f1) << '\n';
  out << "folds " << report.folds << '\n';
  out << "seed " << report.seed << '\n';
  for (int f = 0; f < report.folds; ++f) {
    out << "fold_" << f << "_accuracy " << detail::fmt17(report.fold_accuracy[f]) << '\n';
    out << "fold_" << f << "_weighted_f1 " << detail::fmt17(report.fold_weighted_f1[f]) << '\n';
  }
}

}  // namespace mnci
