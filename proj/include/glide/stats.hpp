#pragma once

#include <Eigen/Core>

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "glide/stimulus.hpp"
#include "glide/study.hpp"

namespace glide::stats {

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StatsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction
/// (absolute tolerance 1e-12, at most 300 iterations).  Throws
/// ConvergenceError rather than returning an unconverged value.
double incomplete_beta(double a, double b, double x);

/// Student t CDF with `df` degrees of freedom.
double t_cdf(double t, double df);
/// Two-tailed p = P(|T| >= |t|).
double t_two_tailed(double t, double df);

/// F(df1, df2) CDF and upper tail.
double f_cdf(double f, double df1, double df2);
double f_sf(double f, double df1, double df2);

using CountMatrix = Eigen::Matrix<long, kPatternCount, kPatternCount>;
using PercentMatrix = Eigen::Matrix<double, kPatternCount, kPatternCount>;

/// Rows are delivered patterns, columns the answers.
struct ConfusionMatrix {
  CountMatrix counts{CountMatrix::Zero()};

  PercentMatrix row_percent() const;
  /// Row percentages rounded half-up to integers, as printed in reports.
  Eigen::Matrix<int, kPatternCount, kPatternCount> rounded_percent() const;
  long total() const { return counts.sum(); }
};

/// Scoring trials of every log; training trials are ignored.  Throws
/// StatsError when there is nothing to count.
ConfusionMatrix confusion(std::span<const SessionLog> logs);

/// trace / total.
double overall_accuracy(const ConfusionMatrix& m);

struct SubjectScores {
  std::string subject_id;
  Eigen::Matrix<double, kPatternCount, 1> accuracy{Eigen::Matrix<double, kPatternCount, 1>::Zero()};
};

/// Per-subject fraction correct per pattern.  Logs sharing a subject id are
/// pooled; subjects appear in first-seen order.
std::vector<SubjectScores> subject_scores(std::span<const SessionLog> logs);

struct AnovaResult {
  double F{0};
  int df_between{0};
  int df_within{0};
  double p{1};
  bool degenerate{false};  // zero error variance
  double ss_total{0};
  double ss_conditions{0};
  double ss_subjects{0};
  double ss_error{0};
};

/// One-way repeated-measures ANOVA over a subjects x conditions matrix.
AnovaResult rm_anova(const Eigen::MatrixXd& scores);
AnovaResult rm_anova(std::span<const SubjectScores> scores);

struct TTestResult {
  double t{0};
  int df{0};
  double p{1};
  bool degenerate{false};  // zero variance of the differences
};

/// Paired two-tailed t-test on a - b.
TTestResult paired_t(std::span<const double> a, std::span<const double> b);

struct PairedComparison {
  PatternId without;
  PatternId with;
  TTestResult result;
};

struct AnalysisReport {
  ConfusionMatrix matrix;
  double accuracy{0};
  std::vector<SubjectScores> subjects;
  std::optional<AnovaResult> anova;
  std::vector<PairedComparison> comparisons;
  std::vector<std::string> notes;
};

/// Confusion matrix, accuracies, ANOVA across patterns and the
/// with/without-vibration paired comparisons.  ANOVA and t-tests need at
/// least two subjects; with fewer they are omitted and a note is added.
AnalysisReport analyze(std::span<const SessionLog> logs);

/// "F(df1, df2) = x.xxxx, p = x.xxxxxx"
std::string format_anova(const AnovaResult& r);

std::string format_report(const AnalysisReport& report);

}  // namespace glide::stats
