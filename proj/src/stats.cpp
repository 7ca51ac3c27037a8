#include "glide/stats.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "glide/text.hpp"

namespace glide::stats {
namespace {

constexpr int kMaxIterations = 300;
constexpr double kTolerance = 1e-12;
constexpr double kTiny = 1e-300;

// Continued fraction for I_x(a, b), modified Lentz.
double beta_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kTolerance) return h;
  }
  throw ConvergenceError("incomplete beta continued fraction did not converge for a=" + text::shortest(a) +
                         " b=" + text::shortest(b) + " x=" + text::shortest(x));
}

std::string percent(double fraction, int decimals = 1) { return text::fixed(100.0 * fraction, decimals); }

std::string pad_left(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0 && b > 0) || !std::isfinite(a) || !std::isfinite(b)) throw StatsError("incomplete beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw StatsError("incomplete beta needs x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_fraction(a, b, x) / a;
  return 1.0 - front * beta_fraction(b, a, 1.0 - x) / b;
}

double t_two_tailed(double t, double df) {
  if (!(df > 0)) throw StatsError("t distribution needs df > 0");
  if (std::isnan(t)) throw StatsError("t statistic is NaN");
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

double t_cdf(double t, double df) {
  const double tail = 0.5 * t_two_tailed(t, df);
  return t >= 0 ? 1.0 - tail : tail;
}

double f_cdf(double f, double df1, double df2) {
  if (!(df1 > 0 && df2 > 0)) throw StatsError("F distribution needs positive degrees of freedom");
  if (std::isnan(f)) throw StatsError("F statistic is NaN");
  if (f <= 0) return 0.0;
  if (std::isinf(f)) return 1.0;
  return incomplete_beta(df1 / 2.0, df2 / 2.0, df1 * f / (df1 * f + df2));
}

double f_sf(double f, double df1, double df2) {
  if (!(df1 > 0 && df2 > 0)) throw StatsError("F distribution needs positive degrees of freedom");
  if (std::isnan(f)) throw StatsError("F statistic is NaN");
  if (f <= 0) return 1.0;
  if (std::isinf(f)) return 0.0;
  return incomplete_beta(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f));
}

PercentMatrix ConfusionMatrix::row_percent() const {
  PercentMatrix out = PercentMatrix::Zero();
  for (int r = 0; r < kPatternCount; ++r) {
    const double n = static_cast<double>(counts.row(r).sum());
    if (n > 0) out.row(r) = 100.0 * counts.row(r).cast<double>() / n;
  }
  return out;
}

Eigen::Matrix<int, kPatternCount, kPatternCount> ConfusionMatrix::rounded_percent() const {
  return row_percent().unaryExpr([](double v) { return std::floor(v + 0.5); }).cast<int>();
}

ConfusionMatrix confusion(std::span<const SessionLog> logs) {
  ConfusionMatrix m;
  for (const SessionLog& log : logs) {
    if (!log.complete()) {
      throw StatsError("log for subject " + log.plan.subject_id + " is incomplete (" +
                       std::to_string(log.trials.size()) + "/" + std::to_string(log.plan.trials.size()) + " trials)");
    }
    for (const TrialRecord& rec : log.trials) {
      if (!rec.training) ++m.counts(index_of(rec.delivered), index_of(rec.response));
    }
  }
  if (m.total() == 0) throw StatsError("no scoring trials to analyze");
  return m;
}

double overall_accuracy(const ConfusionMatrix& m) {
  if (m.total() == 0) throw StatsError("empty confusion matrix");
  return static_cast<double>(m.counts.trace()) / static_cast<double>(m.total());
}

std::vector<SubjectScores> subject_scores(std::span<const SessionLog> logs) {
  std::vector<std::string> order;
  std::map<std::string, std::pair<Eigen::Matrix<double, kPatternCount, 1>, Eigen::Matrix<double, kPatternCount, 1>>> tally;
  for (const SessionLog& log : logs) {
    const std::string& id = log.plan.subject_id;
    if (!tally.contains(id)) {
      order.push_back(id);
      tally[id] = {Eigen::Matrix<double, kPatternCount, 1>::Zero(), Eigen::Matrix<double, kPatternCount, 1>::Zero()};
    }
    auto& [correct, delivered] = tally[id];
    for (const TrialRecord& rec : log.trials) {
      if (rec.training) continue;
      delivered(index_of(rec.delivered)) += 1;
      if (rec.response == rec.delivered) correct(index_of(rec.delivered)) += 1;
    }
  }
  std::vector<SubjectScores> out;
  for (const std::string& id : order) {
    const auto& [correct, delivered] = tally[id];
    if ((delivered.array() == 0).any()) throw StatsError("subject " + id + " did not receive every pattern");
    out.push_back({id, correct.cwiseQuotient(delivered)});
  }
  return out;
}

AnovaResult rm_anova(const Eigen::MatrixXd& scores) {
  const Eigen::Index n = scores.rows();
  const Eigen::Index k = scores.cols();
  if (n < 2 || k < 2) throw StatsError("repeated-measures ANOVA needs at least 2 subjects and 2 conditions");
  if (!scores.allFinite()) throw StatsError("scores must be finite");

  AnovaResult r;
  const double grand = scores.mean();
  r.ss_total = (scores.array() - grand).square().sum();
  r.ss_conditions = static_cast<double>(n) * (scores.colwise().mean().array() - grand).square().sum();
  r.ss_subjects = static_cast<double>(k) * (scores.rowwise().mean().array() - grand).square().sum();
  r.ss_error = std::max(0.0, r.ss_total - r.ss_conditions - r.ss_subjects);
  r.df_between = static_cast<int>(k - 1);
  r.df_within = static_cast<int>((k - 1) * (n - 1));

  const double floor = 1e-12 * r.ss_total;
  if (r.ss_error <= floor) {
    r.degenerate = true;
    r.ss_error = 0.0;
    if (r.ss_conditions <= floor) {
      r.F = 0.0;
      r.p = 1.0;
    } else {
      r.F = std::numeric_limits<double>::infinity();
      r.p = 0.0;
    }
    return r;
  }
  r.F = (r.ss_conditions / r.df_between) / (r.ss_error / r.df_within);
  r.p = f_sf(r.F, r.df_between, r.df_within);
  return r;
}

AnovaResult rm_anova(std::span<const SubjectScores> scores) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(scores.size()), kPatternCount);
  for (std::size_t i = 0; i < scores.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = scores[i].accuracy.transpose();
  return rm_anova(m);
}

TTestResult paired_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw StatsError("paired t-test needs samples of equal length");
  if (a.size() < 2) throw StatsError("paired t-test needs at least 2 pairs");
  const Eigen::Index n = static_cast<Eigen::Index>(a.size());
  const Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(a.data(), n) - Eigen::Map<const Eigen::VectorXd>(b.data(), n);
  if (!d.allFinite()) throw StatsError("samples must be finite");

  TTestResult r;
  r.df = static_cast<int>(n - 1);
  const double mean = d.mean();
  const double sd = std::sqrt((d.array() - mean).square().sum() / r.df);
  if (sd <= 1e-14 * std::max(1.0, d.cwiseAbs().maxCoeff())) {
    r.degenerate = true;
    if (mean == 0.0) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = std::copysign(std::numeric_limits<double>::infinity(), mean);
      r.p = 0.0;
    }
    return r;
  }
  r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  r.p = t_two_tailed(r.t, r.df);
  return r;
}

AnalysisReport analyze(std::span<const SessionLog> logs) {
  AnalysisReport rep;
  rep.matrix = confusion(logs);
  rep.accuracy = overall_accuracy(rep.matrix);
  rep.subjects = subject_scores(logs);

  const double rounded_diag = rep.matrix.rounded_percent().diagonal().cast<double>().mean();
  double subject_mean = 0.0;
  for (const SubjectScores& s : rep.subjects) subject_mean += s.accuracy.mean();
  subject_mean /= static_cast<double>(rep.subjects.size());
  rep.notes.push_back("overall accuracy is correct/total over all scoring trials (" + percent(rep.accuracy) +
                      " %); mean of the rounded diagonal = " + text::fixed(rounded_diag, 1) +
                      " %; mean of per-subject means = " + percent(subject_mean) + " %");

  if (rep.subjects.size() < 2) {
    rep.notes.push_back("ANOVA and paired t-tests need at least two subjects");
    return rep;
  }
  rep.anova = rm_anova(rep.subjects);
  if (rep.anova->degenerate) rep.notes.push_back("ANOVA error variance is zero; F and p are boundary values");
  const std::pair<PatternId, PatternId> pairs[] = {
      {PatternId::SD, PatternId::SDV}, {PatternId::MD, PatternId::MDV}, {PatternId::LD, PatternId::LDV}};
  for (const auto& [without, with] : pairs) {
    std::vector<double> a, b;
    for (const SubjectScores& s : rep.subjects) {
      a.push_back(s.accuracy(index_of(without)));
      b.push_back(s.accuracy(index_of(with)));
    }
    rep.comparisons.push_back({without, with, paired_t(a, b)});
  }
  return rep;
}

std::string format_anova(const AnovaResult& r) {
  auto stat = [](double v) { return std::isinf(v) ? std::string("inf") : text::fixed(v, 4); };
  return "F(" + std::to_string(r.df_between) + ", " + std::to_string(r.df_within) + ") = " + stat(r.F) +
         ", p = " + text::fixed(r.p, 6);
}

std::string format_report(const AnalysisReport& rep) {
  std::ostringstream out;
  const auto pct = rep.matrix.rounded_percent();
  out << "Confusion matrix (rows: delivered pattern, columns: answer, % of row)\n";
  out << pad_right("Pattern", 8);
  for (PatternId id : kAllPatterns) out << pad_left(std::string(to_string(id)), 5);
  out << pad_left("n", 6) << '\n';
  for (PatternId row : kAllPatterns) {
    out << pad_right(std::string(to_string(row)), 8);
    for (PatternId col : kAllPatterns) out << pad_left(std::to_string(pct(index_of(row), index_of(col))), 5);
    out << pad_left(std::to_string(rep.matrix.counts.row(index_of(row)).sum()), 6) << '\n';
  }
  out << "Overall accuracy: " << percent(rep.accuracy) << " % (" << rep.matrix.counts.trace() << "/"
      << rep.matrix.total() << ")\n";
  out << "Per-subject accuracy (%):\n";
  out << "  " << pad_right("subject", 10);
  for (PatternId id : kAllPatterns) out << pad_left(std::string(to_string(id)), 7);
  out << pad_left("mean", 7) << '\n';
  for (const SubjectScores& s : rep.subjects) {
    out << "  " << pad_right(s.subject_id, 10);
    for (int i = 0; i < kPatternCount; ++i) out << pad_left(percent(s.accuracy(i)), 7);
    out << pad_left(percent(s.accuracy.mean()), 7) << '\n';
  }
  if (rep.anova) out << "ANOVA (repeated measures across patterns): " << format_anova(*rep.anova) << '\n';
  if (!rep.comparisons.empty()) {
    out << "Paired t-tests (two-tailed):\n";
    for (const PairedComparison& c : rep.comparisons) {
      const std::string t = std::isinf(c.result.t) ? (c.result.t > 0 ? "inf" : "-inf") : text::fixed(c.result.t, 4);
      out << "  " << to_string(c.without) << " vs " << to_string(c.with) << ": t(" << c.result.df << ") = " << t
          << ", p = " << text::fixed(c.result.p, 6) << (c.result.degenerate ? " (zero variance)" : "") << '\n';
    }
  }
  for (const std::string& note : rep.notes) out << "Note: " << note << '\n';
  return out.str();
}

}  // namespace glide::stats
