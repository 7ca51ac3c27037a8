#pragma once

#include <Eigen/Core>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "glide/client.hpp"
#include "glide/stimulus.hpp"

namespace glide {

inline constexpr int kRepetitions = 5;
inline constexpr std::string_view kSoftwareVersion = "0.1.0";

struct PlannedTrial {
  PatternId pattern{PatternId::SD};
  bool training{false};

  friend bool operator==(const PlannedTrial&, const PlannedTrial&) = default;
};

/// Delivery order for one subject.  The scoring block holds every pattern
/// exactly five times in a seeded random order; the optional training block
/// runs the bank five times in canonical order first and is not scored.
struct SessionPlan {
  std::string subject_id;
  std::uint64_t seed{0};
  bool training{false};
  std::vector<PlannedTrial> trials;

  std::size_t scoring_count() const;
  friend bool operator==(const SessionPlan&, const SessionPlan&) = default;
};

SessionPlan generate_session(const std::string& subject_id, std::uint64_t seed, bool training = false);

struct TrialRecord {
  std::size_t index{0};
  bool training{false};
  PatternId delivered{PatternId::SD};
  PatternId response{PatternId::SD};
  double stimulus_start_s{0};
  double stimulus_end_s{0};
  double response_s{0};

  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

struct SessionLog {
  SessionPlan plan;
  std::vector<std::pair<std::string, std::string>> config;
  std::string software_version{kSoftwareVersion};
  std::vector<TrialRecord> trials;
  /// Set when a run stopped early; cleared by the next appended trial.
  std::string interrupted;

  bool complete() const { return trials.size() == plan.trials.size(); }
  friend bool operator==(const SessionLog&, const SessionLog&) = default;
};

class LogFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Log file: newline-delimited JSON.  The first line is the session header,
// then one line per answered trial, plus status lines when a run was cut short.
std::string header_line(const SessionLog& log);
std::string trial_line(const TrialRecord& rec);
std::string status_line(const std::string& reason);

void write_log(std::ostream& out, const SessionLog& log);
SessionLog read_log(std::istream& in);
SessionLog read_log(const std::filesystem::path& path);

struct TrialPrompt {
  const SessionPlan& plan;
  std::size_t index;
  PatternId delivered;
  bool training;
};

/// Source of the subject's forced-choice answer after each stimulus.
class Responder {
 public:
  virtual ~Responder() = default;
  virtual PatternId respond(const TrialPrompt& prompt) = 0;
};

class PerfectResponder : public Responder {
 public:
  PatternId respond(const TrialPrompt& prompt) override { return prompt.delivered; }
};

class ConstantResponder : public Responder {
 public:
  explicit ConstantResponder(PatternId answer) : answer_(answer) {}
  PatternId respond(const TrialPrompt&) override { return answer_; }

 private:
  PatternId answer_;
};

using ConfusionRates = Eigen::Matrix<double, kPatternCount, kPatternCount>;

/// Scripted noisy subject.  For every delivered pattern it deals answers from
/// a shuffled deck whose composition follows that pattern's row of `rates`
/// (largest-remainder rounding to `deck_size` cards).  Every full pass
/// through a deck reproduces the programmed rates exactly.
class ConfusionResponder : public Responder {
 public:
  ConfusionResponder(const ConfusionRates& rates, std::uint64_t seed, int deck_size = 30);
  PatternId respond(const TrialPrompt& prompt) override;

 private:
  void reshuffle(int row);

  std::vector<std::vector<PatternId>> decks_;
  std::vector<std::size_t> cursor_;
  std::mt19937_64 rng_;
};

/// Reads answers (pattern ids) from a stream, re-prompting on bad input.
class TerminalResponder : public Responder {
 public:
  TerminalResponder(std::istream& in, std::ostream& prompt_out) : in_(in), out_(prompt_out) {}
  PatternId respond(const TrialPrompt& prompt) override;

 private:
  std::istream& in_;
  std::ostream& out_;
};

struct RunOptions {
  /// Device seconds between trials, spent at the start position.
  double inter_trial_gap_s{2.0};
  double baseline_force_n{0.5};
  std::chrono::microseconds poll_interval{500};
};

class SessionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Delivers every outstanding trial of `plan` over `link`, asking `responder`
/// after each stimulus and appending to the log at `log_path` as it goes.
/// An existing log for the same plan is resumed at its first unanswered
/// trial.  On failure a status line is appended and SessionError thrown.
SessionLog run_session(const SessionPlan& plan, DeviceLink& link, Responder& responder,
                       const std::filesystem::path& log_path, const RunOptions& options,
                       const std::vector<std::pair<std::string, std::string>>& config_snapshot = {});

}  // namespace glide
