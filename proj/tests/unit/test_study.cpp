#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "acceptance.hpp"
#include "glide/server.hpp"
#include "glide/study.hpp"

using namespace glide;

namespace {

struct LiveStack {
  LiveStack() {
    cfg.server.port = 0;
    cfg.server.ws_port = -1;
    cfg.server.time_scale = 0;
    host = std::make_unique<DeviceHost>(cfg);
    host->start();
    server = std::make_unique<Server>(*host, cfg.server, cfg.limits());
    server->start();
  }
  ~LiveStack() {
    server->stop();
    host->stop();
  }

  StackConfig cfg;
  std::unique_ptr<DeviceHost> host;
  std::unique_ptr<Server> server;
};

// Passes requests through but drops the link on the n-th PATTERN.
class FlakyLink : public DeviceLink {
 public:
  FlakyLink(DeviceLink& inner, int patterns) : inner_(inner), left_(patterns) {}
  protocol::Reply request(const protocol::Command& cmd) override {
    if (std::holds_alternative<protocol::PlayPattern>(cmd) && left_-- <= 0) throw ConnectionError("link dropped");
    return inner_.request(cmd);
  }

 private:
  DeviceLink& inner_;
  int left_;
};

// Records the vibration reported right before each PATTERN command.
class SpyLink : public DeviceLink {
 public:
  explicit SpyLink(DeviceLink& inner) : inner_(inner) {}
  protocol::Reply request(const protocol::Command& cmd) override {
    if (std::holds_alternative<protocol::PlayPattern>(cmd)) {
      const protocol::Reply st = inner_.request(protocol::Status{});
      vib_before.push_back(protocol::field(st.text, "f1").value() + protocol::field(st.text, "f2").value());
    }
    return inner_.request(cmd);
  }
  std::vector<double> vib_before;

 private:
  DeviceLink& inner_;
};

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "glide_test_study";
  std::filesystem::create_directories(dir);
  const auto p = dir / name;
  std::filesystem::remove(p);
  return p;
}

RunOptions fast_options() {
  RunOptions o;
  o.inter_trial_gap_s = 0.1;
  o.poll_interval = std::chrono::microseconds(100);
  return o;
}

}  // namespace

TEST_CASE("plans hold every pattern five times") {
  const SessionPlan plan = generate_session("P1", 7);
  REQUIRE(plan.trials.size() == 30);
  CHECK(plan.scoring_count() == 30);
  std::map<PatternId, int> counts;
  for (const PlannedTrial& t : plan.trials) {
    CHECK_FALSE(t.training);
    ++counts[t.pattern];
  }
  CHECK(counts.size() == 6);
  for (const auto& [id, n] : counts) CHECK(n == 5);
}

TEST_CASE("plans are a pure function of the seed") {
  CHECK(generate_session("P1", 7) == generate_session("P1", 7));
  CHECK(generate_session("P1", 7).trials != generate_session("P1", 8).trials);
  // The subject id does not enter the shuffle.
  CHECK(generate_session("P1", 7).trials == generate_session("P2", 7).trials);
}

TEST_CASE("training precedes scoring in canonical order") {
  const SessionPlan plan = generate_session("P3", 11, true);
  REQUIRE(plan.trials.size() == 60);
  CHECK(plan.scoring_count() == 30);
  for (std::size_t i = 0; i < 30; ++i) {
    CHECK(plan.trials[i].training);
    CHECK(plan.trials[i].pattern == kAllPatterns[i % 6]);
  }
  for (std::size_t i = 30; i < 60; ++i) CHECK_FALSE(plan.trials[i].training);
  const SessionPlan plain = generate_session("P3", 11);
  CHECK(std::equal(plain.trials.begin(), plain.trials.end(), plan.trials.begin() + 30, [](auto& a, auto& b) {
    return a.pattern == b.pattern;
  }));
}

TEST_CASE("logs round-trip") {
  SessionLog log;
  log.plan = generate_session("P4", 3, true);
  log.config = {{"port", "9760"}, {"slide_speed_mm_s", "23"}};
  for (std::size_t i = 0; i < 12; ++i) {
    TrialRecord r;
    r.index = i;
    r.training = log.plan.trials[i].training;
    r.delivered = log.plan.trials[i].pattern;
    r.response = kAllPatterns[(i * 5) % 6];
    r.stimulus_start_s = 5.0 * i + 0.25;
    r.stimulus_end_s = 5.0 * i + 3.1;
    r.response_s = 5.0 * i + 3.3;
    log.trials.push_back(r);
  }
  log.interrupted = "operator abort";
  std::stringstream buf;
  write_log(buf, log);
  CHECK(read_log(buf) == log);
}

TEST_CASE("log validation") {
  const SessionPlan plan = generate_session("P5", 1);
  SessionLog log;
  log.plan = plan;
  const std::string header = header_line(log) + "\n";
  auto reads = [](const std::string& text) {
    std::istringstream in(text);
    return read_log(in);
  };
  TrialRecord r;
  r.delivered = plan.trials[0].pattern;
  r.response = r.delivered;
  r.stimulus_end_s = 1;

  CHECK_NOTHROW(reads(header + trial_line(r) + "\n"));
  CHECK_THROWS_AS(reads(""), LogFormatError);
  CHECK_THROWS_AS(reads(trial_line(r) + "\n"), LogFormatError);
  CHECK_THROWS_AS(reads(header + header), LogFormatError);
  CHECK_THROWS_AS(reads(header + "{not json\n"), LogFormatError);
  CHECK_THROWS_AS(reads(header + "{\"record\":\"mystery\"}\n"), LogFormatError);
  TrialRecord skipped = r;
  skipped.index = 1;
  skipped.delivered = plan.trials[1].pattern;
  CHECK_THROWS_WITH_AS(reads(header + trial_line(skipped) + "\n"), doctest::Contains("out of sequence"), LogFormatError);
  TrialRecord wrong = r;
  wrong.delivered = plan.trials[0].pattern == PatternId::SD ? PatternId::MD : PatternId::SD;
  CHECK_THROWS_WITH_AS(reads(header + trial_line(wrong) + "\n"), doctest::Contains("differs from plan"), LogFormatError);
  TrialRecord backwards = r;
  backwards.stimulus_start_s = 2;
  CHECK_THROWS_AS(reads(header + trial_line(backwards) + "\n"), LogFormatError);
  CHECK_THROWS_AS(read_log(std::filesystem::path("/nonexistent/log.jsonl")), LogFormatError);
}

TEST_CASE("responders") {
  const SessionPlan plan = generate_session("P6", 2);
  PerfectResponder perfect;
  ConstantResponder always_ld(PatternId::LD);
  for (PatternId id : kAllPatterns) {
    CHECK(perfect.respond({plan, 0, id, false}) == id);
    CHECK(always_ld.respond({plan, 0, id, false}) == PatternId::LD);
  }

  ConfusionRates rates = ConfusionRates::Zero();
  for (int i = 0; i < kPatternCount; ++i) {
    rates(i, i) = 0.7;
    rates(i, (i + 1) % kPatternCount) = 0.3;
  }
  ConfusionResponder noisy(rates, 5, 10);
  for (PatternId id : kAllPatterns) {
    std::map<PatternId, int> got;
    for (int k = 0; k < 20; ++k) ++got[noisy.respond({plan, 0, id, false})];
    CHECK(got[id] == 14);
    CHECK(got[kAllPatterns[(index_of(id) + 1) % kPatternCount]] == 6);
  }
  ConfusionRates bad = rates;
  bad(0, 0) = 0.5;
  CHECK_THROWS_AS(ConfusionResponder(bad, 1), std::invalid_argument);

  std::istringstream answers("xyz sdv\n");
  std::ostringstream prompts;
  TerminalResponder tui(answers, prompts);
  CHECK(tui.respond({plan, 3, PatternId::SD, false}) == PatternId::SDV);
  CHECK(prompts.str().find("unrecognized answer 'xyz'") != std::string::npos);
  CHECK_THROWS_AS(tui.respond({plan, 4, PatternId::SD, false}), SessionError);
}

TEST_CASE("a perfect subject scores thirty of thirty") {
  LiveStack stack;
  LineClient c("127.0.0.1", stack.server->port());
  SpyLink spy(c);
  PerfectResponder perfect;
  const auto path = scratch("perfect.jsonl");
  const SessionPlan plan = generate_session("P1", 21);
  const SessionLog log = run_session(plan, spy, perfect, path, fast_options(), stack.cfg.entries());
  REQUIRE(log.complete());
  int correct = 0;
  for (const TrialRecord& r : log.trials) {
    correct += r.response == r.delivered;
    // Unthrottled device time runs ahead of the polling, so only a lower bound holds.
    CHECK(r.stimulus_end_s - r.stimulus_start_s >= nominal_duration(pattern_spec(r.delivered), StimulusConfig{}) - 0.01);
  }
  CHECK(correct == 30);
  REQUIRE(spy.vib_before.size() == 30);
  for (double v : spy.vib_before) CHECK(v == 0.0);
  // Device-time gap between consecutive stimuli.
  for (std::size_t i = 1; i < log.trials.size(); ++i) {
    CHECK(log.trials[i].stimulus_start_s - log.trials[i - 1].stimulus_end_s >= 0.1);
  }
  CHECK(read_log(path) == log);
}

TEST_CASE("a constant answer is right once per pattern block") {
  LiveStack stack;
  LineClient c("127.0.0.1", stack.server->port());
  ConstantResponder always_sd(PatternId::SD);
  const auto path = scratch("constant.jsonl");
  const SessionLog log = run_session(generate_session("P2", 22), c, always_sd, path, fast_options());
  int correct = 0;
  for (const TrialRecord& r : log.trials) correct += r.response == r.delivered;
  CHECK(correct == 5);
}

TEST_CASE("an interrupted session resumes where it stopped") {
  LiveStack stack;
  LineClient c("127.0.0.1", stack.server->port());
  PerfectResponder perfect;
  const auto path = scratch("resume.jsonl");
  const SessionPlan plan = generate_session("P3", 23);

  FlakyLink flaky(c, 10);
  CHECK_THROWS_AS(run_session(plan, flaky, perfect, path, fast_options()), SessionError);
  const SessionLog partial = read_log(path);
  CHECK_FALSE(partial.complete());
  CHECK_FALSE(partial.interrupted.empty());
  CHECK(partial.trials.size() == 10);

  const SessionLog log = run_session(plan, c, perfect, path, fast_options());
  CHECK(log.complete());
  CHECK(log.interrupted.empty());
  CHECK(log.trials.size() == 30);
  std::set<std::size_t> seen;
  for (const TrialRecord& r : log.trials) CHECK(seen.insert(r.index).second);
  CHECK(std::equal(partial.trials.begin(), partial.trials.end(), log.trials.begin()));

  CHECK_THROWS_AS(run_session(generate_session("P3", 24), c, perfect, path, fast_options()), SessionError);
}

TEST_CASE("reconstructed fixtures") {
  const auto logs = acceptance::table2_logs();
  CHECK(logs.size() == 6);
  for (const SessionLog& log : logs) CHECK(log.complete());
  for (const SessionLog& log : acceptance::perfect_logs()) {
    for (const TrialRecord& r : log.trials) CHECK(r.response == r.delivered);
  }
}
