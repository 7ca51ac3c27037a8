#include "glide/study.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <thread>

#include "glide/text.hpp"
#include "json.hpp"

namespace glide {
namespace {

using json = nlohmann::json;

// Unbiased index in [0, n) from raw 64-bit draws; the standard distributions
// are implementation-defined, this keeps plans identical across toolchains.
std::size_t uniform_below(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t range = n;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t draw = 0;
  do {
    draw = rng();
  } while (draw >= limit);
  return static_cast<std::size_t>(draw % range);
}

template <typename T>
void shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[uniform_below(rng, i)]);
}

PatternId id_from_json(const json& j, const char* what) {
  if (!j.is_string()) throw LogFormatError(std::string(what) + " must be a pattern id string");
  const auto id = parse_pattern_id(j.get<std::string>());
  if (!id) throw LogFormatError(std::string("unknown pattern id in ") + what + ": " + j.get<std::string>());
  return *id;
}

std::size_t training_count(const SessionPlan& plan) {
  return static_cast<std::size_t>(std::count_if(plan.trials.begin(), plan.trials.end(),
                                                [](const PlannedTrial& t) { return t.training; }));
}

}  // namespace

std::size_t SessionPlan::scoring_count() const { return trials.size() - training_count(*this); }

SessionPlan generate_session(const std::string& subject_id, std::uint64_t seed, bool training) {
  SessionPlan plan;
  plan.subject_id = subject_id;
  plan.seed = seed;
  plan.training = training;
  if (training) {
    for (int rep = 0; rep < kRepetitions; ++rep) {
      for (PatternId id : kAllPatterns) plan.trials.push_back({id, true});
    }
  }
  std::vector<PatternId> block;
  for (PatternId id : kAllPatterns) block.insert(block.end(), kRepetitions, id);
  std::mt19937_64 rng(seed);
  shuffle(block, rng);
  for (PatternId id : block) plan.trials.push_back({id, false});
  return plan;
}

std::string header_line(const SessionLog& log) {
  json plan = json::array();
  for (const PlannedTrial& t : log.plan.trials) plan.push_back(std::string(to_string(t.pattern)));
  json config = json::array();
  for (const auto& [k, v] : log.config) config.push_back(json::array({k, v}));
  json j = {{"record", "session"},
            {"version", log.software_version},
            {"subject", log.plan.subject_id},
            {"seed", log.plan.seed},
            {"training", log.plan.training},
            {"training_trials", training_count(log.plan)},
            {"plan", plan},
            {"config", config}};
  return j.dump();
}

std::string trial_line(const TrialRecord& rec) {
  json j = {{"record", "trial"},
            {"index", rec.index},
            {"training", rec.training},
            {"delivered", std::string(to_string(rec.delivered))},
            {"response", std::string(to_string(rec.response))},
            {"stimulus_start", rec.stimulus_start_s},
            {"stimulus_end", rec.stimulus_end_s},
            {"response_time", rec.response_s}};
  return j.dump();
}

std::string status_line(const std::string& reason) {
  return json{{"record", "status"}, {"state", "interrupted"}, {"reason", reason}}.dump();
}

void write_log(std::ostream& out, const SessionLog& log) {
  out << header_line(log) << '\n';
  for (const TrialRecord& rec : log.trials) out << trial_line(rec) << '\n';
  if (!log.interrupted.empty()) out << status_line(log.interrupted) << '\n';
}

SessionLog read_log(std::istream& in) {
  SessionLog log;
  bool have_header = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      const std::string kind = j.at("record").get<std::string>();
      if (kind == "session") {
        if (have_header) throw LogFormatError("duplicate session header");
        have_header = true;
        log.software_version = j.at("version").get<std::string>();
        log.plan.subject_id = j.at("subject").get<std::string>();
        log.plan.seed = j.at("seed").get<std::uint64_t>();
        log.plan.training = j.at("training").get<bool>();
        const auto n_training = j.at("training_trials").get<std::size_t>();
        std::size_t i = 0;
        for (const json& id : j.at("plan")) log.plan.trials.push_back({id_from_json(id, "plan"), i++ < n_training});
        for (const json& kv : j.at("config")) log.config.emplace_back(kv.at(0).get<std::string>(), kv.at(1).get<std::string>());
      } else if (kind == "trial") {
        if (!have_header) throw LogFormatError("trial before session header");
        TrialRecord rec;
        rec.index = j.at("index").get<std::size_t>();
        rec.training = j.at("training").get<bool>();
        rec.delivered = id_from_json(j.at("delivered"), "delivered");
        rec.response = id_from_json(j.at("response"), "response");
        rec.stimulus_start_s = j.at("stimulus_start").get<double>();
        rec.stimulus_end_s = j.at("stimulus_end").get<double>();
        rec.response_s = j.at("response_time").get<double>();
        if (rec.index != log.trials.size()) throw LogFormatError("trial index out of sequence");
        if (rec.index >= log.plan.trials.size()) throw LogFormatError("more trials than planned");
        if (rec.delivered != log.plan.trials[rec.index].pattern) throw LogFormatError("delivered pattern differs from plan");
        if (rec.stimulus_end_s < rec.stimulus_start_s) throw LogFormatError("stimulus ends before it starts");
        log.trials.push_back(rec);
        log.interrupted.clear();
      } else if (kind == "status") {
        log.interrupted = j.at("reason").get<std::string>();
      } else {
        throw LogFormatError("unknown record kind '" + kind + "'");
      }
    } catch (const json::exception& e) {
      throw LogFormatError("log line " + std::to_string(lineno) + ": " + e.what());
    } catch (const LogFormatError& e) {
      throw LogFormatError("log line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_header) throw LogFormatError("missing session header");
  return log;
}

SessionLog read_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LogFormatError("cannot open " + path.string());
  return read_log(in);
}

ConfusionResponder::ConfusionResponder(const ConfusionRates& rates, std::uint64_t seed, int deck_size)
    : decks_(kPatternCount), cursor_(kPatternCount, 0), rng_(seed) {
  if (deck_size < 1) throw std::invalid_argument("deck size must be positive");
  for (int row = 0; row < kPatternCount; ++row) {
    const auto r = rates.row(row);
    if ((r.array() < 0).any() || std::abs(r.sum() - 1.0) > 1e-9) {
      throw std::invalid_argument("confusion rates row " + std::to_string(row) + " must be a distribution");
    }
    std::vector<int> cards(kPatternCount);
    std::vector<std::pair<double, int>> remainders;
    int dealt = 0;
    for (int col = 0; col < kPatternCount; ++col) {
      const double exact = r(col) * deck_size;
      cards[col] = static_cast<int>(std::floor(exact + 1e-9));
      dealt += cards[col];
      remainders.emplace_back(exact - cards[col], col);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (int k = 0; dealt < deck_size; ++k, ++dealt) ++cards[remainders[k].second];
    for (int col = 0; col < kPatternCount; ++col) decks_[row].insert(decks_[row].end(), cards[col], kAllPatterns[col]);
    reshuffle(row);
  }
}

void ConfusionResponder::reshuffle(int row) {
  shuffle(decks_[row], rng_);
  cursor_[row] = 0;
}

PatternId ConfusionResponder::respond(const TrialPrompt& prompt) {
  const int row = index_of(prompt.delivered);
  if (cursor_[row] == decks_[row].size()) reshuffle(row);
  return decks_[row][cursor_[row]++];
}

PatternId TerminalResponder::respond(const TrialPrompt& prompt) {
  for (;;) {
    out_ << (prompt.training ? "[training] " : "") << "trial " << prompt.index + 1 << "/" << prompt.plan.trials.size()
         << " answer (SD MD LD SDV MDV LDV): " << std::flush;
    std::string token;
    if (!(in_ >> token)) throw SessionError("no response: end of input");
    if (auto id = parse_pattern_id(token)) return *id;
    out_ << "unrecognized answer '" << token << "'\n";
  }
}

namespace {

struct DeviceStatus {
  double t{0};
  bool busy{false};
  double f1{0};
  double f2{0};
};

protocol::Reply expect_ok(DeviceLink& link, const protocol::Command& cmd) {
  protocol::Reply r = link.request(cmd);
  if (!r.ok) {
    std::string sent = protocol::serialize(cmd);
    sent.pop_back();
    throw SessionError("device answered ERR " + std::to_string(r.code) + " " + r.text + " to " + sent);
  }
  return r;
}

DeviceStatus query_status(DeviceLink& link) {
  const protocol::Reply r = expect_ok(link, protocol::Status{});
  const auto t = protocol::field(r.text, "t");
  const auto busy = protocol::field(r.text, "busy");
  const auto f1 = protocol::field(r.text, "f1");
  const auto f2 = protocol::field(r.text, "f2");
  if (!t || !busy || !f1 || !f2) throw SessionError("malformed STATUS payload: " + r.text);
  return {*t, *busy != 0.0, *f1, *f2};
}

DeviceStatus wait_idle(DeviceLink& link, const RunOptions& opt) {
  for (;;) {
    const DeviceStatus st = query_status(link);
    if (!st.busy) return st;
    std::this_thread::sleep_for(opt.poll_interval);
  }
}

DeviceStatus wait_until(DeviceLink& link, double t_device, const RunOptions& opt) {
  for (;;) {
    const DeviceStatus st = query_status(link);
    if (st.t >= t_device) return st;
    std::this_thread::sleep_for(opt.poll_interval);
  }
}

}  // namespace

SessionLog run_session(const SessionPlan& plan, DeviceLink& link, Responder& responder,
                       const std::filesystem::path& log_path, const RunOptions& options,
                       const std::vector<std::pair<std::string, std::string>>& config_snapshot) {
  SessionLog log;
  const bool resume = std::filesystem::exists(log_path) && std::filesystem::file_size(log_path) > 0;
  if (resume) {
    log = read_log(log_path);
    if (!(log.plan == plan)) throw SessionError("existing log " + log_path.string() + " belongs to a different plan");
  } else {
    log.plan = plan;
    log.config = config_snapshot;
  }
  std::ofstream out(log_path, std::ios::app);
  if (!out) throw SessionError("cannot write " + log_path.string());
  if (!resume) out << header_line(log) << '\n' << std::flush;

  try {
    for (std::size_t i = log.trials.size(); i < plan.trials.size(); ++i) {
      const PlannedTrial& planned = plan.trials[i];

      expect_ok(link, protocol::Stop{});
      expect_ok(link, protocol::Goto{{0.0, options.baseline_force_n}});
      DeviceStatus st = wait_idle(link, options);
      if (st.f1 != 0.0 || st.f2 != 0.0) throw SessionError("vibration still on before trial " + std::to_string(i));
      if (options.inter_trial_gap_s > 0) st = wait_until(link, st.t + options.inter_trial_gap_s, options);

      const protocol::Reply started = expect_ok(link, protocol::PlayPattern{planned.pattern});
      const double t0 = protocol::field(started.text, "t").value_or(st.t);
      const double start_in = protocol::field(started.text, "start_in").value_or(0.0);
      st = wait_idle(link, options);

      TrialRecord rec;
      rec.index = i;
      rec.training = planned.training;
      rec.delivered = planned.pattern;
      rec.stimulus_start_s = t0 + start_in;
      rec.stimulus_end_s = std::max(st.t, rec.stimulus_start_s);
      rec.response = responder.respond({plan, i, planned.pattern, planned.training});
      rec.response_s = query_status(link).t;

      log.trials.push_back(rec);
      log.interrupted.clear();
      out << trial_line(rec) << '\n' << std::flush;
    }
    expect_ok(link, protocol::Stop{});
  } catch (const std::exception& e) {
    log.interrupted = e.what();
    out << status_line(log.interrupted) << '\n' << std::flush;
    throw SessionError("session interrupted at trial " + std::to_string(log.trials.size()) + ": " + e.what());
  }
  return log;
}

}  // namespace glide
