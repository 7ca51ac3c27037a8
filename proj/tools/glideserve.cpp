#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <pthread.h>

#include "CLI11.hpp"
#include "acceptance.hpp"
#include "glide/client.hpp"
#include "glide/config.hpp"
#include "glide/renderers.hpp"
#include "glide/server.hpp"
#include "glide/stats.hpp"
#include "glide/study.hpp"
#include "glide/text.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace glide;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

// Failures the user can fix by changing flags or the config file.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int fail(const char* kind, const std::string& detail, int code) {
  std::cerr << "error=" << kind << " exit=" << code << " detail=" << nlohmann::json(detail).dump() << std::endl;
  return code;
}

struct Globals {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string host;
  int port{-1};
};

StackConfig load_config(const Globals& g) {
  StackConfig cfg;
  std::string path = g.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("GLIDESERVE_CONFIG")) path = env;
  }
  if (!path.empty()) cfg.load_file(path);
  for (const std::string& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!g.host.empty()) cfg.server.host = g.host;
  if (g.port >= 0) cfg.set("port", std::to_string(g.port));
  cfg.validate();
  return cfg;
}

int cmd_serve(const StackConfig& cfg) {
  // Block the shutdown signals before any thread starts so they all inherit
  // the mask and only sigwait below sees them.
  sigset_t stop_signals;
  sigemptyset(&stop_signals);
  sigaddset(&stop_signals, SIGINT);
  sigaddset(&stop_signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

  DeviceHost host(cfg);
  host.start();
  Server server(host, cfg.server, cfg.limits());
  server.start();
  std::cout << "listening host=" << cfg.server.host << " port=" << server.port() << " ws_port=" << server.ws_port()
            << std::endl;
  int sig = 0;
  sigwait(&stop_signals, &sig);
  server.stop();
  host.stop();
  std::cerr << "stopped on signal " << sig << std::endl;
  return kExitOk;
}

int cmd_play(const StackConfig& cfg, const std::string& pattern, bool wait) {
  LineClient link(cfg.server.host, cfg.server.port);
  const protocol::Reply r = link.request_line("PATTERN " + pattern);
  if (!r.ok) return fail("device", "ERR " + std::to_string(r.code) + " " + r.text, kExitRuntime);
  std::cout << "pattern=" << pattern << " " << r.text << std::endl;
  if (wait) {
    for (;;) {
      const protocol::Reply st = link.request(protocol::Status{});
      if (protocol::field(st.text, "busy").value_or(0) == 0) break;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
  }
  return kExitOk;
}

int cmd_replay(const StackConfig& cfg, const std::string& path, double speed) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open timeline " + path);
  std::vector<TimelineEvent> events;
  try {
    events = parse_timeline(in);
  } catch (const std::runtime_error& e) {
    throw UsageError(path + ": " + e.what());
  }
  const LinkageGeometryd geom = cfg.geometry();
  LineClient link(cfg.server.host, cfg.server.port);
  const auto start = std::chrono::steady_clock::now();
  for (const TimelineEvent& ev : events) {
    if (speed > 0) {
      std::this_thread::sleep_until(start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                                std::chrono::duration<double>(ev.t_s / speed)));
    }
    const HapticOutput out = render(ev, geom, cfg.stimulus, cfg.renderer);
    for (const protocol::Command& cmd : to_commands(out)) {
      const protocol::Reply r = link.request(cmd);
      std::string sent = protocol::serialize(cmd);
      sent.pop_back();
      if (!r.ok) return fail("device", "ERR " + std::to_string(r.code) + " " + r.text + " to " + sent, kExitRuntime);
      std::cout << "t=" << text::fixed(ev.t_s) << " " << sent << std::endl;
    }
  }
  return kExitOk;
}

ConfusionRates read_rates(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open confusion rates " + path);
  ConfusionRates rates = ConfusionRates::Zero();
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto tokens = text::split_ws(line);
    if (tokens.empty()) continue;
    if (row == kPatternCount || tokens.size() != kPatternCount) {
      throw UsageError(path + ": expected 6 rows of 6 numbers");
    }
    for (int col = 0; col < kPatternCount; ++col) {
      double v = 0;
      if (!text::parse_double(tokens[col], v) || v < 0) throw UsageError(path + ": bad entry '" + std::string(tokens[col]) + "'");
      rates(row, col) = v;
    }
    const double sum = rates.row(row).sum();
    if (sum <= 0) throw UsageError(path + ": row " + std::to_string(row + 1) + " is all zero");
    rates.row(row) /= sum;  // counts or percentages both work
    ++row;
  }
  if (row != kPatternCount) throw UsageError(path + ": expected 6 rows of 6 numbers");
  return rates;
}

std::unique_ptr<Responder> make_responder(const std::string& spec, std::uint64_t seed) {
  if (spec == "tui") return std::make_unique<TerminalResponder>(std::cin, std::cerr);
  if (spec == "perfect") return std::make_unique<PerfectResponder>();
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "constant") {
    const auto id = parse_pattern_id(arg);
    if (!id) throw UsageError("constant responder needs a pattern id, got '" + arg + "'");
    return std::make_unique<ConstantResponder>(*id);
  }
  if (kind == "confusion") return std::make_unique<ConfusionResponder>(read_rates(arg), seed);
  throw UsageError("unknown responder '" + spec + "' (tui, perfect, constant:<id>, confusion:<file>)");
}

struct SessionArgs {
  std::string subject;
  std::uint64_t seed{0};
  std::uint64_t responder_seed{1};
  std::string responder{"tui"};
  std::string log;
  bool training{false};
  double gap{-1};
};

int cmd_session(const StackConfig& cfg, const SessionArgs& a) {
  auto responder = make_responder(a.responder, a.responder_seed);
  const SessionPlan plan = generate_session(a.subject, a.seed, a.training);
  const fs::path log_path = a.log.empty() ? fs::path(a.subject + ".jsonl") : fs::path(a.log);
  RunOptions opt;
  opt.inter_trial_gap_s = a.gap >= 0 ? a.gap : cfg.inter_trial_gap_s;
  opt.baseline_force_n = cfg.stimulus.baseline_force_n;
  LineClient link(cfg.server.host, cfg.server.port);
  const SessionLog log = run_session(plan, link, *responder, log_path, opt, cfg.entries());
  long correct = 0;
  long scored = 0;
  for (const TrialRecord& r : log.trials) {
    if (r.training) continue;
    ++scored;
    correct += r.response == r.delivered;
  }
  std::cout << "subject=" << a.subject << " trials=" << log.trials.size() << " correct=" << correct << "/" << scored
            << " log=" << log_path.string() << std::endl;
  return kExitOk;
}

int cmd_analyze(const std::vector<std::string>& paths) {
  std::vector<SessionLog> logs;
  for (const std::string& p : paths) {
    if (fs::is_directory(p)) {
      std::vector<fs::path> files;
      for (const auto& entry : fs::directory_iterator(p)) {
        if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
      }
      std::sort(files.begin(), files.end());
      for (const fs::path& f : files) logs.push_back(read_log(f));
    } else {
      logs.push_back(read_log(fs::path(p)));
    }
  }
  if (logs.empty()) throw UsageError("no session logs found");
  std::cout << stats::format_report(stats::analyze(logs));
  return kExitOk;
}

int cmd_selftest(const std::string& work_dir, std::uint64_t seed) {
  acceptance::Options opt;
  opt.work_dir = work_dir.empty() ? fs::temp_directory_path() / "glideserve_selftest" : fs::path(work_dir);
  opt.seed = seed;
  bool all = true;
  for (int id = 1; id <= acceptance::kCriterionCount; ++id) {
    const auto r = acceptance::run_criterion(id, opt);
    std::cout << acceptance::format(r) << std::endl;
    all = all && r.passed;
  }
  return all ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Haptic forearm display: simulator server, pattern player, study runner and analysis"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("-c,--config", g.config_path, "key=value config file (default: $GLIDESERVE_CONFIG)");
  app.add_option("--set", g.overrides, "override one config key, key=value (repeatable)");
  app.add_option("--host", g.host, "server address");
  app.add_option("-p,--port", g.port, "server TCP port");

  auto* serve = app.add_subcommand("serve", "run the simulated device and the protocol server until SIGINT");
  auto* show = app.add_subcommand("config", "print the merged configuration as key=value lines");

  std::string pattern;
  bool wait = false;
  auto* play = app.add_subcommand("play", "play one pattern on a running server");
  play->add_option("--pattern", pattern, "SD MD LD SDV MDV LDV")->required();
  play->add_flag("--wait", wait, "return only when the device is idle again");

  std::string timeline;
  double speed = 1.0;
  auto* replay = app.add_subcommand("replay", "drive a running server from an environment timeline");
  replay->add_option("timeline", timeline, "timeline file")->required();
  replay->add_option("--speed", speed, "time multiplier, 0 sends every event at once")->check(CLI::NonNegativeNumber);

  SessionArgs sa;
  auto* session = app.add_subcommand("session", "run one subject's identification session");
  session->add_option("--subject", sa.subject, "subject id")->required();
  session->add_option("--seed", sa.seed, "trial order seed")->required();
  session->add_option("--responder", sa.responder, "tui | perfect | constant:<id> | confusion:<rates file>");
  session->add_option("--responder-seed", sa.responder_seed, "seed for the confusion responder");
  session->add_option("--log", sa.log, "session log path (default <subject>.jsonl); an existing log resumes");
  session->add_flag("--training", sa.training, "prepend the unscored training block");
  session->add_option("--gap", sa.gap, "device seconds between trials (default from config)");

  std::vector<std::string> paths;
  auto* analyze = app.add_subcommand("analyze", "confusion matrix, ANOVA and paired t-tests over session logs");
  analyze->add_option("paths", paths, "log files or directories of *.jsonl")->required();

  std::string work_dir;
  std::uint64_t selftest_seed = 20240917;
  auto* selftest = app.add_subcommand("selftest", "run the acceptance suite headlessly");
  selftest->add_option("--work-dir", work_dir, "scratch directory");
  selftest->add_option("--seed", selftest_seed, "base seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), kExitConfig);
  }

  try {
    if (*analyze) return cmd_analyze(paths);
    if (*selftest) return cmd_selftest(work_dir, selftest_seed);
    const StackConfig cfg = load_config(g);
    if (*serve) return cmd_serve(cfg);
    if (*show) {
      for (const auto& [k, v] : cfg.entries()) std::cout << k << "=" << v << "\n";
      return kExitOk;
    }
    if (*play) return cmd_play(cfg, pattern, wait);
    if (*replay) return cmd_replay(cfg, timeline, speed);
    if (*session) return cmd_session(cfg, sa);
  } catch (const ConfigError& e) {
    return fail("config", e.what(), kExitConfig);
  } catch (const UsageError& e) {
    return fail("usage", e.what(), kExitConfig);
  } catch (const ConnectionError& e) {
    return fail("connection", e.what(), kExitRuntime);
  } catch (const SessionError& e) {
    return fail("session", e.what(), kExitRuntime);
  } catch (const LogFormatError& e) {
    return fail("log", e.what(), kExitRuntime);
  } catch (const std::exception& e) {
    return fail("runtime", e.what(), kExitRuntime);
  }
  return kExitOk;
}
