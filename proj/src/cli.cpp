#include "mrsim/cli.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "mrsim/parallel.hpp"

namespace mrsim::cli {

std::string format_g9(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string git_blob_sha1(std::string_view content) {
  std::string blob = "blob " + std::to_string(content.size());
  blob.push_back('\0');
  blob.append(content);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(blob.data(), blob.size(), md, &len, EVP_sha1(), nullptr) != 1) {
    throw std::runtime_error("SHA-1 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex.push_back(kHex[md[i] >> 4]);
    hex.push_back(kHex[md[i] & 0xF]);
  }
  return hex;
}

std::string echo_text(const RunConfig& rc) {
  std::string text;
  for (const auto& [k, v] : rc.echo()) text += k + " = " + v + "\n";
  return text;
}

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> runs;
  std::optional<int> jobs;
};

class Output {
 public:
  Output(std::filesystem::path dir, std::string command, const RunConfig& rc)
      : dir_(std::move(dir)), command_(std::move(command)), rc_(rc), start_(std::chrono::steady_clock::now()) {
    std::filesystem::create_directories(dir_);
  }

  void write(const std::string& name, const std::string& content) {
    std::ofstream f(dir_ / name, std::ios::binary);
    f << content;
    if (!f) throw std::runtime_error("cannot write " + (dir_ / name).string());
    files_.push_back(name);
  }

  // Written last; its presence marks a complete run.
  void finish() {
    const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start_;
    nlohmann::json j;
    j["command"] = command_;
    j["scenario"] = std::string(scenario_name(rc_.scenario));
    j["seed"] = rc_.seed();
    nlohmann::json cfg = nlohmann::json::object();
    for (const auto& [k, v] : rc_.echo()) cfg[k] = v;
    j["config"] = cfg;
    j["config_sha1"] = git_blob_sha1(echo_text(rc_));
    j["files"] = files_;
    j["duration_s"] = took.count();
    std::ofstream f(dir_ / "manifest.json", std::ios::binary);
    f << j.dump(2) << "\n";
    if (!f) throw std::runtime_error("cannot write manifest");
  }

  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
  std::string command_;
  RunConfig rc_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::string> files_;
};

RunConfig resolve(Scenario scenario, const Options& o) {
  RunConfig rc;
  if (!o.config.empty()) {
    if (!std::filesystem::exists(o.config)) throw UsageError("config file '" + o.config + "' not found");
    rc = load_config(scenario, o.config);
  } else {
    rc = make_config(scenario, {});
  }
  if (o.seed) rc.set_seed(*o.seed);
  if (o.out) rc.out = *o.out;
  if (const char* env = std::getenv("MRSIM_OUT"); env && *env) rc.out = env;
  if (o.runs) rc.overtake.runs = *o.runs;
  if (o.jobs) rc.jobs = *o.jobs;
  rc.validate();
  return rc;
}

int worker_count(const RunConfig& rc) {
  if (rc.jobs > 0) return rc.jobs;
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

// ------------------------------------------------------------------ cooploc

struct CellKey {
  std::string protocol;
  double epsilon;
  std::string delay_mode;
  std::string estimator;
  auto tie() const { return std::tie(protocol, epsilon, delay_mode, estimator); }
};

CellKey key_of(const cooploc::Config& c) {
  return {std::string(cooploc::link_protocol_name(c.protocol)), c.epsilon, std::string(cooploc::delay_mode_name(c.delay_mode)),
          std::string(cooploc::estimator_name(c.estimator))};
}

void write_cooploc(Output& out, std::vector<cooploc::SweepCell> cells) {
  std::sort(cells.begin(), cells.end(),
            [](const auto& a, const auto& b) { return key_of(a.config).tie() < key_of(b.config).tie(); });
  std::string series = "seed,protocol,epsilon,delay_mode,estimator,t,err\n";
  std::string summary =
      "seed,protocol,epsilon,delay_mode,estimator,tail_mean_err,mean_inorder_delay,delivery_ratio,throughput\n";
  for (const auto& cell : cells) {
    const CellKey k = key_of(cell.config);
    const std::string prefix = std::to_string(cell.config.seed) + "," + k.protocol + "," + format_g9(k.epsilon) + "," +
                               k.delay_mode + "," + k.estimator + ",";
    for (std::size_t t = 0; t < cell.result.err.size(); ++t) {
      series += prefix + std::to_string(t) + "," + format_g9(cell.result.err[t]) + "\n";
    }
    const auto& m = cell.result.delivery;
    summary += prefix + format_g9(cell.result.tail_mean_err) + "," + format_g9(m.mean_in_order_delay) + "," +
               format_g9(m.delivery_ratio) + "," + format_g9(m.throughput) + "\n";
  }
  out.write("cooploc_series.csv", series);
  out.write("cooploc_summary.csv", summary);
}

std::vector<cooploc::Config> sweep_cells(const RunConfig& rc) {
  std::vector<cooploc::Config> cells;
  const cooploc::Config& base = rc.cooploc;
  if (rc.sweep.references) {
    cooploc::Config c = base;
    c.protocol = cooploc::LinkProtocol::kNone;
    c.epsilon = 0.0;
    c.delay_mode = cooploc::DelayMode::kNone;
    c.estimator = DelayHandling::kIree;
    cells.push_back(c);
    c.delay_mode = cooploc::DelayMode::kOneWay;
    c.estimator = DelayHandling::kNaive;
    cells.push_back(c);
    c.estimator = DelayHandling::kIree;
    cells.push_back(c);
    c.epsilon = 1.0;
    cells.push_back(c);
  }
  for (double eps : rc.sweep.epsilons) {
    for (cooploc::LinkProtocol p : rc.sweep.protocols) {
      cooploc::Config c = base;
      c.epsilon = eps;
      c.protocol = p;
      cells.push_back(c);
    }
  }
  return cells;
}

int cooploc_run(const RunConfig& rc, std::ostream& os) {
  Output out(rc.out, "cooploc run", rc);
  cooploc::SweepCell cell{rc.cooploc, cooploc::run(rc.cooploc)};
  os << "tail_mean_err " << format_g9(cell.result.tail_mean_err) << "\n";
  write_cooploc(out, {cell});
  out.finish();
  return 0;
}

int cooploc_sweep(const RunConfig& rc, std::ostream& os) {
  Output out(rc.out, "cooploc sweep", rc);
  const std::vector<cooploc::Config> configs = sweep_cells(rc);
  std::vector<cooploc::SweepCell> cells = parallel_map(configs.size(), worker_count(rc), [&](std::size_t i) {
    return cooploc::SweepCell{configs[i], cooploc::run(configs[i])};
  });
  for (const auto& c : cells) {
    const CellKey k = key_of(c.config);
    os << k.protocol << " eps=" << format_g9(k.epsilon) << " " << k.delay_mode << " " << k.estimator
       << " tail_mean_err=" << format_g9(c.result.tail_mean_err) << "\n";
  }
  write_cooploc(out, std::move(cells));
  out.finish();
  return 0;
}

// ----------------------------------------------------------------- overtake

int overtake_deadline(const RunConfig& rc, std::ostream& os) {
  Output out(rc.out, "overtake deadline", rc);
  const overtake::DeadlineScan scan = overtake::compute_deadline(rc.overtake);
  std::string csv = "t,safe\n";
  for (std::size_t t = 0; t < scan.safe.size(); ++t) csv += std::to_string(t) + "," + (scan.safe[t] ? "1" : "0") + "\n";
  out.write("overtake_deadline.csv", csv);
  os << "deadline_slot " << scan.deadline << "\nmonotone " << (scan.monotone ? "true" : "false") << "\n";
  out.finish();
  return 0;
}

std::string slot_or_empty(const std::optional<int>& s) { return s ? std::to_string(*s) : std::string(); }

int overtake_montecarlo(const RunConfig& rc, std::ostream& os) {
  Output out(rc.out, "overtake montecarlo", rc);
  std::vector<std::pair<std::string, overtake::Reliability>> results;
  for (transport::Protocol p : rc.overtake_protocols) {
    overtake::Config c = rc.overtake;
    c.protocol = p;
    results.emplace_back(std::string(transport::protocol_name(p)), overtake::reliability_latency(c, worker_count(rc)));
  }
  std::sort(results.begin(), results.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::string runs = "seed,run_id,protocol,t25_slot,abort_slot,outcome,deadline_slot\n";
  std::string cdf = "protocol,t,cdf\n";
  for (const auto& [name, rel] : results) {
    for (const overtake::RunOutcome& r : rel.runs) {
      runs += std::to_string(rc.overtake.seed) + "," + std::to_string(r.run_id) + "," + name + "," + slot_or_empty(r.t25) +
              "," + slot_or_empty(r.abort_slot) + "," + std::string(overtake::outcome_name(r.outcome)) + "," +
              std::to_string(rel.deadline) + "\n";
    }
    for (std::size_t t = 0; t < rel.cdf.size(); ++t) cdf += name + "," + std::to_string(t) + "," + format_g9(rel.cdf[t]) + "\n";
    os << name << " Pr[T25<=" << rel.deadline << "] " << format_g9(rel.at_deadline) << "\n";
  }
  out.write("overtake_runs.csv", runs);
  out.write("overtake_cdf.csv", cdf);
  out.finish();
  return 0;
}

// ----------------------------------------------------------------- validate

int validate(const std::string& path, std::ostream& os) {
  if (!std::filesystem::exists(path)) throw UsageError("config file '" + path + "' not found");
  std::ifstream in(path);
  const KeyValues kv = parse_key_values(in);
  const auto named = std::find_if(kv.begin(), kv.end(), [](const auto& p) { return p.first == "scenario.name"; });
  if (named != kv.end()) {
    make_config(parse_scenario(named->second), kv);
    os << "ok " << named->second << "\n";
    return 0;
  }
  try {
    make_config(Scenario::kCooploc, kv);
    os << "ok cooploc\n";
  } catch (const std::invalid_argument&) {
    make_config(Scenario::kOvertake, kv);
    os << "ok overtake\n";
  }
  return 0;
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "key = value config file");
  cmd->add_option("--seed", o.seed, "master seed (overrides scenario.seed)");
  cmd->add_option("--out", o.out, "output directory (MRSIM_OUT overrides)");
  cmd->add_option("--jobs", o.jobs, "worker threads, 0 for all cores")->check(CLI::NonNegativeNumber);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-robot and vehicular networked-estimation simulator", "mrsim"};
  app.require_subcommand(1);
  Options o;

  CLI::App* coop = app.add_subcommand("cooploc", "cooperative localization")->require_subcommand(1);
  CLI::App* coop_run = coop->add_subcommand("run", "one run of the configured cell");
  CLI::App* coop_sweep = coop->add_subcommand("sweep", "erasure x protocol grid plus reference runs");
  CLI::App* ot = app.add_subcommand("overtake", "safety-critical overtaking")->require_subcommand(1);
  CLI::App* ot_deadline = ot->add_subcommand("deadline", "abort deadline scan");
  CLI::App* ot_mc = ot->add_subcommand("montecarlo", "reliability-latency Monte-Carlo");
  CLI::App* val = app.add_subcommand("validate", "check a config file and exit");
  for (CLI::App* c : {coop_run, coop_sweep, ot_deadline, ot_mc}) add_common(c, o);
  ot_mc->add_option("--runs", o.runs, "Monte-Carlo runs")->check(CLI::PositiveNumber);
  val->add_option("--config", o.config, "key = value config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  CLI::App* leaf = val;
  for (CLI::App* c : {coop_run, coop_sweep, ot_deadline, ot_mc}) {
    if (c->parsed()) leaf = c;
  }
  try {
    if (val->parsed()) return validate(o.config, out);
    if (coop_run->parsed()) return cooploc_run(resolve(Scenario::kCooploc, o), out);
    if (coop_sweep->parsed()) return cooploc_sweep(resolve(Scenario::kCooploc, o), out);
    if (ot_deadline->parsed()) return overtake_deadline(resolve(Scenario::kOvertake, o), out);
    if (ot_mc->parsed()) return overtake_montecarlo(resolve(Scenario::kOvertake, o), out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n" << leaf->help();
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << app.help();
  return 2;
}

}  // namespace mrsim::cli
