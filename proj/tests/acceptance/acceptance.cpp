// One PASS/FAIL line per acceptance criterion.
//
//   acceptance [--only id[,id...]] [--expect-fail id[,id...]]
//
// Exit status is nonzero when a criterion fails that was not listed in
// --expect-fail, or when a listed one passes.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mrsim/cli.hpp"
#include "mrsim/cooploc.hpp"
#include "mrsim/gf256.hpp"
#include "mrsim/overtake.hpp"
#include "mrsim/parallel.hpp"
#include "mrsim/rlnc.hpp"
#include "mrsim/transport.hpp"
#include "support/ekf_oracle.hpp"

using namespace mrsim;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int workers() { return std::max(1, static_cast<int>(std::thread::hardware_concurrency())); }

// ------------------------------------------------------------------ GF/RLNC

// Shift-and-add multiply modulo x^8 + x^4 + x^3 + x + 1.
std::uint8_t poly_mul(std::uint8_t a, std::uint8_t b) {
  unsigned acc = 0;
  for (int i = 0; i < 8; ++i) {
    if (b & (1u << i)) acc ^= static_cast<unsigned>(a) << i;
  }
  for (int bit = 14; bit >= 8; --bit) {
    if (acc & (1u << bit)) acc ^= 0x11Bu << (bit - 8);
  }
  return static_cast<std::uint8_t>(acc);
}

Verdict gf_rlnc() {
  using gf::Element;
  const auto start = std::chrono::steady_clock::now();
  int bad = 0;
  for (int a = 0; a < 256; ++a) {
    for (int b = 0; b < 256; ++b) {
      if (gf::mul(Element(a), Element(b)).value != poly_mul(a, b)) ++bad;
    }
  }
  int inverses = 0;
  for (int a = 1; a < 256; ++a) {
    int brute = -1;
    for (int b = 1; b < 256; ++b) {
      if (poly_mul(a, b) == 1) brute = b;
    }
    if (gf::inv(Element(a)).value == brute && (Element(a) * gf::inv(Element(a))).value == 1) ++inverses;
  }
  int axioms = 0;
  for (int a = 0; a < 256; ++a) {
    for (int b = 0; b < 256; ++b) {
      const Element ea(a), eb(b);
      if (ea * eb != eb * ea || ea + eb != eb + ea) ++axioms;
      for (int c = 0; c < 256; c += 1) {
        const Element ec(c);
        if (ea * (eb + ec) != ea * eb + ea * ec) ++axioms;
        if ((ea * eb) * ec != ea * (eb * ec)) ++axioms;
      }
    }
  }

  std::mt19937_64 rng(2024);
  int decoded = 0;
  for (int w = 0; w < 1000; ++w) {
    const std::size_t k = 1 + rng() % 32;
    const std::size_t len = 1 + rng() % 256;
    std::vector<Bytes> src(k, Bytes(len));
    for (auto& p : src) {
      for (auto& byte : p) byte = static_cast<std::uint8_t>(rng());
    }
    rlnc::Decoder dec(len);
    std::vector<rlnc::Decoder::Released> got;
    for (std::size_t n = 0; n < k + 64 && got.size() < k; ++n) {
      rlnc::CodedPacket pkt;
      pkt.coefficients.resize(k);
      for (auto& c : pkt.coefficients) c = Element(static_cast<std::uint8_t>(rng()));
      pkt.payload = rlnc::encode(src, pkt.coefficients);
      auto res = dec.absorb(pkt);
      for (auto& r : res.released) got.push_back(std::move(r));
    }
    bool ok = got.size() == k;
    for (std::size_t i = 0; ok && i < k; ++i) ok = got[i].seq == i && got[i].payload == src[i];
    if (ok) ++decoded;
  }
  const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
  Verdict v;
  v.pass = bad == 0 && inverses == 255 && axioms == 0 && decoded == 1000 && took.count() < 5.0;
  v.detail = "mul mismatches " + std::to_string(bad) + ", exact inverses " + std::to_string(inverses) +
             "/255, axiom violations " + std::to_string(axioms) + ", windows decoded " + std::to_string(decoded) +
             "/1000, " + fmt("%.2f s", took.count()) + " (limit 5 s)";
  return v;
}

// --------------------------------------------------------------------- beta

Verdict beta_formula() {
  const int frozen[11] = {2, 2, 2, 3, 3, 3, 4, 5, 7, 7, 7};
  std::string formula_bad, table_bad;
  for (int k = 0; k <= 10; ++k) {
    // Exact in hundredths: ceil(100 / max(100 - 10k - 11, 15)).
    const int den = std::max(100 - 10 * k - 11, 15);
    const int exact = (100 + den - 1) / den;
    const int got = transport::compute_beta(k / 10.0, 0.11, 0.15);
    if (got != exact) formula_bad += " eps=0." + std::to_string(k) + "(" + std::to_string(got) + "!=" + std::to_string(exact) + ")";
    if (got != frozen[k]) {
      table_bad += " eps=" + fmt("%.1f", k / 10.0) + " table " + std::to_string(frozen[k]) + " formula " + std::to_string(got);
    }
  }
  Verdict v;
  v.pass = formula_bad.empty() && table_bad.empty();
  v.detail = std::string(formula_bad.empty() ? "compute_beta equals the exact formula at all 11 points" : "formula mismatch:" + formula_bad) +
             (table_bad.empty() ? "; frozen table agrees" : "; frozen table disagrees with the formula at" + table_bad);
  return v;
}

// ------------------------------------------------------------------- traces

std::vector<transport::DeliveryRecord> trace(transport::Protocol p, double eps_hat_init) {
  transport::ProtocolParams params;
  params.rtt = 4;
  params.beta = 1;
  params.eps_hat_init = eps_hat_init;
  SlottedChannel ch(4, ErasureProfile::constant(0.0, 40), RngStream(1));
  ch.set_script([](Slot s, std::uint32_t i) { return s == 0 && i == 0; });
  transport::Session session(p, params, std::move(ch), RngStream(2));
  for (Slot t = 0; t < 40; ++t) {
    std::optional<Bytes> body;
    if (t < 4) body = Bytes(params.body_len, static_cast<std::uint8_t>(t));
    session.step(t, std::move(body));
  }
  return session.records();
}

Verdict protocol_traces() {
  const auto sr = trace(transport::Protocol::kSrArq, 0.5);
  bool sr_ok = true;
  for (std::size_t q = 0; q < 4; ++q) sr_ok = sr_ok && sr[q].delivered_slot == 6;
  const auto ac = trace(transport::Protocol::kAcRlnc, 0.5);
  const bool ac_ok = ac[0].delivered_slot && *ac[0].delivered_slot <= 4;
  Verdict v;
  v.pass = sr_ok && ac_ok;
  std::string sr_slots;
  for (std::size_t q = 0; q < 4; ++q) sr_slots += (q ? "," : "") + (sr[q].delivered_slot ? std::to_string(*sr[q].delivered_slot) : "-");
  v.detail = "SR-ARQ seqs 0-3 released at slots " + sr_slots + " (want 6); AC-RLNC seq 0 released at slot " +
             (ac[0].delivered_slot ? std::to_string(*ac[0].delivered_slot) : "-") + " (want <= 4)";
  return v;
}

// -------------------------------------------------------------------- I-ReE

Verdict iree_oracle() {
  const auto start = std::chrono::steady_clock::now();
  const EkfParams p;
  const int window = 10;
  double worst = 0.0;
  for (int run = 0; run < 50; ++run) {
    std::mt19937 rng(1000 + run);
    // Each of the 3 robots filters its own track with measurements from the other two.
    for (int robot = 0; robot < 3; ++robot) {
      const auto sc = testing::random_scenario(rng, 100, window, 2);
      std::vector<Eigen::Matrix3d> covs;
      const auto want = testing::chronological_oracle(sc, p, window, &covs);
      const auto got = testing::run_filter(sc, p, DelayHandling::kIree, window);
      for (std::size_t t = 0; t < want.size(); ++t) {
        worst = std::max(worst, (got[t].mean - want[t]).cwiseAbs().maxCoeff());
        worst = std::max(worst, (got[t].cov - covs[t]).cwiseAbs().maxCoeff());
      }
    }
  }
  const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
  Verdict v;
  v.pass = worst <= 1e-9 && took.count() < 10.0;
  v.detail = "max component difference " + fmt("%.3g", worst) + " over 50 runs x 3 robots x 100 slots, " +
             fmt("%.2f s", took.count()) + " (limit 10 s)";
  return v;
}

// ------------------------------------------------------------------ cooploc

Verdict cooploc_fig3() {
  const auto start = std::chrono::steady_clock::now();
  using cooploc::LinkProtocol;
  std::vector<cooploc::Config> cells;
  auto add = [&](LinkProtocol p, double eps, cooploc::DelayMode d, DelayHandling h) {
    cooploc::Config c;
    c.protocol = p;
    c.epsilon = eps;
    c.delay_mode = d;
    c.estimator = h;
    cells.push_back(c);
    return cells.size() - 1;
  };
  const auto one_way = cooploc::DelayMode::kOneWay;
  const std::size_t base = add(LinkProtocol::kNone, 0.0, cooploc::DelayMode::kNone, DelayHandling::kIree);
  const std::size_t naive = add(LinkProtocol::kNone, 0.0, one_way, DelayHandling::kNaive);
  const std::size_t iree = add(LinkProtocol::kNone, 0.0, one_way, DelayHandling::kIree);
  const std::vector<double> udp_eps{0.0, 0.25, 0.5, 0.75, 0.8};
  std::vector<std::size_t> udp;
  for (double e : udp_eps) udp.push_back(add(LinkProtocol::kUdp, e, one_way, DelayHandling::kIree));
  const std::size_t sr8 = add(LinkProtocol::kSrArq, 0.8, one_way, DelayHandling::kIree);
  std::vector<std::size_t> ac;
  for (double e : {0.25, 0.5, 0.8}) ac.push_back(add(LinkProtocol::kAcRlnc, e, one_way, DelayHandling::kIree));

  const auto tail = parallel_map(cells.size(), workers(), [&](std::size_t i) { return cooploc::run(cells[i]).tail_mean_err; });
  const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;

  const double b = tail[base];
  const bool a_ok = tail[naive] > tail[iree] && std::abs(tail[iree] - b) <= 0.1 * b;
  bool b_ok = true;
  for (std::size_t i = 1; i < udp.size() - 1; ++i) b_ok = b_ok && tail[udp[i]] >= tail[udp[i - 1]];
  const double u8 = tail[udp.back()], s8 = tail[sr8], a8 = tail[ac.back()];
  const bool c_ok = a8 < s8 && s8 < u8;
  bool d_ok = true;
  for (std::size_t i : ac) d_ok = d_ok && tail[i] <= 1.25 * b;

  std::ostringstream d;
  d << "(a) " << (a_ok ? "ok" : "FAIL") << " naive " << fmt("%.4f", tail[naive]) << " > I-ReE " << fmt("%.4f", tail[iree])
    << ", baseline " << fmt("%.4f", b) << "; (b) " << (b_ok ? "ok" : "FAIL") << " UDP";
  for (std::size_t i = 0; i + 1 < udp.size(); ++i) d << " " << fmt("%.4f", tail[udp[i]]);
  d << "; (c) " << (c_ok ? "ok" : "FAIL") << " eps=0.8 AC " << fmt("%.4f", a8) << " SR " << fmt("%.4f", s8) << " UDP "
    << fmt("%.4f", u8) << "; (d) " << (d_ok ? "ok" : "FAIL") << " AC/baseline";
  for (std::size_t i : ac) d << " " << fmt("%.3f", tail[i] / b);
  d << "; " << fmt("%.1f s", took.count()) << " (limit 120 s)";
  return {a_ok && b_ok && c_ok && d_ok && took.count() < 120.0, d.str()};
}

// ----------------------------------------------------------------- overtake

Verdict overtake_mc() {
  const auto start = std::chrono::steady_clock::now();
  overtake::Config ac;
  ac.runs = 1000;
  ac.deadline_override = 110;
  ac.protocol = transport::Protocol::kAcRlnc;
  overtake::Config sr = ac;
  sr.protocol = transport::Protocol::kSrArq;
  const auto a = overtake::reliability_latency(ac, workers());
  const auto s = overtake::reliability_latency(sr, workers());
  const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
  const bool monotone = std::is_sorted(a.cdf.begin(), a.cdf.end()) && std::is_sorted(s.cdf.begin(), s.cdf.end());
  const double pa = a.at_deadline, ps = s.at_deadline;
  Verdict v;
  v.pass = pa >= 0.65 && pa <= 0.92 && ps >= 0.45 && ps <= 0.75 && pa > ps + 0.1 && monotone && took.count() < 60.0;
  v.detail = "Pr[T25<=110] AC-RLNC " + fmt("%.3f", pa) + " (band 0.65-0.92), SR-ARQ " + fmt("%.3f", ps) +
             " (band 0.45-0.75), margin " + fmt("%.3f", pa - ps) + " (> 0.1), CDF monotone " + (monotone ? "yes" : "no") +
             ", " + fmt("%.1f s", took.count()) + " (limit 60 s)";
  return v;
}

Verdict deadline() {
  const overtake::Config c;
  const auto scan = overtake::compute_deadline(c);
  Verdict v;
  v.pass = scan.deadline >= 95 && scan.deadline <= 125 && scan.monotone;
  v.detail = "deadline slot " + std::to_string(scan.deadline) + " (want 95-125), abort monotonicity " +
             (scan.monotone ? "holds" : "violated") + " over " + std::to_string(scan.safe.size()) + " candidates";
  return v;
}

// -------------------------------------------------------------- determinism

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

int invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "mrsim");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
}

Verdict determinism() {
  const fs::path root = fs::temp_directory_path() / ("mrsim_accept_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  std::ofstream(root / "coop.cfg") << "scenario.robots = 5\nscenario.horizon = 400\nscenario.tail_slots = 100\n"
                                      "sweep.epsilons = 0, 0.5, 0.8\n";
  struct Job {
    std::vector<std::string> args;
    std::vector<std::string> files;
  };
  const std::vector<Job> jobs{
      {{"cooploc", "sweep", "--config", (root / "coop.cfg").string(), "--seed", "11"},
       {"cooploc_series.csv", "cooploc_summary.csv"}},
      {{"cooploc", "run", "--config", (root / "coop.cfg").string(), "--seed", "11"}, {"cooploc_series.csv", "cooploc_summary.csv"}},
      {{"overtake", "montecarlo", "--runs", "300", "--seed", "11"}, {"overtake_runs.csv", "overtake_cdf.csv"}},
      {{"overtake", "deadline"}, {"overtake_deadline.csv"}},
  };
  int compared = 0, differing = 0, failed = 0;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    std::vector<fs::path> dirs;
    for (const char* k : {"1", "8"}) {
      const fs::path dir = root / ("job" + std::to_string(j) + "_" + k);
      auto args = jobs[j].args;
      args.insert(args.end(), {"--jobs", k, "--out", dir.string()});
      if (invoke(args) != 0) ++failed;
      dirs.push_back(dir);
    }
    for (const auto& f : jobs[j].files) {
      ++compared;
      const std::string x = slurp(dirs[0] / f);
      if (x.empty() || x != slurp(dirs[1] / f)) ++differing;
    }
  }
  fs::remove_all(root);
  Verdict v;
  v.pass = failed == 0 && differing == 0;
  v.detail = std::to_string(compared) + " CSVs compared between --jobs 1 and --jobs 8, " + std::to_string(differing) +
             " differ, " + std::to_string(failed) + " runs failed";
  return v;
}

std::set<std::string> split(const std::string& s) {
  std::set<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.insert(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<std::string> only, expect_fail;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if ((a == "--only" || a == "--expect-fail") && i + 1 < argc) {
      (a == "--only" ? only : expect_fail) = split(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: acceptance [--only ids] [--expect-fail ids]\n");
      return 2;
    }
  }

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"gf_rlnc", gf_rlnc},
      {"beta_formula", beta_formula},
      {"protocol_traces", protocol_traces},
      {"iree_oracle", iree_oracle},
      {"cooploc_fig3", cooploc_fig3},
      {"overtake_montecarlo", overtake_mc},
      {"deadline", deadline},
      {"determinism", determinism},
  };
  int unexpected = 0, passed = 0, run = 0;
  for (const auto& [id, fn] : criteria) {
    if (!only.empty() && !only.count(id)) continue;
    ++run;
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const bool expected = expect_fail.count(id) > 0;
    std::printf("%s %s: %s%s\n", v.pass ? "PASS" : "FAIL", id.c_str(), v.detail.c_str(),
                expected ? (v.pass ? " [listed as expected failure]" : " [expected failure]") : "");
    std::fflush(stdout);
    if (v.pass) ++passed;
    if (v.pass == expected) ++unexpected;
  }
  std::printf("%d/%d criteria pass\n", passed, run);
  return unexpected == 0 ? 0 : 1;
}
