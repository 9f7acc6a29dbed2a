// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "svext/svext.hpp"

namespace {

using namespace svext;

// Pinned tolerances and settings.
constexpr std::size_t kN = 1000000;
constexpr std::size_t kBurnIn = 10000;
constexpr std::size_t kHillK = 2000;
constexpr double kHillLo = 3.5, kHillHi = 4.5;
constexpr double kKappaLo = 1.9, kKappaHi = 2.1;
constexpr double kNoClusterMin = 0.90, kNoClusterMedian = 0.95, kNoClusterQ = 0.995;
constexpr double kClusterMax = 0.85, kClusterQ = 0.995, kClusterTol = 0.07;
constexpr std::size_t kClusterBlock = 100, kClusterM = 50;
constexpr double kMaQ = 0.995, kMaTol = 0.05;
constexpr double kBreimanLo = 1.2, kBreimanHi = 1.8, kBreimanQ = 0.999;
constexpr double kChiQ = 0.99, kChiExpMax = 0.03, kChiSreMin = 0.05;
constexpr std::size_t kSeeds = 20, kSeparatedMin = 18;
constexpr double kAcM50Max = 0.05;
constexpr std::size_t kAcReps = 200;

const ModelConfig kFig1 = ExpAR1Config{0.9, Laplace{4.0}, Normal{}};

ModelConfig fig2_sv() {
  SreSvConfig c;
  c.pair = Garch11Pair{1e-7, 0.1, 0.89, Normal{}};
  c.z = Normal{};
  return c;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

Exec exec_all() { return {std::max(1u, std::thread::hardware_concurrency())}; }

Outcome tail_index_fig1() {
  const auto p = simulate(kFig1, kN, kBurnIn, {1, 0});
  const auto hs = hill(p.sigma, kHillK);
  const auto hx = hill(abs_values(p.x), kHillK);
  const bool ok = hs.alpha_hat >= kHillLo && hs.alpha_hat <= kHillHi && hx.alpha_hat >= kHillLo &&
                  hx.alpha_hat <= kHillHi;
  return {ok, fmt("hill sigma %.3f, |X| %.3f, band [%.1f, %.1f]", hs.alpha_hat, hx.alpha_hat,
                  kHillLo, kHillHi)};
}

Outcome kesten_fig2() {
  const KestenProblem problem{Garch11Multiplier{0.1, 0.89, Normal{}}};
  const auto r = kesten_index(problem, 1000000, 1e-6, {2, 0}, exec_all());
  return {r.kappa >= kKappaLo && r.kappa <= kKappaHi,
          fmt("kappa %.4f (MC se of f %.2e), band [%.1f, %.1f]", r.kappa, r.mc_stderr, kKappaLo,
              kKappaHi)};
}

// Paths shared by the no-clustering and extremogram criteria.
struct SeedPaths {
  std::vector<Path> fig1, fig2;
};

const SeedPaths& seed_paths() {
  static const SeedPaths paths = [] {
    SeedPaths s;
    for (std::size_t k = 0; k < kSeeds; ++k) {
      s.fig1.push_back(simulate(kFig1, kN, kBurnIn, {100 + k, 0}));
      s.fig2.push_back(simulate(fig2_sv(), kN, kBurnIn, {200 + k, 0}));
    }
    return s;
  }();
  return paths;
}

Outcome no_clustering_fig1() {
  const BootstrapOptions no_boot{0, {}, {}};
  std::vector<double> est;
  for (const auto& p : seed_paths().fig1) {
    est.push_back(intervals_theta(p.x, empirical_quantile(p.x, kNoClusterQ), no_boot).theta_hat);
  }
  const double first = est.front();
  const double med = median(est);
  const auto [lo, hi] = std::minmax_element(est.begin(), est.end());
  return {first >= kNoClusterMin && med >= kNoClusterMedian,
          fmt("intervals theta on X at q=%.3f: first seed %.3f (need >= %.2f), median of %zu %.3f "
              "(need >= %.2f), range [%.3f, %.3f]",
              kNoClusterQ, first, kNoClusterMin, est.size(), med, kNoClusterMedian, *lo, *hi)};
}

Outcome clustering_fig2() {
  const auto p = simulate(fig2_sv(), kN, kBurnIn, {4, 0});
  const auto v = abs_values(p.x);
  const double u = empirical_quantile(v, kClusterQ);
  const auto iv = intervals_theta(v, u, {200, {4, 1}, exec_all()});
  const auto bl = blocks_theta(v, u, kClusterBlock, {200, {4, 2}, exec_all()});
  const KestenProblem problem{Garch11Multiplier{0.1, 0.89, Normal{}}};
  const double alpha = kesten_index(problem, 1000000, 1e-6, {4, 3}, exec_all()).kappa;
  const auto th = theta_x_sre(problem, Normal{}, alpha, 2.0, kClusterM, 1000000, {4, 4}, exec_all());
  const bool ok = iv.theta_hat <= kClusterMax && bl.theta_hat <= kClusterMax &&
                  std::abs(th.value - iv.theta_hat) <= kClusterTol &&
                  std::abs(th.value - bl.theta_hat) <= kClusterTol;
  return {ok, fmt("|X| q=%.3f: intervals %.3f, blocks(%zu) %.3f (need <= %.2f); theta_x_sre(m=%zu) "
                  "%.3f +- %.3f (need within %.2f of both)",
                  kClusterQ, iv.theta_hat, kClusterBlock, bl.theta_hat, kClusterMax, kClusterM,
                  th.value, th.mc_stderr, kClusterTol)};
}

Outcome ma_closed_form() {
  const std::vector<double> psi{1.0, 1.0};
  const double closed = theta_x_ma(psi, 4.0, 1.0, Constant{1.0}, 2, {}).value;
  const MaSvConfig unit{1.0, psi, Pareto{4.0}, Constant{1.0}};
  const auto p1 = simulate(unit, kN, 0, {5, 0});
  const auto v1 = abs_values(p1.x);
  const double est1 = intervals_theta(v1, empirical_quantile(v1, kMaQ), {0, {}, {}}).theta_hat;
  const MaSvConfig normal{1.0, psi, Pareto{4.0}, Normal{}};
  const auto p2 = simulate(normal, kN, 0, {5, 1});
  const auto v2 = abs_values(p2.x);
  const double est2 = intervals_theta(v2, empirical_quantile(v2, kMaQ), {0, {}, {}}).theta_hat;
  const auto mc = theta_x_ma(psi, 4.0, 1.0, Normal{}, 1000000, {5, 2}, exec_all());
  const bool ok = closed == 0.5 && std::abs(est1 - 0.5) <= kMaTol && std::abs(mc.value - est2) <= kMaTol;
  return {ok, fmt("closed form %.17g; Z=1 path %.3f (target 0.5 +- %.2f); Z normal formula %.4f vs "
                  "path %.3f (tol %.2f)",
                  closed, est1, kMaTol, mc.value, est2, kMaTol)};
}

Outcome breiman_constant() {
  const std::size_t n = 10000000;
  const auto sigma = sample_innovation(Pareto{4.0}, n, {6, 0});
  const auto z = sample_innovation(Normal{}, n, {6, 1});
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = sigma[i] * z[i];
  const auto r = breiman_ratio(sigma, x, std::vector<double>{kBreimanQ}, 4.0, Normal{});
  const double ratio = r.points.at(0).ratio;
  return {ratio >= kBreimanLo && ratio <= kBreimanHi,
          fmt("ratio %.4f at q=%.3f, target %.4f, band [%.1f, %.1f]", ratio, kBreimanQ, r.target,
              kBreimanLo, kBreimanHi)};
}

Outcome extremogram_separation() {
  const std::vector<std::size_t> lag1{1};
  std::size_t separated = 0;
  std::vector<double> chi_e, chi_s;
  for (std::size_t k = 0; k < kSeeds; ++k) {
    const double e = extremogram(seed_paths().fig1[k].x, lag1, kChiQ)[0].chi_hat;
    const double s = extremogram(seed_paths().fig2[k].x, lag1, kChiQ)[0].chi_hat;
    chi_e.push_back(e);
    chi_s.push_back(s);
    separated += e <= kChiExpMax && s >= kChiSreMin;
  }
  const auto [el, eh] = std::minmax_element(chi_e.begin(), chi_e.end());
  const auto [sl, sh] = std::minmax_element(chi_s.begin(), chi_s.end());
  return {separated >= kSeparatedMin,
          fmt("separated in %zu/%zu seeds (need %zu); ExpAR1 chi(1) in [%.4f, %.4f] (need <= %.2f), "
              "SRE chi(1) in [%.4f, %.4f] (need >= %.2f)",
              separated, kSeeds, kSeparatedMin, *el, *eh, kChiExpMax, *sl, *sh, kChiSreMin)};
}

Outcome anticlustering_fig1() {
  const auto r_n = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(kN))));
  const auto r = anticluster_diag(kFig1, {1, 10, 25, 50}, r_n, 1.0, kN, kAcReps, {8, 0});
  bool decreasing = r.points.front().estimate > r.points.back().estimate;
  std::string est;
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    if (i > 0) decreasing = decreasing && r.points[i].estimate <= r.points[i - 1].estimate;
    est += fmt("%sm=%zu: %.4f", i ? ", " : "", r.points[i].m, r.points[i].estimate);
  }
  const double last = r.points.back().estimate;
  return {decreasing && last < kAcM50Max,
          fmt("r_n=%zu, %zu events: %s (need decreasing, m=50 < %.2f)", r_n, r.events, est.c_str(),
              kAcM50Max)};
}

std::string slurp(const std::filesystem::path& f) {
  std::ifstream in(f, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  std::vector<std::string> broken;
  const Exec one{1}, many{4};
  const std::vector<ModelConfig> models{kFig1, EgarchConfig{}, fig2_sv(),
                                        MaSvConfig{1.0, {1.0, 1.0}, Pareto{4.0}, Normal{}}};
  for (const auto& m : models) {
    const auto a = simulate(m, 20000, 1000, {9, 0});
    const auto b = simulate(m, 20000, 1000, {9, 0});
    std::ostringstream ca, cb;
    write_path_csv(a, ca);
    write_path_csv(b, cb);
    if (ca.str() != cb.str()) broken.push_back("simulate " + family_name(m));
  }
  const auto p = simulate(fig2_sv(), 100000, 1000, {9, 1});
  const auto v = abs_values(p.x);
  const double u = empirical_quantile(v, 0.99);
  const auto est = [&](Exec e) {
    return to_json(blocks_theta(v, u, 50, {100, {9, 2}, e})).dump() +
           to_json(runs_theta(v, u, 10, {100, {9, 3}, e})).dump() +
           to_json(intervals_theta(v, u, {100, {9, 4}, e})).dump();
  };
  if (est(one) != est(many)) broken.push_back("theta estimators");
  const KestenProblem problem{Garch11Multiplier{0.1, 0.89, Normal{}}};
  const auto theory = [&](Exec e) {
    const auto k = kesten_index(problem, 100000, 1e-6, {9, 5}, e);
    const std::vector<double> psi{1.0, 0.5};
    return to_json(k).dump() + to_json(theta_sigma_sre(problem, k.kappa, 50000, 10000, {9, 6}, e)).dump() +
           to_json(theta_x_sre(problem, Normal{}, k.kappa, 2.0, 20, 50000, {9, 7}, e)).dump() +
           to_json(theta_x_ma(psi, 4.0, 1.0, Normal{}, 50000, {9, 8}, e)).dump() +
           format_double(moment_abs(Laplace{4.0}, 2.0, MonteCarlo{50000, {9, 9}, e}).value);
  };
  if (theory(one) != theory(many)) broken.push_back("theory");
  const auto dir = std::filesystem::temp_directory_path() / "svext_acceptance";
  std::filesystem::remove_all(dir);
  auto cfg = preset_config("fig2-sv", {9, 10});
  cfg.analyses = {{"theta", {{"method", "intervals"}, {"q", 0.95}}},
                  {"extremogram", {{"lags", {1, 2}}, {"q", 0.95}}},
                  {"theory", {{"which", "theta_x_sre"}, {"params", {{"mc_reps", 20000}, {"m", 10}}}}}};
  cfg.output_dir = dir / "t1";
  run_experiment(cfg, one);
  cfg.output_dir = dir / "t4";
  run_experiment(cfg, many);
  for (const char* f : {"path.csv", "figure.csv", "extremogram_1.csv"}) {
    if (slurp(dir / "t1" / f) != slurp(dir / "t4" / f)) broken.push_back(std::string("experiment ") + f);
  }
  auto r1 = read_json_file(dir / "t1" / "report.json");
  auto r4 = read_json_file(dir / "t4" / "report.json");
  r1["config"].erase("output_dir");
  r4["config"].erase("output_dir");
  if (r1 != r4) broken.push_back("experiment report.json");
  std::string detail = "simulators, theta estimators, theory and experiment outputs at 1 vs 4 threads";
  for (const auto& b : broken) detail += "; differs: " + b;
  return {broken.empty(), detail};
}

Outcome hand_checks() {
  std::vector<std::string> failed;
  std::size_t checked = 0;
  const auto check = [&](bool ok, const char* name) {
    ++checked;
    if (!ok) failed.emplace_back(name);
  };
  const auto throws_msg = [](const std::function<void()>& f, const std::string& msg) {
    try {
      f();
    } catch (const Error& e) {
      return msg.empty() || msg == e.what();
    }
    return false;
  };
  const BootstrapOptions nb{0, {}, {}};
  const auto marks = [](std::size_t n, std::vector<std::size_t> at) {
    std::vector<double> x(n, 0.0);
    for (auto t : at) x[t] = 10.0;
    return x;
  };

  check(sample_innovation(Constant{2.0}, 3, {1, 1}) == std::vector<double>{2, 2, 2}, "constant sample");
  check(sample_innovation(Normal{}, 2, {1, 2}) == sample_innovation(Normal{}, 2, {1, 2}), "determinism");
  check(tail_prob(Pareto{4.0}, 1.0) == 1.0, "pareto survival at 1");
  check(std::abs(tail_prob(Pareto{4.0}, 10.0) - 1e-4) < 1e-19, "pareto survival at 10");
  check(std::abs(tail_prob(Laplace{4.0}, std::log(10.0)) - 0.5e-4) < 1e-18, "laplace survival");
  check(moment_abs(Constant{3.0}, 2.0).value == 9.0, "constant moment");
  check(throws_msg([] { moment_abs(Pareto{4.0}, 5.0); }, "moment diverges"), "divergent moment");
  check(throws_msg([] { sample_innovation(StudentT{2.0, true}, 1, {}); }, "variance undefined"),
        "t variance");

  const auto e1 = simulate(ExpAR1Config{0.0, Constant{0.0}, Constant{1.0}}, 5, 10, {});
  check(e1.sigma == std::vector<double>(5, 1.0) && e1.x == e1.sigma, "expar1 degenerate");
  const auto eg = simulate(EgarchConfig{0.0, 1e-12, 1e-12, 0.0, Constant{1.0}, true}, 3, 0, {});
  check(std::all_of(eg.x.begin(), eg.x.end(), [](double v) { return std::abs(v - 1.0) < 1e-9; }),
        "egarch constant limit");
  const auto sre = simulate(SreSvConfig{1.0, GenericPair{Constant{0.0}, Pareto{4.0}}, Constant{1.0}, false},
                            4, 0, {3, 3});
  check(sre.sigma == sample_innovation(Pareto{4.0}, 4, substream({3, 3}, kBStream)) && sre.x == sre.sigma,
        "sre A = 0");
  const auto ma = simulate(MaSvConfig{1.0, {1.0}, Pareto{4.0}, Constant{1.0}}, 3, 0, {4, 4});
  check(ma.sigma == sample_innovation(Pareto{4.0}, 3, substream({4, 4}, kEtaStream)) && ma.x == ma.sigma,
        "ma identity");

  const double e = std::exp(1.0);
  check(std::abs(hill(std::vector<double>{1, e, e * e, e * e * e}, 3).alpha_hat - 0.5) < 1e-15, "hill 0.5");
  check(throws_msg([] { hill(std::vector<double>{5, 5, 5, 5, 5}, 3); }, "degenerate tail sample"),
        "hill degenerate");
  std::vector<std::size_t> iso, paired;
  for (std::size_t t = 5; t < 100; t += 10) iso.push_back(t);
  for (std::size_t b = 0; b < 5; ++b) paired.insert(paired.end(), {10 * b + 3, 10 * b + 4});
  check(blocks_theta(marks(100, iso), 1.0, 10, nb).theta_hat == 1.0, "blocks isolated");
  check(blocks_theta(marks(100, paired), 1.0, 10, nb).theta_hat == 0.5, "blocks paired");
  check(runs_theta(marks(100, {50}), 1.0, 5, nb).theta_hat == 1.0, "runs single");
  check(runs_theta(marks(100, {10, 11}), 1.0, 5, nb).theta_hat == 0.5, "runs pair");
  check(intervals_theta(marks(10, {0, 2, 4, 6}), 1.0, nb).theta_hat == 1.0, "intervals (2,2,2)");
  check(intervals_theta(marks(20, {0, 1, 2, 11}), 1.0, nb).theta_hat == 128.0 / 168.0, "intervals 128/168");
  const std::vector<std::size_t> lags{1, 2, 5};
  const auto chi = extremogram_at(std::vector<double>(100, 3.0), lags, 1.0);
  check(std::all_of(chi.begin(), chi.end(), [](const auto& p) { return p.chi_hat == 1.0; }),
        "extremogram constant");
  const auto ac = anticluster_diag_series(std::vector<double>(500, 2.0), {1, 5, 10}, 20, 1.0);
  check(std::all_of(ac.points.begin(), ac.points.end(), [](const auto& p) { return p.estimate == 1.0; }),
        "anticluster constant");
  const auto sp = sample_innovation(Pareto{4.0}, 10000, {5, 5});
  const auto b1 = breiman_ratio(sp, sp, std::vector<double>{0.9, 0.99}, 4.0, Constant{1.0});
  check(b1.points.size() == 2 && b1.points[0].ratio == 1.0 && b1.points[1].ratio == 1.0, "breiman Z = 1");

  check(throws_msg([] { kesten_index({GenericMultiplier{Constant{0.5}}}, 1000, 1e-6, {}); },
                   "no finite tail index in bracket"),
        "kesten A = 0.5");
  const KestenProblem zero{GenericMultiplier{Constant{0.0}}};
  const KestenProblem garch{Garch11Multiplier{0.1, 0.89, Normal{}}};
  check(theta_sigma_sre(zero, 2.0, 1000, 100, {}).value == 1.0, "theta sigma A = 0");
  check(theta_x_sre(garch, Normal{}, 2.0, 2.0, 1, 1000, {}).value == 1.0, "theta x m = 1");
  const auto tz = theta_x_sre(zero, Normal{}, 2.0, 2.0, 10, 1000, {});
  check(std::all_of(tz.sequence.begin(), tz.sequence.end(), [](double v) { return v == 1.0; }),
        "theta x A = 0");
  const std::vector<double> q0{1.0}, p11{1.0, 1.0}, p105{1.0, 0.5};
  check(theta_x_ma(q0, 4.0, 1.0, Normal{}, 1000, {}).value == 1.0, "theta ma q = 0");
  check(theta_x_ma(p11, 1.0, 1.0, Constant{1.0}, 2, {}).value == 0.5, "theta ma 1/2");
  check(std::abs(theta_x_ma(p105, 4.0, 1.0, Constant{1.0}, 2, {}).value - 1.0 / 1.0625) < 1e-15,
        "theta ma 1/1.0625");

  const auto dir = std::filesystem::temp_directory_path() / "svext_acceptance" / "empty";
  std::filesystem::remove_all(dir);
  ExperimentConfig cfg;
  cfg.model = kFig1;
  cfg.n = 50;
  cfg.output_dir = dir;
  const auto rep = run_experiment(cfg);
  check(rep.failed_analyses == 0 && std::filesystem::exists(dir / "path.csv") &&
            rep.report.at("analyses").empty(),
        "empty analyses");

  std::string detail = fmt("%zu hand-checked examples", checked);
  for (const auto& f : failed) detail += "; failed: " + f;
  return {failed.empty(), detail};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    Outcome (*run)();
    double budget_s;  // 0: no stated runtime limit
  };
  const Criterion criteria[] = {
      {1, "tail-index recovery, ExpAR1 fig1-left config", tail_index_fig1, 60.0},
      {2, "Kesten index, GARCH(1,1) multipliers", kesten_fig2, 30.0},
      {3, "no clustering, ExpAR1 fig1-left path", no_clustering_fig1, 0.0},
      {4, "clustering, SRE-SV fig2-sv path vs theta_x_sre", clustering_fig2, 0.0},
      {5, "MA extremal index closed form and Monte Carlo", ma_closed_form, 0.0},
      {6, "Breiman constant", breiman_constant, 0.0},
      {7, "extremogram separation ExpAR1 vs SRE-SV", extremogram_separation, 0.0},
      {8, "anticlustering diagnostic, ExpAR1", anticlustering_fig1, 0.0},
      {9, "determinism and thread invariance", determinism, 0.0},
      {10, "exact hand-check suite", hand_checks, 0.0},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0.0 && secs > c.budget_s) {
      out.pass = false;
      out.detail += fmt("; runtime over %.0f s budget", c.budget_s);
    }
    failures += !out.pass;
    std::printf("%s [%d] %s: %s (%.1f s)\n", out.pass ? "PASS" : "FAIL", c.id, c.name,
                out.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(std::size(criteria)) - failures,
              std::size(criteria));
  return failures == 0 ? 0 : 1;
}
