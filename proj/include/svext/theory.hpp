#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "svext/distributions.hpp"
#include "svext/error.hpp"
#include "svext/models.hpp"
#include "svext/parallel.hpp"
#include "svext/rng.hpp"

namespace svext {

// ---------------------------------------------------------------------------
// Multiplier laws for sigma^p = A sigma^p + B

/// A = alpha1 eta^2 + beta1.
struct Garch11Multiplier {
  double alpha1 = 0.1;
  double beta1 = 0.89;
  InnovationSpec eta = Normal{};
};

/// log A ~ N(mu, s^2).
struct LogNormalMultiplier {
  double mu = -0.5;
  double s = 1.0;
};

/// Any non-negative innovation law used directly as A.
struct GenericMultiplier {
  InnovationSpec a = Constant{0.0};
};

using MultiplierLaw = std::variant<Garch11Multiplier, LogNormalMultiplier, GenericMultiplier>;

struct KestenProblem {
  MultiplierLaw law = Garch11Multiplier{};
  double kappa_min = 1e-3;
  double kappa_max = 64.0;
};

/// The multiplier law of an SRE model config.
inline MultiplierLaw multiplier_of(const SreSvConfig& cfg) {
  if (const auto* g = std::get_if<Garch11Pair>(&cfg.pair)) {
    return Garch11Multiplier{g->alpha1, g->beta1, g->eta};
  }
  return GenericMultiplier{std::get<GenericPair>(cfg.pair).a};
}

inline void validate(const MultiplierLaw& law) {
  std::visit(
      [](const auto& l) {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, Garch11Multiplier>) {
          require(l.alpha1 >= 0.0 && l.beta1 >= 0.0, "multiplier: alpha1, beta1 must be >= 0");
          validate(l.eta);
        } else if constexpr (std::is_same_v<T, LogNormalMultiplier>) {
          require(l.s >= 0.0 && std::isfinite(l.mu), "multiplier: need finite mu and s >= 0");
        } else {
          validate(l.a);
          require(is_nonnegative(l.a), "multiplier: generic A must be a non-negative law");
        }
      },
      law);
}

class MultiplierSampler {
 public:
  explicit MultiplierSampler(const MultiplierLaw& law)
      : law_(law),
        inner_(std::holds_alternative<Garch11Multiplier>(law)
                   ? std::get<Garch11Multiplier>(law).eta
                   : (std::holds_alternative<GenericMultiplier>(law)
                          ? std::get<GenericMultiplier>(law).a
                          : InnovationSpec{Normal{}})) {
    validate(law);
  }

  double operator()(Stream& rng) const {
    switch (law_.index()) {
      case 0: {
        const auto& g = std::get<Garch11Multiplier>(law_);
        const double e = inner_(rng);
        return g.alpha1 * e * e + g.beta1;
      }
      case 1: {
        const auto& l = std::get<LogNormalMultiplier>(law_);
        return std::exp(l.mu + l.s * inner_(rng));
      }
      default:
        return inner_(rng);
    }
  }

 private:
  MultiplierLaw law_;
  Sampler inner_;
};

inline nlohmann::json to_json(const MultiplierLaw& law) {
  return std::visit(
      [](const auto& l) -> nlohmann::json {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, Garch11Multiplier>) {
          return {{"type", "garch11"}, {"alpha1", l.alpha1}, {"beta1", l.beta1}, {"eta", l.eta}};
        } else if constexpr (std::is_same_v<T, LogNormalMultiplier>) {
          return {{"type", "lognormal"}, {"mu", l.mu}, {"s", l.s}};
        } else {
          return {{"type", "generic"}, {"a", l.a}};
        }
      },
      law);
}

inline MultiplierLaw multiplier_from_json(const nlohmann::json& j) {
  const auto type = j.at("type").get<std::string>();
  MultiplierLaw law;
  if (type == "garch11") {
    law = Garch11Multiplier{j.at("alpha1").get<double>(), j.at("beta1").get<double>(),
                            j.value("eta", InnovationSpec{Normal{}})};
  } else if (type == "lognormal") {
    law = LogNormalMultiplier{j.at("mu").get<double>(), j.at("s").get<double>()};
  } else if (type == "generic") {
    law = GenericMultiplier{j.at("a").get<InnovationSpec>()};
  } else {
    throw Error("unknown multiplier type: " + type);
  }
  validate(law);
  return law;
}

namespace theory_detail {

// mc_reps multiplier draws, chunked by substream so the sample does not
// depend on the thread count.
inline std::vector<double> draw_multipliers(const MultiplierLaw& law, std::size_t reps,
                                            RngSeed seed, Exec exec) {
  const MultiplierSampler draw(law);
  std::vector<double> a(reps);
  parallel_for(chunk_count(reps), exec, [&](std::size_t c) {
    Stream rng(substream(seed, c));
    const std::size_t end = std::min(reps, (c + 1) * kChunkSize);
    for (std::size_t i = c * kChunkSize; i < end; ++i) a[i] = draw(rng);
  });
  return a;
}

struct MeanSe {
  double mean;
  double se;
};

template <class F>
MeanSe mean_se(std::span<const double> xs, F f) {
  double s = 0.0, ss = 0.0;
  for (double x : xs) {
    const double v = f(x);
    s += v;
    ss += v * v;
  }
  const double n = static_cast<double>(xs.size());
  const double mean = s / n;
  return {mean, std::sqrt(std::max(0.0, (ss - n * mean * mean) / (n - 1.0)) / n)};
}

// The running product is treated as finished once it drops below e^-30.
inline const double kProductFloor = std::exp(-30.0);

}  // namespace theory_detail

// ---------------------------------------------------------------------------
// Kesten index

struct KestenResult {
  double kappa = 0.0;
  double f_at_root = 0.0;   // mean(A^kappa) - 1
  double mc_stderr = 0.0;   // standard error of mean(A^kappa) at the root
  double mean_log_a = 0.0;
  std::size_t iterations = 0;
  std::size_t mc_reps = 0;
  double tol = 0.0;
};

inline nlohmann::json to_json(const KestenResult& r) {
  return {{"method", "kesten"},      {"kappa", r.kappa},         {"f_at_root", r.f_at_root},
          {"mc_stderr", r.mc_stderr}, {"mean_log_a", r.mean_log_a}, {"iterations", r.iterations},
          {"mc_reps", r.mc_reps},    {"tol", r.tol}};
}

/// Root of f(kappa) = mean(A_i^kappa) - 1 over a fixed sample. The sample
/// is sorted first, so the result does not depend on its order.
inline KestenResult kesten_index_from_sample(std::vector<double> a, double tol,
                                             double kappa_min = 1e-3, double kappa_max = 64.0) {
  require(a.size() >= 2, "kesten: need at least 2 multiplier draws");
  require(tol > 0.0, "kesten: tol must be > 0");
  require(0.0 < kappa_min && kappa_min < kappa_max, "kesten: invalid bracket");
  std::sort(a.begin(), a.end());
  require(a.front() >= 0.0, "kesten: multipliers must be non-negative");

  KestenResult r;
  r.mc_reps = a.size();
  r.tol = tol;
  if (a.front() == 0.0) {
    r.mean_log_a = -std::numeric_limits<double>::infinity();
  } else {
    const auto lg = theory_detail::mean_se(a, [](double v) { return std::log(v); });
    r.mean_log_a = lg.mean;
    require(lg.mean + 3.0 * lg.se < 0.0, "no stationary solution");
  }
  require(a.back() > 1.0, "no finite tail index in bracket");

  auto f = [&a](double k) {
    double s = 0.0;
    for (double v : a) s += std::pow(v, k);
    return s / static_cast<double>(a.size()) - 1.0;
  };
  double lo = kappa_min, hi = kappa_max;
  double f_lo = f(lo);
  const double f_hi = f(hi);
  require(f_hi >= 0.0, "no finite tail index in bracket");
  require(f_lo < 0.0, "no stationary solution");
  double mid = lo, f_mid = f_lo;
  for (r.iterations = 0; r.iterations < 400; ++r.iterations) {
    mid = 0.5 * (lo + hi);
    f_mid = f(mid);
    if (std::abs(f_mid) < tol || hi - lo < 1e-15 * hi) break;
    if (f_mid < 0.0) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  r.kappa = mid;
  r.f_at_root = f_mid;
  const double k = mid;
  r.mc_stderr = theory_detail::mean_se(a, [k](double v) { return std::pow(v, k); }).se;
  return r;
}

/// Unique kappa > 0 with E A^kappa = 1, estimated on mc_reps common random
/// numbers by bracketing and bisection.
inline KestenResult kesten_index(const KestenProblem& problem, std::size_t mc_reps, double tol,
                                 RngSeed seed, Exec exec = {}) {
  return kesten_index_from_sample(
      theory_detail::draw_multipliers(problem.law, mc_reps, seed, exec), tol, problem.kappa_min,
      problem.kappa_max);
}

// ---------------------------------------------------------------------------
// Extremal index formulas

struct ThetaTheoryResult {
  double value = 1.0;
  double mc_stderr = 0.0;
  std::size_t mc_reps = 0;
  std::optional<std::size_t> trunc_T;
  std::optional<std::size_t> m;
  double truncation_risk = 0.0;    // fraction of replicates that hit trunc_T
  std::vector<double> sequence;    // estimates for m' = 1..m (theta_x_sre)
  std::vector<double> sequence_se;
  std::vector<std::string> warnings;
  nlohmann::json tuning = nlohmann::json::object();
};

inline nlohmann::json to_json(const ThetaTheoryResult& r) {
  nlohmann::json j{{"method", "mc_formula"},
                   {"value", r.value},
                   {"mc_stderr", r.mc_stderr},
                   {"mc_reps", r.mc_reps},
                   {"truncation_risk", r.truncation_risk},
                   {"warnings", r.warnings},
                   {"tuning", r.tuning}};
  if (r.trunc_T) j["trunc_T"] = *r.trunc_T;
  if (r.m) j["m"] = *r.m;
  if (!r.sequence.empty()) {
    j["sequence"] = r.sequence;
    j["sequence_se"] = r.sequence_se;
  }
  return j;
}

namespace theory_detail {

// |E A^alpha - 1| <= 5 SE on a calibration sample. Degenerate (constant)
// laws have no Kesten root and are not checked.
inline void check_alpha(const MultiplierLaw& law, double alpha, RngSeed seed, Exec exec) {
  const auto a = draw_multipliers(law, 100000, seed, exec);
  const auto m = mean_se(a, [alpha](double v) { return std::pow(v, alpha); });
  if (m.se == 0.0) return;
  require(std::abs(m.mean - 1.0) <= 5.0 * m.se, "alpha inconsistent with multiplier law");
}

template <class PerRep>
void run_chunks(std::size_t reps, RngSeed seed, Exec exec, std::size_t width,
                std::vector<double>& sums, PerRep per_rep) {
  const std::size_t chunks = chunk_count(reps);
  std::vector<std::vector<double>> partial(chunks, std::vector<double>(width, 0.0));
  parallel_for(chunks, exec, [&](std::size_t c) {
    Stream rng(substream(seed, c));
    const std::size_t end = std::min(reps, (c + 1) * kChunkSize);
    for (std::size_t i = c * kChunkSize; i < end; ++i) per_rep(rng, partial[c]);
  });
  sums.assign(width, 0.0);
  for (const auto& p : partial) {
    for (std::size_t k = 0; k < width; ++k) sums[k] += p[k];
  }
}

}  // namespace theory_detail

/// theta_sigma = alpha int_1^inf P(sup_t prod_{j<=t} A_j <= 1/y) y^{-1-alpha} dy
///             = P(sup_t prod_{j<=t} A_j <= 1/Y),  Y ~ Pareto(alpha).
/// Each replicate follows the running product until it exceeds 1/Y, drops
/// below e^-30, or reaches trunc_T steps.
inline ThetaTheoryResult theta_sigma_sre(const KestenProblem& problem, double alpha,
                                         std::size_t mc_reps, std::size_t trunc_T, RngSeed seed,
                                         Exec exec = {}) {
  require(alpha > 0.0, "theta_sigma: alpha must be > 0");
  require(trunc_T >= 1, "theta_sigma: trunc_T must be >= 1");
  require(mc_reps >= 2, "theta_sigma: need at least 2 replicates");
  theory_detail::check_alpha(problem.law, alpha, substream(seed, 999), exec);
  const MultiplierSampler draw(problem.law);
  std::vector<double> sums;
  theory_detail::run_chunks(mc_reps, seed, exec, 2, sums, [&](Stream& rng, std::vector<double>& acc) {
    const double bound = std::pow(rng.uniform(), 1.0 / alpha);  // 1 / Y
    double prod = 1.0;
    for (std::size_t t = 1; t <= trunc_T; ++t) {
      prod *= draw(rng);
      if (prod > bound) return;
      if (prod < theory_detail::kProductFloor) break;
      if (t == trunc_T) acc[1] += 1.0;
    }
    acc[0] += 1.0;
  });
  ThetaTheoryResult r;
  const double n = static_cast<double>(mc_reps);
  r.value = sums[0] / n;
  r.mc_stderr = std::sqrt(r.value * (1.0 - r.value) / n);
  r.mc_reps = mc_reps;
  r.trunc_T = trunc_T;
  r.truncation_risk = sums[1] / n;
  r.tuning = {{"alpha", alpha}, {"trunc_T", trunc_T}, {"mc_reps", mc_reps},
              {"product_floor", "exp(-30)"}, {"multiplier", to_json(problem.law)}};
  if (r.truncation_risk > 0.01) {
    r.warnings.push_back("truncation risk " + std::to_string(r.truncation_risk) +
                         " exceeds 1%; increase trunc_T");
  }
  require(r.value > 0.0, "theta_sigma: no replicate kept the product below 1/Y");
  return r;
}

/// Cross-check for theta_sigma_sre: the empirical law of
/// S = sup_t prod_{j<=t} A_j (capped once S > 1) is integrated against
/// alpha y^{-1-alpha} on a log grid of `grid_points` points.
inline ThetaTheoryResult theta_sigma_sre_quadrature(const KestenProblem& problem, double alpha,
                                                    std::size_t mc_reps, std::size_t trunc_T,
                                                    RngSeed seed, std::size_t grid_points = 10000,
                                                    Exec exec = {}) {
  require(alpha > 0.0 && grid_points >= 2 && mc_reps >= 2, "theta_sigma_quadrature: bad arguments");
  const MultiplierSampler draw(problem.law);
  std::vector<double> sup(mc_reps);
  parallel_for(chunk_count(mc_reps), exec, [&](std::size_t c) {
    Stream rng(substream(seed, c));
    const std::size_t end = std::min(mc_reps, (c + 1) * kChunkSize);
    for (std::size_t i = c * kChunkSize; i < end; ++i) {
      double prod = 1.0, s = 0.0;
      for (std::size_t t = 1; t <= trunc_T; ++t) {
        prod *= draw(rng);
        s = std::max(s, prod);
        if (s > 1.0) {
          s = std::numeric_limits<double>::infinity();
          break;
        }
        if (prod < theory_detail::kProductFloor) break;
      }
      sup[i] = s;
    }
  });
  std::sort(sup.begin(), sup.end());
  // F(s) = P(S <= e^{-s}); integrand alpha F(s) e^{-alpha s} on [0, s_max].
  const double s_max = 40.0 / alpha;
  const double ds = s_max / static_cast<double>(grid_points - 1);
  auto cdf = [&](double level) {
    const auto it = std::upper_bound(sup.begin(), sup.end(), level);
    return static_cast<double>(it - sup.begin()) / static_cast<double>(mc_reps);
  };
  double integral = 0.0;
  for (std::size_t i = 0; i < grid_points; ++i) {
    const double s = ds * static_cast<double>(i);
    const double w = (i == 0 || i + 1 == grid_points) ? 0.5 : 1.0;
    integral += w * alpha * cdf(std::exp(-s)) * std::exp(-alpha * s);
  }
  ThetaTheoryResult r;
  r.value = integral * ds;
  r.mc_reps = mc_reps;
  r.trunc_T = trunc_T;
  r.tuning = {{"alpha", alpha}, {"grid_points", grid_points}, {"method", "log_grid_trapezoid"}};
  return r;
}

/// theta_|X| = lim_m E(|Z_1|^{alpha p} - max_{j=2..m} (|Z_j|^p prod_{i=2..j} A_i)^alpha)_+
///                  / E|Z|^{alpha p}.
/// Ratio estimator over common replicates: the denominator is the sample
/// mean of |Z_1|^{alpha p}, so m = 1 gives exactly 1. Returns the estimate
/// for every m' = 1..m; `value` is the one at m.
inline ThetaTheoryResult theta_x_sre(const KestenProblem& problem, const InnovationSpec& z,
                                     double alpha, double p, std::size_t m, std::size_t mc_reps,
                                     RngSeed seed, Exec exec = {}) {
  require(alpha > 0.0 && p > 0.0, "theta_x_sre: alpha and p must be > 0");
  require(m >= 1, "theta_x_sre: m must be >= 1");
  require(mc_reps >= 2, "theta_x_sre: need at least 2 replicates");
  const double zpow = alpha * p;
  moment_abs(z, zpow);  // throws "moment diverges"
  const MultiplierSampler draw_a(problem.law);
  const Sampler draw_z(z);
  // layout: [z1, z1^2, c_1..c_m, c_1^2..c_m^2, c_1 z1..c_m z1]
  const std::size_t width = 2 + 3 * m;
  std::vector<double> sums;
  theory_detail::run_chunks(mc_reps, seed, exec, width, sums, [&](Stream& rng, std::vector<double>& acc) {
    const double z1 = std::pow(std::abs(draw_z(rng)), zpow);
    acc[0] += z1;
    acc[1] += z1 * z1;
    double prod = 1.0, mx = 0.0;
    for (std::size_t j = 1; j <= m; ++j) {
      if (j >= 2) {
        prod *= draw_a(rng);
        const double zj = std::pow(std::abs(draw_z(rng)), p);
        mx = std::max(mx, std::pow(zj * prod, alpha));
      }
      const double c = std::max(z1 - mx, 0.0);
      acc[2 + (j - 1)] += c;
      acc[2 + m + (j - 1)] += c * c;
      acc[2 + 2 * m + (j - 1)] += c * z1;
    }
  });
  ThetaTheoryResult r;
  const double n = static_cast<double>(mc_reps);
  const double zbar = sums[0] / n;
  require(zbar > 0.0, "theta_x_sre: E|Z|^{alpha p} estimate is zero");
  for (std::size_t j = 0; j < m; ++j) {
    const double sc = sums[2 + j], scc = sums[2 + m + j], scz = sums[2 + 2 * m + j];
    const double ratio = sc / sums[0];
    // delta method: Var(c - ratio z1) / (n zbar^2)
    const double resid = scc - 2.0 * ratio * scz + ratio * ratio * sums[1];
    const double var = std::max(0.0, resid / (n - 1.0));
    r.sequence.push_back(ratio);
    r.sequence_se.push_back(std::sqrt(var / n) / zbar);
  }
  r.sequence.front() = 1.0;
  r.sequence_se.front() = 0.0;
  r.value = r.sequence.back();
  r.mc_stderr = r.sequence_se.back();
  r.mc_reps = mc_reps;
  r.m = m;
  r.tuning = {{"alpha", alpha}, {"p", p}, {"m", m}, {"mc_reps", mc_reps},
              {"z", z}, {"multiplier", to_json(problem.law)}};
  require(r.value > 0.0, "theta_x_sre: estimate is zero; increase mc_reps");
  return r;
}

/// theta_|X| = E max_j |Z_j|^{alpha p} |psi_j|^alpha / (E|Z|^{alpha p} sum_j |psi_j|^alpha)
/// for the MA volatility model; alpha is the index of eta. Constant Z gives
/// the closed form max_j |psi_j|^alpha / sum_j |psi_j|^alpha, otherwise a
/// ratio estimator over i.i.d. (Z_0, ..., Z_q).
inline ThetaTheoryResult theta_x_ma(std::span<const double> psi, double alpha, double p,
                                    const InnovationSpec& z, std::size_t mc_reps, RngSeed seed,
                                    Exec exec = {}) {
  require(!psi.empty(), "theta_x_ma: psi must not be empty");
  require(alpha > 0.0 && p > 0.0, "theta_x_ma: alpha and p must be > 0");
  moment_abs(z, alpha * p);  // throws "moment diverges"
  std::vector<double> w(psi.size());
  for (std::size_t j = 0; j < psi.size(); ++j) w[j] = std::pow(std::abs(psi[j]), alpha);
  double wsum = 0.0, wmax = 0.0;
  for (double v : w) {
    wsum += v;
    wmax = std::max(wmax, v);
  }
  require(wsum > 0.0, "theta_x_ma: at least one psi_j must be nonzero");

  ThetaTheoryResult r;
  r.tuning = {{"alpha", alpha}, {"p", p}, {"psi", std::vector<double>(psi.begin(), psi.end())},
              {"z", z}};
  if (const auto* c = std::get_if<Constant>(&z)) {
    require(c->c != 0.0, "theta_x_ma: Z == 0 has no extremes");
    r.value = wmax / wsum;
    r.tuning["closed_form"] = true;
    return r;
  }
  require(mc_reps >= 2, "theta_x_ma: need at least 2 replicates");
  const Sampler draw(z);
  const double zpow = alpha * p;
  std::vector<double> sums;
  // layout: [num, num^2, den, den^2, num*den]
  theory_detail::run_chunks(mc_reps, seed, exec, 5, sums, [&](Stream& rng, std::vector<double>& acc) {
    double num = 0.0, den = 0.0;
    for (double wj : w) {
      const double v = std::pow(std::abs(draw(rng)), zpow) * wj;
      num = std::max(num, v);
      den += v;
    }
    acc[0] += num;
    acc[1] += num * num;
    acc[2] += den;
    acc[3] += den * den;
    acc[4] += num * den;
  });
  const double n = static_cast<double>(mc_reps);
  r.value = sums[2] > 0.0 ? sums[0] / sums[2] : 1.0;
  const double dbar = sums[2] / n;
  const double resid = sums[1] - 2.0 * r.value * sums[4] + r.value * r.value * sums[3];
  r.mc_stderr = dbar > 0.0 ? std::sqrt(std::max(0.0, resid / (n - 1.0)) / n) / dbar : 0.0;
  r.mc_reps = mc_reps;
  r.tuning["closed_form"] = false;
  r.tuning["mc_reps"] = mc_reps;
  return r;
}

}  // namespace svext
