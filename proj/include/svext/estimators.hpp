#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <numeric>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "svext/distributions.hpp"
#include "svext/error.hpp"
#include "svext/models.hpp"
#include "svext/parallel.hpp"
#include "svext/rng.hpp"

namespace svext {

/// Type-7 (linear interpolation) empirical quantile.
inline double empirical_quantile(std::span<const double> values, double q) {
  require(!values.empty(), "quantile of an empty sample");
  require(q >= 0.0 && q <= 1.0, "quantile level must lie in [0, 1]");
  std::vector<double> v(values.begin(), values.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  std::nth_element(v.begin(), v.begin() + lo, v.end());
  const double a = v[lo];
  if (lo + 1 >= v.size()) return a;
  const double b = *std::min_element(v.begin() + lo + 1, v.end());
  return a + (h - static_cast<double>(lo)) * (b - a);
}

inline std::vector<double> abs_values(std::span<const double> values) {
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(), [](double v) { return std::abs(v); });
  return out;
}

// ---------------------------------------------------------------------------
// Hill estimator

struct HillResult {
  std::size_t k = 0;
  double alpha_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// Hill estimate from the k largest of `values` relative to the (k+1)-th
/// largest. The 95% band is alpha_hat (1 +- 1.96 / sqrt(k)); for k <= 3,
/// where that lower edge is not positive, the lower edge becomes
/// alpha_hat exp(-1.96 / sqrt(k)).
inline HillResult hill(std::span<const double> values, std::size_t k) {
  require(k >= 2, "hill: k must be >= 2");
  require(values.size() >= k + 1, "hill: need at least k + 1 values");
  std::vector<double> v(values.begin(), values.end());
  std::nth_element(v.begin(), v.begin() + k, v.end(), std::greater<>());
  const double base = v[k];
  require(base > 0.0, "hill: need k + 1 strictly positive values");
  std::sort(v.begin(), v.begin() + k, std::greater<>());
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) s += std::log(v[i] / base);
  require(s > 0.0, "degenerate tail sample");
  HillResult r;
  r.k = k;
  r.alpha_hat = static_cast<double>(k) / s;
  const double half = 1.96 / std::sqrt(static_cast<double>(k));
  r.ci_low = half < 1.0 ? r.alpha_hat * (1.0 - half) : r.alpha_hat * std::exp(-half);
  r.ci_high = r.alpha_hat * (1.0 + half);
  return r;
}

inline nlohmann::json to_json(const HillResult& r) {
  return {{"method", "hill"}, {"k", r.k}, {"alpha_hat", r.alpha_hat},
          {"ci_low", r.ci_low}, {"ci_high", r.ci_high}};
}

// ---------------------------------------------------------------------------
// Exceedances and extremal index estimators

/// Time indices t with values[t] > u (strict).
struct ExceedanceSet {
  double threshold = 0.0;
  std::vector<std::size_t> indices;
  std::size_t n = 0;
};

inline ExceedanceSet exceedances(std::span<const double> values, double u) {
  ExceedanceSet e{u, {}, values.size()};
  for (std::size_t t = 0; t < values.size(); ++t) {
    if (values[t] > u) e.indices.push_back(t);
  }
  return e;
}

enum class ThetaMethod { Blocks, Runs, Intervals, McFormula };

inline std::string to_string(ThetaMethod m) {
  switch (m) {
    case ThetaMethod::Blocks: return "blocks";
    case ThetaMethod::Runs: return "runs";
    case ThetaMethod::Intervals: return "intervals";
    default: return "mc_formula";
  }
}

struct ThetaEstimate {
  double theta_hat = 1.0;
  ThetaMethod method = ThetaMethod::Blocks;
  std::map<std::string, double> tuning;
  double stderr_ = 0.0;
};

inline nlohmann::json to_json(const ThetaEstimate& e) {
  return {{"method", to_string(e.method)},
          {"theta_hat", e.theta_hat},
          {"stderr", e.stderr_},
          {"tuning", e.tuning}};
}

/// Block bootstrap for the standard error of an extremal index estimate.
/// Non-overlapping blocks of the declustering length are resampled with
/// replacement; reps = 0 skips the bootstrap.
struct BootstrapOptions {
  std::size_t reps = 200;
  RngSeed seed{0x5EED, 0};
  Exec exec{};
};

namespace theta_detail {

inline double blocks(const ExceedanceSet& e, std::size_t block_len) {
  require(!e.indices.empty(), "empty exceedance set");
  std::size_t blocks_hit = 0;
  std::size_t last = static_cast<std::size_t>(-1);
  for (std::size_t t : e.indices) {
    const std::size_t b = t / block_len;
    if (b != last) {
      ++blocks_hit;
      last = b;
    }
  }
  return std::min(1.0, static_cast<double>(blocks_hit) / static_cast<double>(e.indices.size()));
}

inline double runs(const ExceedanceSet& e, std::size_t run_len) {
  require(!e.indices.empty(), "empty exceedance set");
  std::size_t ends = 0;
  for (std::size_t i = 0; i < e.indices.size(); ++i) {
    if (i + 1 == e.indices.size() || e.indices[i + 1] - e.indices[i] > run_len) ++ends;
  }
  return static_cast<double>(ends) / static_cast<double>(e.indices.size());
}

inline double intervals(const ExceedanceSet& e) {
  const std::size_t count = e.indices.size();
  require(count >= 2, "insufficient exceedances");
  double s1 = 0.0, s2 = 0.0, m1 = 0.0, m12 = 0.0;
  std::size_t max_gap = 0;
  for (std::size_t i = 1; i < count; ++i) {
    const std::size_t gap = e.indices[i] - e.indices[i - 1];
    const double g = static_cast<double>(gap);
    max_gap = std::max(max_gap, gap);
    s1 += g;
    s2 += g * g;
    m1 += g - 1.0;
    m12 += (g - 1.0) * (g - 2.0);
  }
  const double pairs = static_cast<double>(count - 1);
  if (max_gap <= 2) return std::min(1.0, 2.0 * s1 * s1 / (pairs * s2));
  return std::min(1.0, 2.0 * m1 * m1 / (pairs * m12));
}

// Run length implied by the intervals estimate: the C-th largest gap with
// C = floor(theta N) + 1 clusters separated by longer gaps.
inline std::size_t intervals_run_length(const ExceedanceSet& e, double theta) {
  std::vector<std::size_t> gaps;
  for (std::size_t i = 1; i < e.indices.size(); ++i) {
    gaps.push_back(e.indices[i] - e.indices[i - 1]);
  }
  const auto clusters = static_cast<std::size_t>(theta * static_cast<double>(e.indices.size())) + 1;
  if (clusters > gaps.size()) return 1;
  std::nth_element(gaps.begin(), gaps.begin() + (clusters - 1), gaps.end(), std::greater<>());
  return std::max<std::size_t>(1, gaps[clusters - 1]);
}

// Bootstrap SE of estimator(ExceedanceSet) under non-overlapping block
// resampling. Replicates on which the estimator fails are dropped.
template <class Estimator>
double block_bootstrap_se(const ExceedanceSet& e, std::size_t block_len,
                          const BootstrapOptions& opt, Estimator estimator) {
  if (opt.reps < 2 || e.n == 0) return 0.0;
  block_len = std::clamp<std::size_t>(block_len, 1, e.n);
  const std::size_t nblocks = (e.n + block_len - 1) / block_len;
  // offsets of exceedances grouped by block
  std::vector<std::size_t> start(nblocks + 1, 0);
  for (std::size_t t : e.indices) ++start[t / block_len + 1];
  std::partial_sum(start.begin(), start.end(), start.begin());
  std::vector<double> values(opt.reps, std::nan(""));
  parallel_for(opt.reps, opt.exec, [&](std::size_t r) {
    Stream rng(substream(opt.seed, r));
    ExceedanceSet boot{e.threshold, {}, nblocks * block_len};
    boot.indices.reserve(e.indices.size() + 16);
    for (std::size_t b = 0; b < nblocks; ++b) {
      const auto src = std::min<std::size_t>(
          nblocks - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(nblocks)));
      for (std::size_t i = start[src]; i < start[src + 1]; ++i) {
        boot.indices.push_back(b * block_len + (e.indices[i] - src * block_len));
      }
    }
    try {
      values[r] = estimator(boot);
    } catch (const Error&) {
    }
  });
  double s = 0.0, ss = 0.0;
  std::size_t used = 0;
  for (double v : values) {
    if (std::isnan(v)) continue;
    s += v;
    ss += v * v;
    ++used;
  }
  if (used < 2) return 0.0;
  const double n = static_cast<double>(used);
  const double mean = s / n;
  return std::sqrt(std::max(0.0, (ss - n * mean * mean) / (n - 1.0)));
}

}  // namespace theta_detail

/// min(1, blocks with an exceedance / exceedances).
inline ThetaEstimate blocks_theta(std::span<const double> values, double u, std::size_t block_len,
                                  const BootstrapOptions& boot = {}) {
  require(block_len >= 1, "blocks_theta: block_len must be >= 1");
  const auto e = exceedances(values, u);
  ThetaEstimate est{theta_detail::blocks(e, block_len), ThetaMethod::Blocks,
                    {{"u", u}, {"block_len", static_cast<double>(block_len)},
                     {"exceedances", static_cast<double>(e.indices.size())},
                     {"bootstrap_reps", static_cast<double>(boot.reps)}},
                    0.0};
  est.stderr_ = theta_detail::block_bootstrap_se(
      e, block_len, boot, [&](const ExceedanceSet& s) { return theta_detail::blocks(s, block_len); });
  return est;
}

/// Fraction of exceedances followed by run_len non-exceedances; indices
/// past the end count as non-exceedances.
inline ThetaEstimate runs_theta(std::span<const double> values, double u, std::size_t run_len,
                                const BootstrapOptions& boot = {}) {
  require(run_len >= 1, "runs_theta: run_len must be >= 1");
  const auto e = exceedances(values, u);
  ThetaEstimate est{theta_detail::runs(e, run_len), ThetaMethod::Runs,
                    {{"u", u}, {"run_len", static_cast<double>(run_len)},
                     {"exceedances", static_cast<double>(e.indices.size())},
                     {"bootstrap_reps", static_cast<double>(boot.reps)}},
                    0.0};
  est.stderr_ = theta_detail::block_bootstrap_se(
      e, run_len, boot, [&](const ExceedanceSet& s) { return theta_detail::runs(s, run_len); });
  return est;
}

/// Interexceedance-times estimator (tuning free). The bootstrap block
/// length is the run length implied by the estimate itself.
inline ThetaEstimate intervals_theta(std::span<const double> values, double u,
                                     const BootstrapOptions& boot = {}) {
  const auto e = exceedances(values, u);
  const double theta = theta_detail::intervals(e);
  const std::size_t block = theta_detail::intervals_run_length(e, theta);
  ThetaEstimate est{theta, ThetaMethod::Intervals,
                    {{"u", u}, {"exceedances", static_cast<double>(e.indices.size())},
                     {"bootstrap_block", static_cast<double>(block)},
                     {"bootstrap_reps", static_cast<double>(boot.reps)}},
                    0.0};
  est.stderr_ = theta_detail::block_bootstrap_se(e, block, boot, theta_detail::intervals);
  return est;
}

// ---------------------------------------------------------------------------
// Extremogram

struct ExtremogramPoint {
  std::size_t lag = 0;
  double chi_hat = 0.0;
  double stderr_ = 0.0;
  std::size_t joint = 0;
  double denominator = 0.0;
};

/// chi(h) = #{t : X_t > u, X_{t+h} > u} / #{t : X_t > u} over fully
/// in-range pairs. The denominator averages the exceedance counts at the
/// pair's two ends, which makes the estimate invariant under time
/// reversal and exactly 1 on a constant series.
inline std::vector<ExtremogramPoint> extremogram_at(std::span<const double> values,
                                                    std::span<const std::size_t> lags, double u) {
  const std::size_t n = values.size();
  std::vector<char> hit(n);
  for (std::size_t t = 0; t < n; ++t) hit[t] = values[t] > u;
  std::vector<ExtremogramPoint> out;
  for (std::size_t h : lags) {
    require(2 * h < n, "extremogram: lag must be < n / 2");
    std::size_t joint = 0, head = 0, tail = 0;
    for (std::size_t t = 0; t + h < n; ++t) {
      joint += hit[t] && hit[t + h];
      head += hit[t];
      tail += hit[t + h];
    }
    const double denom = 0.5 * static_cast<double>(head + tail);
    require(denom > 0.0, "extremogram: no exceedances");
    ExtremogramPoint p{h, static_cast<double>(joint) / denom, 0.0, joint, denom};
    p.stderr_ = std::sqrt(p.chi_hat * std::max(0.0, 1.0 - p.chi_hat) / denom);
    out.push_back(p);
  }
  return out;
}

/// extremogram_at with u the empirical q-quantile.
inline std::vector<ExtremogramPoint> extremogram(std::span<const double> values,
                                                 std::span<const std::size_t> lags, double q) {
  require(q > 0.0 && q < 1.0, "extremogram: q must lie in (0, 1)");
  return extremogram_at(values, lags, empirical_quantile(values, q));
}

/// Empirical quantile u used by `extremogram` at level q.
inline double extremogram_threshold(std::span<const double> values, double q) {
  return empirical_quantile(values, q);
}

// ---------------------------------------------------------------------------
// Breiman ratio

struct BreimanPoint {
  double q = 0.0;
  double level = 0.0;
  double ratio = 0.0;
  std::size_t sigma_exceed = 0;
  std::size_t x_exceed = 0;
};

struct BreimanResult {
  double target = 0.0;  // E Z_+^alpha
  std::vector<BreimanPoint> points;
  std::vector<std::string> warnings;
};

/// P(X > x) / P(sigma > x) at x = the sigma quantile for each q, with the
/// Breiman limit E Z_+^alpha as reference.
inline BreimanResult breiman_ratio(std::span<const double> sigma, std::span<const double> x,
                                   std::span<const double> q_grid, double alpha,
                                   const InnovationSpec& z) {
  require(sigma.size() == x.size() && !sigma.empty(), "breiman: sigma and x must be paired");
  require(alpha > 0.0, "breiman: alpha must be > 0");
  BreimanResult res;
  res.target = moment_pos(z, alpha).value;
  for (double q : q_grid) {
    const double level = empirical_quantile(sigma, q);
    const auto ns = static_cast<std::size_t>(
        std::count_if(sigma.begin(), sigma.end(), [&](double v) { return v > level; }));
    const auto nx = static_cast<std::size_t>(
        std::count_if(x.begin(), x.end(), [&](double v) { return v > level; }));
    if (ns == 0) {
      res.warnings.push_back("breiman: no sigma exceedances at q = " + std::to_string(q) +
                             "; grid point dropped");
      continue;
    }
    res.points.push_back(
        {q, level, static_cast<double>(nx) / static_cast<double>(ns), ns, nx});
  }
  return res;
}

inline nlohmann::json to_json(const BreimanResult& r) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : r.points) {
    pts.push_back({{"q", p.q}, {"level", p.level}, {"ratio", p.ratio},
                   {"sigma_exceed", p.sigma_exceed}, {"x_exceed", p.x_exceed}});
  }
  return {{"method", "breiman"}, {"target", r.target}, {"points", pts}, {"warnings", r.warnings}};
}

// ---------------------------------------------------------------------------
// Anticlustering diagnostic

struct AnticlusterPoint {
  std::size_t m = 0;
  double estimate = 0.0;
  double stderr_ = 0.0;
  std::size_t hits = 0;
};

struct AnticlusterResult {
  double a_n = 0.0;
  double threshold = 0.0;  // y a_n
  std::size_t r_n = 0;
  std::size_t events = 0;
  std::size_t steps_scanned = 0;
  std::vector<AnticlusterPoint> points;
};

inline nlohmann::json to_json(const AnticlusterResult& r) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : r.points) {
    pts.push_back({{"m", p.m}, {"estimate", p.estimate}, {"stderr", p.stderr_}, {"hits", p.hits}});
  }
  return {{"method", "anticluster"}, {"a_n", r.a_n},     {"threshold", r.threshold},
          {"r_n", r.r_n},            {"events", r.events}, {"steps_scanned", r.steps_scanned},
          {"points", pts}};
}

namespace detail {

// Feeds |X_t| sequentially. A time t with |X_t| > threshold whose full
// window [t - r_n, t + r_n] has been seen opens a conditioning event;
// events use non-overlapping windows.
class WindowScanner {
 public:
  WindowScanner(std::vector<std::size_t> m_grid, std::size_t r_n, double threshold)
      : m_grid_(std::move(m_grid)), r_n_(r_n), threshold_(threshold),
        ring_(2 * r_n + 1), hits_(m_grid_.size(), 0), far_max_(r_n + 2) {}

  void push(double v) {
    ring_[pos_ % ring_.size()] = v;
    ++pos_;
    if (pos_ < ring_.size()) return;
    const std::size_t center = pos_ - 1 - r_n_;
    if (center < next_allowed_) return;
    if (!(at(center) > threshold_)) return;
    ++events_;
    next_allowed_ = center + ring_.size();
    // far_max_[s] = max |X| over s <= |lag| <= r_n
    far_max_[r_n_ + 1] = -1.0;
    for (std::size_t s = r_n_; s >= 1; --s) {
      far_max_[s] = std::max({far_max_[s + 1], at(center + s), at(center - s)});
    }
    for (std::size_t i = 0; i < m_grid_.size(); ++i) {
      if (far_max_[m_grid_[i]] > threshold_) ++hits_[i];
    }
  }

  std::size_t events() const { return events_; }

  std::vector<AnticlusterPoint> points() const {
    require(events_ > 0, "threshold too high");
    std::vector<AnticlusterPoint> out;
    const double ev = static_cast<double>(events_);
    for (std::size_t i = 0; i < m_grid_.size(); ++i) {
      const double p = static_cast<double>(hits_[i]) / ev;
      out.push_back({m_grid_[i], p, std::sqrt(p * (1.0 - p) / ev), hits_[i]});
    }
    return out;
  }

 private:
  double at(std::size_t t) const { return ring_[t % ring_.size()]; }

  std::vector<std::size_t> m_grid_;
  std::size_t r_n_;
  double threshold_;
  std::vector<double> ring_;
  std::vector<std::size_t> hits_;
  std::vector<double> far_max_;
  std::size_t pos_ = 0;
  std::size_t next_allowed_ = 0;
  std::size_t events_ = 0;
};

inline void check_anticluster_grid(const std::vector<std::size_t>& m_grid, std::size_t r_n) {
  require(!m_grid.empty(), "anticluster: m grid must not be empty");
  require(r_n >= 2, "anticluster: r_n must be >= 2");
  for (std::size_t m : m_grid) require(m >= 1 && m < r_n, "anticluster: need 1 <= m < r_n");
}

}  // namespace detail

/// Series version: relative frequency, over non-overlapping windows
/// centred at |X_0| > threshold, of max_{m <= |t| <= r_n} |X_t| > threshold.
inline AnticlusterResult anticluster_diag_series(std::span<const double> values,
                                                 std::vector<std::size_t> m_grid, std::size_t r_n,
                                                 double threshold) {
  detail::check_anticluster_grid(m_grid, r_n);
  detail::WindowScanner scan(std::move(m_grid), r_n, threshold);
  for (double v : values) scan.push(std::abs(v));
  AnticlusterResult r;
  r.a_n = threshold;
  r.threshold = threshold;
  r.r_n = r_n;
  r.events = scan.events();
  r.steps_scanned = values.size();
  r.points = scan.points();
  return r;
}

struct AnticlusterOptions {
  /// Calibration run length as a multiple of n for the (1 - 1/n) quantile.
  std::size_t calibration_factor = 20;
  /// Scanning stops after max_scan_factor * reps * n steps.
  std::size_t max_scan_factor = 50;
  std::size_t burn_in = kDefaultBurnIn;
};

/// Model version of the anticlustering probe
/// P(max_{m <= |t| <= r_n} |X_t| > y a_n | |X_0| > y a_n).
/// a_n is the empirical (1 - 1/n) quantile of |X| over a calibration run;
/// an independent run is then scanned until `reps` conditioning windows
/// have been collected.
inline AnticlusterResult anticluster_diag(const ModelConfig& cfg, std::vector<std::size_t> m_grid,
                                          std::size_t r_n, double y, std::size_t n,
                                          std::size_t reps, RngSeed seed,
                                          const AnticlusterOptions& opt = {}) {
  detail::check_anticluster_grid(m_grid, r_n);
  require(y > 0.0, "anticluster: y must be > 0");
  require(n >= 2 && reps >= 1, "anticluster: need n >= 2 and reps >= 1");

  // Calibration: keep only the order statistics needed for the quantile.
  const std::size_t cal_len = std::max<std::size_t>(opt.calibration_factor, 1) * n;
  const double h = (static_cast<double>(cal_len) - 1.0) * (1.0 - 1.0 / static_cast<double>(n));
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t keep = cal_len - lo;
  std::priority_queue<double, std::vector<double>, std::greater<>> top;
  stream_path(cfg, cal_len, opt.burn_in, substream(seed, 100),
              [&](std::size_t, double, double x) {
                const double a = std::abs(x);
                if (top.size() < keep) {
                  top.push(a);
                } else if (a > top.top()) {
                  top.pop();
                  top.push(a);
                }
              });
  const double lower = top.top();
  top.pop();
  const double upper = top.empty() ? lower : top.top();
  AnticlusterResult res;
  res.a_n = lower + (h - static_cast<double>(lo)) * (upper - lower);
  res.threshold = y * res.a_n;
  res.r_n = r_n;

  detail::WindowScanner scan(std::move(m_grid), r_n, res.threshold);
  const std::size_t max_steps = opt.max_scan_factor * reps * n;
  stream_path(cfg, max_steps, opt.burn_in, substream(seed, 101),
              [&](std::size_t t, double, double x) {
                scan.push(std::abs(x));
                res.steps_scanned = t + 1;
                return scan.events() < reps;
              });
  res.events = scan.events();
  res.points = scan.points();
  return res;
}

}  // namespace svext
