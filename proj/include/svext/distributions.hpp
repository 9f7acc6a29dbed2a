#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <nlohmann/json.hpp>

#include "svext/error.hpp"
#include "svext/parallel.hpp"
#include "svext/rng.hpp"

namespace svext {

// Innovation laws. Each kind has a closed-form survival function and
// closed-form absolute moments.

/// Centered normal with standard deviation `scale` (1 for standard normal).
struct Normal {
  double scale = 1.0;
  friend bool operator==(const Normal&, const Normal&) = default;
};

/// Student t with `df` degrees of freedom, optionally divided by
/// sqrt(df / (df - 2)) so that it has unit variance.
struct StudentT {
  double df = 4.0;
  bool standardized = false;
  friend bool operator==(const StudentT&, const StudentT&) = default;
};

/// Symmetric Laplace with density (rate / 2) exp(-rate |x|).
struct Laplace {
  double rate = 1.0;
  friend bool operator==(const Laplace&, const Laplace&) = default;
};

/// Pareto on [1, inf) with survival x^(-alpha). With `symmetric` set, a
/// random sign is attached so |V| is Pareto and P(V > x) = 0.5 x^(-alpha).
struct Pareto {
  double alpha = 1.0;
  bool symmetric = false;
  friend bool operator==(const Pareto&, const Pareto&) = default;
};

/// Point mass at c.
struct Constant {
  double c = 0.0;
  friend bool operator==(const Constant&, const Constant&) = default;
};

using InnovationSpec = std::variant<Normal, StudentT, Laplace, Pareto, Constant>;

inline void validate(const InnovationSpec& spec) {
  std::visit(
      [](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Normal>) {
          require(d.scale > 0.0, "normal scale must be > 0");
        } else if constexpr (std::is_same_v<T, StudentT>) {
          require(d.df > 0.0, "student_t df must be > 0");
          require(!d.standardized || d.df > 2.0, "variance undefined");
        } else if constexpr (std::is_same_v<T, Laplace>) {
          require(d.rate > 0.0, "laplace rate must be > 0");
        } else if constexpr (std::is_same_v<T, Pareto>) {
          require(d.alpha > 0.0, "pareto alpha must be > 0");
        } else {
          require(std::isfinite(d.c), "constant must be finite");
        }
      },
      spec);
}

inline bool is_symmetric(const InnovationSpec& spec) {
  if (const auto* p = std::get_if<Pareto>(&spec)) return p->symmetric;
  if (const auto* c = std::get_if<Constant>(&spec)) return c->c == 0.0;
  return true;
}

inline bool is_nonnegative(const InnovationSpec& spec) {
  if (const auto* p = std::get_if<Pareto>(&spec)) return !p->symmetric;
  if (const auto* c = std::get_if<Constant>(&spec)) return c->c >= 0.0;
  return false;
}

/// Limit of P(V > x) / P(|V| > x): the tail balance coefficient p.
/// Only p in {0, 0.5, 1} occurs for the supported kinds.
inline double tail_balance_plus(const InnovationSpec& spec) {
  if (const auto* p = std::get_if<Pareto>(&spec)) return p->symmetric ? 0.5 : 1.0;
  if (const auto* c = std::get_if<Constant>(&spec)) {
    return c->c > 0.0 ? 1.0 : (c->c < 0.0 ? 0.0 : 0.5);
  }
  return 0.5;
}

inline std::string describe(const InnovationSpec& spec) {
  return std::visit(
      [](const auto& d) -> std::string {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Normal>) {
          return d.scale == 1.0 ? "N(0,1)" : "N(0," + std::to_string(d.scale) + "^2)";
        } else if constexpr (std::is_same_v<T, StudentT>) {
          return "t(" + std::to_string(d.df) + (d.standardized ? ",std)" : ")");
        } else if constexpr (std::is_same_v<T, Laplace>) {
          return "Laplace(" + std::to_string(d.rate) + ")";
        } else if constexpr (std::is_same_v<T, Pareto>) {
          return (d.symmetric ? "SymPareto(" : "Pareto(") + std::to_string(d.alpha) + ")";
        } else {
          return "Const(" + std::to_string(d.c) + ")";
        }
      },
      spec);
}

/// Draws from one InnovationSpec. Construction validates the spec and
/// caches derived constants.
class Sampler {
 public:
  explicit Sampler(const InnovationSpec& spec) : spec_(spec) {
    validate(spec);
    if (const auto* t = std::get_if<StudentT>(&spec)) {
      t_scale_ = t->standardized ? std::sqrt((t->df - 2.0) / t->df) : 1.0;
    }
  }

  double operator()(Stream& rng) const {
    switch (spec_.index()) {
      case 0:
        return std::get<Normal>(spec_).scale * rng.normal();
      case 1: {
        const double df = std::get<StudentT>(spec_).df;
        const double z = rng.normal();
        const double chi2 = 2.0 * rng.gamma(0.5 * df);
        return t_scale_ * z / std::sqrt(chi2 / df);
      }
      case 2: {
        const double e = rng.exponential() / std::get<Laplace>(spec_).rate;
        return rng.sign() * e;
      }
      case 3: {
        const auto& p = std::get<Pareto>(spec_);
        const double v = std::pow(rng.uniform(), -1.0 / p.alpha);
        return p.symmetric ? rng.sign() * v : v;
      }
      default:
        return std::get<Constant>(spec_).c;
    }
  }

  const InnovationSpec& spec() const { return spec_; }

 private:
  InnovationSpec spec_;
  double t_scale_ = 1.0;
};

/// n i.i.d. draws; bit-identical for identical (spec, n, seed).
inline std::vector<double> sample_innovation(const InnovationSpec& spec, std::size_t n,
                                             RngSeed seed) {
  require(n >= 1, "sample size must be >= 1");
  const Sampler draw(spec);
  Stream rng(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = draw(rng);
  return out;
}

/// Exact P(V > x).
inline double tail_prob(const InnovationSpec& spec, double x) {
  validate(spec);
  return std::visit(
      [x](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Normal>) {
          return 0.5 * std::erfc(x / (d.scale * std::numbers::sqrt2));
        } else if constexpr (std::is_same_v<T, StudentT>) {
          const double s = d.standardized ? std::sqrt((d.df - 2.0) / d.df) : 1.0;
          const boost::math::students_t_distribution<double> t(d.df);
          return boost::math::cdf(boost::math::complement(t, x / s));
        } else if constexpr (std::is_same_v<T, Laplace>) {
          return x >= 0.0 ? 0.5 * std::exp(-d.rate * x) : 1.0 - 0.5 * std::exp(d.rate * x);
        } else if constexpr (std::is_same_v<T, Pareto>) {
          if (!d.symmetric) return x < 1.0 ? 1.0 : std::pow(x, -d.alpha);
          if (x >= 1.0) return 0.5 * std::pow(x, -d.alpha);
          if (x >= -1.0) return 0.5;
          return 1.0 - 0.5 * std::pow(-x, -d.alpha);
        } else {
          return x < d.c ? 1.0 : 0.0;
        }
      },
      spec);
}

/// A moment value; `stderr_` is zero for closed-form values.
struct MomentEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  bool analytic = true;
  std::size_t mc_reps = 0;
};

/// Monte Carlo request for moment evaluation.
struct MonteCarlo {
  std::size_t reps = 100000;
  RngSeed seed{};
  Exec exec{};
};

namespace detail {

// Closed-form E|V|^r, or nullopt if it diverges.
inline std::optional<double> abs_moment_closed(const InnovationSpec& spec, double r) {
  using std::lgamma;
  const double sqrt_pi = std::sqrt(std::numbers::pi);
  return std::visit(
      [&](const auto& d) -> std::optional<double> {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Normal>) {
          return std::pow(d.scale, r) * std::pow(2.0, r / 2.0) *
                 std::exp(lgamma((r + 1.0) / 2.0)) / sqrt_pi;
        } else if constexpr (std::is_same_v<T, StudentT>) {
          if (r >= d.df) return std::nullopt;
          const double s = d.standardized ? std::sqrt((d.df - 2.0) / d.df) : 1.0;
          return std::pow(s, r) * std::pow(d.df, r / 2.0) *
                 std::exp(lgamma((r + 1.0) / 2.0) + lgamma((d.df - r) / 2.0) -
                          lgamma(d.df / 2.0)) /
                 sqrt_pi;
        } else if constexpr (std::is_same_v<T, Laplace>) {
          return std::exp(lgamma(r + 1.0)) / std::pow(d.rate, r);
        } else if constexpr (std::is_same_v<T, Pareto>) {
          if (r >= d.alpha) return std::nullopt;
          return d.alpha / (d.alpha - r);
        } else {
          return std::pow(std::abs(d.c), r);
        }
      },
      spec);
}

// Fraction of E|V|^r carried by the positive part.
inline double positive_share(const InnovationSpec& spec) {
  if (const auto* c = std::get_if<Constant>(&spec)) return c->c > 0.0 ? 1.0 : 0.0;
  if (const auto* p = std::get_if<Pareto>(&spec)) return p->symmetric ? 0.5 : 1.0;
  return 0.5;
}

template <class Transform>
MomentEstimate monte_carlo_mean(const InnovationSpec& spec, const MonteCarlo& mc,
                                Transform f) {
  require(mc.reps >= 2, "Monte Carlo needs at least 2 replicates");
  const Sampler draw(spec);
  const std::size_t chunks = chunk_count(mc.reps);
  std::vector<double> sums(chunks), sqsums(chunks);
  parallel_for(chunks, mc.exec, [&](std::size_t c) {
    Stream rng(substream(mc.seed, c));
    const std::size_t end = std::min(mc.reps, (c + 1) * kChunkSize);
    double s = 0.0, ss = 0.0;
    for (std::size_t i = c * kChunkSize; i < end; ++i) {
      const double v = f(draw(rng));
      s += v;
      ss += v * v;
    }
    sums[c] = s;
    sqsums[c] = ss;
  });
  double s = 0.0, ss = 0.0;
  for (std::size_t c = 0; c < chunks; ++c) {
    s += sums[c];
    ss += sqsums[c];
  }
  const double n = static_cast<double>(mc.reps);
  const double mean = s / n;
  const double var = std::max(0.0, (ss - n * mean * mean) / (n - 1.0));
  return {mean, std::sqrt(var / n), false, mc.reps};
}

}  // namespace detail

/// E|V|^r. Closed form unless `mc` is given, in which case the value is a
/// Monte Carlo mean with its standard error. Divergent moments are an
/// error in both modes.
inline MomentEstimate moment_abs(const InnovationSpec& spec, double r,
                                 const std::optional<MonteCarlo>& mc = std::nullopt) {
  validate(spec);
  require(r >= 0.0, "moment order must be >= 0");
  const auto closed = detail::abs_moment_closed(spec, r);
  require(closed.has_value(), "moment diverges");
  if (!mc) return {*closed, 0.0, true, 0};
  return detail::monte_carlo_mean(spec, *mc, [r](double v) { return std::pow(std::abs(v), r); });
}

/// E[V_+^r] with V_+ = max(V, 0); 0^0 is taken as 0 so that r = 0 gives
/// P(V > 0).
inline MomentEstimate moment_pos(const InnovationSpec& spec, double r,
                                 const std::optional<MonteCarlo>& mc = std::nullopt) {
  validate(spec);
  require(r >= 0.0, "moment order must be >= 0");
  const auto closed = detail::abs_moment_closed(spec, r);
  require(closed.has_value(), "moment diverges");
  if (!mc) return {*closed * detail::positive_share(spec), 0.0, true, 0};
  return detail::monte_carlo_mean(spec, *mc,
                                  [r](double v) { return v > 0.0 ? std::pow(v, r) : 0.0; });
}

/// E[V_-^r] with V_- = max(-V, 0).
inline MomentEstimate moment_neg(const InnovationSpec& spec, double r,
                                 const std::optional<MonteCarlo>& mc = std::nullopt) {
  validate(spec);
  require(r >= 0.0, "moment order must be >= 0");
  const auto closed = detail::abs_moment_closed(spec, r);
  require(closed.has_value(), "moment diverges");
  if (!mc) {
    const double share = std::holds_alternative<Constant>(spec)
                             ? (std::get<Constant>(spec).c < 0.0 ? 1.0 : 0.0)
                             : 1.0 - detail::positive_share(spec);
    return {*closed * share, 0.0, true, 0};
  }
  return detail::monte_carlo_mean(spec, *mc,
                                  [r](double v) { return v < 0.0 ? std::pow(-v, r) : 0.0; });
}

// JSON: {"kind": "laplace", "rate": 4.0} etc.

inline void to_json(nlohmann::json& j, const InnovationSpec& spec) {
  std::visit(
      [&j](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Normal>) {
          j = {{"kind", "normal"}};
          if (d.scale != 1.0) j["scale"] = d.scale;
        } else if constexpr (std::is_same_v<T, StudentT>) {
          j = {{"kind", "student_t"}, {"df", d.df}, {"standardized", d.standardized}};
        } else if constexpr (std::is_same_v<T, Laplace>) {
          j = {{"kind", "laplace"}, {"rate", d.rate}};
        } else if constexpr (std::is_same_v<T, Pareto>) {
          j = {{"kind", "pareto"}, {"alpha", d.alpha}};
          if (d.symmetric) j["symmetric"] = true;
        } else {
          j = {{"kind", "constant"}, {"c", d.c}};
        }
      },
      spec);
}

inline void from_json(const nlohmann::json& j, InnovationSpec& spec) {
  require(j.is_object() && j.contains("kind"), "innovation spec needs a \"kind\" field");
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "normal" || kind == "std_normal") {
    spec = Normal{j.value("scale", 1.0)};
  } else if (kind == "student_t") {
    spec = StudentT{j.at("df").get<double>(), j.value("standardized", false)};
  } else if (kind == "laplace") {
    spec = Laplace{j.at("rate").get<double>()};
  } else if (kind == "pareto") {
    spec = Pareto{j.at("alpha").get<double>(), j.value("symmetric", false)};
  } else if (kind == "constant") {
    spec = Constant{j.at("c").get<double>()};
  } else {
    throw Error("unknown innovation kind: " + kind);
  }
  validate(spec);
}

}  // namespace svext

namespace nlohmann {
template <>
struct adl_serializer<svext::InnovationSpec> {
  static void to_json(json& j, const svext::InnovationSpec& s) { svext::to_json(j, s); }
  static void from_json(const json& j, svext::InnovationSpec& s) { svext::from_json(j, s); }
};
}  // namespace nlohmann
