#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "svext/distributions.hpp"
#include "svext/error.hpp"
#include "svext/rng.hpp"

namespace svext {

inline constexpr std::size_t kDefaultBurnIn = 10000;

/// sigma_t = exp(Y_t), Y_t = phi Y_{t-1} + eta_t.
struct ExpAR1Config {
  double phi = 0.0;
  InnovationSpec eta = Normal{};
  InnovationSpec z = Normal{};
};

/// log sigma_t^2 = alpha0 / (1 - phi) + U_t,
/// U_t = phi U_{t-1} + gamma0 Z_{t-1} + delta0 |Z_{t-1}|, X_t = sigma_t Z_t.
/// Z drives both the volatility and the returns. Only Laplace Z yields a
/// regularly varying sigma; any other Z needs `light_tailed` set.
struct EgarchConfig {
  double alpha0 = 0.0;
  double gamma0 = 0.5;
  double delta0 = 0.5;
  double phi = 0.5;
  InnovationSpec z = Laplace{2.0};
  bool light_tailed = false;
};

/// A_t = alpha1 eta_{t-1}^2 + beta1, B_t = alpha0 (squared GARCH(1,1) volatility).
struct Garch11Pair {
  double alpha0 = 1e-7;
  double alpha1 = 0.1;
  double beta1 = 0.89;
  InnovationSpec eta = Normal{};
};

/// i.i.d. A_t ~ a, B_t ~ b, mutually independent, both non-negative.
struct GenericPair {
  InnovationSpec a = Constant{0.0};
  InnovationSpec b = Constant{1.0};
};

/// sigma_t^p = A_t sigma_{t-1}^p + B_t. With `garch_returns` the returns
/// reuse the GARCH noise (X_t = sigma_t eta_t) instead of an independent Z;
/// that variant is for comparison only.
struct SreSvConfig {
  double p = 2.0;
  std::variant<Garch11Pair, GenericPair> pair = Garch11Pair{};
  InnovationSpec z = Normal{};
  bool garch_returns = false;
};

/// sigma_t^p = |Y_t|, Y_t = sum_j psi_j eta_{t-j}.
struct MaSvConfig {
  double p = 1.0;
  std::vector<double> psi{1.0};
  InnovationSpec eta = Pareto{4.0};
  InnovationSpec z = Constant{1.0};
};

using ModelConfig = std::variant<ExpAR1Config, EgarchConfig, SreSvConfig, MaSvConfig>;

inline std::string family_name(const ModelConfig& cfg) {
  constexpr const char* names[] = {"expar1", "egarch", "sresv", "masv"};
  return names[cfg.index()];
}

/// Simulated (sigma_t, X_t) series with its provenance.
struct Path {
  std::vector<double> sigma;
  std::vector<double> x;
  ModelConfig config;
  RngSeed seed{};
  std::size_t burn_in = 0;
  bool degenerate = false;
  std::vector<std::string> warnings;

  std::size_t size() const { return x.size(); }
};

/// Substream roles. The Z draws of every family come from
/// substream(seed, kZStream), so X can be checked against a replay of Z.
enum StreamRole : std::uint64_t {
  kEtaStream = 0,
  kZStream = 1,
  kBStream = 2,
  kCheckStream = 3,
  kInitStream = 4,
};

inline void validate(const ExpAR1Config& c) {
  require(std::abs(c.phi) < 1.0, "expar1: |phi| must be < 1");
  validate(c.eta);
  validate(c.z);
}

inline void validate(const EgarchConfig& c) {
  require(std::abs(c.phi) < 1.0, "egarch: |phi| must be < 1");
  require(c.gamma0 > 0.0 && c.delta0 > 0.0, "egarch: gamma0 and delta0 must be > 0");
  validate(c.z);
  require(c.light_tailed || std::holds_alternative<Laplace>(c.z),
          "egarch: heavy-tailed regime needs Laplace z; set light_tailed for other laws");
}

inline void validate(const SreSvConfig& c) {
  require(c.p > 0.0, "sresv: p must be > 0");
  validate(c.z);
  if (const auto* g = std::get_if<Garch11Pair>(&c.pair)) {
    require(c.p == 2.0, "sresv: garch11 pair implies p = 2");
    require(g->alpha0 > 0.0, "sresv: garch11 alpha0 must be > 0");
    require(g->alpha1 >= 0.0 && g->beta1 >= 0.0, "sresv: garch11 alpha1, beta1 must be >= 0");
    validate(g->eta);
  } else {
    const auto& gen = std::get<GenericPair>(c.pair);
    validate(gen.a);
    validate(gen.b);
    require(is_nonnegative(gen.a) && is_nonnegative(gen.b),
            "sresv: generic A and B must be non-negative laws");
  }
  require(!c.garch_returns || std::holds_alternative<Garch11Pair>(c.pair),
          "sresv: garch_returns needs a garch11 pair");
}

inline void validate(const MaSvConfig& c) {
  require(c.p > 0.0, "masv: p must be > 0");
  require(!c.psi.empty(), "masv: psi must have at least one coefficient");
  bool nonzero = false;
  for (double v : c.psi) {
    require(std::isfinite(v), "masv: psi must be finite");
    nonzero = nonzero || v != 0.0;
  }
  require(nonzero, "masv: at least one psi_j must be nonzero");
  require(std::holds_alternative<Pareto>(c.eta), "masv: eta must be a (one- or two-sided) Pareto law");
  validate(c.eta);
  validate(c.z);
}

inline void validate(const ModelConfig& cfg) {
  std::visit([](const auto& c) { validate(c); }, cfg);
}

namespace detail {

struct Step {
  double sigma;
  double x;
};

class ExpAR1Stepper {
 public:
  ExpAR1Stepper(const ExpAR1Config& c, RngSeed seed)
      : phi_(c.phi), eta_(c.eta), z_(c.z),
        eta_rng_(substream(seed, kEtaStream)), z_rng_(substream(seed, kZStream)) {}

  void advance() { y_ = phi_ * y_ + eta_(eta_rng_); }

  Step step() {
    advance();
    const double sigma = std::exp(y_);
    return {sigma, sigma * z_(z_rng_)};
  }

 private:
  double phi_;
  Sampler eta_, z_;
  Stream eta_rng_, z_rng_;
  double y_ = 0.0;
};

class EgarchStepper {
 public:
  EgarchStepper(const EgarchConfig& c, RngSeed seed)
      : c_(c), level_(c.alpha0 / (1.0 - c.phi)), z_(c.z), z_rng_(substream(seed, kZStream)) {}

  Step step() {
    const double sigma = std::exp(0.5 * (level_ + u_));
    const double z = z_(z_rng_);
    u_ = c_.phi * u_ + c_.gamma0 * z + c_.delta0 * std::abs(z);
    return {sigma, sigma * z};
  }

  // Burn-in must consume Z: it is part of the volatility recursion.
  void advance() { step(); }

 private:
  EgarchConfig c_;
  double level_;
  Sampler z_;
  Stream z_rng_;
  double u_ = 0.0;
};

class SreStepper {
 public:
  SreStepper(const SreSvConfig& c, RngSeed seed)
      : c_(c), inv_p_(1.0 / c.p),
        a_(std::holds_alternative<Garch11Pair>(c.pair) ? std::get<Garch11Pair>(c.pair).eta
                                                       : std::get<GenericPair>(c.pair).a),
        b_(std::holds_alternative<Garch11Pair>(c.pair)
               ? InnovationSpec{Constant{std::get<Garch11Pair>(c.pair).alpha0}}
               : std::get<GenericPair>(c.pair).b),
        z_(c.z),
        a_rng_(substream(seed, kEtaStream)), b_rng_(substream(seed, kBStream)),
        z_rng_(substream(seed, kZStream)) {
    if (const auto* g = std::get_if<Garch11Pair>(&c.pair)) garch_ = *g;
    if (garch_) eta_prev_ = a_(a_rng_);

    // sigma_0^p = B_1 / (1 - EA) when EA < 1, else B_1.
    Stream init(substream(seed, kInitStream));
    const double b1 = b_(init);
    double mean_a = std::numeric_limits<double>::infinity();
    if (garch_) {
      mean_a = garch_->alpha1 * moment_abs(garch_->eta, 2.0).value + garch_->beta1;
    } else if (auto m = detail::abs_moment_closed(std::get<GenericPair>(c.pair).a, 1.0)) {
      mean_a = *m;
    }
    v_ = mean_a < 1.0 ? b1 / (1.0 - mean_a) : b1;
  }

  void advance() { step(); }

  Step step() {
    double a, b;
    double eta_now = 0.0;
    if (garch_) {
      a = garch_->alpha1 * eta_prev_ * eta_prev_ + garch_->beta1;
      b = garch_->alpha0;
      eta_now = a_(a_rng_);
      eta_prev_ = eta_now;
    } else {
      a = a_(a_rng_);
      b = b_(b_rng_);
    }
    v_ = a * v_ + b;
    const double sigma = std::pow(v_, inv_p_);
    const double noise = c_.garch_returns ? eta_now : z_(z_rng_);
    return {sigma, sigma * noise};
  }

 private:
  SreSvConfig c_;
  double inv_p_;
  Sampler a_, b_, z_;
  Stream a_rng_, b_rng_, z_rng_;
  std::optional<Garch11Pair> garch_;
  double eta_prev_ = 0.0;
  double v_ = 0.0;
};

class MaStepper {
 public:
  MaStepper(const MaSvConfig& c, RngSeed seed)
      : psi_(c.psi), inv_p_(1.0 / c.p), eta_(c.eta), z_(c.z),
        eta_rng_(substream(seed, kEtaStream)), z_rng_(substream(seed, kZStream)),
        ring_(c.psi.size()) {
    // eta_{1-q}, ..., eta_0
    for (std::size_t i = 0; i + 1 < ring_.size(); ++i) push(eta_(eta_rng_));
  }

  void advance() { step(); }

  Step step() {
    push(eta_(eta_rng_));
    // ring_[head_ - 1 - j] holds eta_{t-j}
    const std::size_t len = ring_.size();
    double y = 0.0;
    for (std::size_t j = 0; j < len; ++j) y += psi_[j] * ring_[(head_ + len - 1 - j) % len];
    const double sigma = std::pow(std::abs(y), inv_p_);
    return {sigma, sigma * z_(z_rng_)};
  }

 private:
  void push(double v) {
    ring_[head_] = v;
    head_ = (head_ + 1) % ring_.size();
  }

  std::vector<double> psi_;
  double inv_p_;
  Sampler eta_, z_;
  Stream eta_rng_, z_rng_;
  std::vector<double> ring_;
  std::size_t head_ = 0;
};

// Monte Carlo guard for generic SRE pairs: mean(log A) + 3 SE < 0.
inline void check_generic_stationarity(const GenericPair& pair, RngSeed seed) {
  constexpr std::size_t kDraws = 100000;
  const Sampler a(pair.a);
  Stream rng(substream(seed, kCheckStream));
  double s = 0.0, ss = 0.0;
  bool has_zero = false;
  for (std::size_t i = 0; i < kDraws; ++i) {
    const double v = a(rng);
    if (v <= 0.0) {
      has_zero = true;
      continue;
    }
    const double l = std::log(v);
    s += l;
    ss += l * l;
  }
  if (has_zero) return;  // log A = -inf with positive probability
  const double n = static_cast<double>(kDraws);
  const double mean = s / n;
  const double se = std::sqrt(std::max(0.0, (ss - n * mean * mean) / (n - 1.0)) / n);
  require(mean + 3.0 * se < 0.0, "no stationary solution");
}

}  // namespace detail

/// Runs the model for burn_in + n steps and calls sink(t, sigma, x) for the
/// last n. The stream is sequential and holds O(q) state, so arbitrarily
/// long paths can be scanned without materializing them. A sink returning
/// bool stops the run by returning false.
template <class Sink>
void stream_path(const ModelConfig& cfg, std::size_t n, std::size_t burn_in, RngSeed seed,
                 Sink&& sink) {
  validate(cfg);
  auto run = [&](auto&& stepper) {
    for (std::size_t t = 0; t < burn_in; ++t) stepper.advance();
    for (std::size_t t = 0; t < n; ++t) {
      const auto s = stepper.step();
      if constexpr (std::is_same_v<decltype(sink(t, s.sigma, s.x)), bool>) {
        if (!sink(t, s.sigma, s.x)) return;
      } else {
        sink(t, s.sigma, s.x);
      }
    }
  };
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, ExpAR1Config>) {
          run(detail::ExpAR1Stepper(c, seed));
        } else if constexpr (std::is_same_v<T, EgarchConfig>) {
          run(detail::EgarchStepper(c, seed));
        } else if constexpr (std::is_same_v<T, SreSvConfig>) {
          if (const auto* g = std::get_if<GenericPair>(&c.pair)) {
            detail::check_generic_stationarity(*g, seed);
          }
          run(detail::SreStepper(c, seed));
        } else {
          run(detail::MaStepper(c, seed));
        }
      },
      cfg);
}

/// Simulates any family. MA models are exact from t = 1 and ignore burn_in.
inline Path simulate(const ModelConfig& cfg, std::size_t n, std::size_t burn_in, RngSeed seed) {
  require(n >= 1, "path length must be >= 1");
  if (std::holds_alternative<MaSvConfig>(cfg)) burn_in = 0;
  Path path{{}, {}, cfg, seed, burn_in, false, {}};
  path.sigma.resize(n);
  path.x.resize(n);
  stream_path(cfg, n, burn_in, seed, [&](std::size_t t, double s, double x) {
    path.sigma[t] = s;
    path.x[t] = x;
  });
  if (const auto* sre = std::get_if<SreSvConfig>(&cfg)) {
    const auto* gen = std::get_if<GenericPair>(&sre->pair);
    if (gen && gen->b == InnovationSpec{Constant{0.0}}) {
      path.degenerate = true;
      path.warnings.emplace_back("degenerate SRE: B == 0, volatility decays to zero");
    }
  }
  return path;
}

inline Path simulate_exp_ar1(const ExpAR1Config& cfg, std::size_t n, std::size_t burn_in,
                             RngSeed seed) {
  return simulate(cfg, n, burn_in, seed);
}

inline Path simulate_egarch(const EgarchConfig& cfg, std::size_t n, std::size_t burn_in,
                            RngSeed seed) {
  return simulate(cfg, n, burn_in, seed);
}

inline Path simulate_sre_sv(const SreSvConfig& cfg, std::size_t n, std::size_t burn_in,
                            RngSeed seed) {
  return simulate(cfg, n, burn_in, seed);
}

inline Path simulate_ma_sv(const MaSvConfig& cfg, std::size_t n, RngSeed seed) {
  return simulate(cfg, n, 0, seed);
}

// JSON with a "family" discriminator.

inline nlohmann::json model_to_json(const ModelConfig& cfg) {
  using nlohmann::json;
  return std::visit(
      [](const auto& c) -> json {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, ExpAR1Config>) {
          return {{"family", "expar1"}, {"phi", c.phi}, {"eta", c.eta}, {"z", c.z}};
        } else if constexpr (std::is_same_v<T, EgarchConfig>) {
          return {{"family", "egarch"}, {"alpha0", c.alpha0}, {"gamma0", c.gamma0},
                  {"delta0", c.delta0},  {"phi", c.phi},       {"z", c.z},
                  {"light_tailed", c.light_tailed}};
        } else if constexpr (std::is_same_v<T, SreSvConfig>) {
          json pair;
          if (const auto* g = std::get_if<Garch11Pair>(&c.pair)) {
            pair = {{"type", "garch11"}, {"alpha0", g->alpha0}, {"alpha1", g->alpha1},
                    {"beta1", g->beta1}, {"eta", g->eta}};
          } else {
            const auto& gen = std::get<GenericPair>(c.pair);
            pair = {{"type", "generic"}, {"a", gen.a}, {"b", gen.b}};
          }
          return {{"family", "sresv"}, {"p", c.p}, {"pair", pair}, {"z", c.z},
                  {"garch_returns", c.garch_returns}};
        } else {
          return {{"family", "masv"}, {"p", c.p}, {"psi", c.psi}, {"eta", c.eta}, {"z", c.z}};
        }
      },
      cfg);
}

inline ModelConfig model_from_json(const nlohmann::json& j) {
  require(j.is_object() && j.contains("family"), "model config needs a \"family\" field");
  const auto family = j.at("family").get<std::string>();
  ModelConfig cfg;
  if (family == "expar1") {
    cfg = ExpAR1Config{j.at("phi").get<double>(), j.at("eta").get<InnovationSpec>(),
                       j.at("z").get<InnovationSpec>()};
  } else if (family == "egarch") {
    cfg = EgarchConfig{j.at("alpha0").get<double>(), j.at("gamma0").get<double>(),
                       j.at("delta0").get<double>(), j.at("phi").get<double>(),
                       j.at("z").get<InnovationSpec>(), j.value("light_tailed", false)};
  } else if (family == "sresv") {
    SreSvConfig c;
    c.p = j.value("p", 2.0);
    const auto& pair = j.at("pair");
    const auto type = pair.at("type").get<std::string>();
    if (type == "garch11") {
      c.pair = Garch11Pair{pair.at("alpha0").get<double>(), pair.at("alpha1").get<double>(),
                           pair.at("beta1").get<double>(), pair.at("eta").get<InnovationSpec>()};
    } else if (type == "generic") {
      c.pair = GenericPair{pair.at("a").get<InnovationSpec>(), pair.at("b").get<InnovationSpec>()};
    } else {
      throw Error("unknown sresv pair type: " + type);
    }
    c.z = j.at("z").get<InnovationSpec>();
    c.garch_returns = j.value("garch_returns", false);
    cfg = c;
  } else if (family == "masv") {
    cfg = MaSvConfig{j.at("p").get<double>(), j.at("psi").get<std::vector<double>>(),
                     j.at("eta").get<InnovationSpec>(), j.at("z").get<InnovationSpec>()};
  } else {
    throw Error("unknown model family: " + family);
  }
  validate(cfg);
  return cfg;
}

}  // namespace svext
