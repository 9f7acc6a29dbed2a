#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "svext/distributions.hpp"
#include "svext/error.hpp"
#include "svext/estimators.hpp"
#include "svext/io.hpp"
#include "svext/models.hpp"
#include "svext/theory.hpp"
#include "svext/version.hpp"

namespace svext {

/// One requested analysis: `type` is hill | theta | extremogram | breiman |
/// anticluster | theory, `params` its arguments.
struct AnalysisRequest {
  std::string type;
  nlohmann::json params = nlohmann::json::object();
};

struct ExperimentConfig {
  ModelConfig model;
  std::size_t n = 1000;
  std::size_t burn_in = kDefaultBurnIn;
  RngSeed seed{};
  std::vector<AnalysisRequest> analyses;
  std::filesystem::path output_dir = "out";
  /// Set for the figure presets; adds the exceedance-marked figure.csv.
  std::optional<std::string> preset;
  std::string description;
};

struct ExperimentReport {
  nlohmann::json report;   // persisted as report.json
  nlohmann::json timings;  // persisted as timings.json
  std::vector<std::filesystem::path> files;
  std::size_t failed_analyses = 0;
};

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json analyses = nlohmann::json::array();
  for (const auto& a : cfg.analyses) analyses.push_back({{"type", a.type}, {"params", a.params}});
  nlohmann::json j{{"model", model_to_json(cfg.model)},
                   {"n", cfg.n},
                   {"burn_in", cfg.burn_in},
                   {"seed", {{"master_seed", cfg.seed.master_seed}, {"stream_id", cfg.seed.stream_id}}},
                   {"analyses", analyses},
                   {"output_dir", cfg.output_dir.string()}};
  if (cfg.preset) j["preset"] = *cfg.preset;
  if (!cfg.description.empty()) j["description"] = cfg.description;
  return j;
}

inline const std::vector<std::string>& analysis_types() {
  static const std::vector<std::string> types{"hill",    "theta",       "extremogram",
                                              "breiman", "anticluster", "theory"};
  return types;
}

/// Parses an experiment config, or the "config" member of a persisted
/// report.json. Throws Error on any validation failure.
inline ExperimentConfig config_from_json(const nlohmann::json& root) {
  const nlohmann::json& j = root.contains("config") && root.contains("toolkit") ? root.at("config") : root;
  try {
    ExperimentConfig cfg;
    cfg.model = model_from_json(j.at("model"));
    cfg.n = j.at("n").get<std::size_t>();
    require(cfg.n >= 1, "experiment: n must be >= 1");
    cfg.burn_in = j.value("burn_in", kDefaultBurnIn);
    if (j.contains("seed")) {
      const auto& s = j.at("seed");
      if (s.is_object()) {
        cfg.seed = {s.value("master_seed", std::uint64_t{0}), s.value("stream_id", std::uint64_t{0})};
      } else {
        cfg.seed = {s.get<std::uint64_t>(), 0};
      }
    }
    for (const auto& a : j.value("analyses", nlohmann::json::array())) {
      AnalysisRequest req{a.at("type").get<std::string>(), a.value("params", nlohmann::json::object())};
      const auto& types = analysis_types();
      require(std::find(types.begin(), types.end(), req.type) != types.end(),
              "experiment: unknown analysis type: " + req.type);
      cfg.analyses.push_back(std::move(req));
    }
    cfg.output_dir = j.value("output_dir", std::string("out"));
    if (j.contains("preset")) cfg.preset = j.at("preset").get<std::string>();
    cfg.description = j.value("description", std::string());
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("experiment config: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Presets

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"fig1-left", "fig1-right", "fig2-garch", "fig2-sv"};
  return names;
}

/// Built-in 1000-step configurations for the two figure panels.
inline ExperimentConfig preset_config(const std::string& name, RngSeed seed) {
  ExperimentConfig cfg;
  cfg.n = 1000;
  cfg.seed = seed;
  cfg.preset = name;
  if (name == "fig1-left") {
    cfg.model = ExpAR1Config{0.9, Laplace{4.0}, Normal{}};
    cfg.description =
        "log-volatility AR(1), phi = 0.9, eta ~ Laplace with P(eta > x) = P(eta <= -x) = "
        "0.5 exp(-4x), Z standard normal. The Laplace tail is taken as the law of eta, not of "
        "X, so P(exp(eta) > x) = 0.5 x^-4 and X is regularly varying with index 4.";
  } else if (name == "fig1-right") {
    cfg.model = ExpAR1Config{0.9, Normal{0.5}, StudentT{4.0, true}};
    cfg.description =
        "log-volatility AR(1), phi = 0.9, eta ~ N(0, 0.25), Z ~ t(4) standardized to unit "
        "variance; X inherits index 4 from Z.";
  } else if (name == "fig2-garch") {
    SreSvConfig sre;
    sre.pair = Garch11Pair{1e-7, 0.1, 0.89, Normal{}};
    sre.garch_returns = true;
    cfg.model = sre;
    cfg.description = "GARCH(1,1) returns, alpha0 = 1e-7, alpha1 = 0.1, beta1 = 0.89, normal noise.";
  } else if (name == "fig2-sv") {
    SreSvConfig sre;
    sre.pair = Garch11Pair{1e-7, 0.1, 0.89, Normal{}};
    cfg.model = sre;
    cfg.description =
        "stochastic volatility with the GARCH(1,1) volatility of fig2-garch and independent "
        "standard normal Z.";
  } else {
    throw Error("unknown preset: " + name);
  }
  cfg.output_dir = "out/" + name;
  return cfg;
}

/// t,x,exceed_low,exceed_high rows marking exceedances of the empirical
/// 0.01 and 0.99 quantiles of x.
inline std::string figure_csv(std::span<const double> x) {
  const double lo = empirical_quantile(x, 0.01);
  const double hi = empirical_quantile(x, 0.99);
  std::ostringstream out;
  out << "t,x,exceed_low,exceed_high\n";
  for (std::size_t t = 0; t < x.size(); ++t) {
    out << t << ',' << format_double(x[t]) << ',' << (x[t] < lo ? 1 : 0) << ','
        << (x[t] > hi ? 1 : 0) << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Running

namespace experiment_detail {

inline std::vector<double> series_of(const Path& path, const std::string& name) {
  if (name == "sigma") return path.sigma;
  if (name == "x") return path.x;
  if (name == "abs_x") return abs_values(path.x);
  throw Error("unknown series: " + name + " (expected sigma, x or abs_x)");
}

inline InnovationSpec noise_of(const ModelConfig& cfg) {
  return std::visit(
      [](const auto& c) -> InnovationSpec {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, SreSvConfig>) {
          if (c.garch_returns) return std::get<Garch11Pair>(c.pair).eta;
        }
        return c.z;
      },
      cfg);
}

inline double threshold_of(const nlohmann::json& p, std::span<const double> v) {
  if (p.contains("u")) return p.at("u").get<double>();
  return empirical_quantile(v, p.value("q", 0.99));
}

inline nlohmann::json run_theory(const nlohmann::json& p, const ModelConfig& model, RngSeed seed,
                                 Exec exec) {
  const auto which = p.at("which").get<std::string>();
  const auto& args = p.value("params", nlohmann::json::object());
  const std::size_t reps = args.value("mc_reps", std::size_t{100000});
  if (which == "theta_x_ma") {
    const auto* ma = std::get_if<MaSvConfig>(&model);
    require(ma != nullptr, "theory theta_x_ma needs a masv model");
    const double alpha = args.value("alpha", std::get<Pareto>(ma->eta).alpha);
    return to_json(theta_x_ma(ma->psi, alpha, ma->p, ma->z, reps, seed, exec));
  }
  const auto* sre = std::get_if<SreSvConfig>(&model);
  require(sre != nullptr, "theory " + which + " needs an sresv model");
  const KestenProblem problem{multiplier_of(*sre)};
  auto kappa = [&] {
    return kesten_index(problem, args.value("kesten_reps", std::size_t{1000000}),
                        args.value("tol", 1e-6), substream(seed, 7), exec);
  };
  if (which == "kesten") return to_json(kappa());
  const double alpha = args.contains("alpha") ? args.at("alpha").get<double>() : kappa().kappa;
  if (which == "theta_sigma") {
    return to_json(theta_sigma_sre(problem, alpha, reps, args.value("trunc_T", std::size_t{10000}),
                                   seed, exec));
  }
  if (which == "theta_x_sre") {
    return to_json(theta_x_sre(problem, noise_of(model), alpha, sre->p,
                               args.value("m", std::size_t{50}), reps, seed, exec));
  }
  throw Error("unknown theory quantity: " + which);
}

inline nlohmann::json run_analysis(const AnalysisRequest& req, const ExperimentConfig& cfg,
                                   const Path& path, std::size_t index, Exec exec,
                                   std::vector<std::filesystem::path>& files) {
  const auto& p = req.params;
  const RngSeed seed = substream(cfg.seed, 1000 + index);
  if (req.type == "hill") {
    const auto v = series_of(path, p.value("series", std::string("sigma")));
    return to_json(hill(v, p.at("k").get<std::size_t>()));
  }
  if (req.type == "theta") {
    const auto v = series_of(path, p.value("series", std::string("abs_x")));
    const double u = threshold_of(p, v);
    const BootstrapOptions boot{p.value("bootstrap_reps", std::size_t{200}), seed, exec};
    const auto method = p.value("method", std::string("intervals"));
    if (method == "blocks") return to_json(blocks_theta(v, u, p.value("block_len", std::size_t{50}), boot));
    if (method == "runs") return to_json(runs_theta(v, u, p.value("run_len", std::size_t{10}), boot));
    if (method == "intervals") return to_json(intervals_theta(v, u, boot));
    throw Error("unknown theta method: " + method);
  }
  if (req.type == "extremogram") {
    const auto v = series_of(path, p.value("series", std::string("x")));
    const auto lags = p.value("lags", std::vector<std::size_t>{1});
    const auto pts = extremogram(v, lags, p.value("q", 0.95));
    std::ostringstream csv;
    write_extremogram_csv(pts, csv);
    const auto file = cfg.output_dir / ("extremogram_" + std::to_string(index) + ".csv");
    write_text_file(file, csv.str());
    files.push_back(file);
    nlohmann::json out{{"method", "extremogram"}, {"file", file.filename().string()}};
    for (const auto& pt : pts) {
      out["points"].push_back({{"lag", pt.lag}, {"chi_hat", pt.chi_hat}, {"stderr", pt.stderr_}});
    }
    return out;
  }
  if (req.type == "breiman") {
    const auto q = p.value("q_grid", std::vector<double>{0.99, 0.999});
    return to_json(breiman_ratio(path.sigma, path.x, q, p.at("alpha").get<double>(), noise_of(cfg.model)));
  }
  if (req.type == "anticluster") {
    const std::size_t n = p.value("n", cfg.n);
    const auto r_n = p.value("r_n", static_cast<std::size_t>(std::sqrt(static_cast<double>(n))));
    return to_json(anticluster_diag(cfg.model, p.value("m_grid", std::vector<std::size_t>{1, 10}), r_n,
                                    p.value("y", 1.0), n, p.value("reps", std::size_t{100}), seed));
  }
  if (req.type == "theory") return run_theory(p, cfg.model, seed, exec);
  throw Error("unknown analysis type: " + req.type);
}

}  // namespace experiment_detail

/// Simulates the configured path once, runs every analysis on it and
/// writes path.csv, report.json, timings.json and any analysis CSVs under
/// cfg.output_dir. Analysis failures are recorded in the report; only
/// configuration and simulation errors throw.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg, Exec exec = {}) {
  using clock = std::chrono::steady_clock;
  auto seconds_since = [](clock::time_point t0) {
    return std::chrono::duration<double>(clock::now() - t0).count();
  };
  validate(cfg.model);
  require(cfg.n >= 1, "experiment: n must be >= 1");
  std::filesystem::create_directories(cfg.output_dir);

  ExperimentReport rep;
  const auto t_sim = clock::now();
  const Path path = simulate(cfg.model, cfg.n, cfg.burn_in, cfg.seed);
  rep.timings["simulate_seconds"] = seconds_since(t_sim);

  std::ostringstream csv;
  write_path_csv(path, csv);
  rep.files.push_back(cfg.output_dir / "path.csv");
  write_text_file(rep.files.back(), csv.str());
  if (cfg.preset) {
    rep.files.push_back(cfg.output_dir / "figure.csv");
    write_text_file(rep.files.back(), figure_csv(path.x));
  }

  nlohmann::json analyses = nlohmann::json::array();
  rep.timings["analyses"] = nlohmann::json::array();
  for (std::size_t i = 0; i < cfg.analyses.size(); ++i) {
    const auto& req = cfg.analyses[i];
    nlohmann::json entry{{"type", req.type}};
    const auto t0 = clock::now();
    try {
      entry["result"] = experiment_detail::run_analysis(req, cfg, path, i, exec, rep.files);
      entry["ok"] = true;
    } catch (const std::exception& e) {
      entry["ok"] = false;
      entry["error"] = e.what();
      ++rep.failed_analyses;
    }
    rep.timings["analyses"].push_back({{"type", req.type}, {"seconds", seconds_since(t0)}});
    analyses.push_back(std::move(entry));
  }

  rep.report = {
      {"toolkit", {{"name", "svext"}, {"version", kVersion}}},
      {"config", config_to_json(cfg)},
      {"rng",
       {{"generator", "philox4x32-10"},
        {"master_seed", cfg.seed.master_seed},
        {"stream_id", cfg.seed.stream_id},
        {"analysis_substreams", "substream(seed, 1000 + analysis index)"}}},
      {"path",
       {{"file", "path.csv"}, {"n", path.size()}, {"burn_in", path.burn_in},
        {"degenerate", path.degenerate}, {"warnings", path.warnings}}},
      {"analyses", analyses}};
  rep.files.push_back(cfg.output_dir / "report.json");
  write_text_file(rep.files.back(), rep.report.dump(2) + "\n");
  rep.files.push_back(cfg.output_dir / "timings.json");
  write_text_file(rep.files.back(), rep.timings.dump(2) + "\n");
  return rep;
}

}  // namespace svext
