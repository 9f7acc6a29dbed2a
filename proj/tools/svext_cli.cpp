// svext command-line front end.
//
//   svext [--seed N] [--out DIR] [--threads N] <subcommand> ...
//
// Every subcommand writes its artifact under --out and echoes JSON results
// on stdout. --threads changes wall-clock time only, never the output.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "svext/svext.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  std::string out = "out";
  unsigned threads = 1;
  bool out_given = false;
  bool seed_given = false;
};

// Inline JSON when the argument starts with '{', otherwise a file name.
json json_arg(const std::string& arg) {
  if (!arg.empty() && arg.front() == '{') {
    try {
      return json::parse(arg);
    } catch (const json::exception& e) {
      throw svext::Error(std::string("invalid inline JSON: ") + e.what());
    }
  }
  return svext::read_json_file(arg);
}

// Accepts a model config or a path.json that carries one.
svext::ModelConfig model_arg_json(const std::string& arg) {
  const auto j = json_arg(arg);
  if (j.is_object() && !j.contains("family") && j.contains("model")) {
    return svext::model_from_json(j.at("model"));
  }
  return svext::model_from_json(j);
}

std::vector<double> load_series(const std::string& file, const std::string& series) {
  auto cols = svext::read_path_csv(fs::path(file));
  if (series == "sigma") return cols.sigma;
  if (series == "x") return cols.x;
  if (series == "abs_x") return svext::abs_values(cols.x);
  throw svext::Error("unknown series: " + series);
}

void emit(const Globals& g, const std::string& name, const json& j) {
  svext::write_text_file(fs::path(g.out) / name, j.dump(2) + "\n");
  std::cout << j.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"svext: heavy-tailed stochastic volatility simulation and extremal analysis"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "master seed (u64)")->each([&](const std::string&) { g.seed_given = true; });
  app.add_option("--out", g.out, "output directory")->each([&](const std::string&) { g.out_given = true; });
  app.add_option("--threads", g.threads, "worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber);

  // simulate
  auto* sim = app.add_subcommand("simulate", "simulate a model path to path.csv");
  std::string model_arg;
  std::size_t n = 1000, burn_in = svext::kDefaultBurnIn;
  sim->add_option("--model", model_arg, "model config JSON (file or inline)")->required();
  sim->add_option("--n", n, "path length");
  sim->add_option("--burn-in", burn_in, "burn-in steps");

  // hill
  auto* hill_cmd = app.add_subcommand("hill", "Hill tail-index estimate from a path.csv column");
  std::string input, series = "sigma";
  std::size_t k = 100;
  hill_cmd->add_option("--input", input, "path.csv")->required();
  hill_cmd->add_option("--series", series, "sigma | x | abs_x");
  hill_cmd->add_option("--k", k, "number of upper order statistics");

  // theta-est
  auto* theta_cmd = app.add_subcommand("theta-est", "extremal index estimate from a path.csv column");
  std::string method = "intervals", theta_series = "abs_x";
  double q = 0.99;
  std::optional<double> u;
  std::size_t block_len = 50, run_len = 10, boot_reps = 200;
  theta_cmd->add_option("--input", input, "path.csv")->required();
  theta_cmd->add_option("--series", theta_series, "sigma | x | abs_x");
  theta_cmd->add_option("--method", method, "blocks | runs | intervals");
  theta_cmd->add_option("--q", q, "threshold as an empirical quantile level");
  theta_cmd->add_option("--u", u, "explicit threshold (overrides --q)");
  theta_cmd->add_option("--block-len", block_len);
  theta_cmd->add_option("--run-len", run_len);
  theta_cmd->add_option("--bootstrap-reps", boot_reps);

  // theta-theory
  auto* theory_cmd = app.add_subcommand("theta-theory", "evaluate an extremal index formula");
  std::string which = "kesten", multiplier_arg, z_arg = R"({"kind":"normal"})";
  std::size_t mc_reps = 100000, m = 50, trunc_T = 10000;
  double tol = 1e-6, p = 2.0;
  std::optional<double> alpha;
  std::vector<double> psi;
  theory_cmd->add_option("--which", which, "kesten | theta-sigma | theta-x-sre | theta-x-ma");
  theory_cmd->add_option("--model", model_arg, "sresv or masv model config (file or inline)");
  theory_cmd->add_option("--multiplier", multiplier_arg,
                         R"(multiplier law JSON, e.g. {"type":"lognormal","mu":-0.5,"s":1})");
  theory_cmd->add_option("--z", z_arg, "Z innovation spec JSON");
  theory_cmd->add_option("--mc-reps", mc_reps);
  theory_cmd->add_option("--tol", tol);
  theory_cmd->add_option("--alpha", alpha, "index (defaults: Kesten root, or the eta index for MA)");
  theory_cmd->add_option("--p", p, "volatility power");
  theory_cmd->add_option("--m", m, "cluster window");
  theory_cmd->add_option("--trunc-T", trunc_T, "product horizon");
  theory_cmd->add_option("--psi", psi, "MA coefficients")->delimiter(',');

  // extremogram
  auto* ext_cmd = app.add_subcommand("extremogram", "upper-tail extremogram to extremogram.csv");
  std::vector<std::size_t> lags{1};
  double ext_q = 0.95;
  std::string ext_series = "x";
  ext_cmd->add_option("--input", input, "path.csv")->required();
  ext_cmd->add_option("--series", ext_series, "sigma | x | abs_x");
  ext_cmd->add_option("--lags", lags)->delimiter(',');
  ext_cmd->add_option("--q", ext_q, "quantile level of the threshold");

  // diagnose
  auto* diag = app.add_subcommand("diagnose", "Breiman ratio and anticlustering diagnostics");
  diag->require_subcommand(1);
  auto* breiman_cmd = diag->add_subcommand("breiman", "P(X > x) / P(sigma > x) against E Z_+^alpha");
  std::vector<double> q_grid{0.99, 0.999};
  double breiman_alpha = 4.0;
  breiman_cmd->add_option("--input", input, "path.csv")->required();
  breiman_cmd->add_option("--z", z_arg, "Z innovation spec JSON");
  breiman_cmd->add_option("--alpha", breiman_alpha)->required();
  breiman_cmd->add_option("--q-grid", q_grid)->delimiter(',');
  auto* ac_cmd = diag->add_subcommand("anticluster", "conditional far-exceedance probability");
  std::vector<std::size_t> m_grid{1, 10, 25, 50};
  std::optional<std::size_t> r_n;
  double y = 1.0;
  std::size_t ac_n = 100000, ac_reps = 100;
  ac_cmd->add_option("--model", model_arg, "model config (file or inline)")->required();
  ac_cmd->add_option("--m-grid", m_grid)->delimiter(',');
  ac_cmd->add_option("--r-n", r_n, "window half-width (default floor(sqrt(n)))");
  ac_cmd->add_option("--y", y);
  ac_cmd->add_option("--n", ac_n, "a_n is the (1 - 1/n) quantile of |X|");
  ac_cmd->add_option("--reps", ac_reps, "conditioning windows");

  // experiment
  auto* exp_cmd = app.add_subcommand("experiment", "config-driven runs");
  exp_cmd->require_subcommand(1);
  auto* run_cmd = exp_cmd->add_subcommand("run", "run an experiment config (or a persisted report.json)");
  std::string config_file;
  run_cmd->add_option("config", config_file)->required();
  auto* preset_cmd = exp_cmd->add_subcommand("preset", "run a built-in figure preset");
  std::string preset;
  preset_cmd->add_option("name", preset)->required()->check(CLI::IsMember(svext::preset_names()));

  CLI11_PARSE(app, argc, argv);

  const svext::Exec exec{g.threads};
  const svext::RngSeed seed{g.seed, 0};
  try {
    if (*sim) {
      const auto cfg = model_arg_json(model_arg);
      const auto path = svext::simulate(cfg, n, burn_in, seed);
      std::ostringstream csv;
      svext::write_path_csv(path, csv);
      svext::write_text_file(fs::path(g.out) / "path.csv", csv.str());
      json meta{{"model", svext::model_to_json(cfg)}, {"n", n}, {"burn_in", path.burn_in},
                {"seed", {{"master_seed", seed.master_seed}, {"stream_id", seed.stream_id}}},
                {"degenerate", path.degenerate}, {"warnings", path.warnings}};
      emit(g, "path.json", meta);
    } else if (*hill_cmd) {
      emit(g, "hill.json", svext::to_json(svext::hill(load_series(input, series), k)));
    } else if (*theta_cmd) {
      const auto v = load_series(input, theta_series);
      const double thr = u ? *u : svext::empirical_quantile(v, q);
      const svext::BootstrapOptions boot{boot_reps, seed, exec};
      svext::ThetaEstimate est;
      if (method == "blocks") {
        est = svext::blocks_theta(v, thr, block_len, boot);
      } else if (method == "runs") {
        est = svext::runs_theta(v, thr, run_len, boot);
      } else if (method == "intervals") {
        est = svext::intervals_theta(v, thr, boot);
      } else {
        throw svext::Error("unknown theta method: " + method);
      }
      emit(g, "theta.json", svext::to_json(est));
    } else if (*theory_cmd) {
      const auto z = json_arg(z_arg).get<svext::InnovationSpec>();
      if (which == "theta-x-ma") {
        if (!model_arg.empty()) {
          const auto cfg = model_arg_json(model_arg);
          const auto* ma = std::get_if<svext::MaSvConfig>(&cfg);
          if (!ma) throw svext::Error("theta-x-ma needs a masv model");
          const double a = alpha.value_or(std::get<svext::Pareto>(ma->eta).alpha);
          emit(g, "theory.json", svext::to_json(svext::theta_x_ma(ma->psi, a, ma->p, ma->z, mc_reps, seed, exec)));
        } else {
          if (!alpha || psi.empty()) throw svext::Error("theta-x-ma needs --model or --psi and --alpha");
          emit(g, "theory.json", svext::to_json(svext::theta_x_ma(psi, *alpha, p, z, mc_reps, seed, exec)));
        }
        return 0;
      }
      svext::KestenProblem problem;
      svext::InnovationSpec noise = z;
      if (!multiplier_arg.empty()) {
        problem.law = svext::multiplier_from_json(json_arg(multiplier_arg));
      } else if (!model_arg.empty()) {
        const auto cfg = model_arg_json(model_arg);
        const auto* sre = std::get_if<svext::SreSvConfig>(&cfg);
        if (!sre) throw svext::Error(which + " needs an sresv model");
        problem.law = svext::multiplier_of(*sre);
        noise = sre->z;
        p = sre->p;
      }
      auto kappa = [&] { return svext::kesten_index(problem, std::max<std::size_t>(mc_reps, 2), tol, svext::substream(seed, 7), exec); };
      if (which == "kesten") {
        emit(g, "theory.json", svext::to_json(kappa()));
      } else if (which == "theta-sigma") {
        const double a = alpha ? *alpha : kappa().kappa;
        emit(g, "theory.json", svext::to_json(svext::theta_sigma_sre(problem, a, mc_reps, trunc_T, seed, exec)));
      } else if (which == "theta-x-sre") {
        const double a = alpha ? *alpha : kappa().kappa;
        emit(g, "theory.json", svext::to_json(svext::theta_x_sre(problem, noise, a, p, m, mc_reps, seed, exec)));
      } else {
        throw svext::Error("unknown --which: " + which);
      }
    } else if (*ext_cmd) {
      const auto pts = svext::extremogram(load_series(input, ext_series), lags, ext_q);
      std::ostringstream csv;
      svext::write_extremogram_csv(pts, csv);
      svext::write_text_file(fs::path(g.out) / "extremogram.csv", csv.str());
      std::cout << csv.str();
    } else if (*breiman_cmd) {
      const auto cols = svext::read_path_csv(fs::path(input));
      const auto z = json_arg(z_arg).get<svext::InnovationSpec>();
      emit(g, "breiman.json", svext::to_json(svext::breiman_ratio(cols.sigma, cols.x, q_grid, breiman_alpha, z)));
    } else if (*ac_cmd) {
      const auto cfg = model_arg_json(model_arg);
      const std::size_t half = r_n.value_or(static_cast<std::size_t>(std::sqrt(static_cast<double>(ac_n))));
      emit(g, "anticluster.json", svext::to_json(svext::anticluster_diag(cfg, m_grid, half, y, ac_n, ac_reps, seed)));
    } else if (*run_cmd || *preset_cmd) {
      svext::ExperimentConfig cfg = *run_cmd ? svext::config_from_json(svext::read_json_file(config_file))
                                             : svext::preset_config(preset, seed);
      if (g.out_given) cfg.output_dir = g.out;
      if (g.seed_given) cfg.seed = seed;
      const auto rep = svext::run_experiment(cfg, exec);
      std::cout << rep.report.dump(2) << "\n";
      for (const auto& f : rep.files) std::cerr << "wrote " << f.string() << "\n";
    }
  } catch (const svext::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
