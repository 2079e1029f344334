#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "fracnls/experiments.hpp"
#include "fracnls/io.hpp"
#include "fracnls/noise.hpp"
#include "fracnls/solver.hpp"
#include "fracnls/stochastic.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace fracnls;

namespace {

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  bool seedGiven = false;
  int threads = 0;
  std::string out = ".";
  int level = 0;
};

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_experiment_config(c.config);
  if (c.seedGiven) cfg.seed = c.seed;
  if (c.threads > 0) {
    cfg.threads = c.threads;
  } else if (const char* env = std::getenv("FRACNLS_THREADS")) {
    try {
      cfg.threads = std::stoi(env);
    } catch (const std::exception&) {
      throw ConfigError("FRACNLS_THREADS must be an integer");
    }
  }
  cfg.solver.K = cfg.K;
  cfg.solver.M = cfg.M;
  return cfg;
}

int chosen_level(const Common& c, const ExperimentConfig& cfg) {
  const int n = c.level > 0 ? c.level : cfg.levels.back();
  if (n < 1) throw ConfigError("level must be at least 1");
  return n;
}

fs::path out_dir(const Common& c) {
  fs::path p(c.out);
  fs::create_directories(p);
  return p;
}

json sidecar(const ExperimentConfig& cfg, int n) {
  return {{"n", n}, {"K", cfg.K}, {"M", cfg.M}, {"H0", cfg.hurst.h0}, {"H1", cfg.hurst.h1}, {"seed", cfg.seed}, {"cH", cfg.cH}};
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream f(p);
  if (!f) throw ConfigError("cannot write " + p.string());
  f << j.dump(2) << '\n';
}

int cmd_sample_noise(const Common& c) {
  const auto cfg = resolve(c);
  const int n = std::max(chosen_level(c, cfg), cfg.nMax);
  const auto noise = sample_spectral_noise(cfg.noise_config(), n, cfg.seed);
  const auto dir = out_dir(c);
  write_noise(noise, (dir / "noise.bin").string());
  auto meta = sidecar(cfg, n);
  meta["rows"] = noise.rows();
  meta["cols"] = noise.cols();
  write_json(dir / "noise.json", meta);
  std::cout << "noise level " << n << ": " << noise.rows() << " x " << noise.cols() << " cells -> " << (dir / "noise.bin")
            << '\n';
  return 0;
}

int cmd_psi(const Common& c) {
  const auto cfg = resolve(c);
  const int n = chosen_level(c, cfg);
  const auto ncfg = cfg.noise_config();
  const auto noise = sample_spectral_noise(ncfg, n, cfg.seed);
  const TimeGrid grid(cfg.M);
  const ToneIntegrator integ(ncfg, n, cfg.K, grid);
  const auto psi = integ.psi(project_modes(noise, n, cfg.K));
  const auto dir = out_dir(c);
  write_trajectory(psi, (dir / "psi.bin").string());
  write_series(compute_lambda(psi), (dir / "lambda.bin").string());
  write_json(dir / "psi.json", sidecar(cfg, n));
  std::cout << "psi level " << n << " -> " << (dir / "psi.bin") << '\n';
  return 0;
}

int cmd_sigma(const Common& c, int mcSamples) {
  const auto cfg = resolve(c);
  const int n = chosen_level(c, cfg);
  const TimeGrid grid(cfg.M);
  const auto est = compute_sigma(cfg.noise_config(), n, cfg.K, grid, mcSamples > 0 ? SigmaMethod::MonteCarlo : SigmaMethod::Exact,
                                 mcSamples, cfg.seed);
  const auto dir = out_dir(c);
  write_trajectory(est.mean, (dir / "sigma.bin").string());
  auto meta = sidecar(cfg, n);
  meta["method"] = mcSamples > 0 ? "mc" : "exact";
  meta["samples"] = est.samples;
  write_json(dir / "sigma.json", meta);
  std::cout << "sigma level " << n << " (" << meta["method"].get<std::string>() << ") -> " << (dir / "sigma.bin") << '\n';
  return 0;
}

int cmd_solve(const Common& c) {
  const auto cfg = resolve(c);
  cfg.solver.validate();
  const int n = chosen_level(c, cfg);
  const auto ncfg = cfg.noise_config();
  const TimeGrid grid(cfg.M);
  const auto sigma = exact_sigma_levels(ncfg, n, n, cfg.K, grid, std::min(2.0, 2.0 * cfg.solver.tau));
  const auto noise = sample_spectral_noise(ncfg, n, cfg.seed);
  const ToneIntegrator integ(ncfg, n, cfg.K, grid);
  auto psi = integ.psi(project_modes(noise, n, cfg.K));
  const auto tree = make_tree(n, psi, compute_lambda(psi), sigma.front());
  const auto sol = picard_solve(tree, cfg.solver);
  const auto u = reconstruct_u(sol.z, psi);
  const auto dir = out_dir(c);
  write_trajectory(sol.z, (dir / "z.bin").string());
  write_trajectory(u, (dir / "u.bin").string());
  auto meta = sidecar(cfg, n);
  meta["report"] = {{"iterations", sol.report.iterations}, {"restarts", sol.report.restarts}, {"tau", sol.report.tau},
                    {"residual", sol.report.residual},     {"converged", sol.report.converged},
                    {"differences", sol.report.differences}, {"ratios", sol.report.ratios}};
  write_json(dir / "solve.json", meta);
  std::cout << "solved level " << n << " in " << sol.report.iterations << " iterations, tau " << sol.report.tau
            << ", residual " << sol.report.residual << '\n';
  return 0;
}

int cmd_experiment(const Common& c) {
  auto cfg = resolve(c);
  const auto dir = out_dir(c);
  if (cfg.output.empty()) cfg.output = (dir / (cfg.kind + ".csv")).string();
  const auto report = run_experiment(cfg);
  {
    std::ofstream f(dir / (cfg.kind + ".json"));
    f << report_json(report) << '\n';
  }
  write_csv(report, std::cout);
  std::cout << report.kind << ": " << report.verdict << " [" << report.wallSeconds << " s]\n";
  return report.pass ? 0 : 1;
}

// Re-reads a CSV, prints it as a table and refits the slope from the stored rows.
int cmd_report(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open " + path);
  std::string line;
  std::getline(f, line);
  if (line != "kind,n,value,stderr,samples,K,M,seed") throw ConfigError(path + " is not an experiment CSV");
  std::vector<std::pair<double, double>> pts;
  std::string storedSlope;
  std::string firstLabel;
  while (std::getline(f, line)) {
    std::stringstream ss(line);
    std::string kind, n, value, se;
    std::getline(ss, kind, ',');
    std::getline(ss, n, ',');
    std::getline(ss, value, ',');
    std::getline(ss, se, ',');
    if (kind == "slope") {
      storedSlope = n + " +- " + value;
      continue;
    }
    if (firstLabel.empty()) firstLabel = kind;
    std::cout << kind << "\t" << n << "\t" << value << "\t" << se << '\n';
    if (kind == firstLabel && std::stod(value) > 0.0) pts.emplace_back(std::stod(n), std::stod(value));
  }
  if (!storedSlope.empty()) std::cout << "stored slope: " << storedSlope << '\n';
  if (pts.size() >= 3) {
    const auto fit = fit_log2_slope(pts);
    std::cout << "refit slope (" << firstLabel << "): " << fit.slope << " +- " << fit.stderr_ << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fracnls: renormalised stochastic quadratic Schroedinger simulations"};
  app.require_subcommand(1);
  Common common;
  int mcSamples = 0;
  std::string csv;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "JSON configuration file");
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& s) { common.seed = s; common.seedGiven = true; }, "RNG seed");
    sub->add_option("--threads", common.threads, "worker threads (also FRACNLS_THREADS)");
    sub->add_option("--out", common.out, "output directory");
  };
  auto* sn = app.add_subcommand("sample-noise", "sample one spectral noise realisation");
  auto* ps = app.add_subcommand("psi", "stochastic convolution of one realisation");
  auto* sg = app.add_subcommand("sigma", "renormalisation trajectory (exact or Monte Carlo)");
  auto* so = app.add_subcommand("solve", "Picard solve of the remainder equation");
  auto* ex = app.add_subcommand("experiment", "run a configured rate experiment");
  auto* rp = app.add_subcommand("report", "summarise an experiment CSV");
  for (auto* sub : {sn, ps, sg, so, ex}) add_common(sub);
  for (auto* sub : {sn, ps, sg, so}) sub->add_option("--level", common.level, "truncation level (default: last configured)");
  sg->add_option("--mc", mcSamples, "Monte Carlo samples (0 selects the exact route)");
  rp->add_option("csv", csv, "CSV written by the experiment subcommand")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*sn) return cmd_sample_noise(common);
    if (*ps) return cmd_psi(common);
    if (*sg) return cmd_sigma(common, mcSamples);
    if (*so) return cmd_solve(common);
    if (*ex) return cmd_experiment(common);
    if (*rp) return cmd_report(csv);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
