#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fracnls/noise.hpp"
#include "fracnls/norms.hpp"
#include "fracnls/solver.hpp"
#include "fracnls/types.hpp"

namespace fracnls {

const std::vector<std::string>& experiment_kinds();

struct ExperimentConfig {
  std::string kind = "psi-divergence";
  HurstPair hurst;
  double cH = 1.0;
  int K = 16;
  int M = 2048;
  int nMax = 0;          // 0: the largest level the kind touches
  double nXi = 5.0;      // time-frequency cells per unit (rounded onto the tone lattice)
  double nEta = 4.0;     // space-frequency cells per unit
  SolverConfig solver;
  std::vector<int> levels{3, 4, 5, 6};
  int samples = 20;
  double alpha = 0.25;   // negative space exponent of the Cauchy statistic
  double horizon = 1.0;  // T of the L^2([0,T] x torus) statistic
  double b = 0.55;       // X^b_c exponents of the centred-square statistic and probes
  double c = 0.2;
  double mu = 0.5;
  int probes = 16;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string output;    // CSV path, empty for none

  NoiseConfig noise_config() const;
  void validate() const;
};

// Reads the JSON layout {hurst, cH, grid, noise, solver, experiment, seed, threads, output}.
ExperimentConfig parse_experiment_config(const std::string& jsonText);
ExperimentConfig load_experiment_config(const std::string& path);
std::string experiment_config_json(const ExperimentConfig& cfg);

struct SlopeFit {
  double slope = 0.0;
  double stderr_ = 0.0;
};

// Least squares of log2(value) against n.
SlopeFit fit_log2_slope(const std::vector<std::pair<double, double>>& points);

struct LevelStat {
  std::string label;  // CSV kind column
  int n = 0;
  double value = 0.0;
  double stderr_ = 0.0;
  int samples = 0;
};

struct RateReport {
  std::string kind;
  std::vector<LevelStat> rows;
  std::optional<SlopeFit> slope;
  bool pass = false;
  std::string verdict;
  double wallSeconds = 0.0;
  ExperimentConfig config;
};

RateReport run_experiment(const ExperimentConfig& cfg);

// Header, one line per row, then the slope line when a fit exists.
void write_csv(const RateReport& report, std::ostream& out);
void write_csv(const RateReport& report, const std::string& path);
// Metadata sidecar: config echo, verdict, wall time.
std::string report_json(const RateReport& report);

// Sample mean and standard error, summed pairwise in index order.
struct MeanStat {
  double mean = 0.0;
  double stderr_ = 0.0;
};
MeanStat mean_stat(const std::vector<double>& xs);
double pairwise_sum(const double* x, std::size_t n);

// Runs body(i) for i in [0, count) on up to `threads` workers; results must be stored by index.
void parallel_for(int count, int threads, const std::function<void(int)>& body);

// Per-realisation Psi statistics on a coupled level ladder.
struct PsiEnsemble {
  std::vector<int> levels;
  std::vector<std::vector<double>> energy;     // [level][sample]: ||Psi^(n)||^2 on [0,T] x torus
  std::vector<std::vector<double>> increment;  // [level][sample]: ||Psi^(n+1) - Psi^(n)||^2_{L^2 H^-alpha}
};
PsiEnsemble psi_ensemble(const ExperimentConfig& cfg, bool increments);

// Reports for the divergence and Cauchy kinds built from one ensemble.
RateReport psi_divergence_report(const ExperimentConfig& cfg, const PsiEnsemble& ens);
RateReport psi_cauchy_report(const ExperimentConfig& cfg, const PsiEnsemble& ens);

// Bounded-ratio suites of the localisation inequalities over a fixed probe family.
struct SuiteResult {
  std::string name;
  std::vector<double> taus;
  std::vector<std::vector<double>> ratios;  // [tau][probe]
  std::vector<double> medians;              // probe-set median per tau
  double max = 0.0;
  // Every ratio is within 5x the probe-set median at its own tau and at tau = 1.
  bool pass = false;
};

// Suites: "b-prim" (b, b'), "c-mu" (c, mu), "lam-z" (b, c, mu, gamma), "control-m-z-z" (b, c, mu).
struct SuiteParams {
  int K = 8;
  int M = 1024;
  double b = 0.55;
  double bPrime = 0.7;
  double c = 0.2;
  double mu = 0.5;
  double gamma = 0.75;
  int probes = 20;
  std::uint64_t seed = 7;
};
SuiteResult localization_suite(const std::string& name, const SuiteParams& params);

// Random smooth probes vanishing at t = 0: seeded combinations of the fixed probe family.
std::vector<ModeTrajectory> random_probes(int K, int M, int count, std::uint64_t seed);

}  // namespace fracnls
