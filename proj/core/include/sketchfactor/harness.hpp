#pragma once

// Experiment driver: planted instance generation, per-seed solver runs with
// an oracle comparison, and deterministic json/csv reports. The oracle is
// exact brute force whenever k^n fits the enumeration cap; otherwise it is
// best-of-20 Lloyd and the report says so (certifying = false).

#include "sketchfactor/matrix.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sketchfactor {

struct ExperimentConfig {
  std::string problem = "kmeans";  // kmeans | sdl | discrete-sdl
  std::string mode = "offline";    // offline | turnstile | rows | random-order
  int n = 32;
  int d = 8;
  int k = 2;
  int r = 1;
  int dmax = 1;
  double eps = 0.5;
  double alpha = 0.01;      // random-order prefix parameter
  double sigma = 0.05;      // planted noise level
  double separation = 4.0;  // minimum pairwise center distance
  long long cap = 2'000'000;
  int retries = 3;
  int coreset_m = 0;
  int oracle_restarts = 20;
  bool include_timing = false;
  std::vector<std::uint64_t> seeds;
  std::string out_format = "json";  // json | csv
  std::string out_path;             // empty = stdout
};

// Flat key=value lines; '#' starts a comment. seeds accepts a comma list
// ("seeds=1,2,3") or a half-open range ("seeds=0:100").
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

struct PlantedInstance {
  DesignMatrix a;
  Matrix truth_x;       // n x k planted left factor
  Matrix truth_d;       // k x d planted centers or dictionary
  std::vector<int> truth_assign;  // k-means ground truth labels
  double planted_cost = 0.0;      // cost of the planted factor pair
};

// problem = kmeans: k centers with pairwise distance >= separation plus
// N(0, sigma^2) row noise. problem = sdl / discrete-sdl: unit-norm rows of D,
// r-sparse coefficients (Gaussian or nonzero integers in [-dmax, dmax]).
PlantedInstance gen_planted(const ExperimentConfig& cfg, std::uint64_t seed);

struct SeedOutcome {
  std::uint64_t seed = 0;
  double cost = 0.0;
  double oracle_cost = 0.0;
  double ratio = 0.0;
  bool success = false;  // cost <= (1 + eps) * oracle_cost
  bool skipped = false;  // enumeration cap exceeded; excluded from the rate
  std::string skip_reason;
  long long resident_words = 0;  // streaming modes only
  long long peak_words = 0;
  double wall_ms = 0.0;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::string oracle_kind;  // "brute-force" | "lloyd-upper-bound"
  bool certifying = false;  // oracle is exact
  std::vector<SeedOutcome> outcomes;
  double success_rate = 0.0;
};

ExperimentReport run_experiment(const ExperimentConfig& cfg);

// Stable field order; ratios carry six significant digits. Timing fields are
// emitted only when the config asks for them, so default reports are
// byte-identical across runs.
std::string emit_report_json(const ExperimentReport& report);
std::string emit_report_csv(const ExperimentReport& report);

// Writes to config.out_path, or stdout when empty.
void emit_report(const ExperimentReport& report);

}  // namespace sketchfactor
