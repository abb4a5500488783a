#include "sketchfactor/harness.hpp"

#include "sketchfactor/rng.hpp"
#include "sketchfactor/solvers.hpp"
#include "sketchfactor/stream.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace sketchfactor {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::uint64_t> parse_seeds(const std::string& value) {
  std::vector<std::uint64_t> seeds;
  const std::size_t colon = value.find(':');
  if (colon != std::string::npos) {
    const std::uint64_t lo = std::stoull(trim(value.substr(0, colon)));
    const std::uint64_t hi = std::stoull(trim(value.substr(colon + 1)));
    require(lo < hi, "config: empty seed range");
    for (std::uint64_t s = lo; s < hi; ++s) seeds.push_back(s);
    return seeds;
  }
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) seeds.push_back(std::stoull(item));
  }
  return seeds;
}

bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw std::invalid_argument("config: bad boolean '" + v + "'");
}

// Six significant digits, then back to a double so json serialization stays
// numeric.
double round6(double x) {
  if (!std::isfinite(x)) return 1e30;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return std::strtod(buf, nullptr);
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    require(eq != std::string::npos,
            "config line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "problem") cfg.problem = value;
    else if (key == "mode") cfg.mode = value;
    else if (key == "n") cfg.n = std::stoi(value);
    else if (key == "d") cfg.d = std::stoi(value);
    else if (key == "k") cfg.k = std::stoi(value);
    else if (key == "r") cfg.r = std::stoi(value);
    else if (key == "dmax") cfg.dmax = std::stoi(value);
    else if (key == "eps") cfg.eps = std::stod(value);
    else if (key == "alpha") cfg.alpha = std::stod(value);
    else if (key == "sigma") cfg.sigma = std::stod(value);
    else if (key == "separation") cfg.separation = std::stod(value);
    else if (key == "cap") cfg.cap = std::stoll(value);
    else if (key == "retries") cfg.retries = std::stoi(value);
    else if (key == "coreset_m") cfg.coreset_m = std::stoi(value);
    else if (key == "oracle_restarts") cfg.oracle_restarts = std::stoi(value);
    else if (key == "include_timing") cfg.include_timing = parse_bool(value);
    else if (key == "seeds") cfg.seeds = parse_seeds(value);
    else if (key == "out_format") cfg.out_format = value;
    else if (key == "out") cfg.out_path = value;
    else throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

PlantedInstance gen_planted(const ExperimentConfig& cfg, std::uint64_t seed) {
  require(cfg.n >= 1 && cfg.d >= 1 && cfg.k >= 1, "gen_planted: bad shape");
  require(cfg.sigma >= 0.0, "gen_planted: sigma must be >= 0");
  Rng rng(hash2(seed, 0x91a5u));
  PlantedInstance inst;

  if (cfg.problem == "kmeans") {
    // Gaussian centers, blown up until the smallest pairwise gap reaches the
    // requested separation.
    Matrix centers(cfg.k, cfg.d);
    for (int c = 0; c < cfg.k; ++c)
      for (int j = 0; j < cfg.d; ++j) centers(c, j) = rng.gaussian();
    if (cfg.k > 1) {
      double min_gap = std::numeric_limits<double>::infinity();
      for (int i = 0; i < cfg.k; ++i)
        for (int j = i + 1; j < cfg.k; ++j)
          min_gap = std::min(min_gap, (centers.row(i) - centers.row(j)).norm());
      if (min_gap <= 0.0) {
        centers.setZero();
        for (int c = 0; c < cfg.k; ++c) centers(c, c % cfg.d) = c + 1.0;
        min_gap = 1.0;
      }
      if (min_gap < cfg.separation) centers *= cfg.separation / min_gap;
    }
    inst.truth_d = centers;
    inst.a = DesignMatrix(cfg.n, cfg.d);
    inst.truth_x = Matrix::Zero(cfg.n, cfg.k);
    inst.truth_assign.resize(static_cast<std::size_t>(cfg.n));
    for (int i = 0; i < cfg.n; ++i) {
      const int c = i % cfg.k;
      inst.truth_assign[static_cast<std::size_t>(i)] = c;
      inst.truth_x(i, c) = 1.0;
      for (int j = 0; j < cfg.d; ++j)
        inst.a(i, j) = centers(c, j) + cfg.sigma * rng.gaussian();
    }
  } else if (cfg.problem == "sdl" || cfg.problem == "discrete-sdl") {
    require(cfg.r >= 1 && cfg.r <= cfg.k, "gen_planted: need 1 <= r <= k");
    Matrix dict(cfg.k, cfg.d);
    for (int c = 0; c < cfg.k; ++c) {
      for (int j = 0; j < cfg.d; ++j) dict(c, j) = rng.gaussian();
      dict.row(c) /= dict.row(c).norm();
    }
    inst.truth_d = dict;
    inst.truth_x = Matrix::Zero(cfg.n, cfg.k);
    const bool discrete = cfg.problem == "discrete-sdl";
    for (int i = 0; i < cfg.n; ++i) {
      // Random r-subset of the dictionary rows via a partial shuffle.
      const std::vector<int> perm = rng.permutation(static_cast<std::uint64_t>(cfg.k));
      for (int pos = 0; pos < cfg.r; ++pos) {
        const int c = perm[static_cast<std::size_t>(pos)];
        if (discrete) {
          const std::uint64_t pickv = rng.below(static_cast<std::uint64_t>(2 * cfg.dmax));
          const long long v = static_cast<long long>(pickv) - cfg.dmax;
          inst.truth_x(i, c) = static_cast<double>(v >= 0 ? v + 1 : v);
        } else {
          inst.truth_x(i, c) = rng.gaussian();
        }
      }
    }
    inst.a = inst.truth_x * dict;
    for (int i = 0; i < cfg.n; ++i)
      for (int j = 0; j < cfg.d; ++j) inst.a(i, j) += cfg.sigma * rng.gaussian();
  } else {
    throw std::invalid_argument("gen_planted: unknown problem '" + cfg.problem + "'");
  }

  inst.planted_cost = frob_cost(inst.a, inst.truth_x, inst.truth_d);
  return inst;
}

namespace {

struct SolveOutput {
  double cost = 0.0;
  long long resident_words = 0;
  long long peak_words = 0;
};

SolveOutput solve_one(const ExperimentConfig& cfg, const PlantedInstance& inst,
                      std::uint64_t seed) {
  SolveOutput out;
  const bool kmeans = cfg.problem == "kmeans";
  const bool discrete = cfg.problem == "discrete-sdl";

  if (cfg.mode == "offline") {
    PtasOptions po;
    po.cap = cfg.cap;
    po.retries = cfg.retries;
    po.coreset_m = cfg.coreset_m;
    if (kmeans) {
      out.cost = ptas_kmeans(inst.a, cfg.k, cfg.eps, hash2(seed, 0x0f1u), po).factors.cost;
    } else {
      const PtasResult res = ptas_sdl(inst.a, cfg.k, cfg.r, cfg.eps, hash2(seed, 0x0f1u), po);
      out.cost = discrete
                     ? sparse_code(inst.a, res.factors.d, cfg.r, cfg.dmax, cfg.cap).cost
                     : res.factors.cost;
    }
    return out;
  }

  if (cfg.mode == "turnstile" || cfg.mode == "rows") {
    require(kmeans || discrete,
            "run_experiment: sketch decoding needs kmeans or discrete-sdl");
    SketchState state =
        kmeans ? SketchState::for_kmeans(cfg.n, cfg.d, cfg.k, cfg.eps, hash2(seed, 0x5c1u))
               : SketchState::for_sdl(cfg.n, cfg.d, cfg.k, cfg.r, cfg.dmax, cfg.eps,
                                      hash2(seed, 0x5c1u));
    if (cfg.mode == "turnstile") {
      for (int i = 0; i < cfg.n; ++i)
        for (int j = 0; j < cfg.d; ++j)
          state.ingest({i, j, inst.a(i, j)});
    } else {
      for (int i = 0; i < cfg.n; ++i) state.ingest_row(i, inst.a.row(i).transpose());
    }
    const SpaceReport space = state.space_report();
    out.resident_words = space.resident_words;
    out.peak_words = space.peak_words;
    const GuessSketchResult res =
        kmeans ? guess_sketch_kmeans(state, cfg.k, cfg.eps, cfg.cap)
               : guess_sketch_sdl(state, cfg.k, cfg.r, cfg.dmax, cfg.eps, cfg.cap);
    out.cost = frob_cost(inst.a, res.x, res.d);
    return out;
  }

  if (cfg.mode == "random-order") {
    require(kmeans, "run_experiment: random-order mode is k-means only");
    RandomOrderOptions ro;
    ro.cap = cfg.cap;
    // Shuffle the arrival order; the algorithm sees a random permutation.
    Rng rng(hash2(seed, 0x0a7u));
    const std::vector<int> perm = rng.permutation(static_cast<std::uint64_t>(cfg.n));
    Matrix shuffled(cfg.n, cfg.d);
    for (int i = 0; i < cfg.n; ++i)
      shuffled.row(i) = inst.a.row(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]));
    const RandomOrderResult res =
        random_order_kmeans(shuffled, cfg.k, cfg.eps, cfg.alpha, hash2(seed, 0x0f2u), ro);
    out.cost = res.factors.cost;
    out.peak_words = res.peak_words;
    out.resident_words = static_cast<long long>(res.prefix_rows) * cfg.d +
                         static_cast<long long>(cfg.k) * cfg.d + cfg.n;
    return out;
  }

  throw std::invalid_argument("run_experiment: unknown mode '" + cfg.mode + "'");
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  require(!cfg.seeds.empty(), "run_experiment: seed list is empty");
  require(cfg.eps > 0.0, "run_experiment: eps must be > 0");
  require(cfg.mode == "offline" || cfg.mode == "turnstile" ||
              cfg.mode == "rows" || cfg.mode == "random-order",
          "run_experiment: unknown mode '" + cfg.mode + "'");
  require(cfg.problem == "kmeans" || cfg.problem == "sdl" ||
              cfg.problem == "discrete-sdl",
          "run_experiment: unknown problem '" + cfg.problem + "'");

  ExperimentReport report;
  report.config = cfg;

  const bool kmeans = cfg.problem == "kmeans";
  const bool brute_ok =
      kmeans && std::pow(static_cast<double>(cfg.k), cfg.n) <= static_cast<double>(cfg.cap);
  if (kmeans) {
    report.oracle_kind = brute_ok ? "brute-force" : "lloyd-upper-bound";
    report.certifying = brute_ok;
  } else {
    report.oracle_kind = "construction";
    report.certifying = cfg.sigma == 0.0;  // planted cost is then the optimum
  }

  int successes = 0;
  int counted = 0;
  for (const std::uint64_t seed : cfg.seeds) {
    SeedOutcome oc;
    oc.seed = seed;
    const PlantedInstance inst = gen_planted(cfg, seed);

    if (kmeans) {
      oc.oracle_cost = brute_ok
                           ? brute_force_kmeans(inst.a, cfg.k, cfg.cap).cost
                           : lloyd(inst.a, cfg.k, hash2(seed, 0x0e0u),
                                   {.restarts = cfg.oracle_restarts})
                                 .cost;
    } else {
      oc.oracle_cost = inst.planted_cost;
    }

    const auto t0 = std::chrono::steady_clock::now();
    try {
      const SolveOutput sol = solve_one(cfg, inst, seed);
      oc.cost = sol.cost;
      oc.resident_words = sol.resident_words;
      oc.peak_words = sol.peak_words;
    } catch (const std::invalid_argument& e) {
      oc.skipped = true;
      oc.skip_reason = e.what();
    }
    const auto t1 = std::chrono::steady_clock::now();
    oc.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

    if (!oc.skipped) {
      // Centroid arithmetic leaves ~1e-30 dust on zero-noise instances, so a
      // tiny oracle is judged absolutely instead of by ratio.
      if (oc.oracle_cost > 1e-12) {
        oc.ratio = oc.cost / oc.oracle_cost;
        oc.success = oc.cost <= (1.0 + cfg.eps) * oc.oracle_cost;
      } else {
        oc.success = oc.cost <= 1e-6;
        oc.ratio = oc.success ? 1.0 : 1e30;
      }
      ++counted;
      if (oc.success) ++successes;
    }
    report.outcomes.push_back(std::move(oc));
  }
  report.success_rate = counted > 0 ? static_cast<double>(successes) / counted : 0.0;
  return report;
}

std::string emit_report_json(const ExperimentReport& report) {
  nlohmann::ordered_json j;
  const ExperimentConfig& c = report.config;
  j["config"] = {
      {"problem", c.problem},   {"mode", c.mode},
      {"n", c.n},               {"d", c.d},
      {"k", c.k},               {"r", c.r},
      {"dmax", c.dmax},         {"eps", c.eps},
      {"alpha", c.alpha},       {"sigma", c.sigma},
      {"separation", c.separation}, {"cap", c.cap},
      {"retries", c.retries},   {"coreset_m", c.coreset_m},
      {"oracle_restarts", c.oracle_restarts},
      {"include_timing", c.include_timing},
      {"seeds", c.seeds},       {"out_format", c.out_format},
  };
  j["oracle"] = report.oracle_kind;
  j["certifying"] = report.certifying;
  j["outcomes"] = nlohmann::ordered_json::array();
  for (const SeedOutcome& oc : report.outcomes) {
    nlohmann::ordered_json row;
    row["seed"] = oc.seed;
    row["cost"] = oc.cost;
    row["oracle_cost"] = oc.oracle_cost;
    row["ratio"] = round6(oc.ratio);
    row["success"] = oc.success;
    row["skipped"] = oc.skipped;
    if (oc.skipped) row["skip_reason"] = oc.skip_reason;
    row["resident_words"] = oc.resident_words;
    row["peak_words"] = oc.peak_words;
    if (c.include_timing) row["wall_ms"] = round6(oc.wall_ms);
    j["outcomes"].push_back(std::move(row));
  }
  j["success_rate"] = round6(report.success_rate);
  return j.dump(2) + "\n";
}

std::string emit_report_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "seed,cost,oracle_cost,ratio,success,skipped,skip_reason,"
         "resident_words,peak_words";
  if (report.config.include_timing) out << ",wall_ms";
  out << "\n";
  char buf[64];
  for (const SeedOutcome& oc : report.outcomes) {
    std::string reason = oc.skip_reason;
    std::replace(reason.begin(), reason.end(), ',', ';');
    out << oc.seed << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", oc.cost);
    out << buf << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", oc.oracle_cost);
    out << buf << ',';
    std::snprintf(buf, sizeof(buf), "%.6g", oc.ratio);
    out << buf << ',' << (oc.success ? 1 : 0) << ',' << (oc.skipped ? 1 : 0)
        << ',' << reason << ',' << oc.resident_words << ',' << oc.peak_words;
    if (report.config.include_timing) {
      std::snprintf(buf, sizeof(buf), "%.6g", oc.wall_ms);
      out << ',' << buf;
    }
    out << "\n";
  }
  return out.str();
}

void emit_report(const ExperimentReport& report) {
  const std::string text = report.config.out_format == "csv"
                               ? emit_report_csv(report)
                               : emit_report_json(report);
  if (report.config.out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(report.config.out_path);
  if (!out) throw std::runtime_error("cannot write report to " + report.config.out_path);
  out << text;
}

}  // namespace sketchfactor
