// Command line front end: offline solvers, sketch-and-decode streaming runs,
// the random-order clusterer, hard-instance generation, and the experiment
// driver. See README.md for the file formats and output schemas.

#include "sketchfactor/coreset.hpp"
#include "sketchfactor/dimreduce.hpp"
#include "sketchfactor/hardinstance.hpp"
#include "sketchfactor/harness.hpp"
#include "sketchfactor/matrix.hpp"
#include "sketchfactor/rng.hpp"
#include "sketchfactor/solvers.hpp"
#include "sketchfactor/stream.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <string>

namespace {

using nlohmann::ordered_json;
using namespace sketchfactor;

ordered_json matrix_to_json(const Matrix& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string to_csv_scalars(const ordered_json& obj) {
  std::string head;
  std::string vals;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (it->is_array() || it->is_object()) continue;
    if (!head.empty()) {
      head += ',';
      vals += ',';
    }
    head += it.key();
    vals += it->is_string() ? it->get<std::string>() : it->dump();
  }
  return head + "\n" + vals + "\n";
}

// --out accepts "json" or "csv" (stdout) or a file path whose extension picks
// the format; the empty default means json on stdout.
void emit_solution(const ordered_json& obj, const std::string& out) {
  const bool csv = out == "csv" || (out.size() > 4 && out.substr(out.size() - 4) == ".csv");
  const std::string text = csv ? to_csv_scalars(obj) : obj.dump(2) + "\n";
  if (out.empty() || out == "json" || out == "csv") {
    std::cout << text;
    return;
  }
  std::ofstream f(out);
  if (!f) throw std::runtime_error("cannot write " + out);
  f << text;
}

int cmd_solve_kmeans(const std::string& in, int k, double eps,
                     std::uint64_t seed, long long cap, int retries,
                     int coreset_m, const std::string& out) {
  const DesignMatrix a = load_design_matrix(in);
  PtasOptions opts;
  opts.cap = cap;
  opts.retries = retries;
  opts.coreset_m = coreset_m;
  const PtasResult res = ptas_kmeans(a, k, eps, seed, opts);

  ordered_json j;
  j["problem"] = "kmeans";
  j["n"] = a.rows();
  j["d"] = a.cols();
  j["k"] = k;
  j["eps"] = eps;
  j["seed"] = seed;
  j["cost"] = res.factors.cost;
  j["reduced_objective"] = res.reduced_objective;
  j["coreset_m"] = res.coreset_m;
  j["used_lloyd_fallback"] = res.used_lloyd_fallback;
  ordered_json asg = ordered_json::array();
  for (Eigen::Index i = 0; i < res.factors.x.rows(); ++i)
    for (Eigen::Index c = 0; c < res.factors.x.cols(); ++c)
      if (res.factors.x(i, c) == 1.0) asg.push_back(c);
  j["assignment"] = std::move(asg);
  j["centers"] = matrix_to_json(res.factors.d);
  emit_solution(j, out);
  return 0;
}

int cmd_solve_sdl(const std::string& in, int k, int r, double eps,
                  std::uint64_t seed, long long cap, int retries,
                  const std::string& out) {
  const DesignMatrix a = load_design_matrix(in);
  PtasOptions opts;
  opts.cap = cap;
  opts.retries = retries;
  const PtasResult res = ptas_sdl(a, k, r, eps, seed, opts);

  ordered_json j;
  j["problem"] = "sdl";
  j["n"] = a.rows();
  j["d"] = a.cols();
  j["k"] = k;
  j["r"] = r;
  j["eps"] = eps;
  j["seed"] = seed;
  j["cost"] = res.factors.cost;
  j["reduced_objective"] = res.reduced_objective;
  j["coreset_m"] = res.coreset_m;
  j["sampled_patterns"] = res.sampled_patterns;
  j["codes"] = matrix_to_json(res.factors.x);
  j["dictionary"] = matrix_to_json(res.factors.d);
  emit_solution(j, out);
  return 0;
}

// Shared by stream-kmeans and stream-sdl: load the file named by --stream,
// feed it into the sketch, and return the loaded state.
SketchState ingest_stream(const std::string& path, const std::string& mode,
                          int k, int r, int dmax, double eps,
                          std::uint64_t seed, bool sdl) {
  std::ifstream probe(path);
  if (!probe) throw std::runtime_error("cannot open stream file: " + path);
  std::string header_word;
  probe >> header_word;
  probe.close();
  if (!mode.empty() && mode != header_word)
    throw std::runtime_error("stream file is '" + header_word +
                             "' but --mode says '" + mode + "'");

  if (header_word == "turnstile") {
    const TurnstileFile f = read_turnstile_file(path);
    SketchState state = sdl ? SketchState::for_sdl(f.n, f.d, k, r, dmax, eps, seed)
                            : SketchState::for_kmeans(f.n, f.d, k, eps, seed);
    for (const TurnstileUpdate& u : f.updates) state.ingest(u);
    return state;
  }
  if (header_word == "rows") {
    const RowStreamFile f = read_row_stream_file(path);
    SketchState state = sdl ? SketchState::for_sdl(f.n, f.d, k, r, dmax, eps, seed)
                            : SketchState::for_kmeans(f.n, f.d, k, eps, seed);
    for (int i = 0; i < f.n; ++i) state.ingest_row(i, f.rows.row(i).transpose());
    return state;
  }
  throw std::runtime_error("unrecognized stream header: " + header_word);
}

int cmd_stream_kmeans(const std::string& path, const std::string& mode, int k,
                      double eps, std::uint64_t seed, long long cap,
                      const std::string& out) {
  SketchState state = ingest_stream(path, mode, k, 1, 1, eps, seed, false);
  const SpaceReport space = state.space_report();
  const GuessSketchResult res = guess_sketch_kmeans(state, k, eps, cap);

  ordered_json j;
  j["problem"] = "kmeans";
  j["n"] = state.n();
  j["d"] = state.d();
  j["k"] = k;
  j["eps"] = eps;
  j["seed"] = seed;
  j["score"] = res.score;
  j["resident_words"] = space.resident_words;
  j["peak_words"] = space.peak_words;
  j["updates"] = space.update_count;
  ordered_json asg = ordered_json::array();
  for (Eigen::Index i = 0; i < res.x.rows(); ++i)
    for (Eigen::Index c = 0; c < res.x.cols(); ++c)
      if (res.x(i, c) == 1.0) asg.push_back(c);
  j["assignment"] = std::move(asg);
  j["centers"] = matrix_to_json(res.d);
  emit_solution(j, out);
  return 0;
}

int cmd_stream_sdl(const std::string& path, const std::string& mode, int k,
                   int r, int dmax, double eps, std::uint64_t seed,
                   long long cap, const std::string& out) {
  SketchState state = ingest_stream(path, mode, k, r, dmax, eps, seed, true);
  const SpaceReport space = state.space_report();
  const GuessSketchResult res = guess_sketch_sdl(state, k, r, dmax, eps, cap);

  ordered_json j;
  j["problem"] = "discrete-sdl";
  j["n"] = state.n();
  j["d"] = state.d();
  j["k"] = k;
  j["r"] = r;
  j["dmax"] = dmax;
  j["eps"] = eps;
  j["seed"] = seed;
  j["score"] = res.score;
  j["resident_words"] = space.resident_words;
  j["peak_words"] = space.peak_words;
  j["updates"] = space.update_count;
  j["codes"] = matrix_to_json(res.x);
  j["dictionary"] = matrix_to_json(res.d);
  emit_solution(j, out);
  return 0;
}

int cmd_random_order(const std::string& path, int k, double eps, double alpha,
                     std::uint64_t seed, long long cap, bool no_shuffle,
                     const std::string& out) {
  const RowStreamFile f = read_row_stream_file(path);
  Matrix arrivals = f.rows;
  if (!no_shuffle) {
    Rng rng(hash2(seed, 0x0a7u));
    const auto perm = rng.permutation(static_cast<std::uint64_t>(f.n));
    for (int i = 0; i < f.n; ++i)
      arrivals.row(i) = f.rows.row(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]));
  }
  RandomOrderOptions opts;
  opts.cap = cap;
  const RandomOrderResult res =
      random_order_kmeans(arrivals, k, eps, alpha, hash2(seed, 0x0f2u), opts);

  ordered_json j;
  j["problem"] = "kmeans";
  j["mode"] = "random-order";
  j["n"] = f.n;
  j["d"] = f.d;
  j["k"] = k;
  j["eps"] = eps;
  j["alpha"] = alpha;
  j["shuffle_seed"] = seed;
  j["shuffled"] = !no_shuffle;
  j["cost"] = res.factors.cost;
  j["prefix_rows"] = res.prefix_rows;
  j["peak_words"] = res.peak_words;
  j["centers"] = matrix_to_json(res.factors.d);
  emit_solution(j, out);
  return 0;
}

int cmd_gen_hard(int n, int d, int t, double alpha, bool gamma_auto,
                 long long gamma, std::uint64_t seed, const std::string& out) {
  HardInstanceSpec spec;
  spec.n = n;
  spec.d = d;
  spec.t = t;
  spec.alpha = alpha;
  spec.seed = seed;
  const TargetCenters tc = target_centers(spec);
  spec.gamma = gamma_auto ? tc.gamma : gamma;

  const HardInstance inst = generate_hard_instance(spec);
  const Matrix rows = spec.gamma > 0 ? with_planted_centers(inst) : inst.rows;
  write_row_stream_file(out, rows);

  const ClusteredCostCheck check = clustered_cost_check(inst, seed);

  ordered_json j;
  j["n"] = rows.rows();
  j["d"] = d;
  j["t"] = t;
  j["alpha"] = alpha;
  j["gamma"] = spec.gamma;
  j["gamma_formula"] = tc.gamma;
  j["seed"] = seed;
  j["clustered_cost"] = check.cost;
  j["cost_bound"] = check.bound;
  j["cost_within_bound"] = check.within_bound;
  j["out"] = out;
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sketch-based k-means and sparse dictionary factorization"};
  app.require_subcommand(1);

  // Shared option storage; each subcommand binds the subset it uses.
  std::string in, stream_path, mode, out, config_path;
  int n = 100, d = 10, k = 2, r = 1, dmax = 1, t = 2, retries = 3, coreset_m = 0;
  double eps = 0.5, alpha = 0.01;
  std::uint64_t seed = 0;
  long long cap = kDefaultEnumerationCap, gamma = 0;
  bool gamma_auto = false, no_shuffle = false;

  auto* sk = app.add_subcommand("solve-kmeans", "offline k-means pipeline");
  sk->add_option("--in", in, "design matrix file")->required();
  sk->add_option("--k", k)->required();
  sk->add_option("--eps", eps);
  sk->add_option("--seed", seed);
  sk->add_option("--cap", cap);
  sk->add_option("--retries", retries);
  sk->add_option("--coreset-m", coreset_m);
  sk->add_option("--out", out);

  auto* ss = app.add_subcommand("solve-sdl", "offline sparse dictionary pipeline");
  ss->add_option("--in", in, "design matrix file")->required();
  ss->add_option("--k", k)->required();
  ss->add_option("--r", r);
  ss->add_option("--eps", eps);
  ss->add_option("--seed", seed);
  ss->add_option("--cap", cap);
  ss->add_option("--retries", retries);
  ss->add_option("--out", out);

  auto* stk = app.add_subcommand("stream-kmeans", "sketch a stream, decode k-means");
  stk->add_option("--stream", stream_path, "turnstile or row stream file")->required();
  stk->add_option("--mode", mode, "turnstile|rows (default: file header)");
  stk->add_option("--k", k)->required();
  stk->add_option("--eps", eps);
  stk->add_option("--seed", seed);
  stk->add_option("--cap", cap);
  stk->add_option("--out", out);

  auto* sts = app.add_subcommand("stream-sdl", "sketch a stream, decode a discrete dictionary");
  sts->add_option("--stream", stream_path, "turnstile or row stream file")->required();
  sts->add_option("--mode", mode, "turnstile|rows (default: file header)");
  sts->add_option("--k", k)->required();
  sts->add_option("--r", r);
  sts->add_option("--dmax", dmax);
  sts->add_option("--eps", eps);
  sts->add_option("--seed", seed);
  sts->add_option("--cap", cap);
  sts->add_option("--out", out);

  auto* ro = app.add_subcommand("random-order", "buffer a prefix, cluster, assign online");
  ro->add_option("--stream", stream_path, "row stream file")->required();
  ro->add_option("--k", k)->required();
  ro->add_option("--eps", eps);
  ro->add_option("--alpha", alpha, "prefix fraction parameter");
  ro->add_option("--seed", seed, "shuffle seed (logged in the output)");
  ro->add_option("--cap", cap);
  ro->add_flag("--no-shuffle", no_shuffle, "keep the file order");
  ro->add_option("--out", out);

  auto* gh = app.add_subcommand("gen-hard", "generate the spike-coordinate hard instance");
  gh->add_option("--n", n)->required();
  gh->add_option("--d", d)->required();
  gh->add_option("--t", t);
  gh->add_option("--alpha", alpha, "no-spike probability");
  gh->add_flag("--gamma-auto", gamma_auto, "append the formula count of planted centers");
  gh->add_option("--gamma", gamma, "append this many planted copies of each center");
  gh->add_option("--seed", seed);
  gh->add_option("--out", out, "row stream output path")->required();

  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("--config", config_path, "key=value config file")->required();
  run->add_option("--out", out, "override output path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sk->parsed())
      return cmd_solve_kmeans(in, k, eps, seed, cap, retries, coreset_m, out);
    if (ss->parsed())
      return cmd_solve_sdl(in, k, r, eps, seed, cap, retries, out);
    if (stk->parsed())
      return cmd_stream_kmeans(stream_path, mode, k, eps, seed, cap, out);
    if (sts->parsed())
      return cmd_stream_sdl(stream_path, mode, k, r, dmax, eps, seed, cap, out);
    if (ro->parsed())
      return cmd_random_order(stream_path, k, eps, alpha, seed, cap, no_shuffle, out);
    if (gh->parsed())
      return cmd_gen_hard(n, d, t, alpha, gamma_auto, gamma, seed, out);
    if (run->parsed()) {
      ExperimentConfig cfg = parse_config_file(config_path);
      if (!out.empty()) {
        if (out == "json" || out == "csv") {
          cfg.out_format = out;
          cfg.out_path.clear();
        } else {
          cfg.out_path = out;
          if (out.size() > 4 && out.substr(out.size() - 4) == ".csv")
            cfg.out_format = "csv";
        }
      }
      emit_report(run_experiment(cfg));
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
