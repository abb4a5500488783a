#include "doctest.h"

#include "sketchfactor/harness.hpp"
#include "sketchfactor/rng.hpp"
#include "sketchfactor/solvers.hpp"
#include "sketchfactor/stream.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

using namespace sketchfactor;

TEST_CASE("config parser covers every key, comments, and seed syntax") {
  const std::string text =
      "# experiment\n"
      "problem = sdl\n"
      "mode = offline\n"
      "n = 12\nd = 7\nk = 3\nr = 2\ndmax = 4\n"
      "eps = 0.25\nalpha = 0.02\nsigma = 0.1\nseparation = 9\n"
      "cap = 5000\nretries = 2\ncoreset_m = 5\noracle_restarts = 7\n"
      "include_timing = yes\n"
      "seeds = 3,5,8\n"
      "out_format = csv\n"
      "out = report.csv\n";
  const ExperimentConfig cfg = parse_config_text(text);
  CHECK(cfg.problem == "sdl");
  CHECK(cfg.mode == "offline");
  CHECK(cfg.n == 12);
  CHECK(cfg.d == 7);
  CHECK(cfg.k == 3);
  CHECK(cfg.r == 2);
  CHECK(cfg.dmax == 4);
  CHECK(cfg.eps == 0.25);
  CHECK(cfg.alpha == 0.02);
  CHECK(cfg.sigma == 0.1);
  CHECK(cfg.separation == 9.0);
  CHECK(cfg.cap == 5000);
  CHECK(cfg.retries == 2);
  CHECK(cfg.coreset_m == 5);
  CHECK(cfg.oracle_restarts == 7);
  CHECK(cfg.include_timing);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{3, 5, 8});
  CHECK(cfg.out_format == "csv");
  CHECK(cfg.out_path == "report.csv");

  const ExperimentConfig ranged = parse_config_text("seeds = 4:8\n");
  CHECK(ranged.seeds == std::vector<std::uint64_t>{4, 5, 6, 7});

  CHECK_THROWS_AS(parse_config_text("mystery = 1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("include_timing = maybe\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("seeds = 9:9\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("n\n"), std::invalid_argument);

  // Defaults survive an empty config.
  const ExperimentConfig empty = parse_config_text("# nothing\n\n");
  CHECK(empty.problem == "kmeans");
  CHECK(empty.n == 32);
}

TEST_CASE("planted k-means instances honor separation and noise level") {
  ExperimentConfig cfg;
  cfg.problem = "kmeans";
  cfg.n = 30;
  cfg.d = 5;
  cfg.k = 3;
  cfg.sigma = 0.0;
  cfg.separation = 6.0;
  const PlantedInstance inst = gen_planted(cfg, 4);
  CHECK(inst.planted_cost == 0.0);
  for (int i = 0; i < cfg.k; ++i)
    for (int j = i + 1; j < cfg.k; ++j)
      CHECK((inst.truth_d.row(i) - inst.truth_d.row(j)).norm() >=
            cfg.separation - 1e-9);
  for (int i = 0; i < cfg.n; ++i) {
    CHECK(inst.truth_assign[i] == i % cfg.k);
    CHECK((inst.a.row(i) - inst.truth_d.row(i % cfg.k)).norm() == 0.0);
  }

  // With noise the planted cost concentrates around n d sigma^2.
  cfg.n = 200;
  cfg.d = 6;
  cfg.sigma = 0.1;
  const PlantedInstance noisy = gen_planted(cfg, 9);
  const double expected = cfg.n * cfg.d * cfg.sigma * cfg.sigma;
  CHECK(noisy.planted_cost / expected > 0.8);
  CHECK(noisy.planted_cost / expected < 1.2);
}

TEST_CASE("planted dictionaries have unit rows and r-sparse codes") {
  ExperimentConfig cfg;
  cfg.problem = "sdl";
  cfg.n = 25;
  cfg.d = 8;
  cfg.k = 4;
  cfg.r = 2;
  cfg.sigma = 0.0;
  const PlantedInstance inst = gen_planted(cfg, 6);
  for (int c = 0; c < 4; ++c)
    CHECK(inst.truth_d.row(c).norm() == doctest::Approx(1.0));
  CHECK(satisfies(inst.truth_x, sparse_constraint(2)));
  CHECK(inst.planted_cost == 0.0);
  CHECK((inst.truth_x * inst.truth_d - inst.a).norm() == 0.0);

  cfg.problem = "discrete-sdl";
  cfg.dmax = 2;
  const PlantedInstance disc = gen_planted(cfg, 7);
  CHECK(satisfies(disc.truth_x, discrete_constraint(2, 2)));
  for (int i = 0; i < 25; ++i) {
    int nonzeros = 0;
    for (int c = 0; c < 4; ++c)
      if (disc.truth_x(i, c) != 0.0) ++nonzeros;
    CHECK(nonzeros == 2);  // planted coefficients are never zero
  }
  CHECK_THROWS_AS(
      [] {
        ExperimentConfig bad;
        bad.problem = "sdl";
        bad.r = 5;
        bad.k = 2;
        return gen_planted(bad, 1);
      }(),
      std::invalid_argument);
}

TEST_CASE("offline k-means experiments certify against brute force") {
  ExperimentConfig cfg;
  cfg.problem = "kmeans";
  cfg.mode = "offline";
  cfg.n = 8;
  cfg.d = 4;
  cfg.k = 2;
  cfg.eps = 0.5;
  cfg.sigma = 0.2;
  cfg.separation = 8.0;
  cfg.seeds = {1, 2, 3, 4, 5};
  const ExperimentReport rep = run_experiment(cfg);
  CHECK(rep.oracle_kind == "brute-force");
  CHECK(rep.certifying);
  int successes = 0;
  for (const SeedOutcome& oc : rep.outcomes) {
    CHECK_FALSE(oc.skipped);
    CHECK(oc.ratio >= 1.0 - 1e-9);
    CHECK(oc.success == (oc.cost <= (1.0 + cfg.eps) * oc.oracle_cost));
    if (oc.success) ++successes;
  }
  CHECK(rep.success_rate == doctest::Approx(successes / 5.0));
  CHECK(rep.success_rate == doctest::Approx(1.0));

  // A large instance downgrades the oracle to a Lloyd upper bound.
  cfg.n = 40;
  cfg.seeds = {1};
  const ExperimentReport big = run_experiment(cfg);
  CHECK(big.oracle_kind == "lloyd-upper-bound");
  CHECK_FALSE(big.certifying);
}

TEST_CASE("sdl experiments compare against the planted construction") {
  ExperimentConfig cfg;
  cfg.problem = "sdl";
  cfg.mode = "offline";
  cfg.n = 8;
  cfg.d = 5;
  cfg.k = 2;
  cfg.r = 1;
  cfg.eps = 0.5;
  cfg.sigma = 0.0;
  cfg.seeds = {1, 2, 3};
  const ExperimentReport rep = run_experiment(cfg);
  CHECK(rep.oracle_kind == "construction");
  CHECK(rep.certifying);  // sigma = 0 makes the construction optimal
  CHECK(rep.success_rate == doctest::Approx(1.0));

  cfg.sigma = 0.05;
  const ExperimentReport noisy = run_experiment(cfg);
  CHECK_FALSE(noisy.certifying);
}

TEST_CASE("turnstile mode decodes planted instances and reports space") {
  ExperimentConfig cfg;
  cfg.problem = "kmeans";
  cfg.mode = "turnstile";
  cfg.n = 6;
  cfg.d = 4;
  cfg.k = 2;
  cfg.eps = 0.5;
  cfg.sigma = 0.0;
  cfg.separation = 6.0;
  cfg.seeds = {1, 2, 3};
  const ExperimentReport rep = run_experiment(cfg);
  CHECK(rep.success_rate == doctest::Approx(1.0));
  const SketchSizes sz = sketch_sizes_kmeans(6, 2, 0.5);
  for (const SeedOutcome& oc : rep.outcomes) {
    CHECK(oc.resident_words ==
          static_cast<long long>(sz.s) * 4 + 6ll * sz.t + sz.w);
    CHECK(oc.peak_words == oc.resident_words);  // entrywise ingest
  }

  cfg.mode = "rows";
  const ExperimentReport rowrep = run_experiment(cfg);
  CHECK(rowrep.success_rate == doctest::Approx(1.0));
  CHECK(rowrep.outcomes[0].peak_words == rowrep.outcomes[0].resident_words + 4);
}

TEST_CASE("a busted enumeration cap records skips, not failures") {
  ExperimentConfig cfg;
  cfg.problem = "kmeans";
  cfg.mode = "turnstile";
  cfg.n = 40;  // 2^40 assignments, far over any cap here
  cfg.d = 3;
  cfg.k = 2;
  cfg.eps = 0.5;
  cfg.cap = 1000;
  cfg.seeds = {1, 2};
  const ExperimentReport rep = run_experiment(cfg);
  for (const SeedOutcome& oc : rep.outcomes) {
    CHECK(oc.skipped);
    CHECK(!oc.skip_reason.empty());
    CHECK_FALSE(oc.success);
  }
  CHECK(rep.success_rate == 0.0);
}

TEST_CASE("random-order mode runs end to end") {
  ExperimentConfig cfg;
  cfg.problem = "kmeans";
  cfg.mode = "random-order";
  cfg.n = 60;
  cfg.d = 3;
  cfg.k = 2;
  cfg.eps = 0.5;
  cfg.alpha = 1.0;
  cfg.sigma = 0.1;
  cfg.separation = 8.0;
  cfg.seeds = {5};
  const ExperimentReport rep = run_experiment(cfg);
  CHECK(rep.outcomes[0].peak_words > 0);
  CHECK(rep.outcomes[0].resident_words ==
        60ll * 3 + 2ll * 3 + 60);  // prefix swallows the stream here
  CHECK(rep.success_rate == doctest::Approx(1.0));
}

TEST_CASE("json report is deterministic and carries six-digit ratios") {
  ExperimentConfig cfg;
  cfg.problem = "kmeans";
  cfg.mode = "offline";
  cfg.n = 6;
  cfg.d = 3;
  cfg.k = 2;
  cfg.eps = 0.5;
  cfg.sigma = 0.3;
  cfg.seeds = {7, 8};
  const ExperimentReport rep1 = run_experiment(cfg);
  const ExperimentReport rep2 = run_experiment(cfg);
  const std::string j1 = emit_report_json(rep1);
  CHECK(j1 == emit_report_json(rep2));

  const auto parsed = nlohmann::json::parse(j1);
  CHECK(parsed["config"]["n"] == 6);
  CHECK(parsed["oracle"] == "brute-force");
  CHECK(parsed["outcomes"].size() == 2);
  for (const auto& row : parsed["outcomes"]) {
    CHECK(row.contains("seed"));
    CHECK(row.contains("ratio"));
    CHECK_FALSE(row.contains("wall_ms"));  // timing off by default
    const double ratio = row["ratio"].get<double>();
    std::ostringstream six;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", ratio);
    six << buf;
    CHECK(std::stod(six.str()) == ratio);  // already rounded to 6 digits
  }
  CHECK(parsed.contains("success_rate"));

  cfg.include_timing = true;
  const ExperimentReport timed = run_experiment(cfg);
  const auto tparsed = nlohmann::json::parse(emit_report_json(timed));
  CHECK(tparsed["outcomes"][0].contains("wall_ms"));
}

TEST_CASE("csv report has one row per seed and escapes commas in reasons") {
  ExperimentConfig cfg;
  cfg.problem = "kmeans";
  cfg.mode = "offline";
  cfg.n = 5;
  cfg.d = 2;
  cfg.k = 2;
  cfg.eps = 0.5;
  cfg.seeds = {1, 2, 3};
  ExperimentReport rep = run_experiment(cfg);
  rep.outcomes[1].skipped = true;
  rep.outcomes[1].skip_reason = "cap, exceeded";
  const std::string csv = emit_report_csv(rep);

  std::istringstream lines(csv);
  std::string header;
  std::getline(lines, header);
  CHECK(header ==
        "seed,cost,oracle_cost,ratio,success,skipped,skip_reason,"
        "resident_words,peak_words");
  int rows = 0;
  std::string line;
  while (std::getline(lines, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 3);
  CHECK(csv.find("cap; exceeded") != std::string::npos);
  CHECK(csv.find("cap, exceeded") == std::string::npos);
}

TEST_CASE("emit_report writes the file named by the config") {
  ExperimentConfig cfg;
  cfg.problem = "kmeans";
  cfg.mode = "offline";
  cfg.n = 5;
  cfg.d = 2;
  cfg.k = 2;
  cfg.eps = 0.5;
  cfg.seeds = {1};
  cfg.out_format = "csv";
  cfg.out_path = "harness_report_test.csv";
  ExperimentReport rep = run_experiment(cfg);
  rep.config = cfg;
  emit_report(rep);
  std::ifstream in(cfg.out_path);
  REQUIRE(in.good());
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("seed,cost", 0) == 0);
  in.close();
  std::remove(cfg.out_path.c_str());
}

TEST_CASE("run_experiment rejects empty seed lists and unknown modes") {
  ExperimentConfig cfg;
  cfg.seeds = {};
  CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);
  cfg.seeds = {1};
  cfg.mode = "sideways";
  CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);
}
