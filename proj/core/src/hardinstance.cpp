#include "sketchfactor/hardinstance.hpp"

#include "sketchfactor/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace sketchfactor {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

void check_spec(const HardInstanceSpec& spec) {
  require(spec.n >= 1, "hard instance: n must be >= 1");
  require(spec.d >= 1, "hard instance: d must be >= 1");
  require(spec.t >= 2, "hard instance: t must be >= 2");
  require(spec.alpha >= 0.0 && spec.alpha <= 1.0,
          "hard instance: alpha must lie in [0,1]");
  require(spec.gamma >= 0, "hard instance: gamma must be >= 0");
}

int cluster_count(const HardInstanceSpec& spec) {
  const int k = spec.k == 0 ? spec.d : spec.k;
  require(k == spec.d, "hard instance: the construction needs k == d");
  return k;
}

}  // namespace

HardInstance generate_hard_instance(const HardInstanceSpec& spec) {
  check_spec(spec);
  HardInstance inst;
  inst.spec = spec;
  inst.rows = DesignMatrix(spec.n, spec.d);
  inst.spike_coord.resize(static_cast<std::size_t>(spec.n));
  inst.spiked.resize(static_cast<std::size_t>(spec.n));

  Rng rng(spec.seed);
  for (int i = 0; i < spec.n; ++i) {
    const int coord = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.d)));
    const bool fired = rng.uniform() < 1.0 - spec.alpha;
    inst.spike_coord[static_cast<std::size_t>(i)] = coord;
    inst.spiked[static_cast<std::size_t>(i)] = fired;
    for (int j = 0; j < spec.d; ++j)
      inst.rows(i, j) = static_cast<double>(rng.next() & 1u);
    inst.rows(i, coord) = fired ? static_cast<double>(spec.t) : 0.0;
  }
  return inst;
}

TargetCenters target_centers(const HardInstanceSpec& spec) {
  check_spec(spec);
  const int k = cluster_count(spec);
  const int d = spec.d;
  const double t = spec.t;

  TargetCenters out;
  out.centers = Matrix::Constant(k, d, 0.5);
  for (int j = 0; j < k; ++j) out.centers(j, j) = (t + 1.0) / 2.0;

  const double lead = 400.0 * t * t * spec.n / k;
  const double body = (std::log(static_cast<double>(k) * d) + 9.0) / 2.0 +
                      (t * t - 2.0 * t) / 4.0 +
                      (d + t * t - 2.0 * t) / (4.0 * d);
  out.gamma = static_cast<long long>(std::ceil(lead * body));
  return out;
}

ClusteredCostCheck clustered_cost_check(const HardInstance& inst,
                                        std::uint64_t seed) {
  const HardInstanceSpec& spec = inst.spec;
  check_spec(spec);
  require(inst.rows.rows() == spec.n && inst.rows.cols() == spec.d,
          "clustered_cost_check: instance shape mismatch");
  const TargetCenters tc = target_centers(spec);

  ClusteredCostCheck out;
  out.assignment.resize(static_cast<std::size_t>(spec.n));
  Rng rng(hash2(seed, 0xc7u));
  double cost = 0.0;
  std::vector<int> ones;
  ones.reserve(static_cast<std::size_t>(spec.d));
  for (int i = 0; i < spec.n; ++i) {
    int cluster;
    if (inst.spiked[static_cast<std::size_t>(i)]) {
      cluster = inst.spike_coord[static_cast<std::size_t>(i)];
    } else {
      ones.clear();
      for (int j = 0; j < spec.d; ++j)
        if (inst.rows(i, j) == 1.0) ones.push_back(j);
      cluster = ones.empty()
                    ? static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.d)))
                    : ones[static_cast<std::size_t>(
                          rng.below(static_cast<std::uint64_t>(ones.size())))];
    }
    out.assignment[static_cast<std::size_t>(i)] = cluster;
    cost += (inst.rows.row(i) - tc.centers.row(cluster)).squaredNorm();
  }
  out.cost = cost;
  const double t = spec.t;
  out.bound = spec.n * (spec.d + t * t - 2.0 * t) / 4.0;
  out.within_bound = out.cost <= out.bound;
  return out;
}

DesignMatrix with_planted_centers(const HardInstance& inst) {
  const HardInstanceSpec& spec = inst.spec;
  check_spec(spec);
  const TargetCenters tc = target_centers(spec);
  const long long extra = spec.gamma * tc.centers.rows();
  require(spec.n + extra <= 10'000'000,
          "with_planted_centers: materialized instance too large");

  DesignMatrix out(spec.n + extra, spec.d);
  out.topRows(spec.n) = inst.rows;
  long long at = spec.n;
  for (long long copy = 0; copy < spec.gamma; ++copy)
    for (int j = 0; j < tc.centers.rows(); ++j)
      out.row(at++) = tc.centers.row(j);
  return out;
}

}  // namespace sketchfactor
