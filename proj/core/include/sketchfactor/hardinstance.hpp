#pragma once

// Generator for the spike-coordinate hard instances. Each of the n rows has
// d-1 coordinates drawn uniformly from {0,1} and one uniformly chosen
// coordinate that carries a spike of height t with probability 1-alpha
// (and 0 otherwise). The natural clustering groups rows by spike coordinate
// against k = d target centers whose j-th center is (t+1)/2 at coordinate j
// and 1/2 elsewhere; its cost is at most n (d + t^2 - 2t) / 4. gamma is the
// number of planted copies of each center that pin those centers as the
// near-optimal solution.

#include "sketchfactor/matrix.hpp"

#include <cstdint>
#include <vector>

namespace sketchfactor {

struct HardInstanceSpec {
  int n = 0;
  int d = 0;
  int t = 2;            // spike height, >= 2
  double alpha = 0.01;  // probability the spike is absent
  int k = 0;            // cluster count; the construction needs k == d
  std::uint64_t seed = 0;
  long long gamma = 0;  // planted copies per center; 0 = none
};

struct HardInstance {
  DesignMatrix rows;
  std::vector<int> spike_coord;  // the distinguished coordinate per row
  std::vector<bool> spiked;      // whether the spike fired
  HardInstanceSpec spec;
};

HardInstance generate_hard_instance(const HardInstanceSpec& spec);

struct TargetCenters {
  Matrix centers;  // k x d
  long long gamma;
};

// Centers of the intended clustering and the planted-copy count
// gamma = ceil((400 t^2 n / k) ((ln(kd)+9)/2 + (t^2-2t)/4
//                              + (d+t^2-2t)/(4d))).
TargetCenters target_centers(const HardInstanceSpec& spec);

struct ClusteredCostCheck {
  double cost = 0.0;
  double bound = 0.0;  // n (d + t^2 - 2t) / 4
  bool within_bound = false;
  std::vector<int> assignment;
};

// Assigns every row by the spike rule (spiked rows to their spike
// coordinate, unspiked rows to a uniformly random coordinate holding a 1,
// any coordinate if the row is all zero) and evaluates the cost against the
// target centers.
ClusteredCostCheck clustered_cost_check(const HardInstance& instance,
                                        std::uint64_t seed);

// The instance rows followed by gamma copies of each target center.
DesignMatrix with_planted_centers(const HardInstance& instance);

}  // namespace sketchfactor
