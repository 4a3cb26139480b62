#pragma once

// Brute-force lower bounds on the exact abstract semantics, by sampling
// feasible states of each predecessor's sub-level set.

#include "qtp/ir.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qtp {

struct OracleOptions {
  /// Points per axis for the full grid.
  int grid = 41;
  /// Larger grids are replaced by uniform random samples of this size.
  int max_points = 20000;
  /// Random rays shot from a feasible point towards the boundary.
  int rays = 2000;
  std::uint64_t seed = 7;
  /// Sampling box; derived from the value when absent.
  std::optional<Box> box;
  /// Half-width used when a coordinate is unbounded and no box is given.
  double fallback_radius = 10.0;
  SdpOptions sdp;
};

struct OracleResult {
  AbstractValue value;
  std::vector<Box> boxes;           // sampling box per coordinate (empty if unused)
  std::vector<long> feasible_points; // per coordinate
  std::string grid;
  std::vector<std::string> warnings;
};

/// Entry-wise lower bound on the exact semantics applied to `v`.
OracleResult oracle(const EquationSystem& sys, const AbstractValue& v, const OracleOptions& opts = {});

/// Outer box of the relaxed sub-level set of `row`; infinite sides where unbounded.
Box bounding_box(const Row& row, const TemplateBasis& basis, const SdpOptions& opts = {});

/// CSV `template,x1,...,xd,value` with value = p(x) - bound over a grid of `box`.
std::string level_sets_csv(const Row& row, const TemplateBasis& basis, const std::vector<std::string>& vars,
                           const Box& box, int grid);

Vector apply_transfer(const Transfer& t, const Vector& x);

} // namespace qtp
