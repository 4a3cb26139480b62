#pragma once

// Equation-system form of a program: one coordinate per control point, each
// computing its abstract row from its predecessors.

#include "qtp/domain.hpp"

#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace qtp {

using Transfer = std::variant<AffineMap, QuadraticMap>;

/// p o T for either kind of map.
QuadraticForm compose(const QuadraticForm& p, const Transfer& t);
int transfer_in_dim(const Transfer& t);
int transfer_out_dim(const Transfer& t);
bool is_affine(const Transfer& t);

enum class CoordKind { constant, assign, test, join };
enum class Sense { then_branch, else_branch };

const char* to_string(CoordKind k);

struct Coordinate {
  CoordKind kind = CoordKind::constant;
  std::string label;
  // constant
  Row bounds;
  // assign / test
  int prev = -1;
  Transfer map;
  // test: the state must satisfy guard(x) <= 0 before map is applied.
  QuadraticForm guard;
  Sense sense = Sense::then_branch;
  // join
  int left = -1;
  int right = -1;

  static Coordinate constant(Row bounds, std::string label = {});
  static Coordinate assign(int prev, Transfer map, std::string label = {});
  static Coordinate test(int prev, QuadraticForm guard, Sense sense, Transfer map, std::string label = {});
  static Coordinate join(int left, int right, std::string label = {});
};

struct EquationSystem {
  int dim = 0;
  std::vector<std::string> vars;
  TemplateBasis templates;
  std::vector<Coordinate> coords;
  /// Non-fatal remarks from lowering, e.g. weakened strict guards.
  std::vector<std::string> notes;

  int size() const { return static_cast<int>(coords.size()); }
  int template_count() const { return static_cast<int>(templates.size()); }
};

struct Diagnostic {
  int coord; // -1 for system-wide issues
  std::string rule;
  std::string message;
};

std::vector<Diagnostic> validate(const EquationSystem& sys);

/// Throws lowering_error listing every diagnostic.
void require_valid(const EquationSystem& sys);

using Box = std::vector<std::pair<double, double>>;

/// Sound upper bound of every template over the box: the smaller of the Shor
/// bound under (x_i - l_i)(x_i - u_i) <= 0 and an interval-arithmetic bound.
/// Linear templates are maximized exactly.
Row init_from_box(const Box& box, const TemplateBasis& basis, const SdpOptions& opts = {});

} // namespace qtp
