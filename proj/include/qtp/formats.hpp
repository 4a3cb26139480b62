#pragma once

// JSON file formats for template bases, policies and initial bounds. Every
// document carries "format": 1. Infinite bounds are written as "inf"/"-inf".

#include "qtp/relax.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace qtp {

inline constexpr int file_format_version = 1;

struct TemplateFile {
  int dim = 0;
  /// Variable names in template coordinate order; may be empty.
  std::vector<std::string> vars;
  TemplateBasis basis;
};

/// Throws format_error naming the offending entry.
TemplateFile parse_templates(const std::string& json_text);
TemplateFile load_templates(const std::string& path);
std::string templates_to_json(const TemplateFile& t);
void save_templates(const std::string& path, const TemplateFile& t);

/// Coordinates are 1-based in files; missing entries stay invalid.
Policy parse_policy(const std::string& json_text, const EquationSystem& sys);
Policy load_policy(const std::string& path, const EquationSystem& sys);
std::string policy_to_json(const Policy& p, const EquationSystem& sys);

/// coordinate (0-based) -> template name -> bound.
using BoundsOverride = std::map<int, std::map<std::string, double>>;

BoundsOverride parse_bounds(const std::string& json_text);
BoundsOverride load_bounds(const std::string& path);
std::string bounds_to_json(const BoundsOverride& b);
/// Replaces entries of constant rows; throws format_error on unknown names or
/// non-constant coordinates.
void apply_bounds(EquationSystem& sys, const BoundsOverride& b);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

/// Bound as JSON-compatible text: a number, "inf" or "-inf".
double parse_bound_text(const std::string& s);

} // namespace qtp
