#include "qtp/formats.hpp"

#include "qtp/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace qtp {

using json = nlohmann::ordered_json;

namespace {

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw format_error(std::string(what) + ": " + e.what());
  }
}

void check_version(const json& j, const char* what) {
  if (!j.is_object()) throw format_error(std::string(what) + ": top level must be an object");
  if (!j.contains("format")) throw format_error(std::string(what) + ": missing \"format\" field");
  if (!j["format"].is_number_integer() || j["format"].get<int>() != file_format_version)
    throw format_error(std::string(what) + ": unsupported format version " + j["format"].dump());
}

double number_or_inf(const json& v, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    try {
      return parse_bound_text(v.get<std::string>());
    } catch (const format_error&) {
    }
  }
  throw format_error(where + ": expected a number, \"inf\" or \"-inf\", found " + v.dump());
}

json bound_json(double v) {
  if (v == plus_inf) return "inf";
  if (v == minus_inf) return "-inf";
  return v;
}

double finite_number(const json& v, const std::string& where) {
  if (!v.is_number()) throw format_error(where + ": expected a number, found " + v.dump());
  return v.get<double>();
}

} // namespace

double parse_bound_text(const std::string& s) {
  if (s == "inf" || s == "+inf") return plus_inf;
  if (s == "-inf") return minus_inf;
  size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw format_error("not a bound: '" + s + "'");
  }
  if (used != s.size()) throw format_error("not a bound: '" + s + "'");
  return v;
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw error("cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw error("cannot write " + path);
  os << text;
}

TemplateFile parse_templates(const std::string& text) {
  const json j = parse_json(text, "templates");
  check_version(j, "templates");
  TemplateFile out;
  if (!j.contains("dim") || !j["dim"].is_number_integer() || j["dim"].get<int>() <= 0)
    throw format_error("templates: \"dim\" must be a positive integer");
  const int d = out.dim = j["dim"].get<int>();
  if (j.contains("vars")) {
    if (!j["vars"].is_array() || static_cast<int>(j["vars"].size()) != d)
      throw format_error("templates: \"vars\" must list " + std::to_string(d) + " names");
    for (const auto& v : j["vars"]) {
      if (!v.is_string()) throw format_error("templates: variable names must be strings");
      out.vars.push_back(v.get<std::string>());
    }
  }
  if (!j.contains("templates") || !j["templates"].is_array())
    throw format_error("templates: missing \"templates\" array");
  if (j["templates"].empty()) throw format_error("templates: the basis must be non-empty");
  int k = 0;
  for (const auto& t : j["templates"]) {
    std::string where = "templates[" + std::to_string(k++) + "]";
    if (!t.is_object() || !t.contains("name") || !t["name"].is_string())
      throw format_error(where + ": missing \"name\"");
    const std::string name = t["name"].get<std::string>();
    where += " '" + name + "'";
    for (const auto& prev : out.basis)
      if (prev.name == name) throw format_error(where + ": duplicate name");
    Matrix a = Matrix::Zero(d, d);
    Vector b = Vector::Zero(d);
    double c = 0.0;
    if (t.contains("A")) {
      const json& ja = t["A"];
      if (!ja.is_array() || static_cast<int>(ja.size()) != d)
        throw format_error(where + ": A must have " + std::to_string(d) + " rows");
      for (int r = 0; r < d; ++r) {
        if (!ja[r].is_array() || static_cast<int>(ja[r].size()) != d)
          throw format_error(where + ": A row " + std::to_string(r) + " must have " + std::to_string(d) + " entries");
        for (int s = 0; s < d; ++s) a(r, s) = finite_number(ja[r][s], where + ": A");
      }
    }
    if (t.contains("b")) {
      const json& jb = t["b"];
      if (!jb.is_array() || static_cast<int>(jb.size()) != d)
        throw format_error(where + ": b must have " + std::to_string(d) + " entries");
      for (int r = 0; r < d; ++r) b[r] = finite_number(jb[r], where + ": b");
    }
    if (t.contains("c")) c = finite_number(t["c"], where + ": c");
    out.basis.push_back({name, QuadraticForm(a, b, c)});
  }
  return out;
}

TemplateFile load_templates(const std::string& path) { return parse_templates(read_file(path)); }

std::string templates_to_json(const TemplateFile& t) {
  json j;
  j["format"] = file_format_version;
  j["dim"] = t.dim;
  if (!t.vars.empty()) j["vars"] = t.vars;
  json arr = json::array();
  for (const auto& tm : t.basis) {
    json e;
    e["name"] = tm.name;
    json a = json::array();
    for (int r = 0; r < tm.form.dim(); ++r) {
      json row = json::array();
      for (int s = 0; s < tm.form.dim(); ++s) row.push_back(tm.form.a()(r, s));
      a.push_back(row);
    }
    e["A"] = a;
    e["b"] = std::vector<double>(tm.form.b().data(), tm.form.b().data() + tm.form.dim());
    e["c"] = tm.form.c();
    arr.push_back(e);
  }
  j["templates"] = arr;
  return j.dump(2) + "\n";
}

void save_templates(const std::string& path, const TemplateFile& t) { write_file(path, templates_to_json(t)); }

Policy parse_policy(const std::string& text, const EquationSystem& sys) {
  const json j = parse_json(text, "policy");
  check_version(j, "policy");
  if (!j.contains("coords") || !j["coords"].is_object()) throw format_error("policy: missing \"coords\" object");
  const int m = sys.template_count();
  Policy p = Policy::empty_for(sys);
  for (const auto& [key, entries] : j["coords"].items()) {
    int coord = 0;
    try {
      size_t used = 0;
      coord = std::stoi(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw format_error("policy: coordinate key '" + key + "' is not an integer");
    }
    if (coord < 1 || coord > sys.size()) throw format_error("policy: coordinate " + key + " out of range");
    const int i = coord - 1;
    const CoordKind kind = sys.coords[i].kind;
    if (kind != CoordKind::assign && kind != CoordKind::test)
      throw format_error("policy: coordinate " + key + " is a " + to_string(kind) + " coordinate and has no policy");
    if (!entries.is_object()) throw format_error("policy: coordinate " + key + " must map template names");
    for (const auto& [name, value] : entries.items()) {
      const std::string where = "policy: coordinate " + key + ", template '" + name + "'";
      int tmpl = -1;
      for (int q = 0; q < m; ++q)
        if (sys.templates[q].name == name) tmpl = q;
      if (tmpl < 0) throw format_error(where + ": unknown template");
      const json* lam = &value;
      double mu = 0.0;
      if (value.is_object()) {
        if (!value.contains("lambda")) throw format_error(where + ": missing \"lambda\"");
        lam = &value["lambda"];
        if (value.contains("mu")) mu = finite_number(value["mu"], where + ": mu");
      }
      if (!lam->is_array() || static_cast<int>(lam->size()) != m)
        throw format_error(where + ": lambda must have " + std::to_string(m) + " entries");
      PolicyEntry e{Vector::Zero(m), mu, true};
      for (int q = 0; q < m; ++q) {
        e.lambda[q] = finite_number((*lam)[q], where + ": lambda");
        if (e.lambda[q] < 0) throw format_error(where + ": multipliers must be non-negative");
      }
      if (mu < 0) throw format_error(where + ": mu must be non-negative");
      if (mu != 0.0 && kind != CoordKind::test) throw format_error(where + ": mu is only meaningful on test coordinates");
      p.entries[i][tmpl] = e;
    }
  }
  return p;
}

Policy load_policy(const std::string& path, const EquationSystem& sys) { return parse_policy(read_file(path), sys); }

std::string policy_to_json(const Policy& p, const EquationSystem& sys) {
  json j;
  j["format"] = file_format_version;
  json coords = json::object();
  for (int i = 0; i < static_cast<int>(p.entries.size()); ++i) {
    json row = json::object();
    for (size_t q = 0; q < p.entries[i].size(); ++q) {
      const PolicyEntry& e = p.entries[i][q];
      if (!e.valid) continue;
      std::vector<double> lam(e.lambda.data(), e.lambda.data() + e.lambda.size());
      if (sys.coords[i].kind == CoordKind::test)
        row[sys.templates[q].name] = json{{"lambda", lam}, {"mu", e.mu}};
      else
        row[sys.templates[q].name] = lam;
    }
    if (!row.empty()) coords[std::to_string(i + 1)] = row;
  }
  j["coords"] = coords;
  return j.dump(2) + "\n";
}

BoundsOverride parse_bounds(const std::string& text) {
  const json j = parse_json(text, "bounds");
  check_version(j, "bounds");
  if (!j.contains("coords") || !j["coords"].is_object()) throw format_error("bounds: missing \"coords\" object");
  BoundsOverride out;
  for (const auto& [key, entries] : j["coords"].items()) {
    int coord = 0;
    try {
      size_t used = 0;
      coord = std::stoi(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw format_error("bounds: coordinate key '" + key + "' is not an integer");
    }
    if (coord < 1) throw format_error("bounds: coordinate " + key + " out of range");
    if (!entries.is_object()) throw format_error("bounds: coordinate " + key + " must map template names");
    for (const auto& [name, value] : entries.items())
      out[coord - 1][name] = number_or_inf(value, "bounds: coordinate " + key + ", template '" + name + "'");
  }
  return out;
}

BoundsOverride load_bounds(const std::string& path) { return parse_bounds(read_file(path)); }

std::string bounds_to_json(const BoundsOverride& b) {
  json j;
  j["format"] = file_format_version;
  json coords = json::object();
  for (const auto& [coord, entries] : b) {
    json row = json::object();
    for (const auto& [name, v] : entries) row[name] = bound_json(v);
    coords[std::to_string(coord + 1)] = row;
  }
  j["coords"] = coords;
  return j.dump(2) + "\n";
}

void apply_bounds(EquationSystem& sys, const BoundsOverride& b) {
  for (const auto& [coord, entries] : b) {
    if (coord < 0 || coord >= sys.size())
      throw format_error("bounds: coordinate " + std::to_string(coord + 1) + " out of range");
    Coordinate& c = sys.coords[coord];
    if (c.kind != CoordKind::constant)
      throw format_error("bounds: coordinate " + std::to_string(coord + 1) + " is not a constant coordinate");
    for (const auto& [name, v] : entries) {
      int tmpl = -1;
      for (int q = 0; q < sys.template_count(); ++q)
        if (sys.templates[q].name == name) tmpl = q;
      if (tmpl < 0) throw format_error("bounds: unknown template '" + name + "'");
      c.bounds[tmpl] = v;
    }
  }
}

} // namespace qtp
