#include "qtp/errors.hpp"
#include "qtp/solvers.hpp"

#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace qtp {

namespace {

void write_block(std::ostream& os, const std::string& name, const Matrix& m) {
  os << "# " << name << '\n' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? " " : "") << m(i, j);
    os << '\n';
  }
}

bool next_header(std::istream& is, std::string& name) {
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line.rfind("# ", 0) != 0) throw format_error("sdp dump: expected '# name', got '" + line + "'");
    name = line.substr(2);
    return true;
  }
  return false;
}

Matrix read_block(std::istream& is) {
  Eigen::Index rows = 0, cols = 0;
  if (!(is >> rows >> cols) || rows < 0 || cols < 0) throw format_error("sdp dump: bad block shape");
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      if (!(is >> m(i, j))) throw format_error("sdp dump: truncated block");
  std::string rest;
  std::getline(is, rest);
  return m;
}

} // namespace

void dump_sdp(std::ostream& os, const SdpProblem& p) {
  const auto old = os.precision(17);
  write_block(os, "f0", p.f0);
  write_block(os, "g_eta", p.g_eta);
  for (int k = 0; k < p.multipliers(); ++k) write_block(os, "g " + std::to_string(k), p.g[k]);
  os.precision(old);
}

SdpProblem load_sdp(std::istream& is) {
  SdpProblem p;
  std::string name;
  bool have_f0 = false, have_eta = false;
  while (next_header(is, name)) {
    Matrix m = read_block(is);
    if (name == "f0") {
      p.f0 = std::move(m);
      have_f0 = true;
    } else if (name == "g_eta") {
      p.g_eta = std::move(m);
      have_eta = true;
    } else if (name.rfind("g ", 0) == 0) {
      p.g.push_back(std::move(m));
    } else {
      throw format_error("sdp dump: unknown block '" + name + "'");
    }
  }
  if (!have_f0 || !have_eta) throw format_error("sdp dump: missing f0 or g_eta block");
  return p;
}

} // namespace qtp
