#pragma once

#include <stdexcept>
#include <string>

namespace qtp {

/// Base class of every error raised by the analyzer.
class error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class dimension_error : public error {
public:
  using error::error;
};

class nonlinear_composition_error : public error {
public:
  using error::error;
};

class numerical_error : public error {
public:
  using error::error;
};

class solver_error : public error {
public:
  solver_error(const std::string& what, int coord, int template_index)
      : error(what), coord_(coord), template_(template_index) {}
  int coord() const { return coord_; }
  int template_index() const { return template_; }

private:
  int coord_;
  int template_;
};

class inadmissible_policy_error : public error {
public:
  using error::error;
};

class initial_policy_error : public error {
public:
  using error::error;
};

class lowering_error : public error {
public:
  using error::error;
};

/// Malformed template / policy / bounds file.
class format_error : public error {
public:
  using error::error;
};

/// Syntax or typing error in a program, with its source position.
class parse_error : public error {
public:
  parse_error(const std::string& msg, int line, int column)
      : error(std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
        line_(line), column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

private:
  int line_;
  int column_;
};

} // namespace qtp
