#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mstat {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent user input (problem files, flags, literals).
class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(what), issues_{what} {}
  explicit InputError(std::vector<std::string> issues)
      : Error(join(issues)), issues_(std::move(issues)) {}

  const std::vector<std::string>& issues() const { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) {
      if (!out.empty()) out += "; ";
      out += s;
    }
    return out;
  }
  std::vector<std::string> issues_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t offset, std::string expected, std::string found)
      : Error("parse error at offset " + std::to_string(offset) + ": expected " + expected +
              ", found " + found),
        offset_(offset),
        expected_(std::move(expected)),
        found_(std::move(found)) {}

  std::size_t offset() const { return offset_; }
  const std::string& expected() const { return expected_; }
  const std::string& found() const { return found_; }

 private:
  std::size_t offset_;
  std::string expected_;
  std::string found_;
};

/// Evaluation left the domain of an expression (division by zero,
/// overflow to a non-finite value).
class DomainError : public Error {
 public:
  using Error::Error;
};

class PointNotInSetError : public Error {
 public:
  using Error::Error;
};

/// (y, z) does not satisfy z in N_K(y) within tolerance.
class GraphMembershipError : public Error {
 public:
  using Error::Error;
};

class CapExceededError : public Error {
 public:
  using Error::Error;
};

class StaleCertificateError : public Error {
 public:
  using Error::Error;
};

/// Grid or sampling oracle could not produce evidence (empty grid ∩ K,
/// too few set samples, empty S(x)).
class OracleError : public Error {
 public:
  using Error::Error;
};

class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace mstat
