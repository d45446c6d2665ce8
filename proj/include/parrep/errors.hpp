#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace parrep {

/// Malformed or inconsistent caller input (dimension mismatch, bad config).
class InputError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// A state with zero total jump rate was reached.
class AbsorbingStateError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Reducible or periodic block where the oracle needs irreducibility.
class ReducibleError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class ConvergenceError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A sampler exhausted its work budget; usually W is not metastable.
class BudgetExceededError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A file could not be opened or read.
class FileError : public std::runtime_error {
  public:
    explicit FileError(const std::string& path)
        : std::runtime_error("cannot read " + path), path_(path) {}
    const std::string& path() const { return path_; }

  private:
    std::string path_;
};

class ParseError : public std::runtime_error {
  public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
          line_(line) {}
    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

}  // namespace parrep
