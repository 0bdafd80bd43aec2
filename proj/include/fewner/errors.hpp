#ifndef FEWNER_ERRORS_HPP
#define FEWNER_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fewner {

// Bad inputs: malformed files, invalid configs, violated preconditions.
// The CLI maps these to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input file content; carries a 1-based line number when known.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : ValidationError(what + " (line " + std::to_string(line) + ")"),
        line_(line) {}
  explicit ParseError(const std::string& what) : ValidationError(what), line_(0) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Failures while running: I/O, non-finite losses, broken checkpoints.
// The CLI maps these to exit code 2.
class RuntimeError : public std::runtime_error {
 public:
  explicit RuntimeError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fewner

#endif  // FEWNER_ERRORS_HPP
