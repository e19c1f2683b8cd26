#ifndef TEV_ERRORS_H_
#define TEV_ERRORS_H_

#include <stdexcept>
#include <string>

namespace tev {

// Bad or inconsistent input data: malformed files, invalid spans, corpora
// that are too small. Maps to CLI exit code 2.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string &what) : std::runtime_error(what) {}
  DataError(const std::string &what, long line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}

  // Line number of the offending record, or 0 when not file-backed.
  long line() const { return line_; }

 private:
  long line_ = 0;
};

// A raw tweet that normalizes to zero tokens.
class DegenerateTweet : public DataError {
 public:
  explicit DegenerateTweet(const std::string &text)
      : DataError("degenerate tweet (no tokens after normalization): \"" +
                  text + "\"") {}
};

// Incompatible tensor shapes passed to an operation.
class ShapeError : public std::invalid_argument {
 public:
  explicit ShapeError(const std::string &what) : std::invalid_argument(what) {}
};

// Training produced a non-finite loss. Maps to CLI exit code 3.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string &what)
      : std::runtime_error(what) {}
};

// Invalid configuration or command-line usage. Maps to CLI exit code 1.
class UsageError : public std::invalid_argument {
 public:
  explicit UsageError(const std::string &what) : std::invalid_argument(what) {}
};

}  // namespace tev

#endif  // TEV_ERRORS_H_
