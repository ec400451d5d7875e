#pragma once

#include <stdexcept>
#include <string>

namespace momap {

/// Broad failure class; the CLI maps these onto exit codes.
enum class ErrorKind {
  kIo,          // file system failures
  kParse,       // malformed JSON or configuration
  kFormat,      // corrupt or unsupported binary file
  kShape,       // dimension mismatch between inputs
  kValidation,  // input violates a documented precondition
  kNumerical,   // non-finite values produced during computation
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Specific reasons a .momap / .momapz file is rejected.
enum class FormatErrc {
  kBadMagic,
  kUnsupportedVersion,
  kTruncatedHeader,
  kSectionLengthMismatch,
  kNonFinitePayload,
  kInvalidPayload,
};

class FormatError : public Error {
 public:
  FormatError(FormatErrc code, const std::string& what)
      : Error(ErrorKind::kFormat, what), code_(code) {}

  FormatErrc code() const noexcept { return code_; }

 private:
  FormatErrc code_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::kIo, what) {}
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what)
      : Error(ErrorKind::kParse, what) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what)
      : Error(ErrorKind::kShape, what) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorKind::kValidation, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorKind::kNumerical, what) {}
};

}  // namespace momap
