#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pefusion {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string &what) : std::runtime_error(what) {}
    /// Short machine-readable identifier, used by the CLI error line.
    [[nodiscard]] virtual const char *code() const noexcept { return "error"; }
};

class DimensionMismatch : public Error {
  public:
    using Error::Error;
    [[nodiscard]] const char *code() const noexcept override { return "dimension_mismatch"; }
};

/// A sequence is too short for the requested ordinal embedding.
class InsufficientLength : public Error {
  public:
    InsufficientLength(std::size_t got, std::size_t required)
        : Error("sequence of length " + std::to_string(got) + " is too short; at least " +
                std::to_string(required) + " values required"),
          got_(got), required_(required) {}
    [[nodiscard]] const char *code() const noexcept override { return "insufficient_length"; }
    [[nodiscard]] std::size_t got() const noexcept { return got_; }
    [[nodiscard]] std::size_t required() const noexcept { return required_; }

  private:
    std::size_t got_;
    std::size_t required_;
};

class ConfigError : public Error {
  public:
    using Error::Error;
    [[nodiscard]] const char *code() const noexcept override { return "config_error"; }
};

/// A pixel position outside the domain an operator is defined on.
class DomainError : public Error {
  public:
    using Error::Error;
    [[nodiscard]] const char *code() const noexcept override { return "domain_error"; }
};

/// Malformed input to a numerical routine (e.g. single-class SVM training).
class InvalidArgument : public Error {
  public:
    using Error::Error;
    [[nodiscard]] const char *code() const noexcept override { return "invalid_argument"; }
};

class IoError : public Error {
  public:
    using Error::Error;
    [[nodiscard]] const char *code() const noexcept override { return "io_error"; }
};

/// Structural problems in one of the binary file formats (IDX, CIFAR, PEFM, PESV).
class FormatError : public Error {
  public:
    enum class Kind { bad_magic, truncated, count_mismatch, trailing_data, bad_value, bad_header, unsupported_version };

    FormatError(Kind kind, const std::string &what) : Error(what), kind_(kind) {}
    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] const char *code() const noexcept override {
        switch (kind_) {
            case Kind::bad_magic: return "bad_magic";
            case Kind::truncated: return "truncated";
            case Kind::count_mismatch: return "count_mismatch";
            case Kind::trailing_data: return "trailing_data";
            case Kind::bad_value: return "bad_value";
            case Kind::bad_header: return "bad_header";
            case Kind::unsupported_version: return "unsupported_version";
        }
        return "format_error";
    }

  private:
    Kind kind_;
};

}  // namespace pefusion
