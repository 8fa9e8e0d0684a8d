#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace altopt {

enum class ErrorKind {
    InvalidDimension,
    DimensionMismatch,
    NonFiniteGradient,
    InvalidRate,
    Divergence,
    InvalidConfig,
    InvalidStep,
    InvalidGrid,
    StaleCache,
};

const char* to_string(ErrorKind kind);

// Single exception type for the library. `index()` carries the offending
// coordinate (NonFiniteGradient) or the iteration (Divergence) when known.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what,
          std::optional<std::uint64_t> index = std::nullopt)
        : std::runtime_error(what), kind_(kind), index_(index) {}

    ErrorKind kind() const noexcept { return kind_; }
    std::optional<std::uint64_t> index() const noexcept { return index_; }

private:
    ErrorKind kind_;
    std::optional<std::uint64_t> index_;
};

}  // namespace altopt
