#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace nolana {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class Task { Classification, Regression };

inline std::string to_string(Task task) {
    return task == Task::Classification ? "classification" : "regression";
}

// Error taxonomy. Argument/shape violations use std::invalid_argument
// directly; domain failures get their own types so callers can map them
// to exit codes.

// All eigenvalues clipped to zero: the kernel matrix carries no usable
// spectrum and no feature map exists.
class DegenerateSpectrumError : public std::runtime_error {
public:
    explicit DegenerateSpectrumError(const std::string& what)
        : std::runtime_error(what) {}
};

// Unregularized least squares on a rank-deficient design.
class SingularSystemError : public std::runtime_error {
public:
    explicit SingularSystemError(const std::string& what)
        : std::runtime_error(what) {}
};

// Stream ended before the landmark warm-up buffer was filled.
class InsufficientWarmupError : public std::runtime_error {
public:
    explicit InsufficientWarmupError(const std::string& what)
        : std::runtime_error(what) {}
};

// Malformed dataset text; carries the 1-based source line.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, long line_number)
        : std::runtime_error(what + " (line " + std::to_string(line_number) + ")"),
          line_number_(line_number) {}

    long line_number() const { return line_number_; }

private:
    long line_number_;
};

// Unreadable, empty, or dimensionally inconsistent dataset.
class IngestionError : public std::runtime_error {
public:
    explicit IngestionError(const std::string& what)
        : std::runtime_error(what) {}
};

// Invalid run configuration (rejected before any data is read).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what)
        : std::runtime_error(what) {}
};

// Deterministic 64-bit mixer used to derive independent sub-seeds
// (per-pass shuffle, Fourier frequencies) from one user seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream_tag) {
    return splitmix64(base ^ splitmix64(stream_tag));
}

inline bool all_finite(const Eigen::Ref<const Vector>& v) {
    return v.allFinite();
}

}  // namespace nolana
