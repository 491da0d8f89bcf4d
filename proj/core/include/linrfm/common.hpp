#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <string>

namespace linrfm {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidDims : Error { using Error::Error; };
struct NonPsdInput : Error { using Error::Error; };
struct NumericFailure : Error { using Error::Error; };
struct SingularSystem : Error { using Error::Error; };
struct SingularRowSystem : Error { using Error::Error; };
struct MissingGroundTruth : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct FormatError : Error { using Error::Error; };
struct DivergentIntegral : Error { using Error::Error; };
struct QuadratureFailure : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct Divergence : Error { using Error::Error; };
struct NonConvergence : Error { using Error::Error; };
struct DegenerateInput : Error { using Error::Error; };
struct PatternMismatch : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derives an independent stream from a base seed and a stream tag.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream * 0x9e3779b97f4a7c15ULL + 0x7f4a7c15ULL));
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    return Rng(derive_seed(seed, stream));
}

// Decimal text with 17 significant digits; round-trips doubles exactly.
inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return std::string(buf);
}

class WallTimer {
public:
    WallTimer() : start_(std::chrono::steady_clock::now()) {}
    double elapsed_ms() const {
        auto now = std::chrono::steady_clock::now();
        return std::chrono::duration<double, std::milli>(now - start_).count();
    }
    void reset() { start_ = std::chrono::steady_clock::now(); }

private:
    std::chrono::steady_clock::time_point start_;
};

}  // namespace linrfm
