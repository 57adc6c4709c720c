#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <stdexcept>
#include <string>

namespace mbl {

/// Finite-dimensional stand-in for the Hilbert space H; standard Euclidean pairing.
using HVec = Eigen::VectorXd;

using AtomId = std::size_t;

/// Raised when a caller hands in parameters outside an operation's domain.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a well-posed computation cannot complete (budget exhausted, failed self-check).
class ComputationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw InvalidArgument(msg);
}

/// SplitMix64 finalizer; used to derive independent per-task RNG streams from a master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t master, std::uint64_t stream = 0) {
    return Rng(stream_seed(master, stream));
}

// Distributions drawn directly from the raw 64-bit stream.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

/// Inclusive integer range [lo, hi].
inline int uniform_int(Rng& rng, int lo, int hi) {
    return lo + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(hi - lo + 1)));
}

inline double standard_normal(Rng& rng) {
    // Box-Muller, cosine branch only.
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

inline double standard_exponential(Rng& rng) {
    double u = uniform01(rng);
    while (u <= 0.0) u = uniform01(rng);
    return -std::log(u);
}

inline HVec random_hvec(Rng& rng, int dim, double scale = 1.0) {
    HVec v(dim);
    for (int k = 0; k < dim; ++k) v[k] = scale * standard_normal(rng);
    return v;
}

/// Point uniformly distributed in the closed unit ball of R^dim.
inline HVec random_in_unit_ball(Rng& rng, int dim) {
    HVec v = random_hvec(rng, dim);
    const double n = v.norm();
    if (n == 0.0) return HVec::Zero(dim);
    const double r = std::pow(uniform01(rng), 1.0 / dim);
    return v * (r / n);
}

/// Scale applied to every default tolerance; read from MBL_TOL when set.
inline double tolerance_scale() {
    if (const char* env = std::getenv("MBL_TOL")) {
        char* end = nullptr;
        const double v = std::strtod(env, &end);
        if (end != env && v > 0.0 && std::isfinite(v)) return v;
    }
    return 1.0;
}

inline double conjugate_exponent(double p) { return p / (p - 1.0); }

inline void require_exponent(double p) {
    require(p > 1.0 && p <= 2.0, "exponent p must lie in (1, 2]");
}

}  // namespace mbl
