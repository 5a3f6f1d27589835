#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "miirl/errors.hpp"

namespace miirl {

// splitmix64 step; used both as a PRNG seeder and as a mixing function for
// deriving independent per-component seeds from one global seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derives a child seed from a base seed and a path of stream tags. Every
// stochastic component takes its own derived seed so results are reproducible
// regardless of evaluation order or threading.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = base;
    (void)splitmix64(s);
    for (std::uint64_t tag : path) {
        s ^= tag + 0x9e3779b97f4a7c15ULL;
        (void)splitmix64(s);
    }
    return splitmix64(s);
}

// Stream tags for derive_seed. Fixed constants so the splitting scheme is
// stable across versions.
namespace seed_stream {
constexpr std::uint64_t kInstance = 101;
constexpr std::uint64_t kTrainData = 102;
constexpr std::uint64_t kTestData = 103;
constexpr std::uint64_t kAlgorithm = 104;
constexpr std::uint64_t kAnid = 105;
constexpr std::uint64_t kClusterRestart = 106;
constexpr std::uint64_t kLaneRow = 107;
constexpr std::uint64_t kTrajectory = 108;
constexpr std::uint64_t kMcSample = 109;
constexpr std::uint64_t kRandomInit = 110;
}  // namespace seed_stream

// Deterministic random source. Raw 64-bit draws come from std::mt19937_64
// (bit-exact across platforms); all distribution transforms are implemented
// here rather than with std:: distributions, whose output is
// implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform on (0, 1]; safe as a log() argument.
    double uniform_pos() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    int uniform_int(int n) {
        return static_cast<int>(std::min<double>(uniform() * n, n - 1));
    }

    // Standard normal via Box-Muller (no caching, so the draw count per call
    // is fixed).
    double normal() {
        double u1 = uniform_pos();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // Gamma(alpha, 1) via Marsaglia-Tsang, with the standard boost for
    // alpha < 1.
    double gamma(double alpha) {
        if (!(alpha > 0.0)) throw ValidationError("gamma: alpha must be positive");
        if (alpha < 1.0) {
            double g = gamma(alpha + 1.0);
            return g * std::pow(uniform_pos(), 1.0 / alpha);
        }
        const double d = alpha - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            double u = uniform_pos();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    // Symmetric Dirichlet(alpha, ..., alpha) draw of length k.
    Eigen::VectorXd dirichlet(double alpha, int k) {
        Eigen::VectorXd g(k);
        for (int i = 0; i < k; ++i) g[i] = gamma(alpha);
        double s = g.sum();
        if (s <= 0.0 || !std::isfinite(s)) return Eigen::VectorXd::Constant(k, 1.0 / k);
        return g / s;
    }

    // Index draw from an unnormalized non-negative weight vector.
    int discrete(const Eigen::VectorXd& weights) {
        double total = weights.sum();
        if (!(total > 0.0)) throw ValidationError("discrete: weights must have positive mass");
        double u = uniform() * total;
        double acc = 0.0;
        int last_positive = -1;
        for (int i = 0; i < weights.size(); ++i) {
            if (weights[i] < 0.0) throw ValidationError("discrete: negative weight");
            if (weights[i] > 0.0) last_positive = i;
            acc += weights[i];
            if (u < acc) return i;
        }
        return last_positive;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace miirl
