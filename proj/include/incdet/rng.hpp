#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "incdet/errors.hpp"

namespace incdet {

namespace detail {

/// SplitMix64 finalizer; full-period mixing of a 64-bit state.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
    return splitmix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

inline std::uint64_t hash_tag(std::string_view tag) {
    // FNV-1a
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace detail

/// Derives an independent stream seed from a master seed, a purpose tag and
/// any number of integer coordinates. Distinct (tag, coords) yield distinct
/// streams, so parallel consumers reproduce serial output.
template <typename... Coords>
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, Coords... coords) {
    std::uint64_t h = detail::splitmix64(master);
    h = detail::mix(h, detail::hash_tag(tag));
    ((h = detail::mix(h, static_cast<std::uint64_t>(coords))), ...);
    return h;
}

/// Seeded random stream with hand-rolled samplers. The engine (mt19937_64)
/// and every transform here are fully specified, so output is identical
/// across platforms and compilers.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53-bit resolution.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform on (0, 1]; safe as a log() argument.
    double uniform01_open_low() {
        return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n) {
        // Lemire-style rejection to remove modulo bias.
        if (n == 0) throw ConfigError("uniform_int: n must be positive");
        std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            std::uint64_t r = engine_();
            if (r >= threshold) return r % n;
        }
    }

    /// Standard normal via Box-Muller.
    double normal() {
        double u1 = uniform01_open_low();
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Gamma(shape, 1) via Marsaglia-Tsang squeeze for shape >= 1 and the
    /// boost relation gamma(a) = gamma(a+1) * U^(1/a) for shape < 1.
    double gamma(double shape) {
        if (!(shape > 0.0)) throw ConfigError("gamma: shape must be positive");
        if (shape < 1.0) {
            double u = uniform01_open_low();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform01_open_low();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    /// Beta(a, b) as the ratio of two gamma draws.
    double beta(double a, double b) {
        double x = gamma(a);
        double y = gamma(b);
        double r = x / (x + y);
        // Guard against total underflow of both gammas.
        if (!std::isfinite(r)) return 0.5;
        return std::clamp(r, 0.0, 1.0);
    }

    /// Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

} // namespace incdet
