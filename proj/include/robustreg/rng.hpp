#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace robustreg {

// SplitMix64 output mixer.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Counter-based generator: the stream is a pure function of (key, counter),
// so derived streams are reproducible regardless of evaluation order or
// thread count. Derivation by tag gives statistically independent substreams.
class Rng {
  public:
    explicit Rng(std::uint64_t key) : key_(key) {}

    std::uint64_t next_u64() {
        counter_ += 0x9E3779B97F4A7C15ull;
        return mix64(key_ + counter_);
    }

    // Uniform in [0, 1).
    double u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Standard normal, Box-Muller with one cached value.
    double gaussian() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u1 = 1.0 - u01();  // (0, 1]
        double u2 = u01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

    // Gamma(shape, 1), Marsaglia-Tsang. Requires shape >= 1 (all callers
    // use chi-square with > 4 degrees of freedom).
    double gamma(double shape) {
        double d = shape - 1.0 / 3.0;
        double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = gaussian();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            double u = u01();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    double chi_square(double dof) { return 2.0 * gamma(0.5 * dof); }

    // Independent substream addressed by an integer tag.
    Rng split(std::uint64_t tag) const { return Rng(mix64(key_ ^ mix64(tag + 0x632BE59BD9B4E019ull))); }

    Rng split(std::string_view name, std::uint64_t tag = 0) const {
        std::uint64_t h = 0xCBF29CE484222325ull;
        for (char c : name) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001B3ull;
        return Rng(mix64(key_ ^ mix64(h) ^ mix64(tag + 0x632BE59BD9B4E019ull)));
    }

    std::uint64_t key() const { return key_; }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace robustreg
