#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "kinlab/grid.hpp"

namespace kinlab {

/// Reproducible randomness for the property suites: mt19937_64 with explicit
/// output maps (no library distributions), so identical seeds give identical
/// streams on any conforming implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// uniform in [0,1): the top 53 bits scaled by 2^-53
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    /// uniform in [-1,1)
    double symmetric() { return 2.0 * uniform() - 1.0; }

    /// standard normal via Box-Muller on two fresh uniforms
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    int uniform_int(int n) { return static_cast<int>(gen_() % static_cast<std::uint64_t>(n)); }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// iid uniform [-1,1) node values.
inline ScalarField random_field(const SpatialGrid& g, Rng& rng) {
    ScalarField f(g);
    for (double& v : f.v) v = rng.symmetric();
    return f;
}

}  // namespace kinlab
