#pragma once

// Seeded random helpers. Distributions are hand-rolled on top of
// mt19937_64 so that streams are identical across standard libraries;
// verification reports must be reproducible byte for byte.

#include <cmath>
#include <cstdint>
#include <random>

#include "tensor.hpp"

namespace geoplast {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal via Box-Muller (always draws two uniforms)
    double normal() {
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    std::uint64_t raw() { return eng_(); }

    SymTensor sym_tensor(int dim, double scale = 1.0) {
        SymTensor t(dim);
        for (int k = 0; k < t.voigt_size(); ++k) t[k] = scale * normal();
        return t;
    }

    // uniform direction on the unit sphere of symmetric tensors
    SymTensor sym_direction(int dim) {
        for (;;) {
            SymTensor t = sym_tensor(dim);
            const double n = t.norm();
            if (n > 1e-12) return t * (1.0 / n);
        }
    }

    SymTensor deviatoric_direction(int dim) {
        for (;;) {
            SymTensor t = sym_tensor(dim).deviator();
            const double n = t.norm();
            if (n > 1e-12) return t * (1.0 / n);
        }
    }

private:
    std::mt19937_64 eng_;
};

} // namespace geoplast
