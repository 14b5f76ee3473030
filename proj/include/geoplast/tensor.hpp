#pragma once

// Small symmetric tensors (n = 2 or 3) and the isotropic Hooke law.
// Voigt storage keeps tensor components (off-diagonals unscaled); the
// inner product carries the factor 2 so that dot/norm agree with the
// Frobenius metric on full matrices.

#include <array>
#include <cassert>
#include <cmath>
#include <stdexcept>
#include <string>

namespace geoplast {

class SymTensor {
public:
    // n=2: [xx, yy, xy]   n=3: [xx, yy, zz, yz, xz, xy]
    explicit SymTensor(int dim = 3) : dim_(dim) {
        assert(dim == 2 || dim == 3);
        v_.fill(0.0);
    }

    static SymTensor zero(int dim) { return SymTensor(dim); }

    static SymTensor identity(int dim) {
        SymTensor t(dim);
        for (int i = 0; i < dim; ++i) t.v_[i] = 1.0;
        return t;
    }

    static SymTensor from_voigt(int dim, const double* c) {
        SymTensor t(dim);
        for (int k = 0; k < t.voigt_size(); ++k) t.v_[k] = c[k];
        return t;
    }

    int dim() const { return dim_; }
    int voigt_size() const { return dim_ * (dim_ + 1) / 2; }

    double operator[](int k) const { assert(k < voigt_size()); return v_[k]; }
    double& operator[](int k) { assert(k < voigt_size()); return v_[k]; }

    // full-matrix component access with symmetry
    double operator()(int i, int j) const { return v_[voigt_index(i, j)]; }
    void set(int i, int j, double val) { v_[voigt_index(i, j)] = val; }

    double trace() const {
        double s = 0.0;
        for (int i = 0; i < dim_; ++i) s += v_[i];
        return s;
    }

    double mean() const { return trace() / dim_; }

    SymTensor deviator() const {
        SymTensor d = *this;
        const double m = mean();
        for (int i = 0; i < dim_; ++i) d.v_[i] -= m;
        return d;
    }

    double dot(const SymTensor& o) const {
        assert(dim_ == o.dim_);
        double s = 0.0;
        for (int i = 0; i < dim_; ++i) s += v_[i] * o.v_[i];
        for (int k = dim_; k < voigt_size(); ++k) s += 2.0 * v_[k] * o.v_[k];
        return s;
    }

    double norm() const { return std::sqrt(dot(*this)); }

    SymTensor& operator+=(const SymTensor& o) {
        assert(dim_ == o.dim_);
        for (int k = 0; k < voigt_size(); ++k) v_[k] += o.v_[k];
        return *this;
    }
    SymTensor& operator-=(const SymTensor& o) {
        assert(dim_ == o.dim_);
        for (int k = 0; k < voigt_size(); ++k) v_[k] -= o.v_[k];
        return *this;
    }
    SymTensor& operator*=(double a) {
        for (int k = 0; k < voigt_size(); ++k) v_[k] *= a;
        return *this;
    }

    friend SymTensor operator+(SymTensor a, const SymTensor& b) { return a += b; }
    friend SymTensor operator-(SymTensor a, const SymTensor& b) { return a -= b; }
    friend SymTensor operator*(SymTensor a, double s) { return a *= s; }
    friend SymTensor operator*(double s, SymTensor a) { return a *= s; }
    friend SymTensor operator-(SymTensor a) { return a *= -1.0; }

private:
    int voigt_index(int i, int j) const {
        assert(i >= 0 && i < dim_ && j >= 0 && j < dim_);
        if (i == j) return i;
        const int a = i < j ? i : j, b = i < j ? j : i;
        if (dim_ == 2) return 2;          // xy
        if (a == 1) return 3;             // yz
        return b == 2 ? 4 : 5;            // xz : xy
    }

    int dim_;
    std::array<double, 6> v_;
};

struct MeanDev {
    double mean;
    SymTensor dev;
};

// xi = mean*Id + dev with tr(dev) = 0
inline MeanDev split(const SymTensor& xi) {
    return {xi.mean(), xi.deviator()};
}

// Isotropic elasticity C e = lambda tr(e) Id + 2 mu e.
struct HookeParams {
    double lambda = 0.0;
    double mu = 0.0;
};

// Ellipticity: eigenvalue 2mu on deviators, n*lambda + 2mu on the Id axis.
inline double hooke_gamma1(const HookeParams& h, int dim) {
    return std::min(2.0 * h.mu, dim * h.lambda + 2.0 * h.mu);
}
inline double hooke_gamma2(const HookeParams& h, int dim) {
    return std::max(2.0 * h.mu, dim * h.lambda + 2.0 * h.mu);
}

inline void validate_hooke(const HookeParams& h, int dim) {
    if (!(h.mu > 0.0))
        throw std::invalid_argument("elasticity: mu must be > 0, got " + std::to_string(h.mu));
    if (!(h.lambda + 2.0 * h.mu / dim > 0.0))
        throw std::invalid_argument("elasticity: lambda + 2*mu/n must be > 0, got " +
                                    std::to_string(h.lambda + 2.0 * h.mu / dim));
}

inline SymTensor hooke_apply(const HookeParams& h, const SymTensor& e) {
    SymTensor s = e * (2.0 * h.mu);
    const double lt = h.lambda * e.trace();
    for (int i = 0; i < e.dim(); ++i) s[i] += lt;
    return s;
}

// 1/2 C e : e
inline double elastic_density(const HookeParams& h, const SymTensor& e) {
    return 0.5 * hooke_apply(h, e).dot(e);
}

} // namespace geoplast
