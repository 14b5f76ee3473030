#pragma once

// In-code problem builders shared by the evolution and verification suites.
// They mirror the JSON fixtures under scenarios/ but keep the unit tests
// independent of the filesystem.

#include <geoplast/geoplast.hpp>

#include <memory>

namespace fixtures {

using namespace geoplast;

struct Built {
    std::unique_ptr<Discretization> disc;
    Problem problem;
};

// stress-controlled triaxial compression of a single material point:
// axial strain driven down, lateral components free under constant
// confining stress; damage starts sound and collapses once the hardening
// balance tips
inline Built triaxial_point(int steps = 100, double axial = -0.08, double confine = 0.01) {
    Built b;
    MeshSpec ms;
    ms.kind = MeshKind::point;
    b.disc = std::make_unique<Discretization>(build_mesh(ms), 3,
                                              std::vector<char>{1, 0, 0, 0, 0, 0});
    Problem& pb = b.problem;
    pb.disc = b.disc.get();
    pb.hooke = {1.0, 1.0};
    pb.dp = {0.6, 0.04, 3};
    pb.law = {0.2, 5e-4, 0.0};
    pb.time_steps = steps;
    pb.horizon = 1.0;
    pb.alpha0.assign(b.disc->n_alpha_nodes(), pb.law.alpha_cap);
    pb.p0.assign(b.disc->n_elements(), SymTensor::zero(3));

    const Discretization* disc = pb.disc;
    pb.loading.boundary = [axial, disc](double t) {
        VecX w = VecX::Zero(disc->n_dofs());
        w[0] = axial * t;
        return w;
    };
    SymTensor g(3);
    g[1] = -confine;
    g[2] = -confine;
    const VecX Fg = disc->stress_pairing_load(g);
    pb.loading.load = [Fg](double) { return Fg; };
    return b;
}

// strain-driven hydrostatic ramp with alpha0 = 0, i.e. no hardening left:
// the classical perfectly plastic response with a closed-form mean stress
inline Built hydrostatic_point(int steps = 100, double strain_end = 0.15) {
    Built b;
    MeshSpec ms;
    ms.kind = MeshKind::point;
    b.disc = std::make_unique<Discretization>(build_mesh(ms), 3,
                                              std::vector<char>{1, 1, 1, 1, 1, 1});
    Problem& pb = b.problem;
    pb.disc = b.disc.get();
    pb.hooke = {1.0, 1.0};
    pb.dp = {0.6, 0.3, 3};
    pb.law = {1.0, 1.0, 0.0};
    pb.time_steps = steps;
    pb.horizon = 1.0;
    pb.alpha0.assign(b.disc->n_alpha_nodes(), 0.0);
    pb.p0.assign(b.disc->n_elements(), SymTensor::zero(3));

    const Discretization* disc = pb.disc;
    pb.loading.boundary = [strain_end, disc](double t) {
        VecX w = VecX::Zero(disc->n_dofs());
        w[0] = w[1] = w[2] = strain_end * t;
        return w;
    };
    pb.loading.load = [disc](double) { return VecX::Zero(disc->n_dofs()); };
    return b;
}

// clamped bar with a constant axial body force and an affine stretch ramp;
// the yield bound is far away so the response stays linearly elastic
inline Built elastic_bar(int n_elems = 2, int steps = 4) {
    Built b;
    MeshSpec ms;
    ms.kind = MeshKind::segment;
    ms.n_elems = n_elems;
    ms.length = 1.0;
    ms.tags = {{"left", FacetTag::dirichlet}, {"right", FacetTag::dirichlet}};
    b.disc = std::make_unique<Discretization>(build_mesh(ms), 2);
    Problem& pb = b.problem;
    pb.disc = b.disc.get();
    pb.hooke = {1.0, 1.0};
    pb.dp = {0.6, 1e9, 2};
    pb.law = {1.0, 1e6, 0.01};
    pb.time_steps = steps;
    pb.horizon = 1.0;
    pb.alpha0.assign(b.disc->n_alpha_nodes(), pb.law.alpha_cap);
    pb.p0.assign(b.disc->n_elements(), SymTensor::zero(2));

    const Discretization* disc = pb.disc;
    pb.loading.boundary = [disc](double t) {
        const std::vector<double> offset = {0.0, 0.0};
        const std::vector<std::vector<double>> grad = {{0.05 * t}, {0.01 * t}};
        return disc->affine_field(offset, grad);
    };
    const VecX Ff = disc->body_force_load({0.3, 0.0});
    pb.loading.load = [Ff](double t) { return VecX(Ff * t); };
    return b;
}

} // namespace fixtures
