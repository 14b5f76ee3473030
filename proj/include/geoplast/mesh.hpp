#pragma once

// Structured meshes for the three supported domains:
//   point    single material point, one element of unit measure
//   segment  uniform subdivision of [0, L]
//   rect     nx-by-ny grid of [0, lx] x [0, ly], each cell split into
//            two triangles along the bottom-left/top-right diagonal
// Every boundary facet carries exactly one tag.

#include <array>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "errors.hpp"

namespace geoplast {

enum class MeshKind { point, segment, rect };
enum class FacetTag { dirichlet, neumann };

struct Facet {
    std::array<int, 2> verts{-1, -1};
    int n_verts = 0;
    double measure = 0.0;
    std::array<double, 2> normal{0.0, 0.0}; // outward unit normal
    FacetTag tag = FacetTag::dirichlet;
};

struct Mesh {
    MeshKind kind = MeshKind::point;
    int mesh_dim = 0; // 0, 1, 2
    int verts_per_elem = 1;
    std::vector<std::array<double, 2>> vertices;
    std::vector<std::array<int, 3>> elements;
    std::vector<double> measures;
    // P1 shape-function gradients, per element and local vertex
    std::vector<std::array<std::array<double, 2>, 3>> shape_grads;
    std::vector<Facet> facets;

    int n_vertices() const { return int(vertices.size()); }
    int n_elements() const { return int(elements.size()); }

    double volume() const {
        double v = 0.0;
        for (double m : measures) v += m;
        return v;
    }
};

struct MeshSpec {
    MeshKind kind = MeshKind::point;
    int n_elems = 1;     // segment
    double length = 1.0; // segment
    int nx = 1, ny = 1;  // rect
    double lx = 1.0, ly = 1.0;
    // sides: "left"/"right" (segment), plus "bottom"/"top" (rect)
    std::map<std::string, FacetTag> tags;
};

inline FacetTag side_tag(const MeshSpec& spec, const std::string& side) {
    const auto it = spec.tags.find(side);
    if (it == spec.tags.end())
        throw ValidationError("mesh: missing boundary tag for side '" + side + "'");
    return it->second;
}

inline Mesh build_mesh(const MeshSpec& spec) {
    Mesh m;
    m.kind = spec.kind;
    switch (spec.kind) {
    case MeshKind::point: {
        m.mesh_dim = 0;
        m.verts_per_elem = 1;
        m.vertices = {{0.0, 0.0}};
        m.elements = {{0, -1, -1}};
        m.measures = {1.0};
        m.shape_grads.push_back({});
        return m;
    }
    case MeshKind::segment: {
        if (spec.n_elems < 1) throw ValidationError("mesh: segment needs n_elems >= 1");
        if (!(spec.length > 0.0)) throw ValidationError("mesh: segment needs length > 0");
        m.mesh_dim = 1;
        m.verts_per_elem = 2;
        const double h = spec.length / spec.n_elems;
        for (int i = 0; i <= spec.n_elems; ++i) m.vertices.push_back({i * h, 0.0});
        for (int e = 0; e < spec.n_elems; ++e) {
            m.elements.push_back({e, e + 1, -1});
            m.measures.push_back(h);
            std::array<std::array<double, 2>, 3> g{};
            g[0] = {-1.0 / h, 0.0};
            g[1] = {1.0 / h, 0.0};
            m.shape_grads.push_back(g);
        }
        Facet left{{0, -1}, 1, 1.0, {-1.0, 0.0}, side_tag(spec, "left")};
        Facet right{{spec.n_elems, -1}, 1, 1.0, {1.0, 0.0}, side_tag(spec, "right")};
        m.facets = {left, right};
        break;
    }
    case MeshKind::rect: {
        if (spec.nx < 1 || spec.ny < 1) throw ValidationError("mesh: rect needs nx, ny >= 1");
        if (!(spec.lx > 0.0) || !(spec.ly > 0.0))
            throw ValidationError("mesh: rect needs lx, ly > 0");
        m.mesh_dim = 2;
        m.verts_per_elem = 3;
        const double hx = spec.lx / spec.nx, hy = spec.ly / spec.ny;
        const auto vid = [&](int i, int j) { return j * (spec.nx + 1) + i; };
        for (int j = 0; j <= spec.ny; ++j)
            for (int i = 0; i <= spec.nx; ++i) m.vertices.push_back({i * hx, j * hy});
        const auto add_tri = [&](int a, int b, int c) {
            m.elements.push_back({a, b, c});
            const auto &pa = m.vertices[a], &pb = m.vertices[b], &pc = m.vertices[c];
            const double twoA = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0]);
            m.measures.push_back(0.5 * twoA);
            std::array<std::array<double, 2>, 3> g{};
            const auto perp_over = [&](const std::array<double, 2>& u, const std::array<double, 2>& v) {
                return std::array<double, 2>{-(v[1] - u[1]) / twoA, (v[0] - u[0]) / twoA};
            };
            // grad of the barycentric function of vertex a is perp to edge (b, c)
            g[0] = perp_over(pb, pc);
            g[1] = perp_over(pc, pa);
            g[2] = perp_over(pa, pb);
            m.shape_grads.push_back(g);
        };
        for (int j = 0; j < spec.ny; ++j)
            for (int i = 0; i < spec.nx; ++i) {
                add_tri(vid(i, j), vid(i + 1, j), vid(i + 1, j + 1));
                add_tri(vid(i, j), vid(i + 1, j + 1), vid(i, j + 1));
            }
        const auto add_facet = [&](int a, int b, double len, std::array<double, 2> nrm,
                                   const char* side) {
            m.facets.push_back({{a, b}, 2, len, nrm, side_tag(spec, side)});
        };
        for (int i = 0; i < spec.nx; ++i) {
            add_facet(vid(i, 0), vid(i + 1, 0), hx, {0.0, -1.0}, "bottom");
            add_facet(vid(i, spec.ny), vid(i + 1, spec.ny), hx, {0.0, 1.0}, "top");
        }
        for (int j = 0; j < spec.ny; ++j) {
            add_facet(vid(0, j), vid(0, j + 1), hy, {-1.0, 0.0}, "left");
            add_facet(vid(spec.nx, j), vid(spec.nx, j + 1), hy, {1.0, 0.0}, "right");
        }
        break;
    }
    }
    bool any_dirichlet = false;
    for (const auto& f : m.facets) any_dirichlet |= (f.tag == FacetTag::dirichlet);
    if (!any_dirichlet) throw ValidationError("mesh: at least one side must be tagged dirichlet");
    return m;
}

} // namespace geoplast
