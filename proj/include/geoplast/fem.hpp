#pragma once

// Finite element layer: vector P1 displacements, scalar P1 damage, and
// elementwise constant (P0) strains, plastic strains and stresses.
//
// Displacement unknowns per mesh kind:
//   point    the Voigt components of the total strain itself; a "driven"
//            component mask plays the role of the Dirichlet boundary
//   segment  u : [0,L] -> R^n nodal, strain = sym(u' (x) e1), n in {2,3}
//   rect     u : Omega -> R^2 nodal, n = 2
//
// All bilinear pairings (loads, internal forces, stiffness) use the
// Frobenius metric on tensors, so Voigt off-diagonals carry weight 2 on
// the dual side.

#include <Eigen/Dense>
#include <vector>

#include "errors.hpp"
#include "mesh.hpp"
#include "tensor.hpp"

namespace geoplast {

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

class Discretization {
public:
    Discretization(Mesh mesh, int tensor_dim, std::vector<char> driven = {})
        : mesh_(std::move(mesh)), tdim_(tensor_dim), voigt_(tensor_dim * (tensor_dim + 1) / 2) {
        if (tdim_ != 2 && tdim_ != 3)
            throw ValidationError("discretization: tensor dim must be 2 or 3");
        if (mesh_.kind == MeshKind::rect && tdim_ != 2)
            throw ValidationError("discretization: rect meshes require tensor dim 2");

        if (mesh_.kind == MeshKind::point) {
            dofs_per_node_ = voigt_;
            n_dofs_ = voigt_;
            if (int(driven.size()) != voigt_)
                throw ValidationError("discretization: point mesh needs a driven mask of size " +
                                      std::to_string(voigt_));
            dirichlet_flag_.assign(n_dofs_, 0);
            bool any = false;
            for (int c = 0; c < voigt_; ++c) {
                dirichlet_flag_[c] = driven[c];
                any = any || driven[c];
            }
            if (!any) throw ValidationError("discretization: point mesh needs >= 1 driven component");
        } else {
            dofs_per_node_ = tdim_;
            n_dofs_ = mesh_.n_vertices() * tdim_;
            dirichlet_flag_.assign(n_dofs_, 0);
            for (const auto& f : mesh_.facets)
                if (f.tag == FacetTag::dirichlet)
                    for (int v = 0; v < f.n_verts; ++v)
                        for (int c = 0; c < tdim_; ++c) dirichlet_flag_[f.verts[v] * tdim_ + c] = 1;
        }
        for (int d = 0; d < n_dofs_; ++d)
            (dirichlet_flag_[d] ? dirichlet_dofs_ : free_dofs_).push_back(d);
        build_B();
    }

    const Mesh& mesh() const { return mesh_; }
    int tensor_dim() const { return tdim_; }
    int voigt_size() const { return voigt_; }
    int n_dofs() const { return n_dofs_; }
    int n_elements() const { return mesh_.n_elements(); }
    int n_nodes() const { return mesh_.n_vertices(); }
    const std::vector<int>& dirichlet_dofs() const { return dirichlet_dofs_; }
    const std::vector<int>& free_dofs() const { return free_dofs_; }
    bool is_dirichlet(int dof) const { return dirichlet_flag_[dof]; }

    const std::vector<int>& element_dofs(int e) const { return edofs_[e]; }

    SymTensor strain(const VecX& u, int e) const {
        const auto& B = B_[e];
        const auto& dofs = edofs_[e];
        SymTensor eps(tdim_);
        for (int r = 0; r < voigt_; ++r) {
            double s = 0.0;
            for (int c = 0; c < int(dofs.size()); ++c) s += B(r, c) * u[dofs[c]];
            eps[r] = s;
        }
        return eps;
    }

    std::vector<SymTensor> strain_field(const VecX& u) const {
        std::vector<SymTensor> out;
        out.reserve(n_elements());
        for (int e = 0; e < n_elements(); ++e) out.push_back(strain(u, e));
        return out;
    }

    // sum_e |e| sigma_e : strain_e(v) as a dof vector
    VecX internal_force(const std::vector<SymTensor>& sigma) const {
        VecX f = VecX::Zero(n_dofs_);
        for (int e = 0; e < n_elements(); ++e) {
            const auto& B = B_[e];
            const auto& dofs = edofs_[e];
            const double w = mesh_.measures[e];
            for (int c = 0; c < int(dofs.size()); ++c) {
                double s = 0.0;
                for (int r = 0; r < voigt_; ++r) s += B(r, c) * dual_weight(r) * sigma[e][r];
                f[dofs[c]] += w * s;
            }
        }
        return f;
    }

    // pairing of a spatially constant stress with strain(v); used for
    // stress-controlled point loading and the safe-load equilibrium check
    VecX stress_pairing_load(const SymTensor& G) const {
        return internal_force(std::vector<SymTensor>(n_elements(), G));
    }

    MatX stiffness(const HookeParams& h) const {
        const MatX D = hooke_matrix(h);
        MatX K = MatX::Zero(n_dofs_, n_dofs_);
        for (int e = 0; e < n_elements(); ++e) {
            const auto& B = B_[e];
            const auto& dofs = edofs_[e];
            const MatX Ke = mesh_.measures[e] * B.transpose() * D * B;
            for (int a = 0; a < int(dofs.size()); ++a)
                for (int b = 0; b < int(dofs.size()); ++b) K(dofs[a], dofs[b]) += Ke(a, b);
        }
        return K;
    }

    // body force (constant per element) and facet tractions; exact for P1
    VecX body_force_load(const std::vector<double>& f) const {
        VecX F = VecX::Zero(n_dofs_);
        if (mesh_.kind == MeshKind::point) {
            bool nonzero = false;
            for (double v : f) nonzero = nonzero || v != 0.0;
            if (nonzero) throw ValidationError("loading: body force is not supported on point meshes");
            return F;
        }
        for (int e = 0; e < n_elements(); ++e) {
            const double w = mesh_.measures[e] / mesh_.verts_per_elem;
            for (int v = 0; v < mesh_.verts_per_elem; ++v)
                for (int c = 0; c < tdim_; ++c) F[mesh_.elements[e][v] * tdim_ + c] += w * f[c];
        }
        return F;
    }

    // traction = value vector, or pressure * outward normal (padded with 0
    // beyond the mesh dimension)
    VecX traction_load(const std::vector<double>& traction, bool is_pressure) const {
        VecX F = VecX::Zero(n_dofs_);
        for (const auto& fct : mesh_.facets) {
            if (fct.tag != FacetTag::neumann) continue;
            std::array<double, 3> t{0.0, 0.0, 0.0};
            if (is_pressure) {
                t[0] = traction[0] * fct.normal[0];
                t[1] = traction[0] * fct.normal[1];
            } else {
                for (int c = 0; c < tdim_; ++c) t[c] = traction[c];
            }
            const double w = fct.measure / fct.n_verts;
            for (int v = 0; v < fct.n_verts; ++v)
                for (int c = 0; c < tdim_; ++c) F[fct.verts[v] * tdim_ + c] += w * t[c];
        }
        return F;
    }

    // nodal field of an affine datum x -> offset + G x (zero-padded x)
    VecX affine_field(const std::vector<double>& offset,
                      const std::vector<std::vector<double>>& grad) const {
        VecX w = VecX::Zero(n_dofs_);
        if (mesh_.kind == MeshKind::point)
            throw ValidationError("loading: affine data applies to segment/rect meshes only");
        for (int v = 0; v < mesh_.n_vertices(); ++v)
            for (int c = 0; c < tdim_; ++c) {
                double val = offset[c];
                for (int d = 0; d < mesh_.mesh_dim; ++d) val += grad[c][d] * mesh_.vertices[v][d];
                w[v * tdim_ + c] = val;
            }
        return w;
    }

    void apply_dirichlet(VecX& u, const VecX& w) const {
        for (int d : dirichlet_dofs_) u[d] = w[d];
    }

    // L2 norm of the strain of a dof field
    double strain_l2_norm(const VecX& u) const {
        double s = 0.0;
        for (int e = 0; e < n_elements(); ++e) {
            const SymTensor eps = strain(u, e);
            s += mesh_.measures[e] * eps.dot(eps);
        }
        return std::sqrt(s);
    }

    // --- scalar P1 damage field helpers ---

    int n_alpha_nodes() const { return mesh_.n_vertices(); }

    double element_average(const std::vector<double>& alpha, int e) const {
        if (mesh_.kind == MeshKind::point) return alpha[0];
        double s = 0.0;
        for (int v = 0; v < mesh_.verts_per_elem; ++v) s += alpha[mesh_.elements[e][v]];
        return s / mesh_.verts_per_elem;
    }

    // |grad alpha|^2 on element e (P1, constant)
    double alpha_grad_sq(const std::vector<double>& alpha, int e) const {
        if (mesh_.kind == MeshKind::point) return 0.0;
        double gx = 0.0, gy = 0.0;
        for (int v = 0; v < mesh_.verts_per_elem; ++v) {
            gx += alpha[mesh_.elements[e][v]] * mesh_.shape_grads[e][v][0];
            gy += alpha[mesh_.elements[e][v]] * mesh_.shape_grads[e][v][1];
        }
        return gx * gx + gy * gy;
    }

private:
    double dual_weight(int r) const { return r < tdim_ ? 1.0 : 2.0; }

    // Voigt-strain -> dual-Voigt-stress matrix of the Hooke law; symmetric,
    // and eps^T D eps = C eps : eps
    MatX hooke_matrix(const HookeParams& h) const {
        MatX D = MatX::Zero(voigt_, voigt_);
        for (int i = 0; i < tdim_; ++i)
            for (int j = 0; j < tdim_; ++j) D(i, j) = h.lambda + (i == j ? 2.0 * h.mu : 0.0);
        for (int r = tdim_; r < voigt_; ++r) D(r, r) = 4.0 * h.mu;
        return D;
    }

    void build_B() {
        B_.reserve(n_elements());
        edofs_.reserve(n_elements());
        for (int e = 0; e < n_elements(); ++e) {
            if (mesh_.kind == MeshKind::point) {
                B_.push_back(MatX::Identity(voigt_, voigt_));
                std::vector<int> dofs(voigt_);
                for (int c = 0; c < voigt_; ++c) dofs[c] = c;
                edofs_.push_back(std::move(dofs));
                continue;
            }
            const int nv = mesh_.verts_per_elem;
            MatX B = MatX::Zero(voigt_, nv * tdim_);
            std::vector<int> dofs(nv * tdim_);
            for (int v = 0; v < nv; ++v)
                for (int c = 0; c < tdim_; ++c) dofs[v * tdim_ + c] = mesh_.elements[e][v] * tdim_ + c;

            if (mesh_.kind == MeshKind::segment) {
                // strain = sym(u' (x) e1): eps_11 = u1', eps_1j = uj'/2
                for (int v = 0; v < nv; ++v) {
                    const double d = mesh_.shape_grads[e][v][0];
                    B(0, v * tdim_) = d;
                    if (tdim_ == 2) {
                        B(2, v * tdim_ + 1) = 0.5 * d; // eps_xy
                    } else {
                        B(5, v * tdim_ + 1) = 0.5 * d; // eps_xy
                        B(4, v * tdim_ + 2) = 0.5 * d; // eps_xz
                    }
                }
            } else { // rect, tdim == 2
                for (int v = 0; v < nv; ++v) {
                    const double gx = mesh_.shape_grads[e][v][0], gy = mesh_.shape_grads[e][v][1];
                    B(0, v * 2) = gx;
                    B(1, v * 2 + 1) = gy;
                    B(2, v * 2) = 0.5 * gy;
                    B(2, v * 2 + 1) = 0.5 * gx;
                }
            }
            B_.push_back(std::move(B));
            edofs_.push_back(std::move(dofs));
        }
    }

    Mesh mesh_;
    int tdim_;
    int voigt_;
    int dofs_per_node_ = 0;
    int n_dofs_ = 0;
    std::vector<char> dirichlet_flag_;
    std::vector<int> dirichlet_dofs_, free_dofs_;
    std::vector<MatX> B_;
    std::vector<std::vector<int>> edofs_;
};

} // namespace geoplast
