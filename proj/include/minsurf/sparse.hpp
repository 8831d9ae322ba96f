#pragma once

#include "mesh.hpp"
#include "parallel.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

namespace minsurf {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Local3 = Eigen::Matrix3d;

class SingularLinearSolve : public Error {
public:
  using Error::Error;
};

/// P1 sparsity pattern restricted to a set of free vertices. Each triangle
/// knows where its 3x3 block lands in the value array; scattering runs in
/// triangle order, so assembled values are bit-reproducible.
class P1Pattern {
public:
  P1Pattern(MeshPtr mesh, const std::vector<bool>& free) : mesh_(std::move(mesh)) {
    const std::size_t nv = mesh_->vertex_count();
    if (free.size() != nv) throw Error("free mask length mismatch");
    dof_.assign(nv, -1);
    for (std::size_t v = 0; v < nv; ++v)
      if (free[v]) {
        dof_[v] = static_cast<int>(free_vertices_.size());
        free_vertices_.push_back(static_cast<int>(v));
      }
    const auto n = static_cast<Eigen::Index>(free_vertices_.size());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(mesh_->triangle_count() * 9);
    for (const auto& tri : mesh_->triangles())
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          const int i = dof_[static_cast<std::size_t>(tri[a])], j = dof_[static_cast<std::size_t>(tri[b])];
          if (i >= 0 && j >= 0) trip.emplace_back(i, j, 1.0);
        }
    matrix_.resize(n, n);
    matrix_.setFromTriplets(trip.begin(), trip.end());
    matrix_.makeCompressed();
    slots_.assign(mesh_->triangle_count() * 9, -1);
    for (std::size_t t = 0; t < mesh_->triangle_count(); ++t) {
      const auto& tri = mesh_->triangle(t);
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          const int i = dof_[static_cast<std::size_t>(tri[a])], j = dof_[static_cast<std::size_t>(tri[b])];
          if (i < 0 || j < 0) continue;
          const auto* begin = matrix_.innerIndexPtr() + matrix_.outerIndexPtr()[i];
          const auto* end = matrix_.innerIndexPtr() + matrix_.outerIndexPtr()[i + 1];
          const auto* it = std::lower_bound(begin, end, j);
          slots_[t * 9 + static_cast<std::size_t>(3 * a + b)] = static_cast<int>(it - matrix_.innerIndexPtr());
        }
    }
  }

  /// Pattern over every vertex.
  static P1Pattern all(MeshPtr mesh) {
    std::vector<bool> free(mesh->vertex_count(), true);
    return P1Pattern(std::move(mesh), free);
  }
  /// Pattern over the vertices not on the mesh boundary.
  static P1Pattern interior(MeshPtr mesh) {
    std::vector<bool> free(mesh->vertex_count());
    for (std::size_t v = 0; v < free.size(); ++v) free[v] = !mesh->on_boundary(v);
    return P1Pattern(std::move(mesh), free);
  }

  SparseMatrix assemble(const std::vector<Local3>& blocks) const {
    SparseMatrix m = matrix_;
    double* val = m.valuePtr();
    std::fill(val, val + m.nonZeros(), 0.0);
    for (std::size_t t = 0; t < blocks.size(); ++t)
      for (int k = 0; k < 9; ++k) {
        const int s = slots_[t * 9 + static_cast<std::size_t>(k)];
        if (s >= 0) val[s] += blocks[t](k / 3, k % 3);
      }
    return m;
  }

  const MeshPtr& mesh() const { return mesh_; }
  std::size_t size() const { return free_vertices_.size(); }
  int dof(std::size_t vertex) const { return dof_[vertex]; }
  const std::vector<int>& free_vertices() const { return free_vertices_; }

  Eigen::VectorXd restrict(const Eigen::VectorXd& nodal) const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(size()));
    for (std::size_t i = 0; i < size(); ++i) out[static_cast<Eigen::Index>(i)] = nodal[free_vertices_[i]];
    return out;
  }
  void add_prolonged(const Eigen::VectorXd& reduced, double scale, Eigen::VectorXd& nodal) const {
    for (std::size_t i = 0; i < size(); ++i) nodal[free_vertices_[i]] += scale * reduced[static_cast<Eigen::Index>(i)];
  }

private:
  MeshPtr mesh_;
  std::vector<int> dof_;
  std::vector<int> free_vertices_;
  SparseMatrix matrix_;
  std::vector<int> slots_;
};

enum class LinearSolverKind { conjugate_gradient, direct_ldlt };

struct LinearSolveOptions {
  LinearSolverKind kind{LinearSolverKind::conjugate_gradient};
  double relative_tol{1e-10};
  int max_iters{20000};
};

struct LinearSolveStats {
  int iterations{0};
  double relative_residual{0.0};
  double min_curvature{std::numeric_limits<double>::infinity()};  ///< min p'Ap/p'p seen by CG
};

/// Jacobi-preconditioned CG. Throws SingularLinearSolve on non-positive curvature.
inline LinearSolveStats conjugate_gradient(const SparseMatrix& a, const Eigen::VectorXd& b, Eigen::VectorXd& x,
                                           double relative_tol, int max_iters) {
  LinearSolveStats stats;
  const Eigen::Index n = b.size();
  if (x.size() != n) x = Eigen::VectorXd::Zero(n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x.setZero();
    return stats;
  }
  Eigen::VectorXd inv_diag = a.diagonal();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(inv_diag[i] > 0.0)) throw SingularLinearSolve("non-positive diagonal entry");
    inv_diag[i] = 1.0 / inv_diag[i];
  }
  Eigen::VectorXd r = b - a * x;
  Eigen::VectorXd z = inv_diag.cwiseProduct(r);
  Eigen::VectorXd p = z;
  Eigen::VectorXd ap(n);
  double rz = r.dot(z);
  stats.relative_residual = r.norm() / bnorm;
  while (stats.relative_residual > relative_tol) {
    if (stats.iterations >= max_iters) throw SingularLinearSolve("CG did not reach the requested tolerance");
    ap.noalias() = a * p;
    const double curv = p.dot(ap);
    const double pp = p.squaredNorm();
    if (!(curv > 0.0)) throw SingularLinearSolve("CG met non-positive curvature");
    stats.min_curvature = std::min(stats.min_curvature, curv / pp);
    const double alpha = rz / curv;
    x.noalias() += alpha * p;
    r.noalias() -= alpha * ap;
    z = inv_diag.cwiseProduct(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
    ++stats.iterations;
    stats.relative_residual = r.norm() / bnorm;
  }
  return stats;
}

inline LinearSolveStats solve_spd(const SparseMatrix& a, const Eigen::VectorXd& b, Eigen::VectorXd& x,
                                  const LinearSolveOptions& opts) {
  if (opts.kind == LinearSolverKind::conjugate_gradient)
    return conjugate_gradient(a, b, x, opts.relative_tol, opts.max_iters);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  ldlt.compute(Eigen::SparseMatrix<double>(a));
  if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any())
    throw SingularLinearSolve("LDLT factorization failed or matrix is not positive definite");
  x = ldlt.solve(b);
  LinearSolveStats stats;
  const double bnorm = b.norm();
  stats.relative_residual = bnorm > 0.0 ? (b - a * x).norm() / bnorm : 0.0;
  return stats;
}

} // namespace minsurf
