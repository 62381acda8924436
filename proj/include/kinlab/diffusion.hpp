#pragma once

#include <vector>

#include "kinlab/grid.hpp"

namespace kinlab {

enum class HeatScheme { BackwardEuler, CrankNicolson };

/// L = -(1/d) div( (1/a) grad . ) on the node-centered grid with homogeneous
/// Dirichlet values, assembled as a 5-point flux stencil. Face coefficients
/// kappa = 1/(d a) are harmonic means of the adjacent samples, so L is
/// symmetric positive definite and the discrete Green identity
/// <L u, w> = sum_faces kappa (du/h)(dw/h) dx dy is exact.
class EllipticOperator {
public:
    EllipticOperator(const SpatialGrid& g, const OpacityField& a, int dimension = 2);

    const SpatialGrid& grid() const { return *grid_; }
    int dimension() const { return dim_; }

    void apply(const double* u, double* out) const;
    ScalarField apply(const ScalarField& u) const;

    /// <L u, w> via the face sum (exact Green identity).
    double dirichlet_form(const ScalarField& u, const ScalarField& w) const;

    /// Face coefficient between (ix-1,iy) and (ix,iy); ix ranges 0..nx
    /// (0 and nx are boundary faces). Same pattern for y.
    double kx(int ix, int iy) const { return kx_[iy * (grid_->nx() + 1) + ix]; }
    double ky(int ix, int iy) const { return ky_[iy * grid_->nx() + ix]; }

    double diagonal(int n) const { return diag_[n]; }

private:
    const SpatialGrid* grid_;
    int dim_;
    std::vector<double> kx_, ky_, diag_;
};

struct CgStats {
    int iterations = 0;
    double relative_residual = 0.0;
};

/// phi with L phi = w by Jacobi-preconditioned conjugate gradients,
/// relative residual <= tol. Throws (with the tail of the residual history)
/// if 10*n iterations do not converge.
ScalarField solve_elliptic(const EllipticOperator& op, const ScalarField& w, double tol = 1e-11,
                           CgStats* stats = nullptr);

/// Same, warm-started from a previous solution.
ScalarField solve_elliptic_warm(const EllipticOperator& op, const ScalarField& w,
                                const ScalarField& guess, double tol = 1e-11,
                                CgStats* stats = nullptr);

/// One step of (I + dt L) u_new = u (backward Euler) or
/// (I + dt/2 L) u_new = (I - dt/2 L) u (Crank-Nicolson).
ScalarField heat_step(const ScalarField& u, const EllipticOperator& op, double dt, HeatScheme scheme,
                      double tol = 1e-11, CgStats* stats = nullptr);

/// sqrt(<w, L^{-1} w>): the dual norm realized by the weighted operator.
/// Equals the weighted gradient integral of the potential by the Green
/// identity. Aborts if the inner product comes out negative, which would
/// signal a broken assembly.
double h_minus1_norm(const EllipticOperator& op, const ScalarField& w, double tol = 1e-11);

struct EigenBasis {
    std::vector<double> eigenvalues;     // ascending
    std::vector<ScalarField> fields;     // L^2(Omega)-orthonormal
};

/// Lowest `count` eigenpairs by a dense symmetric solve of the assembled
/// stencil. Guarded to nx*ny <= 4096.
EigenBasis eigendecompose(const EllipticOperator& op, int count);

struct HeatRunConfig {
    double T = 1.0;
    int nsteps = 256;
    HeatScheme scheme = HeatScheme::CrankNicolson;
    int snapshot_every = 1;
    double cg_tol = 1e-11;
};

struct HeatRunRecord {
    std::vector<double> times;
    std::vector<ScalarField> snapshots;
    std::vector<double> energy;          // ||u||_{L^2}^2 at snapshot times
    double worst_residual = 0.0;         // largest CG relative residual seen
};

HeatRunRecord heat_run(const EllipticOperator& op, const ScalarField& u0, const HeatRunConfig& cfg);

/// Dirichlet quotient N(t) = ||u||^2 / y(t) and the weighted dual mass
/// y(t) = <u, L^{-1} u> along a run. log_y is carried so the backward bound
/// can be checked without overflowing.
struct QuotientTrace {
    std::vector<double> times;
    std::vector<double> N;
    std::vector<double> y;
    std::vector<double> log_y;
};

QuotientTrace dirichlet_quotient_trace(const EllipticOperator& op, const HeatRunRecord& rec,
                                       double tol = 1e-11);

}  // namespace kinlab
