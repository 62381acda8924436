#include "kinlab/diffusion.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace kinlab {

namespace {
double harmonic(double a, double b) { return 2.0 * a * b / (a + b); }
}

EllipticOperator::EllipticOperator(const SpatialGrid& g, const OpacityField& a, int dimension)
    : grid_(&g), dim_(dimension) {
    validate(a);
    const int nx = g.nx(), ny = g.ny();
    auto kap = [&](double aval) { return 1.0 / (dim_ * aval); };

    kx_.assign(static_cast<std::size_t>(nx + 1) * ny, 0.0);
    ky_.assign(static_cast<std::size_t>(nx) * (ny + 1), 0.0);
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix <= nx; ++ix) {
            double kl = (ix == 0) ? kap(a.left[iy]) : kap(a.node[g.index(ix - 1, iy)]);
            double kr = (ix == nx) ? kap(a.right[iy]) : kap(a.node[g.index(ix, iy)]);
            kx_[iy * (nx + 1) + ix] = harmonic(kl, kr);
        }
    }
    for (int iy = 0; iy <= ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            double kb = (iy == 0) ? kap(a.bottom[ix]) : kap(a.node[g.index(ix, iy - 1)]);
            double kt = (iy == ny) ? kap(a.top[ix]) : kap(a.node[g.index(ix, iy)]);
            ky_[iy * nx + ix] = harmonic(kb, kt);
        }
    }

    diag_.assign(g.num_nodes(), 0.0);
    const double idx2 = 1.0 / (g.dx() * g.dx());
    const double idy2 = 1.0 / (g.dy() * g.dy());
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix)
            diag_[g.index(ix, iy)] = (kx(ix, iy) + kx(ix + 1, iy)) * idx2 + (ky(ix, iy) + ky(ix, iy + 1)) * idy2;
}

void EllipticOperator::apply(const double* u, double* out) const {
    const auto& g = *grid_;
    const int nx = g.nx(), ny = g.ny();
    const double idx2 = 1.0 / (g.dx() * g.dx());
    const double idy2 = 1.0 / (g.dy() * g.dy());
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            const int n = iy * nx + ix;
            double uc = u[n];
            double uw = ix > 0 ? u[n - 1] : 0.0;
            double ue = ix + 1 < nx ? u[n + 1] : 0.0;
            double us = iy > 0 ? u[n - nx] : 0.0;
            double un = iy + 1 < ny ? u[n + nx] : 0.0;
            out[n] = idx2 * (kx(ix, iy) * (uc - uw) + kx(ix + 1, iy) * (uc - ue)) +
                     idy2 * (ky(ix, iy) * (uc - us) + ky(ix, iy + 1) * (uc - un));
        }
    }
}

ScalarField EllipticOperator::apply(const ScalarField& u) const {
    ScalarField out(*grid_);
    apply(u.v.data(), out.v.data());
    return out;
}

double EllipticOperator::dirichlet_form(const ScalarField& u, const ScalarField& w) const {
    const auto& g = *grid_;
    const int nx = g.nx(), ny = g.ny();
    const double idx2 = 1.0 / (g.dx() * g.dx());
    const double idy2 = 1.0 / (g.dy() * g.dy());
    double s = 0.0;
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix <= nx; ++ix) {
            double du = (ix < nx ? u(ix, iy) : 0.0) - (ix > 0 ? u(ix - 1, iy) : 0.0);
            double dw = (ix < nx ? w(ix, iy) : 0.0) - (ix > 0 ? w(ix - 1, iy) : 0.0);
            s += kx(ix, iy) * du * dw * idx2;
        }
    }
    for (int iy = 0; iy <= ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            double du = (iy < ny ? u(ix, iy) : 0.0) - (iy > 0 ? u(ix, iy - 1) : 0.0);
            double dw = (iy < ny ? w(ix, iy) : 0.0) - (iy > 0 ? w(ix, iy - 1) : 0.0);
            s += ky(ix, iy) * du * dw * idy2;
        }
    }
    return s * g.cell_area();
}

namespace {

/// Jacobi-preconditioned CG for A x = b with A = alpha I + beta L.
/// An optional initial guess warm-starts the iteration.
ScalarField cg_solve(const EllipticOperator& op, double alpha, double beta, const ScalarField& b,
                     double tol, const char* what, CgStats* stats,
                     const ScalarField* guess = nullptr) {
    const int n = b.size();
    ScalarField x(op.grid());
    std::vector<double> r(b.v), z(n), p(n), Ap(n);
    double bnorm = 0.0;
    for (double v : b.v) bnorm += v * v;
    bnorm = std::sqrt(bnorm);
    if (bnorm == 0.0) {
        if (stats) *stats = {0, 0.0};
        return x;
    }
    if (guess) {
        x = *guess;
        op.apply(x.v.data(), Ap.data());
        for (int i = 0; i < n; ++i) r[i] = b.v[i] - (alpha * x.v[i] + beta * Ap[i]);
    }
    auto precond = [&](const std::vector<double>& in, std::vector<double>& out) {
        for (int i = 0; i < n; ++i) out[i] = in[i] / (alpha + beta * op.diagonal(i));
    };
    precond(r, z);
    p = z;
    double rz = 0.0;
    for (int i = 0; i < n; ++i) rz += r[i] * z[i];
    const int maxit = 10 * n;
    std::vector<double> history;
    for (int it = 1; it <= maxit; ++it) {
        op.apply(p.data(), Ap.data());
        for (int i = 0; i < n; ++i) Ap[i] = alpha * p[i] + beta * Ap[i];
        double pAp = 0.0;
        for (int i = 0; i < n; ++i) pAp += p[i] * Ap[i];
        double a = rz / pAp;
        for (int i = 0; i < n; ++i) x.v[i] += a * p[i];
        for (int i = 0; i < n; ++i) r[i] -= a * Ap[i];
        double rn = 0.0;
        for (double v : r) rn += v * v;
        rn = std::sqrt(rn);
        history.push_back(rn / bnorm);
        if (rn <= tol * bnorm) {
            if (stats) *stats = {it, rn / bnorm};
            return x;
        }
        precond(r, z);
        double rz_new = 0.0;
        for (int i = 0; i < n; ++i) rz_new += r[i] * z[i];
        for (int i = 0; i < n; ++i) p[i] = z[i] + (rz_new / rz) * p[i];
        rz = rz_new;
    }
    std::ostringstream msg;
    msg << what << ": CG failed to reach tol=" << tol << " in " << maxit
        << " iterations; residual tail:";
    for (std::size_t k = history.size() >= 8 ? history.size() - 8 : 0; k < history.size(); ++k)
        msg << " " << history[k];
    throw std::runtime_error(msg.str());
}

}  // namespace

ScalarField solve_elliptic(const EllipticOperator& op, const ScalarField& w, double tol, CgStats* stats) {
    return cg_solve(op, 0.0, 1.0, w, tol, "solve_elliptic", stats);
}

ScalarField solve_elliptic_warm(const EllipticOperator& op, const ScalarField& w,
                                const ScalarField& guess, double tol, CgStats* stats) {
    return cg_solve(op, 0.0, 1.0, w, tol, "solve_elliptic", stats, &guess);
}

ScalarField heat_step(const ScalarField& u, const EllipticOperator& op, double dt, HeatScheme scheme,
                      double tol, CgStats* stats) {
    if (!(dt > 0.0)) throw std::invalid_argument("heat_step: dt must be positive");
    if (scheme == HeatScheme::BackwardEuler) {
        return cg_solve(op, 1.0, dt, u, tol, "heat_step(BE)", stats, &u);
    }
    ScalarField rhs = op.apply(u);
    for (int i = 0; i < u.size(); ++i) rhs.v[i] = u.v[i] - 0.5 * dt * rhs.v[i];
    return cg_solve(op, 1.0, 0.5 * dt, rhs, tol, "heat_step(CN)", stats, &u);
}

double h_minus1_norm(const EllipticOperator& op, const ScalarField& w, double tol) {
    ScalarField phi = solve_elliptic(op, w, tol);
    double ip = dot(w, phi);
    if (ip < -1e-14 * dot(w, w))
        throw std::logic_error("h_minus1_norm: negative inner product; operator assembly is broken");
    return std::sqrt(std::max(ip, 0.0));
}

EigenBasis eigendecompose(const EllipticOperator& op, int count) {
    const auto& g = op.grid();
    const int n = g.num_nodes();
    if (n > 4096)
        throw std::invalid_argument("eigendecompose: dense solve guarded to nx*ny <= 4096");
    if (count < 1 || count > n)
        throw std::invalid_argument("eigendecompose: count out of range");

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    std::vector<double> e(n, 0.0), col(n);
    for (int j = 0; j < n; ++j) {
        e[j] = 1.0;
        op.apply(e.data(), col.data());
        for (int i = 0; i < n; ++i) A(i, j) = col[i];
        e[j] = 0.0;
    }
    // symmetrize away roundoff before the solver
    A = 0.5 * (A + A.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigendecompose: dense solver failed");

    EigenBasis basis;
    basis.eigenvalues.resize(count);
    basis.fields.reserve(count);
    const double scale = 1.0 / std::sqrt(g.cell_area());
    for (int k = 0; k < count; ++k) {
        basis.eigenvalues[k] = es.eigenvalues()(k);
        ScalarField f(g);
        for (int i = 0; i < n; ++i) f.v[i] = es.eigenvectors()(i, k) * scale;
        basis.fields.push_back(std::move(f));
    }
    return basis;
}

HeatRunRecord heat_run(const EllipticOperator& op, const ScalarField& u0, const HeatRunConfig& cfg) {
    if (!(cfg.T > 0.0) || cfg.nsteps < 1) throw std::invalid_argument("heat_run: bad T or nsteps");
    HeatRunRecord rec;
    ScalarField u = u0;
    double dt = cfg.T / cfg.nsteps;
    rec.times.push_back(0.0);
    rec.snapshots.push_back(u);
    rec.energy.push_back(dot(u, u));
    CgStats st;
    for (int k = 1; k <= cfg.nsteps; ++k) {
        u = heat_step(u, op, dt, cfg.scheme, cfg.cg_tol, &st);
        rec.worst_residual = std::max(rec.worst_residual, st.relative_residual);
        if (k % cfg.snapshot_every == 0 || k == cfg.nsteps) {
            rec.times.push_back(k * dt);
            rec.snapshots.push_back(u);
            rec.energy.push_back(dot(u, u));
        }
    }
    return rec;
}

QuotientTrace dirichlet_quotient_trace(const EllipticOperator& op, const HeatRunRecord& rec, double tol) {
    QuotientTrace tr;
    tr.times = rec.times;
    ScalarField prev;
    bool have_prev = false;
    for (const auto& u : rec.snapshots) {
        ScalarField phi = have_prev ? solve_elliptic_warm(op, u, prev, tol) : solve_elliptic(op, u, tol);
        double y = dot(u, phi);
        double n2 = dot(u, u);
        if (!(y > 0.0)) throw std::runtime_error("dirichlet_quotient_trace: vanishing dual mass");
        tr.y.push_back(y);
        tr.log_y.push_back(std::log(y));
        tr.N.push_back(n2 / y);
        prev = phi;
        have_prev = true;
    }
    return tr;
}

}  // namespace kinlab
