#include "kinlab/scattering.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "kinlab/parallel.hpp"

namespace kinlab {

const char* to_string(ScatteringKind k) {
    return k == ScatteringKind::Neutron ? "neutron" : "fokker-planck";
}

namespace {

/// Solves (I + b * S_h) x = r for one spatial node, where S_h is the negated
/// periodic second difference scaled by 1/((d-1) dtheta^2). The system is
/// symmetric cyclic tridiagonal with diagonal 1 + 2*b*k and off-diagonal
/// -b*k; it is solved by the rank-one (Sherman-Morrison) reduction to a
/// plain tridiagonal system. The factorization depends only on b, so it is
/// reused across nodes with equal opacity.
class CyclicTridiagSolver {
public:
    void factor(int n, double diag, double off) {
        n_ = n;
        e_ = off;
        gamma_ = -diag;
        li_.assign(n, 0.0);
        di_.assign(n, 0.0);
        z_ = std::vector<double>(n, 0.0);
        // Modified tridiagonal T: T00 = diag - gamma, Tnn = diag - e^2/gamma.
        std::vector<double> d(n, diag);
        d[0] = diag - gamma_;
        d[n - 1] = diag - e_ * e_ / gamma_;
        di_[0] = d[0];
        for (int i = 1; i < n; ++i) {
            li_[i] = e_ / di_[i - 1];
            di_[i] = d[i] - li_[i] * e_;
        }
        // z = T^{-1} u with u = (gamma, 0, ..., 0, e)^T
        std::vector<double> u(n, 0.0);
        u[0] = gamma_;
        u[n - 1] = e_;
        solve_tridiag(u.data(), z_.data());
        denom_ = 1.0 + z_[0] + (e_ / gamma_) * z_[n - 1];
    }

    void solve(const double* rhs, double* out) const {
        solve_tridiag(rhs, out);
        double corr = (out[0] + (e_ / gamma_) * out[n_ - 1]) / denom_;
        for (int i = 0; i < n_; ++i) out[i] -= corr * z_[i];
    }

private:
    void solve_tridiag(const double* rhs, double* out) const {
        out[0] = rhs[0];
        for (int i = 1; i < n_; ++i) out[i] = rhs[i] - li_[i] * out[i - 1];
        out[n_ - 1] /= di_[n_ - 1];
        for (int i = n_ - 2; i >= 0; --i) out[i] = (out[i] - e_ * out[i + 1]) / di_[i];
    }

    int n_ = 0;
    double e_ = 0.0, gamma_ = 0.0, denom_ = 1.0;
    std::vector<double> li_, di_, z_;
};

}  // namespace

KineticState apply_scattering(ScatteringKind kind, const KineticState& f) {
    const int nn = f.grid->num_nodes();
    const int nv = f.quad->nv();
    KineticState out = f;
    if (kind == ScatteringKind::Neutron) {
        ScalarField avg = velocity_average(f);
        for (int j = 0; j < nv; ++j) {
            double* po = out.plane(j);
            const double* pf = f.plane(j);
            for (int n = 0; n < nn; ++n) po[n] = pf[n] - avg.v[n];
        }
    } else {
        const double dth = f.quad->dtheta();
        const double k = 1.0 / ((f.quad->dimension() - 1) * dth * dth);
        for (int j = 0; j < nv; ++j) {
            const double* pm = f.plane((j + nv - 1) % nv);
            const double* pc = f.plane(j);
            const double* pp = f.plane((j + 1) % nv);
            double* po = out.plane(j);
            for (int n = 0; n < nn; ++n) po[n] = -k * (pp[n] - 2.0 * pc[n] + pm[n]);
        }
    }
    return out;
}

KineticState relaxation_step(ScatteringKind kind, const KineticState& f, const OpacityField& a,
                             double dt, int threads) {
    if (!(dt > 0.0)) throw std::invalid_argument("relaxation_step: dt must be positive");
    const int nn = f.grid->num_nodes();
    const int nv = f.quad->nv();
    const double eps2 = f.epsilon * f.epsilon;
    KineticState out = f;
    out.time = f.time;  // relaxation shares the step's clock; the caller advances it

    if (kind == ScatteringKind::Neutron) {
        ScalarField avg = velocity_average(f);
        parallel_for(nn, threads, [&](int b, int e) {
            for (int n = b; n < e; ++n) {
                double fac = std::exp(-a.node[n] * dt / eps2);
                for (int j = 0; j < nv; ++j) {
                    std::size_t idx = static_cast<std::size_t>(j) * nn + n;
                    out.v[idx] = avg.v[n] + (f.v[idx] - avg.v[n]) * fac;
                }
            }
        });
    } else {
        const double dth = f.quad->dtheta();
        const double kf = 1.0 / ((f.quad->dimension() - 1) * dth * dth);
        const bool uniform = a.c_min == a.c_max;
        CyclicTridiagSolver shared;
        if (uniform) {
            double b = a.c_min * dt / eps2;
            shared.factor(nv, 1.0 + 2.0 * b * kf, -b * kf);
        }
        parallel_for(nn, threads, [&](int nb, int ne) {
            CyclicTridiagSolver local;
            std::vector<double> rhs(nv), sol(nv);
            for (int n = nb; n < ne; ++n) {
                const CyclicTridiagSolver* solver = &shared;
                if (!uniform) {
                    double b = a.node[n] * dt / eps2;
                    local.factor(nv, 1.0 + 2.0 * b * kf, -b * kf);
                    solver = &local;
                }
                for (int j = 0; j < nv; ++j) rhs[j] = f.v[static_cast<std::size_t>(j) * nn + n];
                solver->solve(rhs.data(), sol.data());
                for (int j = 0; j < nv; ++j) out.v[static_cast<std::size_t>(j) * nn + n] = sol[j];
            }
        });
    }

    for (double x : out.v) {
        if (!std::isfinite(x))
            throw std::runtime_error(std::string("relaxation_step: non-finite value after ") +
                                     to_string(kind) + " solve (dt=" + std::to_string(dt) + ")");
    }
    return out;
}

double scattering_dirichlet_form(ScatteringKind kind, const KineticState& f) {
    KineticState sf = apply_scattering(kind, f);
    const int nn = f.grid->num_nodes();
    const int nv = f.quad->nv();
    double s = 0.0;
    for (int j = 0; j < nv; ++j) {
        const double* pf = f.plane(j);
        const double* ps = sf.plane(j);
        double sj = 0.0;
        for (int n = 0; n < nn; ++n) sj += pf[n] * ps[n];
        s += sj * f.quad->weight();
    }
    return s * f.grid->cell_area();
}

double fokker_planck_mode_eigenvalue(const VelocityQuadrature& q, int k) {
    double dth = q.dtheta();
    return (2.0 - 2.0 * std::cos(k * dth)) / ((q.dimension() - 1) * dth * dth);
}

}  // namespace kinlab
