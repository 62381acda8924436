#include "kinlab/certificates.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace kinlab {

double c_p(double p) {
    if (!(p > 2.0)) throw std::invalid_argument("c_p: requires p > 2");
    double e1 = (p - 1.0) / (2.0 * p);
    double e2 = 1.0 / (2.0 * p);
    return std::pow((p - 1.0) / (p - 2.0), e1) * std::pow(1.0 / p, e2);
}

DataQuality data_quality(const KineticState& f0, const EllipticOperator& op, double p) {
    if (!(p > 2.0)) throw std::invalid_argument("data_quality: requires p > 2");
    DataQuality dq;
    dq.p = p;
    ScalarField avg = velocity_average(f0);
    double n2 = l2_norm(avg);
    if (n2 == 0.0) return dq;  // undefined, reported as such
    dq.m_p = lp_norm(f0, 2.0 * p) / n2;
    double hm1 = h_minus1_norm(op, avg);
    dq.f_freq = (n2 / hm1) * (n2 / hm1);
    dq.defined = true;
    return dq;
}

double sigma(const DataQuality& dq, double T, double c) {
    if (!(T > 0.0 && c > 0.0)) throw std::invalid_argument("sigma: requires T > 0 and c > 0");
    return c * (1.0 + 1.0 / T + T * dq.f_freq);
}

ScalarField gaussian_weight(const SpatialGrid& g, Vec2 x0, double lambda, double t, double T,
                            double kappa) {
    if (!(lambda > 0.0)) throw std::invalid_argument("gaussian_weight: lambda must be positive");
    if (!(t >= 0.0 && t <= T)) throw std::invalid_argument("gaussian_weight: need 0 <= t <= T");
    if (!(kappa > 0.0)) throw std::invalid_argument("gaussian_weight: kappa must be positive");
    double tau = T - t + lambda;
    ScalarField w(g);
    for (int iy = 0; iy < g.ny(); ++iy) {
        for (int ix = 0; ix < g.nx(); ++ix) {
            double rx = g.x(ix) - x0.x, ry = g.y(iy) - x0.y;
            double d2 = (rx * rx + ry * ry) / kappa;
            w(ix, iy) = std::exp(-d2 / (4.0 * tau)) / tau;  // n = 2
        }
    }
    return w;
}

FrequencyTrace frequency_function(const SpatialGrid& g, const std::vector<double>& times,
                                  const std::vector<ScalarField>& snapshots, Vec2 x0, double lambda,
                                  double kappa, double T) {
    if (times.size() != snapshots.size() || times.empty())
        throw std::invalid_argument("frequency_function: times/snapshots mismatch");
    for (std::size_t k = 1; k < times.size(); ++k)
        if (!(times[k] > times[k - 1]))
            throw std::invalid_argument("frequency_function: times must be strictly increasing");

    FrequencyTrace tr;
    tr.lambda = lambda;
    tr.x0 = x0;
    const int nx = g.nx(), ny = g.ny();
    const double area = g.cell_area();
    auto gw = [&](double px, double py, double tau) {
        double rx = px - x0.x, ry = py - x0.y;
        return std::exp(-(rx * rx + ry * ry) / (kappa * 4.0 * tau)) / tau;
    };
    for (std::size_t k = 0; k < times.size(); ++k) {
        double tau = T - times[k] + lambda;
        if (!(tau > 0.0)) throw std::invalid_argument("frequency_function: t beyond T");
        const ScalarField& z = snapshots[k];
        double num = 0.0;
        for (int iy = 0; iy < ny; ++iy) {
            double py = g.y(iy);
            for (int ix = 0; ix <= nx; ++ix) {
                double dz = (ix < nx ? z(ix, iy) : 0.0) - (ix > 0 ? z(ix - 1, iy) : 0.0);
                double px = (ix + 0.5) * g.dx();
                num += kappa * (dz / g.dx()) * (dz / g.dx()) * gw(px, py, tau);
            }
        }
        for (int iy = 0; iy <= ny; ++iy) {
            double py = (iy + 0.5) * g.dy();
            for (int ix = 0; ix < nx; ++ix) {
                double dz = (iy < ny ? z(ix, iy) : 0.0) - (iy > 0 ? z(ix, iy - 1) : 0.0);
                double px = g.x(ix);
                num += kappa * (dz / g.dy()) * (dz / g.dy()) * gw(px, py, tau);
            }
        }
        num *= area;
        double den = 0.0;
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix < nx; ++ix) den += z(ix, iy) * z(ix, iy) * gw(g.x(ix), g.y(iy), tau);
        den *= area;
        if (!(den > 0.0))
            throw std::runtime_error("frequency_function: vanishing weighted mass; quotient undefined");
        tr.times.push_back(times[k]);
        tr.N.push_back(num / den);
        tr.y.push_back(den);
    }
    return tr;
}

namespace {

/// Composite quadrature over sample values with uniform spacing h:
/// Simpson when the interval count is even, Simpson + 3/8 rule otherwise.
double quad_samples(const std::vector<double>& vals, double h) {
    const std::size_t n = vals.size();
    if (n < 2) return 0.0;
    if (n == 2) return 0.5 * h * (vals[0] + vals[1]);
    double s = 0.0;
    if ((n - 1) % 2 == 0) {
        for (std::size_t i = 0; i + 2 < n + 1; i += 2)
            s += h / 3.0 * (vals[i] + 4.0 * vals[i + 1] + vals[i + 2]);
    } else {
        // 3/8 rule on the last three intervals, Simpson pairs before them
        const std::size_t cut = n - 4;
        for (std::size_t i = 0; i + 2 <= cut; i += 2)
            s += h / 3.0 * (vals[i] + 4.0 * vals[i + 1] + vals[i + 2]);
        s += 3.0 * h / 8.0 * (vals[cut] + 3.0 * vals[cut + 1] + 3.0 * vals[cut + 2] + vals[cut + 3]);
    }
    return s;
}

template <class F>
double simpson(F&& f, double a, double b, int nodes) {
    if (nodes < 3) nodes = 3;
    if (nodes % 2 == 0) ++nodes;
    double h = (b - a) / (nodes - 1);
    double s = f(a) + f(b);
    for (int i = 1; i < nodes - 1; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

std::size_t sample_index(const std::vector<double>& times, double t, const char* what) {
    double h = times.size() > 1 ? times[1] - times[0] : 1.0;
    for (std::size_t i = 0; i < times.size(); ++i)
        if (std::abs(times[i] - t) <= 1e-9 * std::max(1.0, std::abs(h))) return i;
    throw std::invalid_argument(std::string(what) + ": time is not a sample point");
}

/// 4th-order derivative estimates on a uniform grid (2nd order at the ends).
double deriv(const std::vector<double>& v, std::size_t i, double h) {
    const std::size_t n = v.size();
    if (i >= 2 && i + 2 < n)
        return (-v[i + 2] + 8.0 * v[i + 1] - 8.0 * v[i - 1] + v[i - 2]) / (12.0 * h);
    if (i == 0) return (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
    if (i + 1 == n) return (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
    return (v[i + 1] - v[i - 1]) / (2.0 * h);
}

}  // namespace

OdeLemmaReport check_ode_lemma(const OdeSystemSample& sys, double t1, double t2, double t3,
                               int quad_nodes) {
    if (!(0.0 <= t1 && t1 < t2 && t2 < t3 && t3 <= sys.T))
        throw std::invalid_argument("check_ode_lemma: need 0 <= t1 < t2 < t3 <= T");
    const std::size_t n = sys.times.size();
    if (n < 5 || sys.y.size() != n || sys.N.size() != n || sys.F1.size() != n || sys.F2.size() != n)
        throw std::invalid_argument("check_ode_lemma: malformed sample");
    const double h = sys.times[1] - sys.times[0];

    OdeLemmaReport rep;
    rep.hypotheses_ok = true;
    for (std::size_t i = 0; i < n; ++i) {
        double t = sys.times[i];
        double tau = sys.T - t + sys.lambda;
        double yp = deriv(sys.y, i, h);
        double np = deriv(sys.N, i, h);
        double lhs1 = std::abs(0.5 * yp + sys.N[i] * sys.y[i]);
        double rhs1 = (sys.C0 / tau + sys.C1) * sys.y[i] + sys.F1[i] * sys.y[i];
        double slack1 = 1e-6 * (std::abs(lhs1) + rhs1 + sys.y[i]) + 1e-12;
        if (lhs1 > rhs1 + slack1) {
            rep.hypotheses_ok = false;
            rep.first_violation = static_cast<int>(i);
            char buf[128];
            std::snprintf(buf, sizeof(buf), "|y'/2 + N y| = %.6g exceeds %.6g at t = %.6g", lhs1,
                          rhs1, t);
            rep.violation_what = buf;
            break;
        }
        double rhs2 = ((1.0 + sys.C0) / tau + sys.C1) * sys.N[i] + sys.F2[i];
        double slack2 = 1e-6 * (std::abs(np) + std::abs(rhs2) + sys.N[i]) + 1e-12;
        if (np > rhs2 + slack2) {
            rep.hypotheses_ok = false;
            rep.first_violation = static_cast<int>(i);
            char buf[128];
            std::snprintf(buf, sizeof(buf), "N' = %.6g exceeds %.6g at t = %.6g", np, rhs2, t);
            rep.violation_what = buf;
            break;
        }
    }

    auto weight = [&](double t) {
        return std::exp(t * sys.C1) * std::pow(sys.T - t + sys.lambda, -1.0 - sys.C0);
    };
    double num = simpson(weight, t2, t3, quad_nodes);
    double den = simpson(weight, t1, t2, quad_nodes);
    rep.M = num / den;

    std::size_t i1 = sample_index(sys.times, t1, "check_ode_lemma");
    std::size_t i2 = sample_index(sys.times, t2, "check_ode_lemma");
    std::size_t i3 = sample_index(sys.times, t3, "check_ode_lemma");
    double supF1 = 0.0;
    for (std::size_t i = i1; i <= i3; ++i) supF1 = std::max(supF1, std::abs(sys.F1[i]));
    std::vector<double> absF2(sys.F2.begin() + i1, sys.F2.begin() + i3 + 1);
    for (double& v : absF2) v = std::abs(v);
    double intF2 = quad_samples(absF2, h);
    rep.D = rep.M * (t2 - t1) * (sys.C1 + supF1 + intF2);

    rep.log_lhs = (1.0 + rep.M) * std::log(sys.y[i2]);
    rep.log_rhs = std::log(sys.y[i3]) + rep.M * std::log(sys.y[i1]) + 4.0 * rep.D +
                  2.0 * sys.C0 * (1.0 + rep.M) *
                      std::log((sys.T - t1 + sys.lambda) / (sys.T - t3 + sys.lambda));
    rep.margin = rep.log_rhs - rep.log_lhs;
    return rep;
}

MellResult m_ell_bound(double ell, double lambda, double C0, double C1, double T, int quad_nodes) {
    if (!(ell > 1.0)) throw std::invalid_argument("m_ell_bound: requires ell > 1");
    if (!(lambda > 0.0)) throw std::invalid_argument("m_ell_bound: requires lambda > 0");
    if (!(ell * lambda < T / 4.0))
        throw std::invalid_argument("m_ell_bound: requires ell*lambda < T/4");
    if (C0 < 0.0 || C1 < 0.0) throw std::invalid_argument("m_ell_bound: C0, C1 must be >= 0");

    auto weight = [&](double t) { return std::exp(t * C1) * std::pow(T - t + lambda, -1.0 - C0); };
    MellResult r;
    r.exact = simpson(weight, T - ell * lambda, T, quad_nodes) /
              simpson(weight, T - 2.0 * ell * lambda, T - ell * lambda, quad_nodes);
    if (C0 > 0.0)
        r.bound = std::exp(C1 * T) * std::pow(ell + 1.0, C0) / (1.0 - std::pow(2.0 / 3.0, C0));
    else
        r.bound = std::exp(C1 * T) * std::log(ell + 1.0) / std::log(2.0);
    return r;
}

SmallnessResult smallness_theta(double rho, double eps_cut, double C_A, double T, double ratio) {
    if (!(rho > 0.0 && eps_cut > 0.0 && eps_cut < rho / 2.0))
        throw std::invalid_argument("smallness_theta: requires 0 < eps_cut < rho/2");
    if (!(C_A > 0.0)) throw std::invalid_argument("smallness_theta: requires C_A > 0");
    if (!(T > 0.0)) throw std::invalid_argument("smallness_theta: requires T > 0");
    if (!(ratio >= 1.0)) throw std::invalid_argument("smallness_theta: requires ratio >= 1");

    SmallnessResult r;
    const double s = eps_cut * (2.0 * rho - 3.0 * eps_cut);
    r.delta = s / (2.0 * rho * rho * C_A);
    const double K = std::exp(0.5 * s * (2.0 / T + 1.0) * r.delta);
    r.h = (0.5 * s) / std::log(std::exp(1.0) * (1.0 + C_A) * K * ratio);
    r.theta = r.delta * r.h;
    r.c1 = s * (rho - eps_cut) * (rho - eps_cut) / (2.0 * rho * rho * C_A);
    return r;
}

InterpolationSides interpolation_sides(const ScalarField& u0, const ScalarField& uT,
                                       const Mask& omega, double mu, double c) {
    if (!(mu > 0.0 && mu < 1.0)) throw std::invalid_argument("interpolation_sides: mu must lie in (0,1)");
    if (!(c > 0.0)) throw std::invalid_argument("interpolation_sides: c must be positive");
    InterpolationSides s;
    s.lhs = dot(uT, uT);
    double O = 0.0;
    for (std::size_t n = 0; n < uT.v.size(); ++n)
        if (omega[n]) O += uT.v[n] * uT.v[n];
    O *= uT.grid->cell_area();
    double I = dot(u0, u0);
    s.rhs = std::pow(c * O, 1.0 - mu) * std::pow(I, mu);
    return s;
}

ObservationReport observation_certificate(double norm_f0avg_l2, double norm_favgT_omega,
                                          const DataQuality& dq, double T, double eps, double c) {
    if (!dq.defined) throw std::invalid_argument("observation_certificate: data quality undefined");
    ObservationReport rep;
    rep.sigma_value = sigma(dq, T, c);
    double K = 1.0 + std::pow(T, (dq.p - 1.0) / (2.0 * dq.p)) * c_p(dq.p);
    double es = std::exp(rep.sigma_value);
    rep.prefactor = 1.0 - std::pow(eps, 1.0 / (2.0 * dq.p)) * K * dq.m_p * es;
    rep.lhs = rep.prefactor * norm_f0avg_l2;
    rep.rhs = es * norm_favgT_omega;
    rep.vacuous = !(rep.prefactor > 0.0);
    rep.holds = rep.lhs <= rep.rhs;
    rep.eps0 = std::exp(-2.0 * dq.p * (std::log(K) + std::log(dq.m_p) + rep.sigma_value));
    return rep;
}

}  // namespace kinlab
