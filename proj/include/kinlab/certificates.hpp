#pragma once

#include <string>
#include <vector>

#include "kinlab/diffusion.hpp"
#include "kinlab/grid.hpp"

namespace kinlab {

/// C_p = ((p-1)/(p-2))^{(p-1)/2p} * (1/p)^{1/2p}, defined for p > 2.
double c_p(double p);

/// Data-quality ratios of the initial state: the shape ratio
/// m_p = ||f0||_{L^{2p}} / ||<f0>||_{L^2} and the frequency
/// f_freq = (||<f0>||_{L^2} / ||<f0>||_{H^-1})^2. Undefined when <f0> = 0.
struct DataQuality {
    double m_p = 0.0;
    double f_freq = 0.0;
    double p = 0.0;
    bool defined = false;
};

DataQuality data_quality(const KineticState& f0, const EllipticOperator& op, double p);

/// sigma = c (1 + 1/T + T * f_freq)
double sigma(const DataQuality& dq, double T, double c);

/// Backward Gaussian weight G_lambda(x,t) = (T-t+lambda)^{-n/2}
/// exp(-d^2(x,x0) / (4 (T-t+lambda))) with the scaled Euclidean distance
/// d = |x-x0| / sqrt(kappa), so that (kappa I) grad d . grad d = 1.
ScalarField gaussian_weight(const SpatialGrid& g, Vec2 x0, double lambda, double t, double T,
                            double kappa);

/// Gaussian-weighted Rayleigh quotient along a heat run:
/// N_lambda(t) = int kappa |grad z|^2 G_lambda / int z^2 G_lambda, with the
/// gradient term summed over faces (weights at face midpoints) so it matches
/// the elliptic stencil. y(t) is the weighted mass (the denominator).
struct FrequencyTrace {
    std::vector<double> times;
    std::vector<double> N;
    std::vector<double> y;
    double lambda = 0.0;
    Vec2 x0;
};

FrequencyTrace frequency_function(const SpatialGrid& g, const std::vector<double>& times,
                                  const std::vector<ScalarField>& snapshots, Vec2 x0, double lambda,
                                  double kappa, double T);

/// Sampled ODE system for the comparison lemma: positive y, N on [0,T] with
///   |y'/2 + N y| <= (C0/(T-t+lambda) + C1) y + F1 y
///   N' <= ((1+C0)/(T-t+lambda) + C1) N + F2.
struct OdeSystemSample {
    std::vector<double> times;   // uniform, times.front() = 0, times.back() = T
    std::vector<double> y, N, F1, F2;
    double C0 = 0.0, C1 = 0.0;
    double lambda = 1.0;
    double T = 1.0;
};

struct OdeLemmaReport {
    bool hypotheses_ok = false;
    int first_violation = -1;
    std::string violation_what;
    double M = 0.0;
    double D = 0.0;
    double log_lhs = 0.0;  // (1+M) log y(t2)
    double log_rhs = 0.0;  // log y(t3) + M log y(t1) + 4D + 2 C0 (1+M) log((T-t1+l)/(T-t3+l))
    double margin = 0.0;   // log_rhs - log_lhs
};

/// Verifies the hypotheses at every sample (derivatives by 4th-order
/// differences) and evaluates both sides of the conclusion
///   y(t2)^{1+M} <= y(t3) y(t1)^M e^{4D} ((T-t1+l)/(T-t3+l))^{2C0(1+M)}
/// with M, D computed by composite Simpson quadrature. t1 < t2 < t3 must be
/// sample points.
OdeLemmaReport check_ode_lemma(const OdeSystemSample& sys, double t1, double t2, double t3,
                               int quad_nodes = 257);

/// Exact M_ell (quadrature) together with the closed-form bound
///   e^{C1 T} (ell+1)^{C0} / (1 - (2/3)^{C0})   for C0 > 0,
///   e^{C1 T} ln(ell+1) / ln 2                  for C0 = 0,
/// for the window t3 = T, t2 = T - ell*lambda, t1 = T - 2*ell*lambda.
/// Requires ell > 1 and ell*lambda < T/4.
struct MellResult {
    double exact = 0.0;
    double bound = 0.0;
};

MellResult m_ell_bound(double ell, double lambda, double C0, double C1, double T,
                       int quad_nodes = 257);

/// Explicit constants of the localization lemma: given the decay ratio
/// Q = int |u(0)|^2 / int_{B_{rho-2 eps}} |u(T)|^2 >= 1, returns
///   delta = eps (2 rho - 3 eps) / (2 rho^2 C_A),
///   h     = (eps (2 rho - 3 eps)/2) / ln(e (1+C_A) K Q),
///   theta = delta h  (always <= min(1, T/2)),
///   c1    = eps (2 rho - 3 eps) (rho - eps)^2 / (2 rho^2 C_A),
/// with K = exp(eps (2 rho - 3 eps)/2 (2/T + 1) delta). The conclusion to
/// test downstream is int |u(0)|^2 / int_{B_rho} |u(t)|^2 <= e^{c1/theta}
/// for t in [T - theta, T].
struct SmallnessResult {
    double theta = 0.0;
    double h = 0.0;
    double delta = 0.0;
    double c1 = 0.0;
};

SmallnessResult smallness_theta(double rho, double eps_cut, double C_A, double T, double ratio);

/// Both sides of int |u(T)|^2 <= (c int_omega |u(T)|^2)^{1-mu} (int |u0|^2)^mu.
struct InterpolationSides {
    double lhs = 0.0;
    double rhs = 0.0;
};

InterpolationSides interpolation_sides(const ScalarField& u0, const ScalarField& uT,
                                       const Mask& omega, double mu, double c);

/// The end-to-end observation inequality
///   (1 - eps^{1/2p} (1 + T^{(p-1)/2p} C_p) m_p e^sigma) ||<f0>||_{L^2}
///     <= e^sigma ||<f>(T)||_{L^2(omega)}
/// evaluated with a supplied constant c inside sigma. Also reports the
/// threshold eps0 below which the left prefactor turns positive.
struct ObservationReport {
    double prefactor = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    bool vacuous = false;
    bool holds = false;
    double eps0 = 0.0;
    double sigma_value = 0.0;
};

ObservationReport observation_certificate(double norm_f0avg_l2, double norm_favgT_omega,
                                          const DataQuality& dq, double T, double eps, double c);

}  // namespace kinlab
