#pragma once

#include "kinlab/grid.hpp"

namespace kinlab {

enum class ScatteringKind { Neutron, FokkerPlanck };

const char* to_string(ScatteringKind k);

/// S f. Neutron: f - <f>. Fokker-Planck (d = 2): minus the periodic centered
/// second difference in theta divided by d-1, i.e.
///   -(f_{j+1} - 2 f_j + f_{j-1}) / ((d-1) * dtheta^2).
KineticState apply_scattering(ScatteringKind kind, const KineticState& f);

/// Advances d_t f = -(a/eps^2) S f over dt with x frozen.
/// Neutron: exact relaxation f <- <f> + (f - <f>) exp(-a dt / eps^2).
/// Fokker-Planck: backward Euler (I + (a dt/eps^2) S_h) f_new = f, solved by
/// cyclic tridiagonal elimination per spatial node.
/// Both paths conserve <f> per node and contract the anisotropic part.
KineticState relaxation_step(ScatteringKind kind, const KineticState& f, const OpacityField& a,
                             double dt, int threads = 1);

/// Discrete Dirichlet form sum_x sum_j w_j f (S f) dx dy; nonnegative for
/// both kinds.
double scattering_dirichlet_form(ScatteringKind kind, const KineticState& f);

/// Eigenvalue of the discrete Fokker-Planck operator on the circle for the
/// mode cos(k*theta): (2 - 2 cos(k dtheta)) / ((d-1) * dtheta^2).
double fokker_planck_mode_eigenvalue(const VelocityQuadrature& q, int k);

}  // namespace kinlab
