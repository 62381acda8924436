#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kinlab/grid.hpp"
#include "kinlab/scattering.hpp"

namespace kinlab {

enum class Splitting { Lie, Strang };

struct KineticRunConfig {
    double T = 1.0;
    double cfl = 0.9;                  // fraction of the upwind stability limit
    Splitting splitting = Splitting::Lie;
    ScatteringKind kind = ScatteringKind::Neutron;
    int snapshot_count = 16;           // <f> snapshots at k*T/snapshot_count
    bool record_trace = false;         // keep the full boundary trace history
    int threads = 1;
    std::optional<std::string> dump_prefix;  // binary state dumps at snapshots
};

/// Everything a run leaves behind. Scalar series are indexed per step with
/// entry 0 at t=0. The energy is ||f||^2 in L^2(Omega x S^1) with the
/// average velocity measure; it never increases (absorbing boundary plus
/// dissipative scattering).
struct KineticRunRecord {
    KineticState final_state;
    std::vector<double> snapshot_times;
    std::vector<ScalarField> snapshots;            // velocity averages
    std::vector<double> energy;                    // ||f||_{L^2}^2 per step
    std::vector<double> anisotropy;                // ||f - <f>||^2 per step (post-relaxation)
    std::vector<double> mass;                      // integral of <f> per step
    std::vector<double> outflow_flux;              // conservative boundary flux per step
    double anisotropy_time_integral = 0.0;         // certified time integral of ||f - <f>||^2
    double dt = 0.0;
    int steps = 0;
    BoundaryTraceRecord trace;                     // populated when record_trace
};

/// Largest stable dt for the explicit upwind sweep: the update must stay a
/// convex combination, i.e. dt * (|v1|/dx + |v2|/dy) <= eps over all
/// ordinates.
double transport_stability_limit(const KineticState& f);

/// First-order upwind update of every ordinate with advection speed v/eps
/// and zero inflow (absorbing boundary). Refuses dt beyond the stability
/// limit, reporting the largest admissible step. If `out_flux` is given it
/// receives the conservative outflow rate so that
///   d(integral of <f>)/dt + out_flux/eps = 0
/// holds exactly for the discrete update. If `trace` is given, the pre-step
/// boundary values of every (face, ordinate) pair are appended.
KineticState transport_step(const KineticState& f, double dt, int threads = 1,
                            double* out_flux = nullptr, BoundaryTraceRecord* trace = nullptr);

/// <v f> componentwise.
std::pair<ScalarField, ScalarField> compute_first_moment(const KineticState& f);

/// Alternates transport and relaxation substeps (Lie) or
/// half-transport / relaxation / half-transport (Strang) until T.
/// dt is the largest CFL-admissible divisor of the snapshot interval.
KineticRunRecord run_kinetic(const KineticRunConfig& config, const KineticState& f0,
                             const OpacityField& a);

/// Binary state dump: five little-endian int32 (nx, ny, nv, step, flags)
/// followed by nx*ny*nv float64 values, ordinate-major, each plane row-major.
/// flags: bit0 = Strang splitting, bit1 = Fokker-Planck scattering.
void dump_state(const std::string& path, const KineticState& f, int step, int flags);
KineticState load_state(const std::string& path, const SpatialGrid& g, const VelocityQuadrature& q,
                        int* step = nullptr, int* flags = nullptr);

}  // namespace kinlab
