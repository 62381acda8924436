#include "kinlab/grid.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kinlab {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

SpatialGrid::SpatialGrid(double lx, double ly, int nx, int ny)
    : lx_(lx), ly_(ly), nx_(nx), ny_(ny) {
    if (lx <= 0.0 || ly <= 0.0) throw std::invalid_argument("SpatialGrid: domain lengths must be positive");
    if (nx < 1 || ny < 1) throw std::invalid_argument("SpatialGrid: need at least one interior node per axis");
    dx_ = lx_ / (nx_ + 1);
    dy_ = ly_ / (ny_ + 1);

    // Face lengths are the 1-D Voronoi cells of the node coordinates clipped
    // to the edge, so each edge's lengths sum to exactly lx (or ly): the two
    // end faces absorb the extra half spacing.
    auto span_x = [&](int ix) { return (ix == 0 || ix == nx_ - 1) ? 1.5 * dx_ : dx_; };
    auto span_y = [&](int iy) { return (iy == 0 || iy == ny_ - 1) ? 1.5 * dy_ : dy_; };
    if (nx_ == 1) span_x = [&](int) { return lx_; };
    if (ny_ == 1) span_y = [&](int) { return ly_; };

    for (int iy = 0; iy < ny_; ++iy) {
        faces_.push_back({index(0, iy), {-1.0, 0.0}, span_y(iy), Side::Left});
        faces_.push_back({index(nx_ - 1, iy), {1.0, 0.0}, span_y(iy), Side::Right});
    }
    for (int ix = 0; ix < nx_; ++ix) {
        faces_.push_back({index(ix, 0), {0.0, -1.0}, span_x(ix), Side::Bottom});
        faces_.push_back({index(ix, ny_ - 1), {0.0, 1.0}, span_x(ix), Side::Top});
    }
}

VelocityQuadrature::VelocityQuadrature(int nv) : nv_(nv) {
    if (nv < 4) throw std::invalid_argument("VelocityQuadrature: nv must be >= 4");
    two_pi_ = kTwoPi;
    weight_ = kTwoPi / nv;
    angles_.resize(nv);
    vx_.resize(nv);
    vy_.resize(nv);
    for (int j = 0; j < nv; ++j) angles_[j] = (kTwoPi * j) / nv;

    // Build the direction table with exact reflection symmetry so that the
    // discrete odd moments cancel to the last bit.
    if (nv % 4 == 0) {
        int q = nv / 4;
        for (int j = 0; j <= q; ++j) {
            vx_[j] = std::cos(angles_[j]);
            vy_[j] = std::sin(angles_[j]);
        }
        vx_[0] = 1.0; vy_[0] = 0.0;
        vx_[q] = 0.0; vy_[q] = 1.0;
        for (int j = q + 1; j <= 2 * q; ++j) {
            vx_[j] = -vx_[2 * q - j];
            vy_[j] = vy_[2 * q - j];
        }
        for (int j = 2 * q + 1; j < nv; ++j) {
            vx_[j] = -vx_[j - 2 * q];
            vy_[j] = -vy_[j - 2 * q];
        }
    } else if (nv % 2 == 0) {
        int h = nv / 2;
        for (int j = 0; j < h; ++j) {
            vx_[j] = std::cos(angles_[j]);
            vy_[j] = std::sin(angles_[j]);
        }
        vx_[0] = 1.0; vy_[0] = 0.0;
        for (int j = h; j < nv; ++j) {
            vx_[j] = -vx_[j - h];
            vy_[j] = -vy_[j - h];
        }
    } else {
        for (int j = 0; j < nv; ++j) {
            vx_[j] = std::cos(angles_[j]);
            vy_[j] = std::sin(angles_[j]);
        }
    }
}

double VelocityQuadrature::moment0() const {
    double s = 0.0;
    for (int j = 0; j < nv_; ++j) s += weight_;
    return s / two_pi_;
}

Vec2 VelocityQuadrature::moment1() const {
    double sx = 0.0, sy = 0.0;
    for (int j = 0; j < nv_; ++j) {
        sx += weight_ * vx_[j];
        sy += weight_ * vy_[j];
    }
    return {sx / two_pi_, sy / two_pi_};
}

std::array<double, 4> VelocityQuadrature::moment2() const {
    std::array<double, 4> m{0.0, 0.0, 0.0, 0.0};
    for (int j = 0; j < nv_; ++j) {
        m[0] += weight_ * vx_[j] * vx_[j];
        m[1] += weight_ * vx_[j] * vy_[j];
        m[2] += weight_ * vy_[j] * vx_[j];
        m[3] += weight_ * vy_[j] * vy_[j];
    }
    for (double& e : m) e /= two_pi_;
    return m;
}

KineticState::KineticState(const SpatialGrid& g, const VelocityQuadrature& q, double eps)
    : grid(&g), quad(&q), v(static_cast<std::size_t>(g.num_nodes()) * q.nv(), 0.0), epsilon(eps) {
    if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("KineticState: epsilon must lie in (0,1]");
}

OpacityField constant_opacity(const SpatialGrid& g, double value) {
    return make_opacity(g, [value](double, double) { return value; });
}

void validate(const OpacityField& o) {
    if (!(o.c_min > 0.0)) throw std::invalid_argument("OpacityField: opacity must be strictly positive");
    if (!(o.c_min <= o.c_max)) throw std::invalid_argument("OpacityField: inconsistent bounds");
}

SubdomainSpec SubdomainSpec::rectangle(double x0, double x1, double y0, double y1) {
    SubdomainSpec s;
    s.kind = Kind::Rectangle;
    s.x0 = x0; s.x1 = x1; s.y0 = y0; s.y1 = y1;
    return s;
}

SubdomainSpec SubdomainSpec::ball(Vec2 center, double radius) {
    SubdomainSpec s;
    s.kind = Kind::Ball;
    s.center = center;
    s.radius = radius;
    return s;
}

Mask subdomain_mask(const SpatialGrid& g, const SubdomainSpec& spec) {
    Mask m(g.num_nodes(), 0);
    int count = 0;
    for (int iy = 0; iy < g.ny(); ++iy) {
        for (int ix = 0; ix < g.nx(); ++ix) {
            double px = g.x(ix), py = g.y(iy);
            bool in = false;
            if (spec.kind == SubdomainSpec::Kind::Rectangle) {
                in = px >= spec.x0 && px <= spec.x1 && py >= spec.y0 && py <= spec.y1;
            } else {
                double rx = px - spec.center.x, ry = py - spec.center.y;
                in = rx * rx + ry * ry < spec.radius * spec.radius;
            }
            if (in) {
                m[g.index(ix, iy)] = 1;
                ++count;
            }
        }
    }
    if (count == 0) throw std::invalid_argument("subdomain_mask: subdomain selects no interior node");
    return m;
}

double lp_norm(const ScalarField& u, double exponent, const Mask* mask) {
    if (!(exponent >= 1.0)) throw std::invalid_argument("lp_norm: exponent must be >= 1");
    const double h = u.grid->cell_area();
    double s = 0.0;
    for (std::size_t n = 0; n < u.v.size(); ++n) {
        if (mask && !(*mask)[n]) continue;
        s += std::pow(std::abs(u.v[n]), exponent) * h;
    }
    return std::pow(s, 1.0 / exponent);
}

double lp_norm(const KineticState& f, double exponent, const Mask* mask) {
    if (!(exponent >= 1.0)) throw std::invalid_argument("lp_norm: exponent must be >= 1");
    const int nn = f.grid->num_nodes();
    const double h = f.grid->cell_area();
    const double wn = f.quad->weight() / f.quad->sphere_measure();
    double s = 0.0;
    for (int j = 0; j < f.quad->nv(); ++j) {
        const double* p = f.plane(j);
        double sj = 0.0;
        for (int n = 0; n < nn; ++n) {
            if (mask && !(*mask)[n]) continue;
            sj += std::pow(std::abs(p[n]), exponent);
        }
        s += sj * wn * h;
    }
    return std::pow(s, 1.0 / exponent);
}

ScalarField velocity_average(const KineticState& f) {
    ScalarField out(*f.grid);
    const int nn = f.grid->num_nodes();
    const int nv = f.quad->nv();
    for (int j = 0; j < nv; ++j) {
        const double* p = f.plane(j);
        for (int n = 0; n < nn; ++n) out.v[n] += p[n];
    }
    for (int n = 0; n < nn; ++n) out.v[n] /= nv;
    return out;
}

double dot(const ScalarField& u, const ScalarField& w) {
    double s = 0.0;
    for (std::size_t n = 0; n < u.v.size(); ++n) s += u.v[n] * w.v[n];
    return s * u.grid->cell_area();
}

double l2_norm(const ScalarField& u) { return std::sqrt(dot(u, u)); }

double BoundaryTraceRecord::value(std::size_t step, std::size_t face, int j) const {
    const std::size_t nf = grid->boundary_faces().size();
    const std::size_t nv = static_cast<std::size_t>(quad->nv());
    return values[(step * nf + face) * nv + static_cast<std::size_t>(j)];
}

ScalarField radial_bump(const SpatialGrid& g, Vec2 center, double R, int power) {
    ScalarField f(g);
    for (int iy = 0; iy < g.ny(); ++iy) {
        for (int ix = 0; ix < g.nx(); ++ix) {
            double rx = g.x(ix) - center.x, ry = g.y(iy) - center.y;
            double s2 = (rx * rx + ry * ry) / (R * R);
            if (s2 < 1.0) f(ix, iy) = std::pow(1.0 - s2, power);
        }
    }
    return f;
}

ScalarField plateau_cutoff(const SpatialGrid& g, Vec2 center, double R, double inner) {
    ScalarField f(g);
    for (int iy = 0; iy < g.ny(); ++iy) {
        for (int ix = 0; ix < g.nx(); ++ix) {
            double rx = g.x(ix) - center.x, ry = g.y(iy) - center.y;
            double s = std::sqrt(rx * rx + ry * ry) / R;
            if (s <= inner) {
                f(ix, iy) = 1.0;
            } else if (s < 1.0) {
                double u = (s - inner) / (1.0 - inner);
                f(ix, iy) = 1.0 - (10.0 - (15.0 - 6.0 * u) * u) * u * u * u;
            }
        }
    }
    return f;
}

double boundary_outflow_integral(const BoundaryTraceRecord& rec, double eta, bool weighted) {
    if (!(eta >= 2.0)) throw std::invalid_argument("boundary_outflow_integral: eta must be >= 2");
    const auto& faces = rec.grid->boundary_faces();
    const auto& q = *rec.quad;
    const std::size_t nf = faces.size();
    const int nv = q.nv();
    double total = 0.0;
    for (std::size_t s = 0; s < rec.dts.size(); ++s) {
        double step_sum = 0.0;
        for (std::size_t fi = 0; fi < nf; ++fi) {
            const auto& face = faces[fi];
            double fsum = 0.0;
            for (int j = 0; j < nv; ++j) {
                double vn = q.vx(j) * face.normal.x + q.vy(j) * face.normal.y;
                if (vn < 0.0) continue;  // outgoing set {v.n >= 0}
                double val = std::pow(std::abs(rec.value(s, fi, j)), eta);
                fsum += (weighted ? vn : 1.0) * val * q.weight();
            }
            step_sum += fsum * face.length;
        }
        total += step_sum * rec.dts[s];
    }
    return total;
}

}  // namespace kinlab
