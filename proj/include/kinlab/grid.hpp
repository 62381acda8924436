#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace kinlab {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

enum class Side : int { Left = 0, Right = 1, Bottom = 2, Top = 3 };

/// One boundary face of the rectangle: the adjacent interior node, the
/// outward unit normal and the quadrature length. Face lengths sum to the
/// exact perimeter 2(lx+ly).
struct BoundaryFace {
    int node = 0;
    Vec2 normal;
    double length = 0.0;
    Side side = Side::Left;
};

/// Uniform node-centered grid on (0,lx)x(0,ly) with homogeneous-Dirichlet
/// ghost values on the boundary. Interior nodes sit at (i*dx, j*dy),
/// i=1..nx, j=1..ny, with dx = lx/(nx+1).
class SpatialGrid {
public:
    SpatialGrid(double lx, double ly, int nx, int ny);

    double lx() const { return lx_; }
    double ly() const { return ly_; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }
    double dx() const { return dx_; }
    double dy() const { return dy_; }
    int num_nodes() const { return nx_ * ny_; }
    double cell_area() const { return dx_ * dy_; }
    double perimeter() const { return 2.0 * (lx_ + ly_); }

    /// Row-major node index; iy is the row. Reductions iterate iy, then ix.
    int index(int ix, int iy) const { return iy * nx_ + ix; }
    double x(int ix) const { return (ix + 1) * dx_; }
    double y(int iy) const { return (iy + 1) * dy_; }
    Vec2 node(int ix, int iy) const { return {x(ix), y(iy)}; }

    const std::vector<BoundaryFace>& boundary_faces() const { return faces_; }

private:
    double lx_, ly_;
    int nx_, ny_;
    double dx_, dy_;
    std::vector<BoundaryFace> faces_;
};

/// Equispaced ordinates on the unit circle, theta_j = 2*pi*j/nv, with uniform
/// weights w_j = 2*pi/nv. The dimension d = 2 is stored explicitly so the
/// constants 1/d, d-1 and |S^{d-1}| appear symbolically in formulas.
class VelocityQuadrature {
public:
    explicit VelocityQuadrature(int nv);

    int nv() const { return nv_; }
    int dimension() const { return 2; }
    double sphere_measure() const { return two_pi_; }
    double weight() const { return weight_; }
    double dtheta() const { return weight_; }

    double angle(int j) const { return angles_[j]; }
    double vx(int j) const { return vx_[j]; }
    double vy(int j) const { return vy_[j]; }

    /// Discrete <1>, <v>, <v (x) v> (average over the circle).
    double moment0() const;
    Vec2 moment1() const;
    std::array<double, 4> moment2() const;

private:
    int nv_;
    double two_pi_;
    double weight_;
    std::vector<double> angles_, vx_, vy_;
};

/// Real field on the interior nodes; implicitly zero on the boundary.
struct ScalarField {
    const SpatialGrid* grid = nullptr;
    std::vector<double> v;

    ScalarField() = default;
    explicit ScalarField(const SpatialGrid& g) : grid(&g), v(g.num_nodes(), 0.0) {}
    double& operator()(int ix, int iy) { return v[grid->index(ix, iy)]; }
    double operator()(int ix, int iy) const { return v[grid->index(ix, iy)]; }
    int size() const { return static_cast<int>(v.size()); }
};

/// Kinetic sample array f(x_n, theta_j), ordinate-major: value(j, n).
struct KineticState {
    const SpatialGrid* grid = nullptr;
    const VelocityQuadrature* quad = nullptr;
    std::vector<double> v;
    double epsilon = 1.0;
    double time = 0.0;

    KineticState() = default;
    KineticState(const SpatialGrid& g, const VelocityQuadrature& q, double eps);
    double& value(int j, int n) { return v[static_cast<std::size_t>(j) * grid->num_nodes() + n]; }
    double value(int j, int n) const { return v[static_cast<std::size_t>(j) * grid->num_nodes() + n]; }
    double* plane(int j) { return v.data() + static_cast<std::size_t>(j) * grid->num_nodes(); }
    const double* plane(int j) const { return v.data() + static_cast<std::size_t>(j) * grid->num_nodes(); }
};

/// Scattering opacity a(x) with recorded bounds 0 < c_min <= a <= c_max.
/// Values are sampled at interior nodes and at the boundary-node positions
/// of each edge (needed for harmonic face averages next to the boundary).
struct OpacityField {
    std::vector<double> node;                  // interior nodes
    std::vector<double> left, right;           // a(0, y_j), a(lx, y_j), size ny
    std::vector<double> bottom, top;           // a(x_i, 0), a(x_i, ly), size nx
    double c_min = 0.0;
    double c_max = 0.0;
};

template <class F>
OpacityField make_opacity(const SpatialGrid& g, F&& a) {
    OpacityField o;
    o.node.resize(g.num_nodes());
    o.left.resize(g.ny());
    o.right.resize(g.ny());
    o.bottom.resize(g.nx());
    o.top.resize(g.nx());
    double lo = 0.0, hi = 0.0;
    bool first = true;
    auto put = [&](double& slot, double xx, double yy) {
        double val = a(xx, yy);
        slot = val;
        if (first) { lo = hi = val; first = false; }
        if (val < lo) lo = val;
        if (val > hi) hi = val;
    };
    for (int iy = 0; iy < g.ny(); ++iy)
        for (int ix = 0; ix < g.nx(); ++ix) put(o.node[g.index(ix, iy)], g.x(ix), g.y(iy));
    for (int iy = 0; iy < g.ny(); ++iy) {
        put(o.left[iy], 0.0, g.y(iy));
        put(o.right[iy], g.lx(), g.y(iy));
    }
    for (int ix = 0; ix < g.nx(); ++ix) {
        put(o.bottom[ix], g.x(ix), 0.0);
        put(o.top[ix], g.x(ix), g.ly());
    }
    o.c_min = lo;
    o.c_max = hi;
    return o;
}

OpacityField constant_opacity(const SpatialGrid& g, double value);
void validate(const OpacityField& o);

using Mask = std::vector<std::uint8_t>;

/// Subdomain selector: an axis-aligned rectangle or a ball.
struct SubdomainSpec {
    enum class Kind { Rectangle, Ball } kind = Kind::Ball;
    // rectangle: [x0,x1] x [y0,y1]
    double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;
    // ball
    Vec2 center;
    double radius = 0.0;

    static SubdomainSpec rectangle(double x0, double x1, double y0, double y1);
    static SubdomainSpec ball(Vec2 center, double radius);
};

/// Node-center inclusion mask; throws if no node is selected.
Mask subdomain_mask(const SpatialGrid& g, const SubdomainSpec& spec);

/// L^p norm with cell-volume quadrature dx*dy. Kinetic states use the
/// average (unit-mass) velocity measure w_j/|S^1|, so isotropic states have
/// the same norm as their spatial profile. exponent < 1 is rejected.
double lp_norm(const ScalarField& u, double exponent, const Mask* mask = nullptr);
double lp_norm(const KineticState& f, double exponent, const Mask* mask = nullptr);

/// (1/|S^1|) sum_j w_j f(., theta_j)
ScalarField velocity_average(const KineticState& f);

/// L^2(Omega) inner product sum u*w*dx*dy.
double dot(const ScalarField& u, const ScalarField& w);
double l2_norm(const ScalarField& u);

/// Boundary trace history of a kinetic run: for each recorded transport
/// substep, the upwind face value of f for every (face, ordinate) pair.
struct BoundaryTraceRecord {
    const SpatialGrid* grid = nullptr;
    const VelocityQuadrature* quad = nullptr;
    std::vector<double> dts;       // substep lengths
    std::vector<double> values;    // [substep][face][ordinate]
    double total_time = 0.0;

    std::size_t steps() const { return dts.size(); }
    double value(std::size_t step, std::size_t face, int j) const;
};

/// Cumulative boundary functional over the outgoing set {v . n >= 0}:
///   sum over substeps, faces, ordinates of
///   (v.n if weighted else 1) * |f|^eta * face_length * w_j * dt.
/// eta < 2 is rejected. The velocity measure here is the physical one
/// (weights summing to 2*pi).
double boundary_outflow_integral(const BoundaryTraceRecord& rec, double eta, bool weighted);

/// (1 - s^2)^power with s = |x - center| / R, zero outside; C^2 for
/// power >= 3. The default is the standard compactly supported C^2 bump
/// used for well-prepared initial data.
ScalarField radial_bump(const SpatialGrid& g, Vec2 center, double R, int power = 3);

/// C^2 plateau cutoff: 1 for s <= inner, quintic smoothstep decay to 0 at
/// s = 1, with s = |x - center| / R.
ScalarField plateau_cutoff(const SpatialGrid& g, Vec2 center, double R, double inner = 0.5);

}  // namespace kinlab
