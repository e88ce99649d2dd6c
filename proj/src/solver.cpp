#include "plap/solver.hpp"

#include <Eigen/SparseLU>
#include <array>
#include <cmath>
#include <fmt/format.h>
#include <numbers>
#include <optional>

#include "plap/errors.hpp"
#include "plap/pointwise.hpp"

namespace plap::solver {

Grid2::Grid2(double Lx_, double Ly_, int mx_, int my_) : Lx(Lx_), Ly(Ly_), mx(mx_), my(my_) {
    require(Lx > 0.0 && Ly > 0.0, "grid needs a positive rectangle");
    require(mx >= 1 && my >= 1, "grid needs at least one interior node per axis");
    h = Lx / (mx + 1);
    const double hy = Ly / (my + 1);
    if (std::abs(h - hy) > 1e-12 * std::max(h, hy))
        throw DomainError(fmt::format("spacing differs between axes: {} vs {}", h, hy));
}

Grid2 Grid2::unit_square(int nodes) {
    require(nodes >= 3, "unit square grid needs at least 3 nodes per side");
    return Grid2(1.0, 1.0, nodes - 2, nodes - 2);
}

GridFunction::GridFunction(const Grid2& g, int N_)
    : grid(g), N(N_), data(static_cast<std::size_t>(N_) * g.nx() * g.ny(), 0.0) {
    require(N >= 1, "grid function needs at least one component");
}

namespace {

constexpr int kMaxN = fields::kMaxDim * 2;

// Gradient on an edge. `normal` is the difference across the edge, `tangent`
// the four-point average difference along it.
struct EdgeGrad {
    std::array<double, kMaxN> gn{};
    std::array<double, kMaxN> gt{};
    double norm = 0.0;
};

// x-edge between (i,j) and (i+1,j).
EdgeGrad x_edge(const GridFunction& u, int i, int j) {
    const double h = u.grid.h;
    EdgeGrad e;
    double s = 0.0;
    for (int a = 0; a < u.N; ++a) {
        e.gn[a] = (u(a, i + 1, j) - u(a, i, j)) / h;
        e.gt[a] = (u(a, i, j + 1) - u(a, i, j - 1) + u(a, i + 1, j + 1) - u(a, i + 1, j - 1)) / (4.0 * h);
        s += e.gn[a] * e.gn[a] + e.gt[a] * e.gt[a];
    }
    e.norm = std::sqrt(s);
    return e;
}

// y-edge between (i,j) and (i,j+1).
EdgeGrad y_edge(const GridFunction& u, int i, int j) {
    const double h = u.grid.h;
    EdgeGrad e;
    double s = 0.0;
    for (int a = 0; a < u.N; ++a) {
        e.gn[a] = (u(a, i, j + 1) - u(a, i, j)) / h;
        e.gt[a] = (u(a, i + 1, j) - u(a, i - 1, j) + u(a, i + 1, j + 1) - u(a, i - 1, j + 1)) / (4.0 * h);
        s += e.gn[a] * e.gn[a] + e.gt[a] * e.gt[a];
    }
    e.norm = std::sqrt(s);
    return e;
}

void check_same_grid(const GridFunction& u, const GridFunction& f) {
    require(u.N == f.N && u.grid.nx() == f.grid.nx() && u.grid.ny() == f.grid.ny(),
            "u and f live on different grids");
}

double trapezoid_weight(const Grid2& g, int i, int j) {
    const double wx = (i == 0 || i == g.nx() - 1) ? 0.5 : 1.0;
    const double wy = (j == 0 || j == g.ny() - 1) ? 0.5 : 1.0;
    return wx * wy * g.h * g.h;
}

// Visits every edge that touches an interior node, in a fixed order.
template <class XEdge, class YEdge>
void for_each_edge(const Grid2& g, XEdge&& xf, YEdge&& yf) {
    for (int i = 0; i + 1 < g.nx(); ++i)
        for (int j = 1; j + 1 < g.ny(); ++j) xf(i, j);
    for (int i = 1; i + 1 < g.nx(); ++i)
        for (int j = 0; j + 1 < g.ny(); ++j) yf(i, j);
}

class JacobianAssembler {
public:
    JacobianAssembler(const Grid2& g, int N) : g_(g), N_(N) {}

    int size() const { return N_ * g_.mx * g_.my; }

    Eigen::SparseMatrix<double> assemble(const GridFunction& u, const orlicz::GrowthCoefficient& a) {
        trip_.clear();
        const double h = g_.h;
        for_each_edge(
            g_,
            [&](int i, int j) {
                const EdgeGrad e = x_edge(u, i, j);
                // stencil: (node, weight on normal diff, weight on tangential diff)
                const std::array<Stencil, 6> st{{{i, j, -1.0 / h, 0.0},
                                                 {i + 1, j, 1.0 / h, 0.0},
                                                 {i, j + 1, 0.0, 0.25 / h},
                                                 {i, j - 1, 0.0, -0.25 / h},
                                                 {i + 1, j + 1, 0.0, 0.25 / h},
                                                 {i + 1, j - 1, 0.0, -0.25 / h}}};
                add_edge(a, e, st, i, j, i + 1, j);
            },
            [&](int i, int j) {
                const EdgeGrad e = y_edge(u, i, j);
                const std::array<Stencil, 6> st{{{i, j, -1.0 / h, 0.0},
                                                 {i, j + 1, 1.0 / h, 0.0},
                                                 {i + 1, j, 0.0, 0.25 / h},
                                                 {i - 1, j, 0.0, -0.25 / h},
                                                 {i + 1, j + 1, 0.0, 0.25 / h},
                                                 {i - 1, j + 1, 0.0, -0.25 / h}}};
                add_edge(a, e, st, i, j, i, j + 1);
            });
        Eigen::SparseMatrix<double> J(size(), size());
        J.setFromTriplets(trip_.begin(), trip_.end());
        return J;
    }

    int unknown(int alpha, int i, int j) const { return (alpha * g_.mx + (i - 1)) * g_.my + (j - 1); }

private:
    struct Stencil {
        int i, j;
        double wn, wt;
    };

    // Edge flux F^a = a(|G|) G_n^a enters r(lo) with +1/h and r(hi) with -1/h.
    // dF^a/du^c = a delta_ac wn + (a'(|G|)/|G|) G_n^a (G_n^c wn + G_t^c wt).
    void add_edge(const orlicz::GrowthCoefficient& a, const EdgeGrad& e, const std::array<Stencil, 6>& st,
                  int li, int lj, int hi_i, int hi_j) {
        const double h = g_.h;
        const double av = a(e.norm);
        const double dt = a.derivative_over_t(e.norm);
        const bool lo_in = !g_.on_boundary(li, lj), hi_in = !g_.on_boundary(hi_i, hi_j);
        for (const Stencil& s : st) {
            if (g_.on_boundary(s.i, s.j)) continue;
            for (int al = 0; al < N_; ++al)
                for (int c = 0; c < N_; ++c) {
                    double d = dt * e.gn[al] * (e.gn[c] * s.wn + e.gt[c] * s.wt);
                    if (al == c) d += av * s.wn;
                    const int col = unknown(c, s.i, s.j);
                    if (lo_in) trip_.emplace_back(unknown(al, li, lj), col, d / h);
                    if (hi_in) trip_.emplace_back(unknown(al, hi_i, hi_j), col, -d / h);
                }
        }
    }

    const Grid2& g_;
    int N_;
    std::vector<Eigen::Triplet<double>> trip_;
};

// d/dx (axis 0) or d/dy (axis 1) of component c at a node; second-order
// one-sided at the ends of the line.
double node_derivative(const GridFunction& v, int c, int i, int j, int axis) {
    const double h = v.grid.h;
    const int n = axis == 0 ? v.grid.nx() : v.grid.ny();
    const int k = axis == 0 ? i : j;
    auto at = [&](int kk) { return axis == 0 ? v(c, kk, j) : v(c, i, kk); };
    if (k == 0) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
    if (k == n - 1) return (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h);
    return (at(k + 1) - at(k - 1)) / (2.0 * h);
}

}  // namespace

GridFunction assemble_residual(const GridFunction& u, const orlicz::GrowthCoefficient& a_eps,
                               const GridFunction& f) {
    check_same_grid(u, f);
    const Grid2& g = u.grid;
    GridFunction r(g, u.N);
    for (int a = 0; a < u.N; ++a)
        for (int i = 1; i + 1 < g.nx(); ++i)
            for (int j = 1; j + 1 < g.ny(); ++j) r(a, i, j) = f(a, i, j);
    auto scatter = [&](const EdgeGrad& e, int li, int lj, int hi_i, int hi_j) {
        const double c = a_eps(e.norm) / g.h;
        const bool lo_in = !g.on_boundary(li, lj), hi_in = !g.on_boundary(hi_i, hi_j);
        for (int a = 0; a < u.N; ++a) {
            const double F = c * e.gn[a];
            if (lo_in) r(a, li, lj) += F;
            if (hi_in) r(a, hi_i, hi_j) -= F;
        }
    };
    for_each_edge(
        g, [&](int i, int j) { scatter(x_edge(u, i, j), i, j, i + 1, j); },
        [&](int i, int j) { scatter(y_edge(u, i, j), i, j, i, j + 1); });
    return r;
}

Eigen::SparseMatrix<double> residual_jacobian(const GridFunction& u, const orlicz::GrowthCoefficient& a_eps) {
    JacobianAssembler jac(u.grid, u.N);
    return jac.assemble(u, a_eps);
}

double residual_norm(const GridFunction& r) {
    const Grid2& g = r.grid;
    double s = 0.0;
    for (int a = 0; a < r.N; ++a)
        for (int i = 1; i + 1 < g.nx(); ++i)
            for (int j = 1; j + 1 < g.ny(); ++j) s += r(a, i, j) * r(a, i, j);
    return std::sqrt(g.h * g.h * s);
}

StageTrace newton(GridFunction& u, const orlicz::GrowthCoefficient& a_eps, const GridFunction& f,
                  double tol, int max_newton, int max_halvings) {
    check_same_grid(u, f);
    const Grid2& g = u.grid;
    for (int a = 0; a < u.N; ++a)
        for (int i = 0; i < g.nx(); ++i)
            for (int j = 0; j < g.ny(); ++j)
                if (g.on_boundary(i, j)) u(a, i, j) = 0.0;

    JacobianAssembler jac(g, u.N);
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    bool analyzed = false;
    GridFunction r = assemble_residual(u, a_eps, f);
    double norm = residual_norm(r);
    StageTrace tr{std::nan(""), 0, norm, {norm}};
    Eigen::VectorXd rhs(jac.size());

    for (int it = 0; norm > tol; ++it) {
        if (it >= max_newton)
            throw ContinuationAbort(fmt::format("no convergence in {} Newton steps (residual {})", max_newton, norm));
        const Eigen::SparseMatrix<double> J = jac.assemble(u, a_eps);
        if (!analyzed) {
            lu.analyzePattern(J);
            analyzed = true;
        }
        lu.factorize(J);
        if (lu.info() != Eigen::Success) throw ContinuationAbort("Jacobian factorization failed");
        for (int a = 0; a < u.N; ++a)
            for (int i = 1; i + 1 < g.nx(); ++i)
                for (int j = 1; j + 1 < g.ny(); ++j) rhs[jac.unknown(a, i, j)] = -r(a, i, j);
        const Eigen::VectorXd du = lu.solve(rhs);
        if (!du.allFinite()) throw ContinuationAbort("Newton direction is not finite");

        double lambda = 1.0;
        for (int halvings = 0;; ++halvings) {
            if (halvings > max_halvings)
                throw NewtonStall(fmt::format("line search failed after {} halvings (residual {})", max_halvings, norm));
            GridFunction trial = u;
            for (int a = 0; a < u.N; ++a)
                for (int i = 1; i + 1 < g.nx(); ++i)
                    for (int j = 1; j + 1 < g.ny(); ++j) trial(a, i, j) += lambda * du[jac.unknown(a, i, j)];
            GridFunction rt = assemble_residual(trial, a_eps, f);
            const double nt = residual_norm(rt);
            if (std::isfinite(nt) && nt < norm) {
                u = std::move(trial);
                r = std::move(rt);
                norm = nt;
                break;
            }
            lambda *= 0.5;
        }
        tr.newton_iters = it + 1;
        tr.history.push_back(norm);
    }
    tr.residual = norm;
    return tr;
}

DiscreteSolution solve(const orlicz::GrowthCoefficient& a, const GridFunction& f, const SolveOptions& opt) {
    std::vector<double> schedule = opt.eps_schedule;
    if (schedule.empty())
        for (int k = 0; k <= opt.k_max; ++k) schedule.push_back(std::ldexp(1.0, -k));
    require(!schedule.empty(), "empty eps schedule");
    GridFunction u(f.grid, f.N);
    std::vector<StageTrace> trace;
    std::optional<orlicz::RegularizedCoefficient> reg;
    for (double eps : schedule) {
        reg.emplace(a, eps);
        try {
            StageTrace st = newton(u, reg->as_coefficient(), f, opt.tol, opt.max_newton, opt.max_halvings);
            st.epsilon = eps;
            trace.push_back(std::move(st));
        } catch (const ContinuationAbort& e) {
            throw ContinuationAbort(fmt::format("stage eps = {}: {}", eps, e.what()));
        }
    }
    GridFunction flux = node_flux(u, reg->as_coefficient());
    const double res = trace.back().residual;
    return DiscreteSolution{f.grid, std::move(u), schedule.back(), std::move(flux), res, std::move(trace)};
}

GridFunction node_gradient(const GridFunction& u) {
    const Grid2& g = u.grid;
    GridFunction G(g, 2 * u.N);
    for (int a = 0; a < u.N; ++a)
        for (int i = 0; i < g.nx(); ++i)
            for (int j = 0; j < g.ny(); ++j) {
                // Along a boundary line u = 0, so the tangential derivative vanishes.
                const bool x_tangent = j == 0 || j == g.ny() - 1;
                const bool y_tangent = i == 0 || i == g.nx() - 1;
                G(2 * a, i, j) = x_tangent ? 0.0 : node_derivative(u, a, i, j, 0);
                G(2 * a + 1, i, j) = y_tangent ? 0.0 : node_derivative(u, a, i, j, 1);
            }
    return G;
}

GridFunction node_flux(const GridFunction& u, const orlicz::GrowthCoefficient& a_eps) {
    GridFunction F = node_gradient(u);
    const Grid2& g = u.grid;
    for (int i = 0; i < g.nx(); ++i)
        for (int j = 0; j < g.ny(); ++j) {
            double s = 0.0;
            for (int c = 0; c < F.N; ++c) s += F(c, i, j) * F(c, i, j);
            const double coef = a_eps(std::sqrt(s));
            for (int c = 0; c < F.N; ++c) F(c, i, j) *= coef;
        }
    return F;
}

namespace {

struct NodeSums {
    double l2_f = 0, l1_f = 0, l2_F = 0, l1_F = 0, l2_dF = 0;
};

template <class Weight>
NodeSums node_sums(const GridFunction& flux, const GridFunction& f, Weight&& weight) {
    const Grid2& g = f.grid;
    NodeSums s;
    for (int i = 0; i < g.nx(); ++i)
        for (int j = 0; j < g.ny(); ++j) {
            const double w = weight(i, j);
            if (w == 0.0) continue;
            double ff = 0.0, FF = 0.0, dF = 0.0;
            for (int a = 0; a < f.N; ++a) ff += f(a, i, j) * f(a, i, j);
            for (int c = 0; c < flux.N; ++c) {
                FF += flux(c, i, j) * flux(c, i, j);
                const double dx = node_derivative(flux, c, i, j, 0);
                const double dy = node_derivative(flux, c, i, j, 1);
                dF += dx * dx + dy * dy;
            }
            s.l2_f += w * ff;
            s.l1_f += w * std::sqrt(ff);
            s.l2_F += w * FF;
            s.l1_F += w * std::sqrt(FF);
            s.l2_dF += w * dF;
        }
    s.l2_f = std::sqrt(s.l2_f);
    s.l2_F = std::sqrt(s.l2_F);
    s.l2_dF = std::sqrt(s.l2_dF);
    return s;
}

double ratio(double num, double den) { return den > 0.0 ? num / den : (num == 0.0 ? 0.0 : INFINITY); }

}  // namespace

NormReport norms(const DiscreteSolution& sol, const GridFunction& f) {
    check_same_grid(sol.u, f);
    const Grid2& g = f.grid;
    const NodeSums s = node_sums(sol.flux, f, [&](int i, int j) { return trapezoid_weight(g, i, j); });
    NormReport r{};
    r.l2_f = s.l2_f;
    r.l1_f = s.l1_f;
    r.l2_flux = s.l2_F;
    r.l1_flux = s.l1_F;
    r.l2_grad_flux = s.l2_dF;
    r.w12_flux = s.l2_F + s.l2_dF;
    r.w12_over_l2f = ratio(r.w12_flux, r.l2_f);
    r.l1flux_over_l1f = ratio(r.l1_flux, r.l1_f);
    return r;
}

LocalEstimate local_estimate_check(const DiscreteSolution& sol, const GridFunction& f, double cx, double cy,
                                   double R) {
    check_same_grid(sol.u, f);
    const Grid2& g = f.grid;
    require(R > 0.0, "ball radius must be positive");
    const double slack = 1e-12;
    if (cx - 2 * R < -slack || cy - 2 * R < -slack || cx + 2 * R > g.Lx + slack || cy + 2 * R > g.Ly + slack)
        throw GeometryError(fmt::format("ball of radius {} around ({}, {}) leaves the rectangle", 2 * R, cx, cy));
    auto ball = [&](double rad) {
        return [&, rad](int i, int j) {
            const double dx = g.x(i) - cx, dy = g.y(j) - cy;
            return dx * dx + dy * dy <= rad * rad * (1.0 + 1e-12) ? g.h * g.h : 0.0;
        };
    };
    int count_R = 0;
    for (int i = 0; i < g.nx(); ++i)
        for (int j = 0; j < g.ny(); ++j)
            if (ball(R)(i, j) > 0.0) ++count_R;
    if (count_R == 0) throw GeometryError("ball B_R contains no grid node");
    const NodeSums in = node_sums(sol.flux, f, ball(R));
    const NodeSums out = node_sums(sol.flux, f, ball(2 * R));
    LocalEstimate e{};
    e.lhs = in.l2_F / R + in.l2_dF;
    e.rhs = out.l2_f + std::pow(R, -2.0) * out.l1_F;
    e.c_fit = ratio(e.lhs, e.rhs);
    e.pass = std::isfinite(e.c_fit);
    return e;
}

GridFunction sample(const fields::SmoothField& u, const Grid2& g) {
    require(u.dim_in() == 2, "grid sampling needs a field on R^2");
    GridFunction v(g, u.dim_out());
    for (int i = 0; i < g.nx(); ++i)
        for (int j = 0; j < g.ny(); ++j) {
            const fields::Jet3 J = fields::jet(u, Eigen::Vector2d(g.x(i), g.y(j)));
            for (int a = 0; a < v.N; ++a) v(a, i, j) = J.value[a];
        }
    return v;
}

GridFunction manufactured_rhs(const orlicz::GrowthCoefficient& a, const fields::SmoothField& u, const Grid2& g) {
    require(u.dim_in() == 2, "manufactured right-hand side needs a field on R^2");
    GridFunction f(g, u.dim_out());
    for (int i = 0; i < g.nx(); ++i)
        for (int j = 0; j < g.ny(); ++j) {
            const Eigen::VectorXd div = pointwise::flux_divergence(a, u, Eigen::Vector2d(g.x(i), g.y(j)));
            for (int al = 0; al < f.N; ++al) f(al, i, j) = -div[al];
        }
    return f;
}

GridFunction named_rhs(const std::string& name, const Grid2& g, int N) {
    using std::numbers::pi;
    GridFunction f(g, N);
    for (int i = 0; i < g.nx(); ++i)
        for (int j = 0; j < g.ny(); ++j) {
            const double x = g.x(i), y = g.y(j);
            const double ss = std::sin(pi * x) * std::sin(pi * y);
            if (name == "sinsin") {
                f(0, i, j) = 2.0 * pi * pi * ss;
            } else if (name == "constant") {
                for (int a = 0; a < N; ++a) f(a, i, j) = 1.0;
            } else if (name == "sin_xy") {
                f(0, i, j) = ss;
                if (N > 1) f(1, i, j) = x * y;
            } else {
                throw DomainError(fmt::format("unknown right-hand side '{}'", name));
            }
        }
    return f;
}

double energy(const DiscreteSolution& sol, const orlicz::YoungPair& young) {
    const GridFunction G = node_gradient(sol.u);
    const Grid2& g = sol.grid;
    double e = 0.0;
    for (int i = 0; i < g.nx(); ++i)
        for (int j = 0; j < g.ny(); ++j) {
            double s = 0.0;
            for (int c = 0; c < G.N; ++c) s += G(c, i, j) * G(c, i, j);
            e += trapezoid_weight(g, i, j) * young.B(std::sqrt(s));
        }
    return e;
}

Pairing energy_pairing(const GridFunction& u, const orlicz::GrowthCoefficient& a_eps, const GridFunction& f) {
    check_same_grid(u, f);
    const Grid2& g = u.grid;
    const double h2 = g.h * g.h;
    Pairing p{0.0, 0.0};
    for (int a = 0; a < u.N; ++a)
        for (int i = 1; i + 1 < g.nx(); ++i)
            for (int j = 1; j + 1 < g.ny(); ++j) p.source += h2 * f(a, i, j) * u(a, i, j);
    auto add = [&](const EdgeGrad& e) {
        const double c = a_eps(e.norm);
        for (int a = 0; a < u.N; ++a) p.flux += h2 * c * e.gn[a] * e.gn[a];
    };
    for_each_edge(
        g, [&](int i, int j) { add(x_edge(u, i, j)); }, [&](int i, int j) { add(y_edge(u, i, j)); });
    return p;
}

SecondDifferences second_differences(const GridFunction& u) {
    const Grid2& g = u.grid;
    const double h2 = g.h * g.h;
    double hs = 0.0, ls = 0.0;
    for (int a = 0; a < u.N; ++a)
        for (int i = 1; i + 1 < g.nx(); ++i)
            for (int j = 1; j + 1 < g.ny(); ++j) {
                const double uxx = (u(a, i + 1, j) - 2.0 * u(a, i, j) + u(a, i - 1, j)) / h2;
                const double uyy = (u(a, i, j + 1) - 2.0 * u(a, i, j) + u(a, i, j - 1)) / h2;
                const double uxy =
                    (u(a, i + 1, j + 1) - u(a, i + 1, j - 1) - u(a, i - 1, j + 1) + u(a, i - 1, j - 1)) / (4.0 * h2);
                hs += h2 * (uxx * uxx + 2.0 * uxy * uxy + uyy * uyy);
                ls += h2 * (uxx + uyy) * (uxx + uyy);
            }
    return {std::sqrt(hs), std::sqrt(ls)};
}

}  // namespace plap::solver
