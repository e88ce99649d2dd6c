#pragma once

// Finite-difference solver for -div(a_eps(|grad u|) grad u) = f on a
// rectangle with u = 0 on the boundary, plus discrete norms of the flux.

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <string>
#include <vector>

#include "plap/fields.hpp"
#include "plap/orlicz.hpp"

namespace plap::solver {

/// Nodes x_i = i h, i = 0..mx+1 (likewise y); h = Lx/(mx+1) = Ly/(my+1).
struct Grid2 {
    double Lx, Ly;
    int mx, my;  // interior nodes per axis
    double h;

    Grid2(double Lx, double Ly, int mx, int my);
    /// Unit square with `nodes` nodes per side including the boundary.
    static Grid2 unit_square(int nodes);

    int nx() const { return mx + 2; }
    int ny() const { return my + 2; }
    double x(int i) const { return i * h; }
    double y(int j) const { return j * h; }
    bool on_boundary(int i, int j) const { return i == 0 || j == 0 || i == nx() - 1 || j == ny() - 1; }
};

/// N components of node values, stored as data[(alpha nx + i) ny + j].
struct GridFunction {
    Grid2 grid;
    int N;
    std::vector<double> data;

    GridFunction(const Grid2& g, int N);

    double& operator()(int alpha, int i, int j) { return data[index(alpha, i, j)]; }
    double operator()(int alpha, int i, int j) const { return data[index(alpha, i, j)]; }
    std::size_t index(int alpha, int i, int j) const {
        return (static_cast<std::size_t>(alpha) * grid.nx() + i) * grid.ny() + j;
    }
};

struct StageTrace {
    double epsilon;
    int newton_iters;
    double residual;
    std::vector<double> history;  // residual norm after each accepted step (first = initial)
};

struct DiscreteSolution {
    Grid2 grid;
    GridFunction u;
    double epsilon;
    GridFunction flux;  // node flux, component 2 alpha + d
    double residual_norm;
    std::vector<StageTrace> trace;
};

struct SolveOptions {
    int k_max = 16;                     // eps = 2^-k, k = 0..k_max
    std::vector<double> eps_schedule;   // overrides k_max when nonempty
    double tol = 1e-9;
    int max_newton = 100;
    int max_halvings = 30;
};

/// r = f + div_h(a_eps(|G|) G) at interior nodes with edge-midpoint gradients;
/// zero on the boundary.
GridFunction assemble_residual(const GridFunction& u, const orlicz::GrowthCoefficient& a_eps,
                               const GridFunction& f);

/// d r / d u over interior unknowns, ordered (alpha mx + i-1) my + j-1.
Eigen::SparseMatrix<double> residual_jacobian(const GridFunction& u, const orlicz::GrowthCoefficient& a_eps);

/// sqrt(h^2 sum r^2) over interior nodes.
double residual_norm(const GridFunction& r);

/// Damped Newton at one eps, starting from u (boundary forced to 0).
StageTrace newton(GridFunction& u, const orlicz::GrowthCoefficient& a_eps, const GridFunction& f,
                  double tol, int max_newton, int max_halvings);

/// eps-continuation from u = 0. Throws NewtonStall / ContinuationAbort.
DiscreteSolution solve(const orlicz::GrowthCoefficient& a, const GridFunction& f,
                       const SolveOptions& opt = {});

/// Node gradient: central in the interior, second-order one-sided normal
/// derivative and zero tangential derivative on the boundary.
GridFunction node_gradient(const GridFunction& u);
GridFunction node_flux(const GridFunction& u, const orlicz::GrowthCoefficient& a_eps);

struct NormReport {
    double l2_f, l1_f;
    double l2_flux, l1_flux;
    double l2_grad_flux;
    double w12_flux;  // l2_flux + l2_grad_flux
    double w12_over_l2f;
    double l1flux_over_l1f;
};

/// Trapezoid-weighted discrete norms over all nodes.
NormReport norms(const DiscreteSolution& sol, const GridFunction& f);

struct LocalEstimate {
    double lhs;  // R^-1 |F|_{L2(B_R)} + |grad F|_{L2(B_R)}
    double rhs;  // |f|_{L2(B_2R)} + R^{-n/2-1} |F|_{L1(B_2R)}, n = 2
    double c_fit;
    bool pass;
};

/// Ball norms over nodes inside the ball. GeometryError if B_2R leaves the
/// rectangle or a ball holds no node.
LocalEstimate local_estimate_check(const DiscreteSolution& sol, const GridFunction& f, double cx,
                                   double cy, double R);

/// Node values of u.
GridFunction sample(const fields::SmoothField& u, const Grid2& g);
/// f = -div(a(|grad u|) grad u) at every node, from exact derivatives.
GridFunction manufactured_rhs(const orlicz::GrowthCoefficient& a, const fields::SmoothField& u,
                              const Grid2& g);
/// "sinsin": f^1 = 2 pi^2 sin(pi x) sin(pi y); "constant": f = (1,..,1);
/// "sin_xy": f = (sin(pi x) sin(pi y), x y, 0, ..).
GridFunction named_rhs(const std::string& name, const Grid2& g, int N);

/// sum over nodes of the trapezoid weight times B(|grad_h u|).
double energy(const DiscreteSolution& sol, const orlicz::YoungPair& young);

struct Pairing {
    double source;  // h^2 sum_interior f . u
    double flux;    // h^2 sum_edges a_eps(|G|) G . (du/h)
};
/// Both sides of the discrete summation-by-parts identity (equal when the
/// residual vanishes).
Pairing energy_pairing(const GridFunction& u, const orlicz::GrowthCoefficient& a_eps,
                       const GridFunction& f);

/// Interior L2 norms of the central-difference Hessian and Laplacian.
struct SecondDifferences {
    double hessian_l2;
    double laplacian_l2;
};
SecondDifferences second_differences(const GridFunction& u);

}  // namespace plap::solver
