#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "plap/errors.hpp"
#include "plap/fields.hpp"
#include "plap/rng.hpp"
#include "plap/solver.hpp"

using namespace plap;
using namespace plap::solver;
using orlicz::GrowthCoefficient;
using std::numbers::pi;

namespace {

GrowthCoefficient reg(double p, double eps) {
    return orlicz::regularize(GrowthCoefficient::power(p), eps).as_coefficient();
}

double max_error_sinsin(const GridFunction& u) {
    double e = 0.0;
    for (int i = 0; i < u.grid.nx(); ++i)
        for (int j = 0; j < u.grid.ny(); ++j)
            e = std::max(e, std::abs(u(0, i, j) - std::sin(pi * u.grid.x(i)) * std::sin(pi * u.grid.y(j))));
    return e;
}

// 16 x (1-x) y (1-y) in component 0, scaled copy in component 1.
fields::SmoothField bump() {
    using fields::Monomial;
    std::vector<Monomial> c;
    // x y - x^2 y - x y^2 + x^2 y^2
    c.push_back({{1, 1}, 16.0});
    c.push_back({{2, 1}, -16.0});
    c.push_back({{1, 2}, -16.0});
    c.push_back({{2, 2}, 16.0});
    std::vector<Monomial> d = c;
    for (auto& m : d) m.coeff *= -0.5;
    return fields::SmoothField::polynomial(2, {c, d});
}

}  // namespace

TEST_CASE("grid geometry", "[solver][grid]") {
    const auto g = Grid2::unit_square(33);
    CHECK(g.h == 1.0 / 32);
    CHECK(g.nx() == 33);
    CHECK(g.on_boundary(0, 5));
    CHECK_FALSE(g.on_boundary(1, 1));
    CHECK_THROWS_AS(Grid2(1.0, 1.0, 10, 20), DomainError);
    const Grid2 rect(2.0, 1.0, 19, 9);
    CHECK(rect.h == Catch::Approx(0.1));
}

TEST_CASE("residual of the zero problem", "[solver][residual]") {
    const auto g = Grid2::unit_square(9);
    const GridFunction u(g, 2), f(g, 2);
    CHECK(residual_norm(assemble_residual(u, GrowthCoefficient::power(2), f)) == 0.0);
    CHECK(residual_norm(assemble_residual(u, reg(1.5, 0.1), f)) == 0.0);
}

TEST_CASE("five-point truncation error is second order", "[solver][residual]") {
    std::vector<double> res;
    for (int nodes : {17, 33, 65, 129}) {
        const auto g = Grid2::unit_square(nodes);
        GridFunction u(g, 1);
        for (int i = 0; i < g.nx(); ++i)
            for (int j = 0; j < g.ny(); ++j) u(0, i, j) = std::sin(pi * g.x(i)) * std::sin(pi * g.y(j));
        res.push_back(residual_norm(assemble_residual(u, GrowthCoefficient::power(2), named_rhs("sinsin", g, 1))));
    }
    for (std::size_t k = 1; k < res.size(); ++k) CHECK(std::log2(res[k - 1] / res[k]) >= 1.9);
}

TEST_CASE("manufactured nonlinear residual vanishes under refinement", "[solver][residual]") {
    const auto a = reg(3.0, 0.05);
    std::vector<double> res;
    for (int nodes : {17, 33, 65}) {
        const auto g = Grid2::unit_square(nodes);
        res.push_back(residual_norm(assemble_residual(sample(bump(), g), a, manufactured_rhs(a, bump(), g))));
    }
    CHECK(res[1] < res[0] / 3);
    CHECK(res[2] < res[1] / 3);
}

TEST_CASE("Jacobian matches a central difference of the residual", "[solver][jacobian]") {
    const auto g = Grid2::unit_square(7);
    Rng rng(4);
    for (const auto& a : {reg(1.5, 0.1), reg(3.0, 0.01), GrowthCoefficient::power(2)}) {
        GridFunction u(g, 2), v(g, 2), f(g, 2);
        for (int al = 0; al < 2; ++al)
            for (int i = 1; i + 1 < g.nx(); ++i)
                for (int j = 1; j + 1 < g.ny(); ++j) {
                    u(al, i, j) = rng.uniform(-1, 1);
                    v(al, i, j) = rng.uniform(-1, 1);
                }
        const auto J = residual_jacobian(u, a);
        const int m = g.mx * g.my;
        REQUIRE(J.rows() == 2 * m);
        Eigen::VectorXd dv(2 * m);
        for (int al = 0; al < 2; ++al)
            for (int i = 1; i <= g.mx; ++i)
                for (int j = 1; j <= g.my; ++j) dv((al * g.mx + i - 1) * g.my + j - 1) = v(al, i, j);
        const Eigen::VectorXd Jv = J * dv;

        const double h = 1e-6;
        GridFunction up = u, um = u;
        for (std::size_t k = 0; k < u.data.size(); ++k) {
            up.data[k] += h * v.data[k];
            um.data[k] -= h * v.data[k];
        }
        const auto rp = assemble_residual(up, a, f), rm = assemble_residual(um, a, f);
        double err = 0.0;
        for (int al = 0; al < 2; ++al)
            for (int i = 1; i <= g.mx; ++i)
                for (int j = 1; j <= g.my; ++j) {
                    const double fd = (rp(al, i, j) - rm(al, i, j)) / (2 * h);
                    err = std::max(err, std::abs(fd - Jv((al * g.mx + i - 1) * g.my + j - 1)) / (1 + std::abs(fd)));
                }
        CHECK(err <= 1e-6);
    }
}

TEST_CASE("p = 2 solution converges at second order", "[solver][solve]") {
    std::vector<double> err;
    for (int nodes : {17, 33, 65}) {
        const auto g = Grid2::unit_square(nodes);
        const auto sol = solve(GrowthCoefficient::power(2), named_rhs("sinsin", g, 1));
        CHECK(sol.residual_norm <= 1e-9);
        err.push_back(max_error_sinsin(sol.u));
    }
    for (std::size_t k = 1; k < err.size(); ++k) CHECK(std::log2(err[k - 1] / err[k]) >= 1.9);
}

TEST_CASE("zero data gives the zero solution", "[solver][solve]") {
    const auto g = Grid2::unit_square(17);
    const GridFunction f(g, 2);
    const auto sol = solve(GrowthCoefficient::power(1.5), f);
    for (double v : sol.u.data) CHECK(v == 0.0);
    const auto n = norms(sol, f);
    CHECK(n.l2_f == 0.0);
    CHECK(n.l2_flux == 0.0);
    CHECK(n.w12_flux == 0.0);
    CHECK(n.l1_flux == 0.0);
    const auto loc = local_estimate_check(sol, f, 0.5, 0.5, 0.2);
    CHECK(loc.lhs == 0.0);
    CHECK(loc.rhs == 0.0);
    CHECK(loc.pass);
}

TEST_CASE("singular system converges and its energy is refinement-stable", "[solver][solve]") {
    const auto a = GrowthCoefficient::power(1.5);
    const orlicz::YoungPair young(a);
    std::vector<double> e;
    for (int nodes : {33, 65}) {
        const auto g = Grid2::unit_square(nodes);
        const auto f = named_rhs("constant", g, 2);
        const auto sol = solve(a, f);
        CHECK(sol.residual_norm <= 1e-9);
        for (const auto& st : sol.trace) {
            CHECK(st.residual <= 1e-9);
            for (std::size_t k = 1; k < st.history.size(); ++k) CHECK(st.history[k] < st.history[k - 1]);
        }
        e.push_back(energy(sol, young));

        const auto pair = energy_pairing(sol.u, orlicz::regularize(a, sol.epsilon).as_coefficient(), f);
        CHECK(std::abs(pair.source - pair.flux) <= 1e-8 * std::abs(pair.source));

        // Stored flux is a_eps(|grad_h u|) grad_h u of the stored u.
        const auto F = node_flux(sol.u, orlicz::regularize(a, sol.epsilon).as_coefficient());
        for (std::size_t k = 0; k < F.data.size(); ++k) CHECK(std::abs(F.data[k] - sol.flux.data[k]) <= 1e-14);
    }
    REQUIRE(std::isfinite(e[0]));
    CHECK(std::abs(e[1] - e[0]) <= 0.05 * std::abs(e[1]));
}

TEST_CASE("discrete Hessian is controlled by the discrete Laplacian", "[solver][norms]") {
    for (int nodes : {17, 33, 65}) {
        const auto g = Grid2::unit_square(nodes);
        const auto sol = solve(GrowthCoefficient::power(2), named_rhs("sin_xy", g, 2));
        const auto sd = second_differences(sol.u);
        CHECK(sd.hessian_l2 <= 1.1 * sd.laplacian_l2);
    }
}

TEST_CASE("flux norms are stable across refinement", "[solver][norms]") {
    for (double p : {2.0, 3.0}) {
        std::vector<double> w12, l1;
        for (int nodes : {17, 33, 65}) {
            const auto g = Grid2::unit_square(nodes);
            const auto f = named_rhs("sin_xy", g, 2);
            const auto n = norms(solve(GrowthCoefficient::power(p), f), f);
            w12.push_back(n.w12_over_l2f);
            l1.push_back(n.l1flux_over_l1f);
            CHECK(n.w12_flux >= n.l2_flux);
        }
        CHECK(*std::max_element(w12.begin(), w12.end()) <= 2 * *std::min_element(w12.begin(), w12.end()));
        CHECK(*std::max_element(l1.begin(), l1.end()) <= 2 * *std::min_element(l1.begin(), l1.end()));
    }
}

TEST_CASE("continuation end point barely moves the flux", "[solver][solve]") {
    const auto g = Grid2::unit_square(33);
    const auto f = named_rhs("sin_xy", g, 2);
    for (double p : {1.5, 3.0}) {
        SolveOptions o12;
        o12.k_max = 12;
        const auto n12 = norms(solve(GrowthCoefficient::power(p), f, o12), f);
        const auto n16 = norms(solve(GrowthCoefficient::power(p), f), f);
        CHECK(std::abs(n12.l2_flux - n16.l2_flux) <= 1e-3 * n16.l2_flux);
    }
}

TEST_CASE("local estimate geometry", "[solver][local]") {
    const auto g = Grid2::unit_square(33);
    const auto f = named_rhs("sinsin", g, 1);
    const auto sol = solve(GrowthCoefficient::power(2), f);
    const auto loc = local_estimate_check(sol, f, 0.5, 0.5, 0.2);
    CHECK(std::isfinite(loc.c_fit));
    CHECK(loc.c_fit > 0);
    CHECK_THROWS_AS(local_estimate_check(sol, f, 0.2, 0.5, 0.2), GeometryError);
    CHECK_THROWS_AS(local_estimate_check(sol, f, 0.51, 0.51, 0.001), GeometryError);
}

TEST_CASE("named right-hand sides", "[solver][rhs]") {
    const auto g = Grid2::unit_square(5);
    const auto f = named_rhs("sin_xy", g, 2);
    CHECK(f(1, 2, 2) == Catch::Approx(0.25));
    CHECK(f(0, 2, 2) == Catch::Approx(1.0));
    CHECK_THROWS_AS(named_rhs("nope", g, 1), DomainError);
}
