#include "plap/pointwise.hpp"

#include <cmath>
#include <fmt/format.h>

#include "plap/errors.hpp"

namespace plap::pointwise {

double kappa(int N, double p) {
    if (!(p >= 1.0)) throw DomainError(fmt::format("kappa needs p >= 1, got {}", p));
    require(N >= 1, "kappa needs N >= 1");
    if (p >= 2.0) return 1.0;
    if (N == 1 || p >= 4.0 / 3.0) return (p - 1.0) * (p - 1.0);
    return 1.0 - (4.0 - p) * (4.0 - p) / 8.0;
}

namespace {

struct Local {
    fields::Jet3 jet;
    fields::DerivedQuantities dq;
    double av;  // a(|grad u|)
    double dt;  // a'(|grad u|) / |grad u|
};

Local local(const orlicz::GrowthCoefficient& a, const fields::SmoothField& u, const Eigen::VectorXd& x,
            const Options& opt) {
    Local L{fields::jet(u, x), {}, 0.0, 0.0};
    L.dq = fields::derived_quantities(L.jet, opt.tau, false);
    const double g = L.dq.grad_norm;
    if (g < opt.tau && !(a.defined_at_zero() && opt.report_at_critical))
        throw CriticalPoint(fmt::format("|grad u| = {} below threshold {}", g, opt.tau));
    L.av = a(g);
    L.dt = a.derivative_over_t(g);
    if (!std::isfinite(L.av) || !std::isfinite(L.dt))
        throw NonsmoothCoefficient(fmt::format("a or a' not finite at |grad u| = {}", g));
    if (!(L.av > 0.0)) throw NonPositiveCoefficient(fmt::format("a({}) = {}", g, L.av));
    return L;
}

// (Delta u)^T grad u - grad|grad u|^2 / 2 = grad^T lap - m.
Eigen::VectorXd bracket(const Local& L) {
    return L.jet.grad.transpose() * L.dq.laplacian - L.dq.grad_hess_contraction;
}

}  // namespace

Eigen::VectorXd flux_divergence(const orlicz::GrowthCoefficient& a, const fields::SmoothField& u,
                                const Eigen::VectorXd& x, const Options& opt) {
    const Local L = local(a, u, x, opt);
    // div(a grad u^alpha) = a Delta u^alpha + (a'/|grad u|) grad u^alpha . m
    return L.av * L.dq.laplacian + L.dt * (L.jet.grad * L.dq.grad_hess_contraction);
}

Eigen::VectorXd bracket_field(const orlicz::GrowthCoefficient& a, const fields::SmoothField& u,
                              const Eigen::VectorXd& x, const Options& opt) {
    const Local L = local(a, u, x, opt);
    return L.av * L.av * bracket(L);
}

PointwiseReport evaluate_identity(const orlicz::GrowthCoefficient& a, const fields::SmoothField& u,
                                  const Eigen::VectorXd& x, const Options& opt) {
    const Local L = local(a, u, x, opt);
    const auto& J = L.jet;
    const auto& m = L.dq.grad_hess_contraction;
    const double a2 = L.av * L.av;

    const Eigen::VectorXd div = L.av * L.dq.laplacian + L.dt * (J.grad * m);
    const double lhs = div.squaredNorm();

    // div of the bracket with the third derivatives kept explicit.
    double div_bracket = 0.0;
    for (int al = 0; al < J.N; ++al) {
        double lap_grad = 0.0, grad_third = 0.0;
        for (int i = 0; i < J.n; ++i)
            for (int j = 0; j < J.n; ++j) {
                lap_grad += J.third(al, i, j, j) * J.grad(al, i);
                grad_third += J.grad(al, j) * J.third(al, i, i, j);
            }
        div_bracket += lap_grad + L.dq.laplacian[al] * L.dq.laplacian[al] - J.hess[al].squaredNorm() - grad_third;
    }
    const Eigen::VectorXd grad_a2 = 2.0 * L.av * L.dt * m;
    const double div_term = grad_a2.dot(bracket(L)) + a2 * div_bracket;

    // a^2 [ |D^2u|^2 + 2Q|grad g|^2 + Q^2 |grad u grad g^T / g|^2 ] with the
    // factors of g cancelled so regularized coefficients stay finite at g = 0.
    const double quad = a2 * L.dq.hess_sq + 2.0 * L.av * L.dt * m.squaredNorm() +
                        L.dt * L.dt * (J.grad * m).squaredNorm();

    PointwiseReport r{};
    r.lhs = lhs;
    r.div_term = div_term;
    r.quad_term = quad;
    r.identity_residual = lhs - div_term - quad;
    r.kappa = opt.kappa ? *opt.kappa : kappa(J.N, a.indices().lower + 2.0);
    r.a_sq_hess_sq = a2 * L.dq.hess_sq;
    r.inequality_gap = lhs - div_term - r.kappa * r.a_sq_hess_sq;
    r.scale = std::max({std::abs(lhs), std::abs(div_term), std::abs(quad), 1.0});
    r.grad_norm = L.dq.grad_norm;
    return r;
}

double check_inequality(const orlicz::GrowthCoefficient& a, const fields::SmoothField& u,
                        const Eigen::VectorXd& x, const Options& opt) {
    return evaluate_identity(a, u, x, opt).inequality_gap;
}

Witness sharpness_witness(int N, double p, int n) {
    using fields::Monomial;
    if (!(p >= 1.0)) throw DomainError(fmt::format("witness needs p >= 1, got {}", p));
    require(N >= 1 && N <= fields::kMaxDim && n >= 2 && n <= fields::kMaxDim, "witness dimensions out of range");
    auto mono = [n](std::initializer_list<std::pair<int, int>> powers, double c) {
        std::vector<int> e(static_cast<std::size_t>(n), 0);
        for (auto [d, k] : powers) e[d] = k;
        return Monomial{e, c};
    };
    std::vector<std::vector<Monomial>> comps(static_cast<std::size_t>(N));
    Eigen::VectorXd point;
    std::optional<fields::SmoothField> field;

    if (p < 4.0 / 3.0 && N >= 2) {
        // grad u^1(0) = t1 e1, grad u^2(0) = t2 e2,
        // D^2u^1 = h1 e1 e1^T, D^2u^2 = h2 (e1 e2^T + e2 e1^T)/sqrt(2).
        const double r0 = p / (2.0 * (2.0 - p));
        const double t1 = std::sqrt(r0), t2 = std::sqrt(1.0 - r0);
        const double h1 = std::sqrt(2.0 * r0 / (1.0 + r0)), h2 = std::sqrt((1.0 - r0) / (1.0 + r0));
        comps[0] = {mono({{0, 1}}, t1), mono({{0, 2}}, 0.5 * h1)};
        comps[1] = {mono({{1, 1}}, t2), mono({{0, 1}, {1, 1}}, h2 / std::sqrt(2.0))};
        field = fields::SmoothField::polynomial(n, comps);
        point = Eigen::VectorXd::Zero(n);
    } else if (p < 2.0) {
        comps[0] = {mono({{0, 2}}, 0.5)};
        field = fields::SmoothField::polynomial(n, comps);
        point = Eigen::VectorXd::Ones(n);
    } else {
        Eigen::VectorXd dir = Eigen::VectorXd::Zero(N);
        dir[0] = 1.0;
        field = fields::SmoothField::radial(
            n, [](double r) { return std::array<double, 4>{r, 1.0, 0.0, 0.0}; }, dir);
        point = Eigen::VectorXd::Zero(n);
        point[0] = 3.0;
        point[1] = 4.0;
    }
    const auto a = orlicz::GrowthCoefficient::power(p);
    const PointwiseReport r = evaluate_identity(a, *field, point);
    return {*field, point, r.quad_term / r.a_sq_hess_sq};
}

}  // namespace plap::pointwise
