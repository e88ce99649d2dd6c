#include "plap/sharpness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <fmt/format.h>

#include "plap/errors.hpp"
#include "plap/rng.hpp"

namespace plap::sharpness {

SharpnessConfig::SharpnessConfig(int n_, int N_) : n(n_), N(N_) {
    require(n >= 1 && n <= kMaxDim && N >= 1 && N <= kMaxDim, "sharpness dimensions out of range");
    for (int a = 0; a < kMaxDim; ++a) {
        omega[a] = Vec::Zero(a < N ? n : 0);
        h[a] = Mat::Zero(a < N ? n : 0, a < N ? n : 0);
    }
}

double SharpnessConfig::omega_sq() const {
    double s = 0.0;
    for (int a = 0; a < N; ++a) s += omega[a].squaredNorm();
    return s;
}

double SharpnessConfig::h_sq() const {
    double s = 0.0;
    for (int a = 0; a < N; ++a) s += h[a].squaredNorm();
    return s;
}

Functionals functionals(const SharpnessConfig& c, double delta, double sigma) {
    Vec zeta = Vec::Zero(c.n);
    for (int a = 0; a < c.N; ++a) zeta += c.h[a] * c.omega[a];
    Functionals f{};
    f.J = zeta.squaredNorm();
    f.J0 = 0.0;
    for (int a = 0; a < c.N; ++a) {
        const double ca = c.omega[a].dot(zeta);
        f.J0 += ca * ca;
    }
    f.J1 = c.h_sq();
    f.D = f.J - delta * f.J0 - sigma * f.J1;
    return f;
}

Functionals evaluate(const SharpnessConfig& c, double delta, double sigma) {
    constexpr double tol = 1e-10;
    if (c.omega_sq() > 1.0 + tol)
        throw ConstraintViolation(fmt::format("sum |omega|^2 = {} > 1", c.omega_sq()));
    if (std::abs(c.h_sq() - 1.0) > tol)
        throw ConstraintViolation(fmt::format("sum |H|^2 = {} != 1", c.h_sq()));
    for (int a = 0; a < c.N; ++a)
        if ((c.h[a] - c.h[a].transpose()).norm() > tol)
            throw ConstraintViolation(fmt::format("H[{}] is not symmetric", a));
    return functionals(c, delta, sigma);
}

double quad_form(const Functionals& f, double p) {
    return f.J1 + 2.0 * (p - 2.0) * f.J + (p - 2.0) * (p - 2.0) * f.J0;
}

double analytic_bound(double delta, double sigma) {
    if (!(delta >= 0.0 && delta <= 0.5))
        throw DomainError(fmt::format("delta = {} outside [0, 1/2]", delta));
    if (!(delta + sigma >= 1.0 - 1e-12))
        throw DomainError(fmt::format("delta + sigma = {} < 1", delta + sigma));
    if (delta <= 1.0 / 3.0) return 0.0;
    return std::max(0.0, (delta + 1.0) * (delta + 1.0) / (8.0 * delta) - sigma);
}

PsiMax psi_profile(double delta, double sigma) {
    require(delta >= 0.0 && delta <= 0.5, fmt::format("delta = {} outside [0, 1/2]", delta));
    const double r = delta <= 1.0 / 3.0 ? 1.0 : (1.0 - delta) / (2.0 * delta);
    return {r, 0.5 * (1.0 + r) * (1.0 - delta * r) - sigma};
}

void project(SharpnessConfig& c) {
    double hs = 0.0;
    for (int a = 0; a < c.N; ++a) {
        c.h[a] = 0.5 * (c.h[a] + c.h[a].transpose()).eval();
        hs += c.h[a].squaredNorm();
    }
    const double hn = std::sqrt(hs);
    if (hn > 0.0)
        for (int a = 0; a < c.N; ++a) c.h[a] /= hn;
    const double ws = c.omega_sq();
    if (ws > 1.0) {
        const double wn = std::sqrt(ws);
        for (int a = 0; a < c.N; ++a) c.omega[a] /= wn;
    }
}

void ascent_step(SharpnessConfig& c, double delta, double sigma, double step) {
    Vec zeta = Vec::Zero(c.n);
    for (int a = 0; a < c.N; ++a) zeta += c.h[a] * c.omega[a];
    std::array<double, kMaxDim> ca{};
    Vec v = Vec::Zero(c.n);
    for (int a = 0; a < c.N; ++a) {
        ca[a] = c.omega[a].dot(zeta);
        v += ca[a] * c.omega[a];
    }
    // dJ/dw_a = 2 H_a zeta, dJ/dH_a = sym(2 zeta w_a^T)
    // dJ0/dw_a = 2 c_a zeta + 2 H_a v, dJ0/dH_a = sym(2 v w_a^T), dJ1/dH_a = 2 H_a
    std::array<Vec, kMaxDim> gw;
    std::array<Mat, kMaxDim> gh;
    for (int a = 0; a < c.N; ++a) {
        gw[a] = 2.0 * (c.h[a] * zeta) - delta * (2.0 * ca[a] * zeta + 2.0 * (c.h[a] * v));
        const Mat outer = 2.0 * (zeta - delta * v) * c.omega[a].transpose();
        gh[a] = 0.5 * (outer + outer.transpose()) - 2.0 * sigma * c.h[a];
    }
    for (int a = 0; a < c.N; ++a) {
        c.omega[a] += step * gw[a];
        c.h[a] += step * gh[a];
    }
    project(c);
}

namespace {

SharpnessConfig random_config(Rng& rng, int n, int N) {
    SharpnessConfig c(n, N);
    for (int a = 0; a < N; ++a) {
        for (int i = 0; i < n; ++i) c.omega[a][i] = rng.normal();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) c.h[a](i, j) = rng.normal();
    }
    // omega uniform in direction, radius uniform in the ball's volume measure.
    const double radius = std::pow(rng.uniform(), 1.0 / (n * N));
    const double wn = std::sqrt(c.omega_sq());
    if (wn > 0.0)
        for (int a = 0; a < N; ++a) c.omega[a] *= radius / wn;
    project(c);
    return c;
}

}  // namespace

SearchResult global_search(int n, int N, double delta, double sigma, const SearchOptions& opt) {
    require(n >= 2 && N >= 2 && n <= kMaxDim && N <= kMaxDim, "global search needs 2 <= n, N <= 4");
    require(opt.restarts >= 1 && opt.iterations >= 0 && opt.step > 0.0 && opt.keep >= 1,
            "invalid search options");
    SearchResult res{-std::numeric_limits<double>::infinity(), SharpnessConfig(n, N), {}};
    for (int r = 0; r < opt.restarts; ++r) {
        Rng rng(opt.seed, static_cast<std::uint64_t>(r));
        SharpnessConfig c = random_config(rng, n, N);
        for (int it = 0; it < opt.iterations; ++it) ascent_step(c, delta, sigma, opt.step);
        const double D = functionals(c, delta, sigma).D;
        res.top.emplace_back(D, c);
        std::stable_sort(res.top.begin(), res.top.end(),
                         [](const auto& x, const auto& y) { return x.first > y.first; });
        if (static_cast<int>(res.top.size()) > opt.keep) res.top.pop_back();
    }
    res.best_D = res.top.front().first;
    res.best = res.top.front().second;
    return res;
}

std::pair<double, double> delta_sigma_for(double p) {
    if (!(p >= 1.0 && p < 2.0)) throw DomainError(fmt::format("delta/sigma pairing needs p in [1, 2), got {}", p));
    const double delta = (2.0 - p) / 2.0;
    if (p >= 4.0 / 3.0) return {delta, p / 2.0};
    return {delta, (delta + 1.0) * (delta + 1.0) / (8.0 * delta)};
}

SharpnessConfig extremal_config(double p, int n, int N) {
    if (!(p >= 1.0 && p < 4.0 / 3.0)) throw DomainError(fmt::format("extremal needs p in [1, 4/3), got {}", p));
    require(n >= 2 && N >= 2, "extremal needs n, N >= 2");
    const double r0 = p / (2.0 * (2.0 - p));
    SharpnessConfig c(n, N);
    c.omega[0][0] = std::sqrt(r0);
    c.omega[1][1] = std::sqrt(1.0 - r0);
    c.h[0](0, 0) = std::sqrt(2.0 * r0 / (1.0 + r0));
    const double h2 = std::sqrt((1.0 - r0) / (1.0 + r0)) / std::sqrt(2.0);
    c.h[1](0, 1) = h2;
    c.h[1](1, 0) = h2;
    return c;
}

double ellipsoid_identity(const Eigen::VectorXd& omega, const Eigen::MatrixXd& H) {
    if (std::abs(omega.norm() - 1.0) > 1e-10)
        throw DomainError(fmt::format("omega must be a unit vector, |omega| = {}", omega.norm()));
    const Eigen::Index n = omega.size();
    const Eigen::MatrixXd P = Eigen::MatrixXd::Identity(n, n) - omega * omega.transpose();
    const Eigen::MatrixXd Hp = P * H * P;
    const Eigen::VectorXd Hw = H * omega;
    const double wHw = omega.dot(Hw);
    return Hw.squaredNorm() - 0.5 * wHw * wHw - 0.5 * H.squaredNorm() + 0.5 * Hp.squaredNorm();
}

Membership ellipsoid_membership(const Eigen::VectorXd& omega, const Eigen::MatrixXd& H) {
    const double rhs = H.squaredNorm();
    const double w = omega.norm();
    if (w == 0.0) return {0.0, rhs, true};
    const Eigen::VectorXd Hw = H * omega;
    const Eigen::VectorXd e = omega / w;
    // W(w)^{-1} = |w|^{-2} (2I - e e^T)
    const double lhs = (2.0 * Hw.squaredNorm() - std::pow(e.dot(Hw), 2)) / (w * w);
    return {lhs, rhs, lhs <= rhs * (1.0 + 1e-12) + 1e-300};
}

Preimage ellipsoid_preimage(const Eigen::VectorXd& omega, const Eigen::VectorXd& x) {
    const double w = omega.norm();
    if (w == 0.0) throw SingularOmega("omega = 0 has no preimage construction");
    require(x.size() == omega.size(), "x and omega differ in dimension");
    const Eigen::VectorXd e = omega / w;
    const Eigen::VectorXd y = x / w;  // H e = y gives H omega = x
    const double t = e.dot(y);
    Eigen::VectorXd perp = y - t * e;
    const double s = perp.norm();
    Eigen::MatrixXd H = t * e * e.transpose();
    if (s > 0.0) {
        perp /= s;
        H += s * (perp * e.transpose() + e * perp.transpose());
    }
    H = 0.5 * (H + H.transpose()).eval();  // exact symmetry despite rounding
    const double quad = (2.0 * x.squaredNorm() - std::pow(e.dot(x), 2)) / (w * w);
    return {H, quad};
}

}  // namespace plap::sharpness
