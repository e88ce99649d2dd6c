// Acceptance gate: one PASS/FAIL line per criterion, tolerances pinned below.
// Exit status is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "plap/errors.hpp"
#include "plap/fields.hpp"
#include "plap/orlicz.hpp"
#include "plap/pointwise.hpp"
#include "plap/rng.hpp"
#include "plap/sharpness.hpp"
#include "plap/solver.hpp"

using namespace plap;
using orlicz::GrowthCoefficient;

namespace {

namespace tol {
constexpr double identity_rel = 1e-9;
constexpr double gap_rel = 1e-9;
constexpr double min_grad = 1e-3;
constexpr double kappa_abs = 1e-12;
constexpr double witness_abs = 1e-10;
constexpr double search_upper = 1e-7;
constexpr double search_lower = 1e-4;
constexpr double ellipsoid_abs = 1e-12;
constexpr double index_abs = 1e-10;
constexpr double limit_target = 1e-6;
constexpr double order_min = 1.9;
constexpr double w12_variation = 0.2;
constexpr double ratio_variation = 2.0;
constexpr double newton_tol = 1e-9;
}  // namespace tol

namespace budget {  // seconds
constexpr double identity = 30, inequality = 30, search = 300, ellipsoid = 10, orlicz = 30;
constexpr double solver_linear = 120, solver_nonlinear = 600, local = 120;
}  // namespace budget

struct Outcome {
    bool pass = true;
    std::string detail;
    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
};

int failures = 0;

void criterion(int id, const char* name, double limit_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (limit_s > 0 && secs > limit_s) o.require(false, "runtime " + std::to_string(secs) + " s over budget");
    if (!o.pass) ++failures;
    std::printf("[%s] criterion %d: %s (%.2f s)%s%s\n", o.pass ? "PASS" : "FAIL", id, name, secs,
                o.detail.empty() ? "" : " -- ", o.detail.c_str());
    std::fflush(stdout);
}

std::string fmt_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// Shared sweep for criteria 1 and 2: every field against every coefficient.
struct SweepStats {
    double worst_residual = 0.0;
    double worst_gap = INFINITY;
    long evaluations = 0;
};

SweepStats pointwise_sweep() {
    std::vector<GrowthCoefficient> coeffs;
    for (double p : {1.3, 1.5, 2.0, 3.0, 4.0}) {
        coeffs.push_back(GrowthCoefficient::power(p));
        for (double eps : {1e-2, 1.0}) coeffs.push_back(orlicz::regularize(GrowthCoefficient::power(p), eps).as_coefficient());
    }
    Rng rng(20240601);
    SweepStats s;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 2 + trial % 2, N = 2 + (trial / 2) % 2;
        const auto u = fields::random_polynomial(rng, n, N, 3);
        Eigen::VectorXd x(n);
        do {
            for (int i = 0; i < n; ++i) x(i) = rng.uniform(-1, 1);
        } while (fields::jet(u, x).grad.norm() < tol::min_grad);
        for (const auto& a : coeffs) {
            const auto r = pointwise::evaluate_identity(a, u, x);
            s.worst_residual = std::max(s.worst_residual, std::abs(r.identity_residual) / r.scale);
            s.worst_gap = std::min(s.worst_gap, r.inequality_gap / r.scale);
            ++s.evaluations;
        }
    }
    return s;
}

double variation(const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi / *lo;
}

std::string list(const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + fmt_num(v[k]);
    return s + "]";
}

}  // namespace

int main() {
    using std::numbers::pi;

    criterion(1, "pointwise identity sweep", budget::identity, [] {
        Outcome o;
        const auto s = pointwise_sweep();
        o.require(s.worst_residual <= tol::identity_rel, "max relative residual " + fmt_num(s.worst_residual));
        o.detail += (o.detail.empty() ? "" : "; ") + std::to_string(s.evaluations) + " evaluations, max residual " +
                    fmt_num(s.worst_residual);
        return o;
    });

    criterion(2, "pointwise inequality sweep", budget::inequality, [] {
        Outcome o;
        const auto s = pointwise_sweep();
        o.require(s.worst_gap >= -tol::gap_rel, "min relative gap " + fmt_num(s.worst_gap));
        o.detail += (o.detail.empty() ? "" : "; ") + std::string("min relative gap ") + fmt_num(s.worst_gap);
        return o;
    });

    criterion(3, "sharp constant table", 1, [] {
        Outcome o;
        using pointwise::kappa;
        o.require(kappa(2, 2.0) == 1.0, "kappa(2)");
        o.require(std::abs(kappa(2, 1.5) - 0.25) <= tol::kappa_abs, "kappa(1.5)");
        const double b = 4.0 / 3.0;
        const double left = 1.0 - (4.0 - b) * (4.0 - b) / 8.0, right = (b - 1.0) * (b - 1.0);
        o.require(std::abs(left - 1.0 / 9.0) <= tol::kappa_abs && std::abs(right - 1.0 / 9.0) <= tol::kappa_abs,
                  "branches at 4/3");
        o.require(std::abs(kappa(2, b) - 1.0 / 9.0) <= tol::kappa_abs, "kappa(4/3)");
        o.require(std::abs(kappa(2, std::nextafter(b, 0.0)) - kappa(2, b)) <= tol::kappa_abs, "continuity at 4/3");
        o.require(std::abs(kappa(2, std::nextafter(2.0, 0.0)) - 1.0) <= tol::kappa_abs, "continuity at 2");
        double lo = 1.0, hi = b;
        while (true) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            (kappa(2, mid) < 0.0 ? lo : hi) = mid;
        }
        const double err = std::abs(hi - (4.0 - 2.0 * std::sqrt(2.0)));
        o.require(err <= tol::kappa_abs, "sign change off by " + fmt_num(err));
        if (o.pass) o.detail = "sign change at " + fmt_num(hi);
        return o;
    });

    criterion(4, "sharpness witnesses", 1, [] {
        Outcome o;
        for (double p : {1.0, 1.2, 1.3}) {
            const auto [delta, sigma] = sharpness::delta_sigma_for(p);
            const auto f = sharpness::evaluate(sharpness::extremal_config(p), delta, sigma);
            const double ratio = sharpness::quad_form(f, p) / f.J1;
            o.require(std::abs(ratio - pointwise::kappa(2, p)) <= tol::witness_abs, "configuration p=" + fmt_num(p));
            const auto w = pointwise::sharpness_witness(2, p);
            o.require(std::abs(w.ratio - pointwise::kappa(2, p)) <= tol::witness_abs, "field p=" + fmt_num(p));
        }
        for (double p : {1.5, 3.0}) {
            const auto w = pointwise::sharpness_witness(2, p);
            const auto r = pointwise::evaluate_identity(GrowthCoefficient::power(p), w.field, w.point);
            o.require(std::abs(r.inequality_gap) <= tol::witness_abs * r.scale, "equality p=" + fmt_num(p));
            o.require(std::abs(w.ratio - pointwise::kappa(2, p)) <= tol::witness_abs, "ratio p=" + fmt_num(p));
        }
        return o;
    });

    criterion(5, "optimization certificate", budget::search, [] {
        Outcome o;
        sharpness::SearchOptions opt;  // 200 restarts
        opt.seed = 5;
        std::string table;
        for (int k = 1; k <= 10; ++k) {
            const double delta = 0.05 * k;
            const double sigma = std::max(1.0 - delta, (delta + 1) * (delta + 1) / (8 * delta));
            const double bound = sharpness::analytic_bound(delta, sigma);
            const auto res = sharpness::global_search(2, 2, delta, sigma, opt);
            o.require(res.best_D <= bound + tol::search_upper, "delta=" + fmt_num(delta) + " best_D " + fmt_num(res.best_D));
            // Attained value: the bound itself for delta > 1/3, psi(1) below.
            const double attained = delta > 1.0 / 3.0 ? bound : sharpness::psi_profile(delta, sigma).value;
            o.require(res.best_D >= attained - tol::search_lower,
                      "delta=" + fmt_num(delta) + " best_D " + fmt_num(res.best_D) + " < " + fmt_num(attained));
            table += (table.empty() ? "" : " ") + fmt_num(res.best_D);
        }
        if (o.pass) o.detail = "best_D " + table;
        return o;
    });

    criterion(6, "ellipsoid suite", budget::ellipsoid, [] {
        Outcome o;
        Rng rng(66);
        double worst = 0.0;
        int members = 0, preimages = 0;
        for (int k = 0; k < 10000; ++k) {
            const int n = 2 + k % 3;
            Eigen::VectorXd w(n), x(n);
            Eigen::MatrixXd H(n, n);
            for (int i = 0; i < n; ++i) {
                w(i) = rng.normal();
                x(i) = rng.normal();
                for (int j = 0; j < n; ++j) H(i, j) = rng.normal();
            }
            H = 0.5 * (H + H.transpose()).eval();
            worst = std::max(worst, std::abs(sharpness::ellipsoid_identity(w / w.norm(), H)));
            if (sharpness::ellipsoid_membership(w, H).member) ++members;
            const auto pre = sharpness::ellipsoid_preimage(w, x);
            const bool ok = (pre.H * w - x).norm() <= 1e-12 * (1 + x.norm()) &&
                            std::abs(pre.H.squaredNorm() - pre.quad) <= 1e-10 * pre.quad &&
                            sharpness::ellipsoid_membership(w, pre.H).member;
            if (ok) ++preimages;
        }
        o.require(worst <= tol::ellipsoid_abs, "identity residual " + fmt_num(worst));
        o.require(members == 10000, std::to_string(10000 - members) + " non-members");
        o.require(preimages == 10000, std::to_string(10000 - preimages) + " bad preimages");
        if (o.pass) o.detail = "max identity residual " + fmt_num(worst);
        return o;
    });

    criterion(7, "Orlicz suite", budget::orlicz, [] {
        Outcome o;
        const auto grid = orlicz::default_grid();
        for (double p : {1.3, 1.5, 2.0, 3.0, 4.0}) {
            const auto a = GrowthCoefficient::power(p);
            const auto idx = orlicz::compute_indices(a, grid);
            o.require(std::abs(idx.lower - (p - 2)) <= tol::index_abs && std::abs(idx.upper - (p - 2)) <= tol::index_abs,
                      "indices p=" + fmt_num(p));
            for (const auto& row : orlicz::orlicz_checks(a, 0.01, grid))
                o.require(row.pass && std::isfinite(row.value), row.quantity + " p=" + fmt_num(p));
            const auto lim = orlicz::regularization_limit(a, 10.0, 20);
            bool decreasing = true;
            for (std::size_t k = 1; k < lim.size(); ++k) decreasing = decreasing && lim[k].sup_error <= lim[k - 1].sup_error;
            o.require(decreasing, "limit not decreasing p=" + fmt_num(p));
            o.require(lim.back().sup_error < tol::limit_target,
                      "limit at eps=2^-20 is " + fmt_num(lim.back().sup_error) + " for p=" + fmt_num(p));
        }
        return o;
    });

    criterion(8, "solver p=2 oracle", budget::solver_linear, [] {
        Outcome o;
        std::vector<double> err, w12;
        for (int nodes : {33, 65, 129}) {
            const auto g = solver::Grid2::unit_square(nodes);
            const auto f = solver::named_rhs("sinsin", g, 1);
            const auto sol = solver::solve(GrowthCoefficient::power(2), f);
            double e = 0.0;
            for (int i = 0; i < g.nx(); ++i)
                for (int j = 0; j < g.ny(); ++j)
                    e = std::max(e, std::abs(sol.u(0, i, j) - std::sin(pi * g.x(i)) * std::sin(pi * g.y(j))));
            err.push_back(e);
            w12.push_back(solver::norms(sol, f).w12_over_l2f);
        }
        const double order = std::log2(err.front() / err.back()) / 2.0;
        o.require(order >= tol::order_min, "observed order " + fmt_num(order));
        o.require(variation(w12) - 1.0 <= tol::w12_variation, "w12/l2f " + list(w12));
        if (o.pass) o.detail = "order " + fmt_num(order) + ", w12/l2f " + list(w12);
        return o;
    });

    criterion(9, "solver nonlinear stability", budget::solver_nonlinear, [] {
        Outcome o;
        std::string detail;
        for (double p : {1.25, 1.3, 1.5, 3.0}) {
            std::vector<double> w12, l1;
            for (int nodes : {33, 65, 129}) {
                const auto g = solver::Grid2::unit_square(nodes);
                const auto f = solver::named_rhs("sin_xy", g, 2);
                const auto sol = solver::solve(GrowthCoefficient::power(p), f);
                o.require(sol.residual_norm <= tol::newton_tol,
                          "p=" + fmt_num(p) + " nodes=" + std::to_string(nodes) + " residual " + fmt_num(sol.residual_norm));
                const auto n = solver::norms(sol, f);
                w12.push_back(n.w12_over_l2f);
                l1.push_back(n.l1flux_over_l1f);
            }
            o.require(variation(w12) <= tol::ratio_variation, "p=" + fmt_num(p) + " w12/l2f " + list(w12));
            o.require(variation(l1) <= tol::ratio_variation, "p=" + fmt_num(p) + " l1 ratio " + list(l1));
            detail += (detail.empty() ? "" : "; ") + ("p=" + fmt_num(p) + " w12/l2f " + list(w12));
        }
        if (o.pass) o.detail = detail;
        return o;
    });

    criterion(10, "local estimate", budget::local, [] {
        Outcome o;
        std::string detail;
        for (double p : {2.0, 1.3}) {
            std::vector<double> c;
            for (int nodes : {33, 65, 129}) {
                const auto g = solver::Grid2::unit_square(nodes);
                const auto f = solver::named_rhs(p == 2.0 ? "sinsin" : "sin_xy", g, p == 2.0 ? 1 : 2);
                const auto sol = solver::solve(GrowthCoefficient::power(p), f);
                const auto est = solver::local_estimate_check(sol, f, 0.5, 0.5, 0.2);
                o.require(est.pass, "C_fit not finite");
                c.push_back(est.c_fit);
            }
            o.require(variation(c) <= tol::ratio_variation, "p=" + fmt_num(p) + " C_fit " + list(c));
            detail += (detail.empty() ? "" : "; ") + ("p=" + fmt_num(p) + " C_fit " + list(c));
        }
        if (o.pass) o.detail = detail;
        return o;
    });

    std::printf("%d criteria failed\n", failures);
    return failures;
}
