#include "plap/orlicz.hpp"

#include <algorithm>
#include <array>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <nlohmann/json.hpp>

#include "plap/errors.hpp"

namespace plap::orlicz {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFirstKnot = 1e-12;
constexpr double kKnotsPerDecade = 8.0;

using GK = boost::math::quadrature::gauss_kronrod<double, 31>;

// Adaptive Gauss-Kronrod on [lo, hi]. The interval is mapped to [-1, 1]
// first: Boost 1.74 compares the error of the unscaled rule against a scaled
// tolerance, which never terminates early on very short intervals.
template <class F>
double gk(F&& f, double lo, double hi, double tol, double* err = nullptr) {
    if (hi <= lo) return 0.0;
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    auto g = [&](double x) { return f(mid + half * x); };
    double e = 0.0;
    const double v = GK::integrate(g, -1.0, 1.0, 12, tol, &e);
    if (err) *err = e * half;
    return v * half;
}

// Maximizes f on [lo, hi] (f assumed unimodal there); returns (argmax, max).
template <class F>
std::pair<double, double> maximize(F&& f, double lo, double hi) {
    auto neg = [&](double s) { return -f(s); };
    std::uintmax_t iters = 200;
    auto [x, v] = boost::math::tools::brent_find_minima(neg, lo, hi, 48, iters);
    return {x, -v};
}

}  // namespace

// ---------------------------------------------------------------------------
// GrowthCoefficient

GrowthCoefficient::GrowthCoefficient(std::string family, std::string parameter, Fn eval, Fn deriv,
                                     double domain_floor, std::optional<Indices> analytic,
                                     Fn deriv_over_t)
    : family_(std::move(family)),
      parameter_(std::move(parameter)),
      eval_(std::move(eval)),
      deriv_(std::move(deriv)),
      deriv_over_t_(std::move(deriv_over_t)),
      floor_(domain_floor),
      analytic_(analytic) {
    require(eval_ && deriv_, "coefficient needs both a and a'");
    require(floor_ >= 0.0, "domain floor must be nonnegative");
}

GrowthCoefficient GrowthCoefficient::power(double p, double scale) {
    require(p >= 1.0, "power coefficient needs p >= 1");
    require(scale > 0.0, "power coefficient needs a positive scale");
    const double e = p - 2.0;
    std::string param = scale == 1.0 ? fmt::format("p={}", p) : fmt::format("p={};scale={}", p, scale);
    return GrowthCoefficient(
        "power", std::move(param), [=](double t) { return scale * std::pow(t, e); },
        [=](double t) { return e == 0.0 ? 0.0 : scale * e * std::pow(t, e - 1.0); }, kFirstKnot,
        Indices{e, e},
        [=](double t) { return e == 0.0 ? 0.0 : scale * e * std::pow(t, e - 2.0); });
}

GrowthCoefficient GrowthCoefficient::power_log(double p, double q) {
    require(p >= 1.0, "power_log coefficient needs p >= 1");
    const double e = p - 2.0;
    auto eval = [=](double t) { return std::pow(t, e) * std::pow(std::log1p(t), q); };
    auto deriv = [=](double t) {
        const double L = std::log1p(t);
        return e * std::pow(t, e - 1.0) * std::pow(L, q) +
               q * std::pow(t, e) * std::pow(L, q - 1.0) / (1.0 + t);
    };
    // Q_a(t) = e + q t / ((1+t) log(1+t)); the last factor decreases from 1 to 0.
    return GrowthCoefficient("power_log", fmt::format("p={};q={}", p, q), eval, deriv, kFirstKnot,
                             Indices{e + std::min(q, 0.0), e + std::max(q, 0.0)});
}

GrowthCoefficient GrowthCoefficient::tabulated(std::vector<std::pair<double, double>> points) {
    require(points.size() >= 2, "tabulated coefficient needs at least two points");
    std::sort(points.begin(), points.end());
    std::vector<double> lt, la;
    for (const auto& [t, a] : points) {
        require(t > 0.0, "tabulated abscissae must be positive");
        if (!(a > 0.0)) throw NonPositiveCoefficient(fmt::format("tabulated a({}) = {}", t, a));
        if (!lt.empty() && std::log(t) <= lt.back())
            throw DomainError("tabulated abscissae must be distinct");
        lt.push_back(std::log(t));
        la.push_back(std::log(a));
    }
    const double floor = points.front().first;
    // Segment index for log t, extending the end segments.
    auto segment = [lt](double x) -> std::size_t {
        auto it = std::upper_bound(lt.begin(), lt.end(), x);
        std::size_t k = it == lt.begin() ? 0 : static_cast<std::size_t>(it - lt.begin()) - 1;
        return std::min(k, lt.size() - 2);
    };
    auto slope = [lt, la](std::size_t k) { return (la[k + 1] - la[k]) / (lt[k + 1] - lt[k]); };
    auto eval = [=](double t) {
        const double x = std::log(t);
        const std::size_t k = segment(x);
        return std::exp(la[k] + slope(k) * (x - lt[k]));
    };
    auto deriv = [=](double t) {
        const double x = std::log(t);
        const std::size_t k = segment(x);
        return slope(k) * std::exp(la[k] + slope(k) * (x - lt[k])) / t;
    };
    return GrowthCoefficient("tabulated", fmt::format("n={}", points.size()), eval, deriv, floor);
}

GrowthCoefficient GrowthCoefficient::from_json(const nlohmann::json& spec) {
    if (!spec.is_object()) throw ConfigError("coefficient: expected an object");
    if (!spec.contains("family") || !spec["family"].is_string())
        throw ConfigError("coefficient.family: expected a string");
    const std::string family = spec["family"].get<std::string>();
    auto number = [&](const char* key) {
        if (!spec.contains(key) || !spec[key].is_number())
            throw ConfigError(fmt::format("coefficient.{}: expected a number", key));
        return spec[key].get<double>();
    };
    try {
        if (family == "power") {
            const double scale = spec.contains("scale") ? number("scale") : 1.0;
            return power(number("p"), scale);
        }
        if (family == "power_log") return power_log(number("p"), number("q"));
        if (family == "tabulated") {
            if (!spec.contains("points") || !spec["points"].is_array())
                throw ConfigError("coefficient.points: expected an array of [t, a] pairs");
            std::vector<std::pair<double, double>> pts;
            for (std::size_t i = 0; i < spec["points"].size(); ++i) {
                const auto& row = spec["points"][i];
                if (!row.is_array() || row.size() != 2 || !row[0].is_number() || !row[1].is_number())
                    throw ConfigError(fmt::format("coefficient.points[{}]: expected [t, a]", i));
                pts.emplace_back(row[0].get<double>(), row[1].get<double>());
            }
            return tabulated(std::move(pts));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(fmt::format("coefficient: {}", e.what()));
    }
    throw ConfigError(fmt::format("coefficient.family: unknown family '{}'", family));
}

double GrowthCoefficient::derivative_over_t(double t) const {
    if (deriv_over_t_) return deriv_over_t_(t);
    return deriv_(t) / t;
}

double GrowthCoefficient::q_ratio(double t) const { return t * deriv_(t) / eval_(t); }

Indices GrowthCoefficient::indices() const {
    if (analytic_) return *analytic_;
    const auto grid = default_grid();
    const auto r = compute_indices(*this, grid);
    return {r.lower, r.upper};
}

std::vector<double> log_grid(double lo, double hi, std::size_t count) {
    require(lo > 0.0 && hi > lo, "log grid needs 0 < lo < hi");
    require(count >= 2, "log grid needs at least two points");
    std::vector<double> g(count);
    const double a = std::log(lo), b = std::log(hi);
    for (std::size_t i = 0; i < count; ++i)
        g[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
}

std::vector<double> default_grid() { return log_grid(1e-6, 1e6, 1000); }

IndexReport compute_indices(const GrowthCoefficient& a, std::span<const double> grid) {
    if (grid.empty()) throw DomainError("index grid is empty");
    IndexReport r{kInf, -kInf, false};
    for (double t : grid) {
        const double av = a(t);
        if (std::isfinite(av) && av <= 0.0)
            throw NonPositiveCoefficient(fmt::format("a({}) = {}", t, av));
        const double q = t * a.derivative(t) / av;
        if (!std::isfinite(q)) {
            r.nonfinite = true;
            continue;
        }
        r.lower = std::min(r.lower, q);
        r.upper = std::max(r.upper, q);
    }
    if (r.lower > r.upper) r.lower = r.upper = std::numeric_limits<double>::quiet_NaN();
    return r;
}

// ---------------------------------------------------------------------------
// RegularizedCoefficient

namespace {
GrowthCoefficient make_regularized(const GrowthCoefficient& base, double eps) {
    const Indices idx = base.indices();
    auto eval = [base, eps](double t) { return base(std::hypot(t, eps)); };
    auto deriv = [base, eps](double t) {
        const double s = std::hypot(t, eps);
        return base.derivative(s) * t / s;
    };
    auto dot = [base, eps](double t) {
        const double s = std::hypot(t, eps);
        return base.derivative(s) / s;
    };
    return GrowthCoefficient(base.family() + "_reg", fmt::format("{};eps={}", base.parameter(), eps),
                             eval, deriv, 0.0,
                             Indices{std::min(idx.lower, 0.0), std::max(idx.upper, 0.0)}, dot);
}
}  // namespace

RegularizedCoefficient::RegularizedCoefficient(GrowthCoefficient base, double epsilon)
    : base_(std::move(base)), eps_(epsilon), as_coeff_([&] {
          if (!(epsilon > 0.0)) throw DomainError(fmt::format("epsilon must be > 0, got {}", epsilon));
          const Indices idx = base_.indices();
          if (!(idx.lower > -1.0) || !std::isfinite(idx.upper))
              throw DomainError("regularization needs i_a > -1 and s_a < inf");
          return make_regularized(base_, epsilon);
      }()) {}

double RegularizedCoefficient::operator()(double t) const { return as_coeff_(t); }
double RegularizedCoefficient::derivative(double t) const { return as_coeff_.derivative(t); }
double RegularizedCoefficient::derivative_over_t(double t) const {
    return as_coeff_.derivative_over_t(t);
}

RegularizedCoefficient regularize(const GrowthCoefficient& a, double epsilon) {
    return RegularizedCoefficient(a, epsilon);
}

// ---------------------------------------------------------------------------
// YoungPair

YoungPair::YoungPair(GrowthCoefficient a, double quadrature_tol)
    : a_(std::move(a)), tol_(quadrature_tol) {
    require(tol_ > 0.0, "quadrature tolerance must be positive");
    start_ = std::max(a_.domain_floor(), kFirstKnot);
    start_exponent_ = a_.defined_at_zero() ? 0.0 : a_.q_ratio(start_) + 1.0;
    const double last = 1e12;
    const auto count = static_cast<std::size_t>(std::ceil(std::log10(last / start_) * kKnotsPerDecade)) + 1;
    knots_ = log_grid(start_, last, std::max<std::size_t>(count, 2));
    cumulative_.resize(knots_.size());
    if (a_.defined_at_zero()) {
        cumulative_[0] = integrate(0.0, start_);
    } else {
        // Below the floor b(s) ~ b(start) (s/start)^e with e = Q_a(start) + 1.
        if (!(start_exponent_ > -1.0))
            throw IndexViolation("b is not integrable at 0 (local index <= -2)");
        cumulative_[0] = b(start_) * start_ / (start_exponent_ + 1.0);
    }
    for (std::size_t k = 1; k < knots_.size(); ++k)
        cumulative_[k] = cumulative_[k - 1] + integrate(knots_[k - 1], knots_[k]);
}

double YoungPair::b(double t) const { return t <= 0.0 ? 0.0 : a_(t) * t; }

double YoungPair::integrate(double lo, double hi) const {
    return gk([this](double s) { return b(s); }, lo, hi, tol_);
}

double YoungPair::B(double t) const {
    if (t <= 0.0) return 0.0;
    if (t < start_) {
        if (a_.defined_at_zero()) return integrate(0.0, t);
        return cumulative_[0] * std::pow(t / start_, start_exponent_ + 1.0);
    }
    auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
    const auto k = static_cast<std::size_t>(it - knots_.begin()) - 1;
    return cumulative_[k] + integrate(knots_[k], t);
}

double YoungPair::conjugate(double y) const {
    if (y <= 0.0) return 0.0;
    auto f = [&](double s) { return s * y - B(s); };
    // Coarse scan over the knots (B is exact there), then Brent in the
    // bracketing cell. y s - B(s) is concave, so the cell is unimodal.
    std::size_t best = 0;
    double best_val = 0.0;  // s = 0
    bool at_zero = true;
    for (std::size_t k = 0; k < knots_.size(); ++k) {
        const double v = knots_[k] * y - cumulative_[k];
        if (v > best_val) {
            best_val = v;
            best = k;
            at_zero = false;
        }
    }
    double lo, hi;
    if (at_zero) {
        lo = 0.0;
        hi = knots_[0];
    } else if (best + 1 < knots_.size()) {
        lo = best == 0 ? 0.0 : knots_[best - 1];
        hi = knots_[best + 1];
    } else {
        // Maximizer beyond the table: double until f decreases.
        lo = knots_[best - 1];
        double s = knots_.back(), v = best_val;
        for (;;) {
            const double s2 = 2.0 * s;
            if (!std::isfinite(s2)) return kInf;
            const double v2 = f(s2);
            if (!std::isfinite(v2)) return kInf;
            if (v2 <= v) {
                hi = s2;
                break;
            }
            lo = s;
            s = s2;
            v = v2;
        }
        best_val = v;
    }
    const auto [x, v] = maximize(f, lo, hi);
    (void)x;
    return std::max(best_val, v);
}

YoungPair build_young_pair(const GrowthCoefficient& a, double quadrature_tol) {
    const Indices idx = a.indices();
    if (idx.lower < -1.0 - 1e-9)
        throw IndexViolation(fmt::format("i_a = {} < -1, b is not non-decreasing", idx.lower));
    const auto grid = default_grid();
    double prev = 0.0;
    for (double t : grid) {
        const double bt = a(t) * t;
        if (bt < prev * (1.0 - 1e-9))
            throw IndexViolation(fmt::format("b decreases near t = {}", t));
        prev = bt;
    }
    return YoungPair(a, quadrature_tol);
}

// ---------------------------------------------------------------------------
// Sandwich inequalities

std::vector<FittedConstant> SandwichReport::rows() const {
    auto ok = [](double v) { return std::isfinite(v) && v >= 0.0; };
    return {{"sandwich_c1", c1, std::isfinite(c1) && c1 > 0.0},
            {"sandwich_c2", c2, ok(c2)},
            {"sandwich_c3", c3, std::isfinite(c3) && c3 > 0.0},
            {"reg_young_bound", young_eps_bound, std::isfinite(young_eps_bound) && young_eps_bound > 0.0},
            {"reg_conjugate_bound", conjugate_eps_bound, std::isfinite(conjugate_eps_bound) && conjugate_eps_bound > 0.0}};
}

SandwichReport sandwich_check(const GrowthCoefficient& a, double epsilon,
                              std::span<const double> grid) {
    require(!grid.empty(), "sandwich grid is empty");
    const YoungPair young(a);
    const RegularizedCoefficient reg(a, epsilon);
    const YoungPair young_eps(reg.as_coefficient());
    const double Be = young.B(epsilon);

    double c3 = 0.0, c1_plain = kInf, c1_shift_inv = 0.0, young_eps_bound = 0.0, conjugate_eps_bound = 0.0;
    for (double t : grid) {
        const double lhs = reg(t) * t * t;
        const double Bt = young.B(t);
        c3 = std::max(c3, lhs / (Bt + Be));
        c1_plain = std::min(c1_plain, lhs / Bt);
        c1_shift_inv = std::max(c1_shift_inv, Bt / (lhs + Be));
        young_eps_bound = std::max(young_eps_bound, young_eps.B(t) / (Bt + Be));
        conjugate_eps_bound = std::max(conjugate_eps_bound, young.conjugate(reg(t) * t) / (Bt + Be));
    }
    SandwichReport r{};
    // Prefer the shift-free form c2 = 0 unless its constant degenerates on
    // the grid (it does when a_eps(t) t^2 / B(t) -> 0 as t -> 0).
    const double c1_shift = 1.0 / c1_shift_inv;
    if (c1_plain >= 0.5 * c1_shift) {
        r.c1 = c1_plain;
        r.c2 = 0.0;
    } else {
        r.c1 = c1_shift;
        r.c2 = 1.0;
    }
    r.c3 = c3;
    r.young_eps_bound = young_eps_bound;
    r.conjugate_eps_bound = conjugate_eps_bound;
    r.pass = true;
    for (const auto& row : r.rows()) r.pass = r.pass && row.pass;
    return r;
}

std::vector<FittedConstant> orlicz_checks(const GrowthCoefficient& a, double epsilon,
                                          std::span<const double> grid) {
    constexpr double tol = 1e-8;
    std::vector<FittedConstant> rows;
    const IndexReport sampled = compute_indices(a, grid);
    const Indices idx = a.indices();
    rows.push_back({"i_a", sampled.lower, std::isfinite(sampled.lower) && !sampled.nonfinite});
    rows.push_back({"s_a", sampled.upper, std::isfinite(sampled.upper) && !sampled.nonfinite});

    const RegularizedCoefficient reg(a, epsilon);
    std::vector<double> grid0(grid.begin(), grid.end());
    grid0.insert(grid0.begin(), 0.0);
    double qmin = kInf, qmax = -kInf;
    for (double t : grid0) {
        const double q = t * reg.derivative(t) / reg(t);
        qmin = std::min(qmin, q);
        qmax = std::max(qmax, q);
    }
    rows.push_back({"reg_index_lower", qmin, qmin >= std::min(idx.lower, 0.0) - tol});
    rows.push_back({"reg_index_upper", qmax, qmax <= std::max(idx.upper, 0.0) + tol});

    const YoungPair young = build_young_pair(a);
    std::vector<double> Bv(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) Bv[k] = young.B(grid[k]);

    // Convexity: slopes of the piecewise-linear interpolant are non-decreasing.
    double worst_slope = kInf;
    bool increasing = true;
    for (std::size_t k = 0; k + 2 < grid.size(); ++k) {
        const double s0 = (Bv[k + 1] - Bv[k]) / (grid[k + 1] - grid[k]);
        const double s1 = (Bv[k + 2] - Bv[k + 1]) / (grid[k + 2] - grid[k + 1]);
        increasing = increasing && s0 > 0.0;
        worst_slope = std::min(worst_slope, (s1 - s0) / s0);
    }
    rows.push_back({"B_convexity", worst_slope, increasing && worst_slope >= -tol});

    double r_lo = kInf, r_hi = 0.0, doubling = 0.0, conj = 0.0, envelope = 0.0;
    const double a1 = a(1.0);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double t = grid[k];
        const double tb = t * young.b(t);
        r_lo = std::min(r_lo, tb / Bv[k]);
        r_hi = std::max(r_hi, tb / Bv[k]);
        doubling = std::max(doubling, young.B(2.0 * t) / Bv[k]);
        conj = std::max(conj, young.conjugate(young.b(t)) / Bv[k]);
        const double lo = a1 * std::min(std::pow(t, idx.lower), std::pow(t, idx.upper));
        const double hi = a1 * std::max(std::pow(t, idx.lower), std::pow(t, idx.upper));
        envelope = std::max({envelope, lo / a(t), a(t) / hi});
    }
    rows.push_back({"tb_over_B_lower", r_lo, r_lo >= 1.0 - tol});
    rows.push_back({"tb_over_B_upper", r_hi, r_hi <= idx.upper + 2.0 + tol});
    rows.push_back({"B_doubling", doubling, std::isfinite(doubling) && doubling > 0.0});
    rows.push_back({"conjugate_of_b", conj, std::isfinite(conj) && conj > 0.0});
    rows.push_back({"power_envelope", envelope, envelope <= 1.0 + tol});

    const SandwichReport sw = sandwich_check(a, epsilon, grid);
    for (auto& row : sw.rows()) rows.push_back(std::move(row));
    return rows;
}

// ---------------------------------------------------------------------------
// V map and monotonicity

namespace {
double coefficient_at(const GrowthCoefficient& a, double epsilon, double t) {
    if (epsilon > 0.0) return a(std::hypot(t, epsilon));
    return a(t);
}

bool blows_up_at_zero(const GrowthCoefficient& a) {
    return !a.defined_at_zero() && a.indices().lower < 0.0;
}
}  // namespace

Eigen::MatrixXd v_map(const GrowthCoefficient& a, double epsilon, const Eigen::MatrixXd& P) {
    require(epsilon >= 0.0, "v_map needs epsilon >= 0");
    const double t = P.norm();
    if (epsilon == 0.0 && t == 0.0) {
        if (blows_up_at_zero(a)) throw SingularAtZero("a blows up at 0 and eps = 0, |P| = 0");
        return Eigen::MatrixXd::Zero(P.rows(), P.cols());
    }
    return std::sqrt(coefficient_at(a, epsilon, t)) * P;
}

RatioRange monotonicity_ratio(const GrowthCoefficient& a, double epsilon,
                              std::span<const std::pair<Eigen::MatrixXd, Eigen::MatrixXd>> pairs) {
    RatioRange r{kInf, 0.0};
    for (const auto& [P, Q] : pairs) {
        const Eigen::MatrixXd AP = coefficient_at(a, epsilon, P.norm()) * P;
        const Eigen::MatrixXd AQ = coefficient_at(a, epsilon, Q.norm()) * Q;
        const double num = (AP - AQ).cwiseProduct(P - Q).sum();
        const double den = (v_map(a, epsilon, P) - v_map(a, epsilon, Q)).squaredNorm();
        if (den == 0.0) continue;
        r.min = std::min(r.min, num / den);
        r.max = std::max(r.max, num / den);
    }
    return r;
}

std::vector<LimitStep> regularization_limit(const GrowthCoefficient& a, double L, int k_max) {
    require(L > 0.0, "regularization limit needs L > 0");
    require(k_max >= 0, "regularization limit needs k_max >= 0");
    std::vector<LimitStep> out;
    for (int k = 0; k <= k_max; ++k) {
        const double eps = std::ldexp(1.0, -k);
        auto err = [&](double t) { return std::abs(a(std::hypot(t, eps)) - a(t)) * t; };
        // The deviation lives on the scale t ~ eps, so the grid must reach well below it.
        const double lo = std::max(a.domain_floor(), std::min(eps, L) * 1e-6);
        const auto grid = log_grid(lo, L, 4000);
        std::size_t best = 0;
        double best_val = -1.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double v = err(grid[i]);
            if (v > best_val) {
                best_val = v;
                best = i;
            }
        }
        const double g_lo = grid[best == 0 ? 0 : best - 1];
        const double g_hi = grid[std::min(best + 1, grid.size() - 1)];
        if (g_hi > g_lo) best_val = std::max(best_val, maximize(err, g_lo, g_hi).second);
        out.push_back({eps, best_val});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sobolev auxiliaries

SobolevAux::SobolevAux(YoungPair young, double sigma, int dimension)
    : young_(std::move(young)), sigma_(sigma), n_(dimension) {
    require(n_ >= 2, "Sobolev check needs dimension >= 2");
    const double sB = young_.coefficient().indices().upper + 2.0;
    if (!(sigma_ > std::max(sB, static_cast<double>(n_))))
        throw DomainError(fmt::format("sigma = {} must exceed max(s_B <= {}, n = {})", sigma_, sB, n_));
    sigma_conj_ = sigma_ / (sigma_ - 1.0);

    knots_ = log_grid(kFirstKnot, 1e15, 27 * 8 + 1);
    cumulative_.resize(knots_.size());
    // Below the first knot B(t) ~ B(k0) (t/k0)^m with m = k0 b(k0) / B(k0), so
    // the weight is a power of t and its integral is closed-form.
    const double k0 = knots_[0];
    const double m = k0 * young_.b(k0) / young_.B(k0);
    head_exponent_ = 1.0 + (1.0 - m) / (sigma_ - 1.0);
    if (!(head_exponent_ > 0.0) || !std::isfinite(head_exponent_))
        throw DivergentIntegral("int_0 (t/A(t))^(1/(sigma-1)) dt diverges at 0");
    cumulative_[0] = weight(k0) * k0 / head_exponent_;
    if (!std::isfinite(cumulative_[0])) throw DivergentIntegral("H_sigma head integral is not finite");
    for (std::size_t k = 1; k < knots_.size(); ++k) {
        const double seg = partial(knots_[k - 1], knots_[k]);
        if (!std::isfinite(seg)) throw DivergentIntegral("H_sigma quadrature produced a non-finite value");
        cumulative_[k] = cumulative_[k - 1] + seg;
    }
    // Same power-law completion beyond the last knot.
    const double kl = knots_.back();
    tail_exponent_ = 1.0 + (1.0 - kl * young_.b(kl) / young_.B(kl)) / (sigma_ - 1.0);
    if (!(tail_exponent_ > 0.0)) throw DivergentIntegral("H_sigma tail exponent is not positive");
}

double SobolevAux::weight(double t) const {
    if (t <= 0.0) return 0.0;
    return std::pow(t / young_.B(t), 1.0 / (sigma_ - 1.0));
}

double SobolevAux::partial(double lo, double hi) const {
    return gk([this](double t) { return weight(t); }, lo, hi, 1e-10);
}

double SobolevAux::H(double s) const {
    if (s <= 0.0) return 0.0;
    double I;
    if (s < knots_[0]) {
        I = cumulative_[0] * std::pow(s / knots_[0], head_exponent_);
    } else if (s >= knots_.back()) {
        I = cumulative_.back() * std::pow(s / knots_.back(), tail_exponent_);
    } else {
        auto it = std::upper_bound(knots_.begin(), knots_.end(), s);
        const auto k = static_cast<std::size_t>(it - knots_.begin()) - 1;
        I = cumulative_[k] + partial(knots_[k], s);
    }
    return std::pow(I, 1.0 / sigma_conj_);
}

double SobolevAux::H_inverse(double t) const {
    if (t <= 0.0) return 0.0;
    const double target = std::pow(t, sigma_conj_);
    if (target >= cumulative_.back())
        return knots_.back() * std::pow(target / cumulative_.back(), 1.0 / tail_exponent_);
    if (target <= cumulative_[0]) return knots_[0] * std::pow(target / cumulative_[0], 1.0 / head_exponent_);
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    const auto k = static_cast<std::size_t>(it - cumulative_.begin()) - 1;
    const double lo = knots_[k];
    const double hi = knots_[std::min(k + 1, knots_.size() - 1)];
    const double base = cumulative_[k];
    if (target <= base) return lo;
    if (target >= cumulative_[k + 1]) return hi;
    // Safeguarded Newton: I' is the weight itself. Start from the log-log
    // interpolant of the cumulative table.
    double a = lo, b = hi;
    double s = lo * std::pow(hi / lo, std::log(target / base) / std::log(cumulative_[k + 1] / base));
    for (int it = 0; it < 60; ++it) {
        const double F = base + partial(lo, s) - target;
        if (std::abs(F) <= 1e-15 * target) break;
        (F < 0.0 ? a : b) = s;
        double next = s - F / weight(s);
        if (!(next > a && next < b)) next = 0.5 * (a + b);
        if (std::abs(next - s) <= 1e-15 * s) {
            s = next;
            break;
        }
        s = next;
    }
    return s;
}

double SobolevAux::A_sigma(double t) const { return young_.B(H_inverse(t)); }

namespace {
// Integral over [lo, hi] split at the cuts inside it.
template <class F>
double split_gk(F&& f, double lo, double hi, const std::vector<double>& cuts, double tol) {
    double total = 0.0, a = lo;
    for (double c : cuts) {
        if (c <= a || c >= hi) continue;
        total += gk(f, a, c, tol);
        a = c;
    }
    return total + gk(f, a, hi, tol);
}
}  // namespace

SobolevResult sobolev_check(const SobolevAux& aux, const Profile& phi, double measure,
                            double constant, double tol, std::span<const double> breakpoints) {
    require(measure > 0.0, "Sobolev check needs |Omega| > 0");
    require(constant > 0.0, "Sobolev check needs a positive constant");
    const auto& young = aux.young();
    const double n = aux.dimension();
    std::vector<double> cuts(breakpoints.begin(), breakpoints.end());
    std::sort(cuts.begin(), cuts.end());
    std::vector<double> wcuts;
    for (double c : cuts)
        if (c > 0.0) wcuts.push_back(std::pow(c, 1.0 / n));

    const double rhs = split_gk([&](double s) { return young.B(phi(s)); }, 0.0, measure, cuts, 1e-10);
    if (rhs == 0.0) return {0.0, 0.0, constant, true};

    const double scale =
        constant * std::pow(measure, 1.0 / n - 1.0 / aux.sigma()) * std::pow(rhs, 1.0 / aux.sigma());
    // S phi(s) = int_s^M phi(r) r^(-1/n') dr, with r = w^n to remove the
    // weight singularity: n int_{s^(1/n)}^{M^(1/n)} phi(w^n) dw.
    auto S = [&](double s) {
        return n * split_gk([&](double w) { return phi(std::pow(w, n)); }, std::pow(s, 1.0 / n),
                            std::pow(measure, 1.0 / n), wcuts, 1e-10);
    };
    const double lhs =
        split_gk([&](double s) { return aux.A_sigma(S(s) / scale); }, 0.0, measure, cuts, 1e-8);
    return {lhs, rhs, constant, lhs <= rhs * (1.0 + tol)};
}

double calibrate_sobolev_constant(const SobolevAux& aux, double measure) {
    double c_fit = 0.0;
    for (double support : {1.0, 0.5, 0.25, 0.125}) {
        for (double amplitude : {0.1, 1.0, 10.0}) {
            const double r0 = support * measure;
            Profile phi = [=](double r) { return r < r0 ? amplitude : 0.0; };
            const std::array<double, 1> cut{r0};
            auto holds = [&](double c) { return sobolev_check(aux, phi, measure, c, 0.0, cut).pass; };
            double lo = 1e-4, hi = 1e4;
            if (holds(lo)) {
                c_fit = std::max(c_fit, lo);
                continue;
            }
            if (!holds(hi)) throw DomainError("Sobolev calibration: no admissible constant below 1e4");
            for (int it = 0; it < 60 && hi / lo > 1.0 + 1e-3; ++it) {
                const double mid = std::sqrt(lo * hi);
                (holds(mid) ? hi : lo) = mid;
            }
            c_fit = std::max(c_fit, hi);
        }
    }
    return c_fit;
}

}  // namespace plap::orlicz
