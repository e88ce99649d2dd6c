#pragma once

// Young-function toolkit built on a growth coefficient a(t): the functions
// b(t) = a(t) t and B(t) = int_0^t b, their indices, the regularization
// a_eps(t) = a(sqrt(t^2 + eps^2)) and the sandwich inequalities relating them.

#include <Eigen/Dense>
#include <functional>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace plap::orlicz {

struct Indices {
    double lower;  // i_a = inf t a'(t) / a(t)
    double upper;  // s_a = sup t a'(t) / a(t)
};

/// A positive coefficient a on (domain_floor, inf) together with its
/// derivative. Immutable; copies share nothing mutable.
class GrowthCoefficient {
public:
    using Fn = std::function<double(double)>;

    GrowthCoefficient(std::string family, std::string parameter, Fn eval, Fn deriv,
                      double domain_floor, std::optional<Indices> analytic = std::nullopt,
                      Fn deriv_over_t = nullptr);

    /// a(t) = scale * t^(p-2).
    static GrowthCoefficient power(double p, double scale = 1.0);
    /// a(t) = t^(p-2) * log(1+t)^q.
    static GrowthCoefficient power_log(double p, double q);
    /// Piecewise power law through the (t, a) samples; a' is the finite
    /// difference slope of the log-log interpolant.
    static GrowthCoefficient tabulated(std::vector<std::pair<double, double>> points);
    /// {"family":"power","p":..} | {"family":"power_log","p":..,"q":..} |
    /// {"family":"tabulated","points":[[t,a],...]}. Throws ConfigError.
    static GrowthCoefficient from_json(const nlohmann::json& spec);

    double operator()(double t) const { return eval_(t); }
    double derivative(double t) const { return deriv_(t); }
    /// a'(t)/t; finite at t = 0 for regularized coefficients.
    double derivative_over_t(double t) const;
    /// Q_a(t) = t a'(t) / a(t).
    double q_ratio(double t) const;

    double domain_floor() const { return floor_; }
    bool defined_at_zero() const { return floor_ == 0.0; }
    const std::optional<Indices>& analytic_indices() const { return analytic_; }
    const std::string& family() const { return family_; }
    const std::string& parameter() const { return parameter_; }

    /// Analytic indices when known, otherwise sampled on the default grid.
    Indices indices() const;

private:
    std::string family_;
    std::string parameter_;
    Fn eval_;
    Fn deriv_;
    Fn deriv_over_t_;
    double floor_;
    std::optional<Indices> analytic_;
};

std::vector<double> log_grid(double lo, double hi, std::size_t count);
/// 10^3 log-spaced points on [1e-6, 1e6].
std::vector<double> default_grid();

struct IndexReport {
    double lower;
    double upper;
    bool nonfinite;  // some sample of Q_a was not finite (skipped)
};

/// Sampled (min, max) of Q_a over `grid`. Throws DomainError on an empty grid
/// and NonPositiveCoefficient when a(t) <= 0 at a sample.
IndexReport compute_indices(const GrowthCoefficient& a, std::span<const double> grid);

/// a_eps(t) = a(sqrt(t^2 + eps^2)), defined on [0, inf).
class RegularizedCoefficient {
public:
    RegularizedCoefficient(GrowthCoefficient base, double epsilon);

    double operator()(double t) const;
    double derivative(double t) const;
    double derivative_over_t(double t) const;

    double epsilon() const { return eps_; }
    const GrowthCoefficient& base() const { return base_; }
    /// The regularized coefficient as a plain GrowthCoefficient with
    /// domain_floor 0 and indices (min{i_a,0}, max{s_a,0}).
    const GrowthCoefficient& as_coefficient() const { return as_coeff_; }

private:
    GrowthCoefficient base_;
    double eps_;
    GrowthCoefficient as_coeff_;
};

RegularizedCoefficient regularize(const GrowthCoefficient& a, double epsilon);

/// b(t) = a(t) t and B(t) = int_0^t b(s) ds. B is tabulated at log-spaced
/// knots by adaptive Gauss-Kronrod quadrature and completed between knots.
class YoungPair {
public:
    explicit YoungPair(GrowthCoefficient a, double quadrature_tol = 1e-10);

    double b(double t) const;
    double B(double t) const;
    /// Young conjugate sup_{s>=0} (s y - B(s)), by grid search + Brent.
    double conjugate(double y) const;

    const GrowthCoefficient& coefficient() const { return a_; }
    double quadrature_tol() const { return tol_; }

private:
    double integrate(double lo, double hi) const;

    GrowthCoefficient a_;
    double tol_;
    double start_;          // first knot
    double start_exponent_; // local power of b below start_ (floor > 0)
    std::vector<double> knots_;
    std::vector<double> cumulative_;
};

/// Throws IndexViolation if b is sampled decreasing beyond tolerance.
YoungPair build_young_pair(const GrowthCoefficient& a, double quadrature_tol = 1e-10);

struct FittedConstant {
    std::string quantity;
    double value;
    bool pass;
};

/// Smallest constants on `grid` for
///   c1 B(t) - c2 B(eps) <= a_eps(t) t^2 <= c3 (B(t) + B(eps)),
///   B_eps(t) <= c (B(t) + B(eps)),   B~(b_eps(t)) <= c (B(t) + B(eps)).
struct SandwichReport {
    double c1, c2, c3;
    double young_eps_bound;
    double conjugate_eps_bound;
    bool pass;
    std::vector<FittedConstant> rows() const;
};

SandwichReport sandwich_check(const GrowthCoefficient& a, double epsilon,
                              std::span<const double> grid);

/// Every fitted inequality of the toolkit for one coefficient: index bounds of
/// a_eps, convexity of B, B <= t b <= (s_a+2) B, doubling of B, conjugate
/// bound, power sandwich and the eps sandwich above.
std::vector<FittedConstant> orlicz_checks(const GrowthCoefficient& a, double epsilon,
                                          std::span<const double> grid);

/// V_eps(P) = sqrt(a_eps(|P|)) P. eps = 0 uses a itself and throws
/// SingularAtZero for P = 0 when a blows up at 0.
Eigen::MatrixXd v_map(const GrowthCoefficient& a, double epsilon, const Eigen::MatrixXd& P);

struct RatioRange {
    double min;
    double max;
};

/// Range over the pairs of (a_eps(|P|)P - a_eps(|Q|)Q).(P-Q) / |V(P)-V(Q)|^2.
RatioRange monotonicity_ratio(const GrowthCoefficient& a, double epsilon,
                              std::span<const std::pair<Eigen::MatrixXd, Eigen::MatrixXd>> pairs);

struct LimitStep {
    double epsilon;
    double sup_error;  // sup_{0<t<=L} |a_eps(t) - a(t)| t
};

/// sup_{|P|<=L} |a_eps(|P|)P - a(|P|)P| along eps = 2^-k, k = 0..k_max.
std::vector<LimitStep> regularization_limit(const GrowthCoefficient& a, double L, int k_max);

/// H_sigma(s) = (int_0^s (t/A(t))^(1/(sigma-1)) dt)^(1/sigma') and
/// A_sigma = A o H_sigma^{-1} for the Young function A of a YoungPair.
class SobolevAux {
public:
    SobolevAux(YoungPair young, double sigma, int dimension = 2);

    double H(double s) const;
    double H_inverse(double t) const;
    double A_sigma(double t) const;

    const YoungPair& young() const { return young_; }
    double sigma() const { return sigma_; }
    int dimension() const { return n_; }

private:
    double weight(double t) const;
    double partial(double lo, double hi) const;

    YoungPair young_;
    double sigma_;
    int n_;
    double sigma_conj_;
    double head_exponent_;  // I(s) ~ s^head_exponent_ below the first knot
    double tail_exponent_;  // and beyond the last one
    std::vector<double> knots_;
    std::vector<double> cumulative_;
};

struct SobolevResult {
    double lhs;
    double rhs;
    double constant;
    bool pass;
};

using Profile = std::function<double(double)>;

/// Both sides of the one-dimensional reduction
///   int_0^M A_sigma( S phi(s) / (c M^(1/n-1/sigma) (int A(phi))^(1/sigma)) ) ds
///     <= int_0^M A(phi(s)) ds,   S phi(s) = int_s^M phi(r) r^(-1/n') dr.
/// `breakpoints` lists the discontinuities of phi in (0, M); the quadratures
/// split there.
SobolevResult sobolev_check(const SobolevAux& aux, const Profile& phi, double measure,
                            double constant, double tol = 1e-8,
                            std::span<const double> breakpoints = {});

/// Smallest c (to 0.1%, rounded up) making the reduction hold on a fixed
/// family of step profiles: four supports times three amplitudes.
double calibrate_sobolev_constant(const SobolevAux& aux, double measure);

}  // namespace plap::orlicz
