#pragma once

// Maximization of D = J - delta J0 - sigma J1 over gradient/Hessian
// configurations, with the closed-form bound and the ellipsoid geometry
// behind it.

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

namespace plap::sharpness {

constexpr int kMaxDim = 4;
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

/// omega[alpha] in R^n with sum |omega|^2 <= 1; h[alpha] symmetric n x n with
/// sum |H|^2 = 1.
struct SharpnessConfig {
    int n = 0;
    int N = 0;
    std::array<Vec, kMaxDim> omega;
    std::array<Mat, kMaxDim> h;

    SharpnessConfig() = default;
    SharpnessConfig(int n, int N);  // all zero

    double omega_sq() const;
    double h_sq() const;
};

struct Functionals {
    double J;   // |sum H omega|^2
    double J0;  // sum (omega . sum H omega)^2
    double J1;  // sum |H|^2
    double D;
};

/// Raw functionals, no constraint check.
Functionals functionals(const SharpnessConfig& c, double delta, double sigma);
/// Throws ConstraintViolation when the constraints fail beyond 1e-10.
Functionals evaluate(const SharpnessConfig& c, double delta, double sigma);

/// J1 + 2(p-2) J + (p-2)^2 J0: the quadratic form of the pointwise identity
/// in units of a^2 at a point where |grad u| = 1.
double quad_form(const Functionals& f, double p);

/// 0 for delta <= 1/3, else max{0, (delta+1)^2/(8 delta) - sigma}.
/// DomainError unless 0 <= delta <= 1/2 and delta + sigma >= 1.
double analytic_bound(double delta, double sigma);

struct PsiMax {
    double r_star;
    double value;
};
/// Maximum over r in [0,1] of psi(r) = (1+r)(1 - delta r)/2 - sigma.
PsiMax psi_profile(double delta, double sigma);

struct SearchOptions {
    int restarts = 200;
    int iterations = 10000;
    double step = 1e-2;
    std::uint64_t seed = 0;
    int keep = 5;
};

struct SearchResult {
    double best_D;
    SharpnessConfig best;
    std::vector<std::pair<double, SharpnessConfig>> top;  // descending D
};

/// Projected gradient ascent with random restarts; restart k draws from
/// Rng(seed, k).
SearchResult global_search(int n, int N, double delta, double sigma, const SearchOptions& opt = {});

/// One projected ascent step (exposed for tests).
void ascent_step(SharpnessConfig& c, double delta, double sigma, double step);
/// Symmetrize and normalize H to the unit sphere; pull omega into the unit ball.
void project(SharpnessConfig& c);

/// (delta, sigma) matched to exponent p: delta = (2-p)/2 and sigma = p/2 for
/// p in [4/3, 2), sigma = (delta+1)^2/(8 delta) for p in [1, 4/3).
std::pair<double, double> delta_sigma_for(double p);

/// Configuration attaining kappa_N(p) for p in [1, 4/3): r0 = p/(2(2-p)).
SharpnessConfig extremal_config(double p, int n = 2, int N = 2);

/// |H w|^2 - (w.Hw)^2/2 - |H|^2/2 + |H_perp|^2/2 for unit w.
double ellipsoid_identity(const Eigen::VectorXd& omega, const Eigen::MatrixXd& H);

struct Membership {
    double lhs;  // H w . W(w)^{-1} H w
    double rhs;  // |H|^2
    bool member;
};
Membership ellipsoid_membership(const Eigen::VectorXd& omega, const Eigen::MatrixXd& H);

struct Preimage {
    Eigen::MatrixXd H;  // symmetric, H omega = x
    double quad;        // x . W(omega)^{-1} x, equal to |H|^2
};
/// Throws SingularOmega for omega = 0.
Preimage ellipsoid_preimage(const Eigen::VectorXd& omega, const Eigen::VectorXd& x);

}  // namespace plap::sharpness
