#pragma once

// Both sides of the pointwise second-order identity for div(a(|grad u|) grad u)
// and the lower bound with the sharp constant kappa_N(p).

#include <Eigen/Dense>
#include <optional>

#include "plap/fields.hpp"
#include "plap/orlicz.hpp"

namespace plap::pointwise {

/// N = 1: (p-1)^2 on [1,2), 1 on [2,inf).
/// N >= 2: 1 - (4-p)^2/8 on [1,4/3), (p-1)^2 on [4/3,2), 1 on [2,inf).
double kappa(int N, double p);

struct Options {
    double tau = 1e-8;
    // At |grad u| < tau with a coefficient defined at 0 (regularized), report
    // the terms instead of throwing CriticalPoint.
    bool report_at_critical = true;
    // Overrides kappa_N(i_a + 2) in the inequality gap.
    std::optional<double> kappa;
};

struct PointwiseReport {
    double lhs;        // |div(a grad u)|^2
    double div_term;   // div[a^2 ((Delta u)^T grad u - grad|grad u|^2 / 2)]
    double quad_term;  // a^2 [|D^2u|^2 + 2Q|grad|grad u||^2 + Q^2 |(grad u/|grad u|)(grad|grad u|)^T|^2]
    double identity_residual;
    double inequality_gap;  // lhs - div_term - kappa a^2 |D^2u|^2
    double kappa;
    double a_sq_hess_sq;    // a^2 |D^2u|^2
    double scale;           // max(|lhs|, |div_term|, |quad_term|, 1)
    double grad_norm;
};

PointwiseReport evaluate_identity(const orlicz::GrowthCoefficient& a, const fields::SmoothField& u,
                                  const Eigen::VectorXd& x, const Options& opt = {});

/// Inequality gap with kappa_N(i_a + 2), N = dim_out of u.
double check_inequality(const orlicz::GrowthCoefficient& a, const fields::SmoothField& u,
                        const Eigen::VectorXd& x, const Options& opt = {});

/// div(a(|grad u|) grad u) in R^N.
Eigen::VectorXd flux_divergence(const orlicz::GrowthCoefficient& a, const fields::SmoothField& u,
                                const Eigen::VectorXd& x, const Options& opt = {});

/// a(|grad u|)^2 ((Delta u)^T grad u - grad|grad u|^2 / 2) in R^n.
Eigen::VectorXd bracket_field(const orlicz::GrowthCoefficient& a, const fields::SmoothField& u,
                              const Eigen::VectorXd& x, const Options& opt = {});

struct Witness {
    fields::SmoothField field;
    Eigen::VectorXd point;
    double ratio;  // quad_term / (a^2 |D^2u|^2) at the point for a = t^(p-2)
};

/// Field and point at which the ratio quad_term / (a^2 |D^2u|^2) equals kappa_N(p).
Witness sharpness_witness(int N, double p, int n = 2);

}  // namespace plap::pointwise
