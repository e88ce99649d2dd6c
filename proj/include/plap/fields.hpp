#pragma once

// Smooth maps u: R^n -> R^N and their derivatives up to order three at a point.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace plap {
class Rng;
}

namespace plap::fields {

constexpr int kMaxDim = 4;

// ---------------------------------------------------------------------------
// Forward-mode derivative arithmetic. Dual<Dual<Dual<double>>> carries one
// seeded direction per nesting level, which yields a single third derivative.

template <class T>
struct Dual {
    T v{};
    T d{};

    constexpr Dual() = default;
    constexpr Dual(double c) : v(c), d(0.0) {}  // NOLINT: implicit constants are convenient
    constexpr Dual(T value, T deriv) : v(value), d(deriv) {}

    Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
    Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
    Dual& operator*=(const Dual& o) { *this = *this * o; return *this; }
    Dual& operator/=(const Dual& o) { *this = *this / o; return *this; }
};

template <class T> Dual<T> operator-(const Dual<T>& a) { return {-a.v, -a.d}; }
template <class T> Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) { return {a.v + b.v, a.d + b.d}; }
template <class T> Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) { return {a.v - b.v, a.d - b.d}; }
template <class T> Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
template <class T> Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
    return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
}
template <class T> Dual<T> operator+(const Dual<T>& a, double c) { return {a.v + c, a.d}; }
template <class T> Dual<T> operator+(double c, const Dual<T>& a) { return {c + a.v, a.d}; }
template <class T> Dual<T> operator-(const Dual<T>& a, double c) { return {a.v - c, a.d}; }
template <class T> Dual<T> operator-(double c, const Dual<T>& a) { return {c - a.v, -a.d}; }
template <class T> Dual<T> operator*(const Dual<T>& a, double c) { return {a.v * c, a.d * c}; }
template <class T> Dual<T> operator*(double c, const Dual<T>& a) { return {c * a.v, c * a.d}; }
template <class T> Dual<T> operator/(const Dual<T>& a, double c) { return {a.v / c, a.d / c}; }
template <class T> Dual<T> operator/(double c, const Dual<T>& a) { return {c / a.v, -c * a.d / (a.v * a.v)}; }

template <class T> Dual<T> sin(const Dual<T>& a) { using std::sin, std::cos; return {sin(a.v), a.d * cos(a.v)}; }
template <class T> Dual<T> cos(const Dual<T>& a) { using std::sin, std::cos; return {cos(a.v), -(a.d * sin(a.v))}; }
template <class T> Dual<T> exp(const Dual<T>& a) { using std::exp; const T e = exp(a.v); return {e, a.d * e}; }
template <class T> Dual<T> log(const Dual<T>& a) { using std::log; return {log(a.v), a.d / a.v}; }
template <class T> Dual<T> sqrt(const Dual<T>& a) {
    using std::sqrt;
    const T s = sqrt(a.v);
    return {s, a.d / (2.0 * s)};
}
template <class T> Dual<T> pow(const Dual<T>& a, double e) {
    using std::pow;
    return {pow(a.v, e), a.d * (e * pow(a.v, e - 1.0))};
}

using D3 = Dual<Dual<Dual<double>>>;

// ---------------------------------------------------------------------------

/// Derivatives of u up to order three at one point. grad rows are the
/// component gradients; hess[alpha] is the Hessian of u^alpha.
struct Jet3 {
    int n = 0;
    int N = 0;
    Eigen::VectorXd value;
    Eigen::MatrixXd grad;
    std::vector<Eigen::MatrixXd> hess;
    std::vector<double> third_flat;  // [alpha][i][j][k]

    Jet3() = default;
    Jet3(int n, int N);

    double& third(int alpha, int i, int j, int k) { return third_flat[index(alpha, i, j, k)]; }
    double third(int alpha, int i, int j, int k) const { return third_flat[index(alpha, i, j, k)]; }

    Jet3& operator+=(const Jet3& o);
    Jet3& operator*=(double c);

private:
    std::size_t index(int alpha, int i, int j, int k) const {
        return ((static_cast<std::size_t>(alpha) * n + i) * n + j) * n + k;
    }
};

struct Monomial {
    std::vector<int> exponents;
    double coeff;
};

/// Profile phi of r = |x| with (phi, phi', phi'', phi''').
using RadialProfile = std::function<std::array<double, 4>(double)>;
/// Black-box field evaluated in triple-nested forward mode.
using ClosureFn = std::function<void(std::span<const D3> x, std::span<D3> out)>;

class SmoothField {
public:
    struct Node;

    static SmoothField polynomial(int n, std::vector<std::vector<Monomial>> components);
    /// u(x) = phi(|x|) c.
    static SmoothField radial(int n, RadialProfile profile, Eigen::VectorXd direction);
    static SmoothField closure(int n, int N, ClosureFn fn);
    static SmoothField from_json(const nlohmann::json& spec);

    int dim_in() const { return n_; }
    int dim_out() const { return N_; }
    const std::string& kind() const { return kind_; }

    /// Coefficient table of a polynomial field (empty for other kinds).
    const std::vector<std::vector<Monomial>>& monomials() const;
    nlohmann::json to_json() const;

    SmoothField scaled(double c) const;
    friend SmoothField operator+(const SmoothField& a, const SmoothField& b);

    const Node& node() const { return *node_; }

private:
    SmoothField(int n, int N, std::string kind, std::shared_ptr<const Node> node)
        : n_(n), N_(N), kind_(std::move(kind)), node_(std::move(node)) {}

    int n_;
    int N_;
    std::string kind_;
    std::shared_ptr<const Node> node_;
};

/// Exact derivatives (polynomial, radial) or forward-mode exact (closure).
/// Throws SingularPoint for radial fields at x = 0.
Jet3 jet(const SmoothField& u, std::span<const double> x);
Jet3 jet(const SmoothField& u, const Eigen::VectorXd& x);

struct DerivedQuantities {
    double grad_norm;                      // |grad u|
    Eigen::VectorXd laplacian;             // Delta u in R^N
    double hess_sq;                        // |grad^2 u|^2
    Eigen::VectorXd grad_hess_contraction; // m = sum_alpha hess^alpha grad^alpha
    std::optional<Eigen::VectorXd> grad_of_norm;   // grad |grad u| = m / |grad u|
    std::optional<Eigen::VectorXd> normalized_mixed;  // (grad u / |grad u|) (grad |grad u|)^T
};

/// Below `tau` the normalized quantities are left empty, or CriticalPoint is
/// thrown when `require_normalized` is set.
DerivedQuantities derived_quantities(const Jet3& j, double tau = 1e-8,
                                     bool require_normalized = false);

/// All monomials of total degree <= degree, coefficients uniform in [-1, 1].
SmoothField random_polynomial(Rng& rng, int n, int N, int degree);

}  // namespace plap::fields
