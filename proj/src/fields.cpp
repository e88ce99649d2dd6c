#include "plap/fields.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "plap/errors.hpp"
#include "plap/rng.hpp"

namespace plap::fields {

Jet3::Jet3(int n_, int N_)
    : n(n_),
      N(N_),
      value(Eigen::VectorXd::Zero(N_)),
      grad(Eigen::MatrixXd::Zero(N_, n_)),
      hess(static_cast<std::size_t>(N_), Eigen::MatrixXd::Zero(n_, n_)),
      third_flat(static_cast<std::size_t>(N_) * n_ * n_ * n_, 0.0) {}

Jet3& Jet3::operator+=(const Jet3& o) {
    require(n == o.n && N == o.N, "jet shapes differ");
    value += o.value;
    grad += o.grad;
    for (int a = 0; a < N; ++a) hess[a] += o.hess[a];
    for (std::size_t k = 0; k < third_flat.size(); ++k) third_flat[k] += o.third_flat[k];
    return *this;
}

Jet3& Jet3::operator*=(double c) {
    value *= c;
    grad *= c;
    for (auto& h : hess) h *= c;
    for (auto& t : third_flat) t *= c;
    return *this;
}

struct SmoothField::Node {
    virtual ~Node() = default;
    virtual Jet3 eval(std::span<const double> x) const = 0;
};

namespace {

void check_dims(int n, int N) {
    if (n < 2 || n > kMaxDim) throw DomainError(fmt::format("dim_in must be in [2, {}], got {}", kMaxDim, n));
    if (N < 1 || N > kMaxDim) throw DomainError(fmt::format("dim_out must be in [1, {}], got {}", kMaxDim, N));
}

// Writes the full symmetric orbit of a third derivative.
void set_third(Jet3& J, int a, int i, int j, int k, double v) {
    J.third(a, i, j, k) = v;
    J.third(a, i, k, j) = v;
    J.third(a, j, i, k) = v;
    J.third(a, j, k, i) = v;
    J.third(a, k, i, j) = v;
    J.third(a, k, j, i) = v;
}

// ---------------------------------------------------------------------------

struct PolynomialNode final : SmoothField::Node {
    int n;
    std::vector<std::vector<Monomial>> comps;

    // d^|c| / dx^c of x^e, times the coefficient.
    double derivative(const Monomial& m, std::span<const double> x, const std::array<int, kMaxDim>& c) const {
        double v = m.coeff;
        for (int d = 0; d < n; ++d) {
            const int e = m.exponents[d];
            if (c[d] > e) return 0.0;
            for (int q = 0; q < c[d]; ++q) v *= e - q;
            for (int q = 0; q < e - c[d]; ++q) v *= x[d];
        }
        return v;
    }

    Jet3 eval(std::span<const double> x) const override {
        const int N = static_cast<int>(comps.size());
        Jet3 J(n, N);
        for (int a = 0; a < N; ++a) {
            for (const Monomial& m : comps[a]) {
                std::array<int, kMaxDim> c{};
                J.value[a] += derivative(m, x, c);
                for (int i = 0; i < n; ++i) {
                    c[i]++;
                    J.grad(a, i) += derivative(m, x, c);
                    for (int j = i; j < n; ++j) {
                        c[j]++;
                        J.hess[a](i, j) += derivative(m, x, c);
                        for (int k = j; k < n; ++k) {
                            c[k]++;
                            J.third(a, i, j, k) += derivative(m, x, c);
                            c[k]--;
                        }
                        c[j]--;
                    }
                    c[i]--;
                }
            }
            for (int i = 0; i < n; ++i)
                for (int j = i; j < n; ++j) {
                    J.hess[a](j, i) = J.hess[a](i, j);
                    for (int k = j; k < n; ++k) set_third(J, a, i, j, k, J.third(a, i, j, k));
                }
        }
        return J;
    }
};

struct RadialNode final : SmoothField::Node {
    int n;
    RadialProfile profile;
    Eigen::VectorXd dir;

    Jet3 eval(std::span<const double> x) const override {
        const int N = static_cast<int>(dir.size());
        Eigen::Map<const Eigen::VectorXd> X(x.data(), n);
        const double r = X.norm();
        if (r == 0.0) throw SingularPoint("radial field evaluated at x = 0");
        const Eigen::VectorXd e = X / r;
        const auto [p0, p1, p2, p3] = profile(r);
        const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
        // Derivatives of r: r_ij = (d_ij - e_i e_j)/r,
        // r_ijk = -(d_ij e_k + d_ik e_j + d_jk e_i - 3 e_i e_j e_k)/r^2.
        const Eigen::MatrixXd r2 = (I - e * e.transpose()) / r;
        auto r3 = [&](int i, int j, int k) {
            return -(I(i, j) * e[k] + I(i, k) * e[j] + I(j, k) * e[i] - 3.0 * e[i] * e[j] * e[k]) / (r * r);
        };
        Jet3 J(n, N);
        Eigen::MatrixXd H(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) H(i, j) = p2 * e[i] * e[j] + p1 * r2(i, j);
        for (int a = 0; a < N; ++a) {
            J.value[a] = p0 * dir[a];
            J.grad.row(a) = dir[a] * p1 * e.transpose();
            J.hess[a] = dir[a] * H;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    for (int k = 0; k < n; ++k) {
                        const double t = p3 * e[i] * e[j] * e[k] +
                                         p2 * (r2(i, k) * e[j] + e[i] * r2(j, k) + r2(i, j) * e[k]) +
                                         p1 * r3(i, j, k);
                        J.third(a, i, j, k) = dir[a] * t;
                    }
        }
        return J;
    }
};

struct ClosureNode final : SmoothField::Node {
    int n;
    int N;
    ClosureFn fn;

    Jet3 eval(std::span<const double> x) const override {
        Jet3 J(n, N);
        std::vector<D3> X(n), out(N);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j)
                for (int k = j; k < n; ++k) {
                    for (int m = 0; m < n; ++m) {
                        X[m] = D3(x[m]);
                        X[m].v.v.d = m == i ? 1.0 : 0.0;
                        X[m].v.d.v = m == j ? 1.0 : 0.0;
                        X[m].d.v.v = m == k ? 1.0 : 0.0;
                    }
                    std::fill(out.begin(), out.end(), D3(0.0));
                    fn(X, out);
                    for (int a = 0; a < N; ++a) {
                        const D3& o = out[a];
                        J.value[a] = o.v.v.v;
                        J.grad(a, i) = o.v.v.d;
                        J.grad(a, j) = o.v.d.v;
                        J.grad(a, k) = o.d.v.v;
                        J.hess[a](i, j) = J.hess[a](j, i) = o.v.d.d;
                        J.hess[a](i, k) = J.hess[a](k, i) = o.d.v.d;
                        J.hess[a](j, k) = J.hess[a](k, j) = o.d.d.v;
                        set_third(J, a, i, j, k, o.d.d.d);
                    }
                }
        return J;
    }
};

struct CombinationNode final : SmoothField::Node {
    std::vector<std::pair<double, SmoothField>> terms;

    Jet3 eval(std::span<const double> x) const override {
        Jet3 J = terms.front().second.node().eval(x);
        J *= terms.front().first;
        for (std::size_t t = 1; t < terms.size(); ++t) {
            Jet3 K = terms[t].second.node().eval(x);
            K *= terms[t].first;
            J += K;
        }
        return J;
    }
};

}  // namespace

// ---------------------------------------------------------------------------

SmoothField SmoothField::polynomial(int n, std::vector<std::vector<Monomial>> components) {
    check_dims(n, static_cast<int>(components.size()));
    for (const auto& comp : components)
        for (const auto& m : comp) {
            if (static_cast<int>(m.exponents.size()) != n)
                throw DomainError(fmt::format("monomial has {} exponents, expected {}", m.exponents.size(), n));
            for (int e : m.exponents)
                if (e < 0) throw DomainError("monomial exponents must be nonnegative");
        }
    auto node = std::make_shared<PolynomialNode>();
    node->n = n;
    node->comps = std::move(components);
    const int N = static_cast<int>(node->comps.size());
    return SmoothField(n, N, "polynomial", std::move(node));
}

SmoothField SmoothField::radial(int n, RadialProfile profile, Eigen::VectorXd direction) {
    check_dims(n, static_cast<int>(direction.size()));
    require(static_cast<bool>(profile), "radial field needs a profile");
    auto node = std::make_shared<RadialNode>();
    node->n = n;
    node->profile = std::move(profile);
    node->dir = std::move(direction);
    const int N = static_cast<int>(node->dir.size());
    return SmoothField(n, N, "radial", std::move(node));
}

SmoothField SmoothField::closure(int n, int N, ClosureFn fn) {
    check_dims(n, N);
    require(static_cast<bool>(fn), "closure field needs a function");
    auto node = std::make_shared<ClosureNode>();
    node->n = n;
    node->N = N;
    node->fn = std::move(fn);
    return SmoothField(n, N, "closure", std::move(node));
}

const std::vector<std::vector<Monomial>>& SmoothField::monomials() const {
    static const std::vector<std::vector<Monomial>> empty;
    if (const auto* p = dynamic_cast<const PolynomialNode*>(node_.get())) return p->comps;
    return empty;
}

SmoothField SmoothField::scaled(double c) const {
    auto node = std::make_shared<CombinationNode>();
    node->terms.emplace_back(c, *this);
    return SmoothField(n_, N_, "combination", std::move(node));
}

SmoothField operator+(const SmoothField& a, const SmoothField& b) {
    require(a.n_ == b.n_ && a.N_ == b.N_, "cannot add fields of different shapes");
    auto node = std::make_shared<CombinationNode>();
    node->terms.emplace_back(1.0, a);
    node->terms.emplace_back(1.0, b);
    return SmoothField(a.n_, a.N_, "combination", std::move(node));
}

nlohmann::json SmoothField::to_json() const {
    const auto* p = dynamic_cast<const PolynomialNode*>(node_.get());
    if (!p) throw DomainError("only polynomial fields serialize to JSON");
    nlohmann::json comps = nlohmann::json::object();
    for (std::size_t a = 0; a < p->comps.size(); ++a) {
        nlohmann::json list = nlohmann::json::array();
        for (const auto& m : p->comps[a]) list.push_back({{"exponents", m.exponents}, {"coeff", m.coeff}});
        comps[std::to_string(a)] = std::move(list);
    }
    return {{"n", n_}, {"N", N_}, {"components", std::move(comps)}};
}

SmoothField SmoothField::from_json(const nlohmann::json& spec) {
    if (!spec.is_object() || !spec.contains("components") || !spec["components"].is_object())
        throw ConfigError("field.components: expected an object {component: [monomials]}");
    const auto& comps = spec["components"];
    int N = 0;
    for (auto it = comps.begin(); it != comps.end(); ++it) {
        int a = -1;
        try {
            a = std::stoi(it.key());
        } catch (const std::exception&) {
        }
        if (a < 0) throw ConfigError(fmt::format("field.components: bad component key '{}'", it.key()));
        N = std::max(N, a + 1);
    }
    if (spec.contains("N")) N = std::max(N, spec["N"].get<int>());
    int n = spec.contains("n") ? spec["n"].get<int>() : -1;
    std::vector<std::vector<Monomial>> table(static_cast<std::size_t>(N));
    for (auto it = comps.begin(); it != comps.end(); ++it) {
        const int a = std::stoi(it.key());
        if (!it.value().is_array())
            throw ConfigError(fmt::format("field.components.{}: expected an array", it.key()));
        for (std::size_t q = 0; q < it.value().size(); ++q) {
            const auto& m = it.value()[q];
            const std::string where = fmt::format("field.components.{}[{}]", it.key(), q);
            if (!m.is_object() || !m.contains("exponents") || !m["exponents"].is_array() ||
                !m.contains("coeff") || !m["coeff"].is_number())
                throw ConfigError(where + ": expected {exponents: [...], coeff: number}");
            Monomial mono{m["exponents"].get<std::vector<int>>(), m["coeff"].get<double>()};
            if (n < 0) n = static_cast<int>(mono.exponents.size());
            table[a].push_back(std::move(mono));
        }
    }
    if (n < 0) throw ConfigError("field: cannot infer the input dimension");
    try {
        return polynomial(n, std::move(table));
    } catch (const DomainError& e) {
        throw ConfigError(fmt::format("field: {}", e.what()));
    }
}

Jet3 jet(const SmoothField& u, std::span<const double> x) {
    if (static_cast<int>(x.size()) != u.dim_in())
        throw DomainError(fmt::format("point has dimension {}, field expects {}", x.size(), u.dim_in()));
    return u.node().eval(x);
}

Jet3 jet(const SmoothField& u, const Eigen::VectorXd& x) {
    return jet(u, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

DerivedQuantities derived_quantities(const Jet3& j, double tau, bool require_normalized) {
    DerivedQuantities q;
    q.grad_norm = j.grad.norm();
    q.laplacian.resize(j.N);
    q.hess_sq = 0.0;
    q.grad_hess_contraction = Eigen::VectorXd::Zero(j.n);
    for (int a = 0; a < j.N; ++a) {
        q.laplacian[a] = j.hess[a].trace();
        q.hess_sq += j.hess[a].squaredNorm();
        q.grad_hess_contraction += j.hess[a] * j.grad.row(a).transpose();
    }
    if (q.grad_norm < tau) {
        if (require_normalized)
            throw CriticalPoint(fmt::format("|grad u| = {} below threshold {}", q.grad_norm, tau));
        return q;
    }
    q.grad_of_norm = q.grad_hess_contraction / q.grad_norm;
    q.normalized_mixed = j.grad * *q.grad_of_norm / q.grad_norm;
    return q;
}

SmoothField random_polynomial(Rng& rng, int n, int N, int degree) {
    check_dims(n, N);
    require(degree >= 0, "polynomial degree must be nonnegative");
    std::vector<std::vector<int>> exps;
    std::vector<int> e(static_cast<std::size_t>(n), 0);
    // Enumerate exponent tuples with total degree <= degree in lexicographic order.
    std::function<void(int, int)> rec = [&](int d, int left) {
        if (d == n) {
            exps.push_back(e);
            return;
        }
        for (int k = 0; k <= left; ++k) {
            e[d] = k;
            rec(d + 1, left - k);
        }
        e[d] = 0;
    };
    rec(0, degree);
    std::vector<std::vector<Monomial>> comps(static_cast<std::size_t>(N));
    for (auto& comp : comps)
        for (const auto& ex : exps) comp.push_back({ex, rng.uniform(-1.0, 1.0)});
    return SmoothField::polynomial(n, std::move(comps));
}

}  // namespace plap::fields
