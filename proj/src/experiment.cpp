#include "plap/experiment.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <filesystem>
#include <optional>
#include <fmt/format.h>
#include <fstream>

#include "plap/errors.hpp"
#include "plap/fields.hpp"
#include "plap/orlicz.hpp"
#include "plap/pointwise.hpp"
#include "plap/rng.hpp"
#include "plap/sharpness.hpp"
#include "plap/solver.hpp"

namespace plap::experiment {

namespace {

using nlohmann::json;

// Typed access to one JSON object with field-path diagnostics.
class Params {
public:
    Params(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(fmt::format("{}: expected an object", path_));
    }

    bool has(const char* key) const { return j_.contains(key); }
    std::string where(const char* key) const { return path_ + "." + key; }

    double number(const char* key, std::optional<double> def = std::nullopt) const {
        if (!j_.contains(key)) return fallback(key, def);
        if (!j_[key].is_number()) throw ConfigError(fmt::format("{}: expected a number", where(key)));
        return j_[key].get<double>();
    }

    int integer(const char* key, std::optional<int> def = std::nullopt, int lo = INT32_MIN) const {
        if (!j_.contains(key)) return fallback(key, def);
        const json& v = j_[key];
        if (!v.is_number() || (v.is_number_float() && v.get<double>() != std::floor(v.get<double>())))
            throw ConfigError(fmt::format("{}: expected an integer", where(key)));
        const int x = static_cast<int>(v.get<double>());
        if (x < lo) throw ConfigError(fmt::format("{}: must be >= {}, got {}", where(key), lo, x));
        return x;
    }

    std::string string(const char* key, std::optional<std::string> def = std::nullopt) const {
        if (!j_.contains(key)) return fallback(key, def);
        if (!j_[key].is_string()) throw ConfigError(fmt::format("{}: expected a string", where(key)));
        return j_[key].get<std::string>();
    }

    std::vector<double> numbers(const char* key, std::optional<std::vector<double>> def = std::nullopt) const {
        if (!j_.contains(key)) return fallback(key, def);
        const json& v = j_[key];
        if (v.is_number()) return {v.get<double>()};
        if (!v.is_array()) throw ConfigError(fmt::format("{}: expected a number or an array", where(key)));
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) throw ConfigError(fmt::format("{}[{}]: expected a number", where(key), i));
            out.push_back(v[i].get<double>());
        }
        return out;
    }

    const json& raw(const char* key) const {
        if (!j_.contains(key)) throw ConfigError(fmt::format("{}: missing", where(key)));
        return j_[key];
    }

private:
    template <class T>
    T fallback(const char* key, const std::optional<T>& def) const {
        if (!def) throw ConfigError(fmt::format("{}: missing required field", where(key)));
        return *def;
    }

    json j_;
    std::string path_;
};

class Csv {
public:
    Csv(const std::filesystem::path& path, const ExperimentSpec& spec, const std::vector<std::string>& header)
        : out_(path), path_(path.string()) {
        if (!out_) throw Error("IOError", fmt::format("cannot open {}", path_));
        out_ << fmt::format("# command={} seed={} rng={}\n", spec.command, spec.seed, Rng::algorithm);
        out_ << join(header) << '\n';
    }
    void row(const std::vector<std::string>& cells) { out_ << join(cells) << '\n'; }
    const std::string& path() const { return path_; }

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
        return s;
    }
    std::ofstream out_;
    std::string path_;
};

std::string num(double v) { return fmt::format("{}", v); }
std::string status(bool ok) { return ok ? "PASS" : "FAIL"; }

orlicz::GrowthCoefficient coefficient_from(const Params& p) {
    if (p.has("coefficient")) return orlicz::GrowthCoefficient::from_json(p.raw("coefficient"));
    const double exponent = p.number("p");
    if (exponent < 1.0) throw ConfigError(fmt::format("{}: p must be >= 1, got {}", p.where("p"), exponent));
    return orlicz::GrowthCoefficient::power(exponent);
}

// ---------------------------------------------------------------------------

RunResult run_kappa(const ExperimentSpec& spec, const Params& p) {
    const int N = p.integer("N", 2, 1);
    const auto g = p.numbers("p_grid", std::vector<double>{1.0, 0.01, 4.0});
    if (g.size() != 3 || !(g[1] > 0.0) || g[2] < g[0])
        throw ConfigError("params.p_grid: expected [start, step, stop] with step > 0");
    if (g[0] < 1.0) throw ConfigError("params.p_grid: start must be >= 1");
    RunResult res;
    Csv csv(std::filesystem::path(spec.output_dir) / "kappa.csv", spec, {"p", "N", "kappa", "status"});
    const int count = static_cast<int>(std::floor((g[2] - g[0]) / g[1] + 1e-9)) + 1;
    double prev = -INFINITY;
    for (int k = 0; k < count; ++k) {
        const double pv = g[0] + k * g[1];
        const double kv = pointwise::kappa(N, pv);
        const bool ok = kv >= prev - 1e-12;
        prev = kv;
        csv.row({num(pv), std::to_string(N), num(kv), status(ok)});
        ++res.rows;
        res.failures += !ok;
    }
    res.files.push_back(csv.path());
    res.summary["N"] = N;
    if (N >= 2) {
        // Sign change of kappa located by bisection on [1, 4/3].
        double lo = 1.0, hi = 4.0 / 3.0;
        for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid == lo || mid == hi) break;
            (pointwise::kappa(N, mid) > 0.0 ? hi : lo) = mid;
        }
        const double exact = 4.0 - 2.0 * std::sqrt(2.0);
        res.summary["sign_change"] = hi;
        res.summary["sign_change_error"] = std::abs(hi - exact);
        if (std::abs(hi - exact) > 1e-12) ++res.failures;
    }
    return res;
}

RunResult run_identity(const ExperimentSpec& spec, const Params& p) {
    const int trials = p.integer("trials", 1000, 1);
    const auto ps = p.numbers("p", std::vector<double>{1.5});
    const int n = p.integer("n", 2, 2), N = p.integer("N", 2, 1);
    const int degree = p.integer("degree", 3, 0);
    const double tol = p.number("tol", 1e-9);
    const double min_grad = p.number("min_grad", 1e-3);
    const auto eps = p.numbers("eps", std::vector<double>{});
    if (n > fields::kMaxDim || N > fields::kMaxDim) throw ConfigError("params.n/N: at most 4");

    std::vector<std::pair<double, orlicz::GrowthCoefficient>> coeffs;
    for (double pv : ps) {
        if (pv <= 1.0) throw ConfigError(fmt::format("params.p: need p > 1 for the sweep, got {}", pv));
        const auto base = orlicz::GrowthCoefficient::power(pv);
        coeffs.emplace_back(pv, base);
        for (double e : eps) {
            if (!(e > 0.0)) throw ConfigError("params.eps: entries must be > 0");
            coeffs.emplace_back(pv, orlicz::RegularizedCoefficient(base, e).as_coefficient());
        }
    }
    RunResult res;
    Csv csv(std::filesystem::path(spec.output_dir) / "identity.csv", spec,
            {"trial", "p", "N", "coefficient_family", "coefficient_parameter", "field_id", "point", "residual", "gap",
             "status"});
    double worst_res = 0.0, worst_gap = INFINITY;
    for (int t = 0; t < trials; ++t) {
        Rng rng(spec.seed, static_cast<std::uint64_t>(t));
        const auto u = fields::random_polynomial(rng, n, N, degree);
        Eigen::VectorXd x(n);
        double g = 0.0;
        for (int attempt = 0; attempt < 100 && g < min_grad; ++attempt) {
            for (int i = 0; i < n; ++i) x[i] = rng.uniform(-1.0, 1.0);
            g = fields::jet(u, x).grad.norm();
        }
        std::string point;
        for (int i = 0; i < n; ++i) point += (i ? ";" : "") + num(x[i]);
        for (const auto& [pv, a] : coeffs) {
            const auto r = pointwise::evaluate_identity(a, u, x);
            const double rel_res = std::abs(r.identity_residual) / r.scale;
            const double rel_gap = r.inequality_gap / r.scale;
            const bool ok = g >= min_grad && rel_res <= tol && rel_gap >= -tol;
            worst_res = std::max(worst_res, rel_res);
            worst_gap = std::min(worst_gap, rel_gap);
            csv.row({std::to_string(t), num(pv), std::to_string(N), a.family(), a.parameter(), std::to_string(t),
                     point, num(rel_res), num(rel_gap), status(ok)});
            ++res.rows;
            res.failures += !ok;
        }
    }
    res.files.push_back(csv.path());
    res.summary["max_relative_residual"] = worst_res;
    res.summary["min_relative_gap"] = worst_gap;
    return res;
}

RunResult run_sharpness(const ExperimentSpec& spec, const Params& p) {
    std::vector<std::pair<double, double>> cases;
    if (p.has("cases")) {
        const json& c = p.raw("cases");
        if (!c.is_array()) throw ConfigError("params.cases: expected an array of {delta, sigma}");
        for (std::size_t i = 0; i < c.size(); ++i) {
            const Params q(c[i], fmt::format("params.cases[{}]", i));
            cases.emplace_back(q.number("delta"), q.number("sigma"));
        }
    } else {
        cases.emplace_back(p.number("delta"), p.number("sigma"));
    }
    sharpness::SearchOptions opt;
    opt.restarts = p.integer("restarts", 200, 1);
    opt.iterations = p.integer("iterations", 10000, 0);
    opt.step = p.number("step", 1e-2);
    opt.seed = spec.seed;
    const int n = p.integer("n", 2, 2), N = p.integer("N", 2, 2);
    if (n > sharpness::kMaxDim || N > sharpness::kMaxDim) throw ConfigError("params.n/N: at most 4");

    RunResult res;
    Csv csv(std::filesystem::path(spec.output_dir) / "sharpness.csv", spec,
            {"delta", "sigma", "analytic_bound", "best_D", "gap", "restarts", "iterations", "status"});
    for (auto [delta, sigma] : cases) {
        if (delta < 0.0 || delta > 0.5)
            throw ConfigError(fmt::format("params: delta = {} outside [0, 1/2]", delta));
        const auto sr = sharpness::global_search(n, N, delta, sigma, opt);
        // The bound is only claimed for delta + sigma >= 1; below that the row is reported, not judged.
        const bool claimed = delta + sigma >= 1.0 - 1e-12;
        const double bound = claimed ? sharpness::analytic_bound(delta, sigma) : NAN;
        const bool ok = !claimed || sr.best_D <= bound + 1e-7;
        csv.row({num(delta), num(sigma), num(bound), num(sr.best_D), num(bound - sr.best_D),
                 std::to_string(opt.restarts), std::to_string(opt.iterations), claimed ? status(ok) : "REPORT"});
        ++res.rows;
        res.failures += !ok;
    }
    res.files.push_back(csv.path());
    return res;
}

RunResult run_ellipsoid(const ExperimentSpec& spec, const Params& p) {
    const int samples = p.integer("samples", 10000, 1);
    const int n = p.integer("n", 3, 2);
    if (n > 8) throw ConfigError("params.n: at most 8");
    RunResult res;
    Csv csv(std::filesystem::path(spec.output_dir) / "ellipsoid.csv", spec,
            {"sample", "n", "identity_residual", "membership_lhs", "membership_rhs", "preimage_error", "status"});
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
        Rng rng(spec.seed, static_cast<std::uint64_t>(s));
        Eigen::VectorXd w(n), x(n);
        Eigen::MatrixXd H(n, n);
        for (int i = 0; i < n; ++i) w[i] = rng.normal();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) H(i, j) = rng.normal();
        H = 0.5 * (H + H.transpose()).eval();
        for (int i = 0; i < n; ++i) x[i] = rng.normal();
        const double id = sharpness::ellipsoid_identity(w.normalized(), H);
        const auto m = sharpness::ellipsoid_membership(w, H);
        const auto pre = sharpness::ellipsoid_preimage(w, x);
        const double pre_err = std::max((pre.H * w - x).norm() / std::max(1.0, x.norm()),
                                        std::abs(pre.H.squaredNorm() - pre.quad) / std::max(1.0, pre.quad));
        const double scale = std::max(1.0, H.squaredNorm());
        const bool ok = std::abs(id) <= 1e-12 * scale && m.member && pre_err <= 1e-12;
        worst = std::max(worst, std::abs(id) / scale);
        csv.row({std::to_string(s), std::to_string(n), num(id), num(m.lhs), num(m.rhs), num(pre_err), status(ok)});
        ++res.rows;
        res.failures += !ok;
    }
    res.files.push_back(csv.path());
    res.summary["max_identity_residual"] = worst;
    return res;
}

RunResult run_orlicz(const ExperimentSpec& spec, const Params& p) {
    const auto a = coefficient_from(p);
    const double eps = p.number("epsilon", 1e-2);
    if (!(eps > 0.0)) throw ConfigError("params.epsilon: must be > 0");
    std::vector<double> grid = orlicz::default_grid();
    if (p.has("grid")) {
        const Params g(p.raw("grid"), "params.grid");
        grid = orlicz::log_grid(g.number("lo"), g.number("hi"), static_cast<std::size_t>(g.integer("count", 1000, 2)));
    }
    RunResult res;
    Csv csv(std::filesystem::path(spec.output_dir) / "orlicz.csv", spec, {"quantity", "value", "status"});
    for (const auto& row : orlicz::orlicz_checks(a, eps, grid)) {
        csv.row({row.quantity, num(row.value), status(row.pass)});
        ++res.rows;
        res.failures += !row.pass;
    }
    if (p.has("limit")) {
        const Params l(p.raw("limit"), "params.limit");
        const auto steps = orlicz::regularization_limit(a, l.number("L", 10.0), l.integer("k_max", 20, 0));
        const double target = l.number("target", 1e-6);
        for (std::size_t k = 0; k < steps.size(); ++k) {
            const bool dec = k == 0 || steps[k].sup_error <= steps[k - 1].sup_error;
            const bool ok = dec && (k + 1 < steps.size() || steps[k].sup_error < target);
            csv.row({fmt::format("limit_eps={}", steps[k].epsilon), num(steps[k].sup_error), status(ok)});
            ++res.rows;
            res.failures += !ok;
        }
    }
    res.files.push_back(csv.path());
    res.summary["family"] = a.family();
    res.summary["parameter"] = a.parameter();
    return res;
}

struct SolveSetup {
    orlicz::GrowthCoefficient a;
    solver::Grid2 grid;
    solver::GridFunction f;
    solver::SolveOptions opt;
};

SolveSetup solve_setup(const Params& p) {
    auto a = coefficient_from(p);
    const int N = p.integer("N", 1, 1);
    if (N > fields::kMaxDim) throw ConfigError("params.N: at most 4");
    const Params g(p.has("grid") ? p.raw("grid") : json{{"nodes", 33}}, "params.grid");
    solver::Grid2 grid = g.has("nodes")
                             ? solver::Grid2::unit_square(g.integer("nodes", std::nullopt, 3))
                             : solver::Grid2(g.number("Lx", 1.0), g.number("Ly", 1.0), g.integer("mx", std::nullopt, 1),
                                             g.integer("my", std::nullopt, 1));
    solver::GridFunction f(grid, N);
    if (p.has("f") && p.raw("f").is_object()) {
        const Params fm(p.raw("f"), "params.f");
        const auto field = fields::SmoothField::from_json(fm.raw("manufactured"));
        if (field.dim_in() != 2 || field.dim_out() != N)
            throw ConfigError("params.f.manufactured: field must map R^2 to R^N");
        const double eps = fm.number("epsilon", 0.0);
        f = eps > 0.0 ? solver::manufactured_rhs(orlicz::RegularizedCoefficient(a, eps).as_coefficient(), field, grid)
                      : solver::manufactured_rhs(a, field, grid);
    } else {
        const std::string name = p.string("f", "sinsin");
        try {
            f = solver::named_rhs(name, grid, N);
        } catch (const DomainError& e) {
            throw ConfigError(fmt::format("params.f: {}", e.what()));
        }
    }
    solver::SolveOptions opt;
    opt.k_max = p.integer("eps_k_max", 16, 0);
    opt.tol = p.number("tol", 1e-9);
    opt.max_newton = p.integer("max_newton", 100, 1);
    return {std::move(a), grid, std::move(f), opt};
}

RunResult run_solve(const ExperimentSpec& spec, const Params& p, bool local) {
    SolveSetup s = solve_setup(p);
    const auto sol = solver::solve(s.a, s.f, s.opt);
    RunResult res;
    const auto dir = std::filesystem::path(spec.output_dir);
    {
        Csv csv(dir / (spec.command + "_trace.csv"), spec, {"eps", "newton_iters", "residual", "status"});
        for (const auto& st : sol.trace) {
            const bool ok = st.residual <= s.opt.tol;
            csv.row({num(st.epsilon), std::to_string(st.newton_iters), num(st.residual), status(ok)});
            ++res.rows;
            res.failures += !ok;
        }
        res.files.push_back(csv.path());
    }
    const auto nr = solver::norms(sol, s.f);
    {
        Csv csv(dir / (spec.command + "_norms.csv"), spec,
                {"nodes", "h", "l2_f", "l1_f", "l2_flux", "l1_flux", "l2_grad_flux", "w12_flux", "w12_over_l2f",
                 "l1flux_over_l1f"});
        csv.row({std::to_string(s.grid.nx()), num(s.grid.h), num(nr.l2_f), num(nr.l1_f), num(nr.l2_flux),
                 num(nr.l1_flux), num(nr.l2_grad_flux), num(nr.w12_flux), num(nr.w12_over_l2f),
                 num(nr.l1flux_over_l1f)});
        res.files.push_back(csv.path());
    }
    res.summary["residual_norm"] = sol.residual_norm;
    res.summary["w12_over_l2f"] = nr.w12_over_l2f;
    res.summary["l1flux_over_l1f"] = nr.l1flux_over_l1f;
    if (local) {
        const json& balls = p.has("balls") ? p.raw("balls") : json::array({{{"cx", 0.5}, {"cy", 0.5}, {"R", 0.2}}});
        if (!balls.is_array()) throw ConfigError("params.balls: expected an array of {cx, cy, R}");
        Csv csv(dir / "local.csv", spec, {"cx", "cy", "R", "lhs", "rhs", "c_fit", "status"});
        for (std::size_t i = 0; i < balls.size(); ++i) {
            const Params b(balls[i], fmt::format("params.balls[{}]", i));
            const double cx = b.number("cx"), cy = b.number("cy"), R = b.number("R");
            const auto e = solver::local_estimate_check(sol, s.f, cx, cy, R);
            csv.row({num(cx), num(cy), num(R), num(e.lhs), num(e.rhs), num(e.c_fit), status(e.pass)});
            ++res.rows;
            res.failures += !e.pass;
        }
        res.files.push_back(csv.path());
    }
    return res;
}

std::pair<int, int> line_col(const std::string& text, std::size_t byte) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

}  // namespace

const std::vector<std::string>& commands() {
    static const std::vector<std::string> c{"kappa", "identity", "sharpness", "ellipsoid", "orlicz", "solve", "local"};
    return c;
}

ExperimentSpec parse_spec(const std::string& command, const std::string& text) {
    if (std::find(commands().begin(), commands().end(), command) == commands().end())
        throw ConfigError(fmt::format("unknown command '{}'", command));
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_col(text, e.byte);
        throw ConfigError(fmt::format("line {}, column {}: {}", line, col, e.what()));
    }
    if (!j.is_object()) throw ConfigError("line 1: top level must be a JSON object");
    ExperimentSpec spec;
    spec.command = command;
    if (j.contains("params")) {
        if (j.contains("command") && (!j["command"].is_string() || j["command"].get<std::string>() != command))
            throw ConfigError(fmt::format("command: config is for '{}', invoked as '{}'", j["command"].dump(), command));
        if (!j["params"].is_object()) throw ConfigError("params: expected an object");
        spec.params = j["params"];
        if (j.contains("seed")) {
            if (!j["seed"].is_number_unsigned()) throw ConfigError("seed: expected a nonnegative integer");
            spec.seed = j["seed"].get<std::uint64_t>();
        }
    } else {
        spec.params = j;
    }
    return spec;
}

RunResult run(const ExperimentSpec& spec) {
    std::filesystem::create_directories(spec.output_dir);
    const Params p(spec.params, "params");
    RunResult res;
    if (spec.command == "kappa") res = run_kappa(spec, p);
    else if (spec.command == "identity") res = run_identity(spec, p);
    else if (spec.command == "sharpness") res = run_sharpness(spec, p);
    else if (spec.command == "ellipsoid") res = run_ellipsoid(spec, p);
    else if (spec.command == "orlicz") res = run_orlicz(spec, p);
    else if (spec.command == "solve") res = run_solve(spec, p, false);
    else if (spec.command == "local") res = run_solve(spec, p, true);
    else throw ConfigError(fmt::format("unknown command '{}'", spec.command));

    json summary = res.summary.is_null() ? json::object() : res.summary;
    summary["command"] = spec.command;
    summary["seed"] = spec.seed;
    summary["rng"] = std::string(Rng::algorithm);
    summary["rows"] = res.rows;
    summary["failures"] = res.failures;
    summary["files"] = res.files;
    const auto path = std::filesystem::path(spec.output_dir) / (spec.command + ".json");
    std::ofstream(path) << summary.dump(2) << '\n';
    res.files.push_back(path.string());
    res.summary = std::move(summary);
    return res;
}

}  // namespace plap::experiment
