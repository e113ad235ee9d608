#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ftx/degeneracy.hpp"
#include "ftx/errors.hpp"
#include "ftx/grid.hpp"
#include "ftx/operators.hpp"
#include "ftx/rng.hpp"
#include "ftx/solver.hpp"

namespace ftx {

struct TouchingTestConfig {
    int sample_count = 500;
    std::uint64_t seed = 777;
    double gradient_range = 2.0;  // sampled |p| bound per component
    double hessian_range = 5.0;   // sampled Hessian entry bound
    double tol_touch = 0.0;       // 0 selects tol_touch_coeff * sqrt(h)
    double tol_touch_coeff = 1.0;

    void validate() const {
        if (sample_count < 1) throw ConfigError("touch test: sample_count must be >= 1");
        if (!(gradient_range > 0.0) || !(hessian_range > 0.0))
            throw ConfigError("touch test: coefficient ranges must be positive");
        if (tol_touch < 0.0 || tol_touch_coeff <= 0.0)
            throw ConfigError("touch test: tolerances must be positive");
    }

    double effective_tol(double h) const {
        return tol_touch > 0.0 ? tol_touch : tol_touch_coeff * std::sqrt(h);
    }
};

struct TouchRecord {
    int sample = 0;
    int node = 0;
    double grad_norm = 0.0;
    double value = 0.0;  // tested expression
    double bound = 0.0;
    bool pass = true;
};

struct TouchingTestReport {
    int samples = 0;
    int evaluations = 0;
    int failures = 0;
    double worst_margin = std::numeric_limits<double>::infinity();  // min(bound - value)
    std::vector<TouchRecord> records;

    double pass_rate() const {
        return evaluations == 0 ? 1.0 : 1.0 - static_cast<double>(failures) / evaluations;
    }
    bool all_pass() const { return failures == 0; }
};

namespace detail {

struct Quadratic {
    std::array<double, 2> center{0.0, 0.0};
    std::array<double, 2> p{0.0, 0.0};
    SymMat m;

    double eval(const std::array<double, 2>& x) const {
        const double d1 = x[0] - center[0], d2 = x[1] - center[1];
        return p[0] * d1 + p[1] * d2 + 0.5 * m.quad(d1, d2);
    }
    std::array<double, 2> grad(const std::array<double, 2>& x) const {
        const double d1 = x[0] - center[0], d2 = x[1] - center[1];
        if (m.dim == 1) return {p[0] + m.a11 * d1, 0.0};
        return {p[0] + m.a11 * d1 + m.a12 * d2, p[1] + m.a12 * d1 + m.a22 * d2};
    }
};

inline Quadratic sample_quadratic(Rng& rng, const Domain& dom, const TouchingTestConfig& cfg) {
    Quadratic q;
    const double L = dom.extent();
    q.center[0] = rng.uniform(-L, L);
    q.center[1] = dom.dim() == 2 ? rng.uniform(-L, L) : 0.0;
    q.p[0] = rng.uniform(-cfg.gradient_range, cfg.gradient_range);
    q.p[1] = dom.dim() == 2 ? rng.uniform(-cfg.gradient_range, cfg.gradient_range) : 0.0;
    const double s = cfg.hessian_range;
    q.m = dom.dim() == 1 ? SymMat::scalar(rng.uniform(-s, s))
                         : SymMat::make2(rng.uniform(-s, s), rng.uniform(-s, s), rng.uniform(-s, s));
    return q;
}

// Strict discrete local extrema of u - phi over interior nodes: strictly
// greater (resp. smaller) than at every stencil neighbor.
template <typename Cmp>
void for_each_strict_extremum(const GridFunction& u, const Quadratic& phi,
                              const std::vector<Frame>& frames, Cmp strictly_better,
                              const std::function<void(int)>& visit) {
    const Domain& dom = *u.domain();
    std::vector<double> w(static_cast<std::size_t>(dom.node_count()));
    for (int id = 0; id < dom.node_count(); ++id)
        w[static_cast<std::size_t>(id)] = u[id] - phi.eval(dom.point(id));
    for (int id : dom.interior()) {
        bool extremum = true;
        for (const auto& frame : frames) {
            for (const auto& e : frame) {
                for (int s : {-1, 1}) {
                    const int nb = dom.neighbor(id, e, s);
                    if (nb < 0 || !strictly_better(w[static_cast<std::size_t>(id)],
                                                   w[static_cast<std::size_t>(nb)])) {
                        extremum = false;
                        break;
                    }
                }
                if (!extremum) break;
            }
            if (!extremum) break;
        }
        if (extremum) visit(id);
    }
}

} // namespace detail

// Viscosity subsolution touching test for the extremal inequality
//   min(|Dphi|^theta2 F(D^2 phi), F(D^2 phi)) <= C0   at maxima of u - phi.
// Test functions are quadratics, whose derivatives are exact; tol_touch
// absorbs the gap between discrete and continuum touching.
inline TouchingTestReport touch_test_subsolution(const GridFunction& u, double C0, double theta2,
                                                 const EllipticOperatorSpec& op,
                                                 const TouchingTestConfig& cfg) {
    cfg.validate();
    const Domain& dom = *u.domain();
    const auto frames = op.effective_frames(dom.dim());
    const double tol = cfg.effective_tol(dom.h());
    TouchingTestReport rep;
    Rng rng(cfg.seed);
    for (int s = 0; s < cfg.sample_count; ++s) {
        const auto phi = detail::sample_quadratic(rng, dom, cfg);
        const double F = apply_exact(op, phi.m);
        detail::for_each_strict_extremum(
            u, phi, frames, [](double a, double b) { return a > b; },
            [&](int node) {
                const double gn = gradient_norm(phi.grad(dom.point(node)));
                const double value = std::min(std::pow(gn, theta2) * F, F);
                TouchRecord rec{s, node, gn, value, C0 + tol, value <= C0 + tol};
                rep.worst_margin = std::min(rep.worst_margin, rec.bound - rec.value);
                ++rep.evaluations;
                if (!rec.pass) ++rep.failures;
                rep.records.push_back(rec);
            });
        ++rep.samples;
    }
    return rep;
}

// Mirror image at minima of u - phi:
//   max(|Dphi|^theta2 F(D^2 phi), F(D^2 phi)) >= -C0.
inline TouchingTestReport touch_test_supersolution(const GridFunction& u, double C0, double theta2,
                                                   const EllipticOperatorSpec& op,
                                                   const TouchingTestConfig& cfg) {
    cfg.validate();
    const Domain& dom = *u.domain();
    const auto frames = op.effective_frames(dom.dim());
    const double tol = cfg.effective_tol(dom.h());
    TouchingTestReport rep;
    Rng rng(cfg.seed);
    for (int s = 0; s < cfg.sample_count; ++s) {
        const auto phi = detail::sample_quadratic(rng, dom, cfg);
        const double F = apply_exact(op, phi.m);
        detail::for_each_strict_extremum(
            u, phi, frames, [](double a, double b) { return a < b; },
            [&](int node) {
                const double gn = gradient_norm(phi.grad(dom.point(node)));
                const double value = std::max(std::pow(gn, theta2) * F, F);
                TouchRecord rec{s, node, gn, value, -C0 - tol, value >= -C0 - tol};
                rep.worst_margin = std::min(rep.worst_margin, rec.value - rec.bound);
                ++rep.evaluations;
                if (!rec.pass) ++rep.failures;
                rep.records.push_back(rec);
            });
        ++rep.samples;
    }
    return rep;
}

struct LargeGradientReport {
    int checked = 0;
    int failures = 0;
    double worst_sub_margin = std::numeric_limits<double>::infinity();
    double worst_super_margin = std::numeric_limits<double>::infinity();
    std::vector<int> violating_nodes;

    bool pass() const { return failures == 0; }
};

// On the node set {|grad_h u| > gamma} checks the uniformly elliptic
// reduction P-_h(u) <= C0 + tol and P+_h(u) >= -C0 - tol.
inline LargeGradientReport large_gradient_pucci_check(const GridFunction& u, double gamma,
                                                      double C0, double lambda, double Lambda,
                                                      double tol) {
    if (!(gamma > 0.0)) throw ConfigError("large_gradient_pucci_check: gamma must be > 0");
    const Domain& dom = *u.domain();
    auto pminus = make_operator(OperatorKind::pucci_minus, lambda, Lambda);
    auto pplus = make_operator(OperatorKind::pucci_plus, lambda, Lambda);
    LargeGradientReport rep;
    for (int node : dom.interior()) {
        if (gradient_norm(gradient_central(u, node)) <= gamma) continue;
        ++rep.checked;
        const double sub = apply_discrete(pminus, u, node);
        const double super = apply_discrete(pplus, u, node);
        rep.worst_sub_margin = std::min(rep.worst_sub_margin, C0 + tol - sub);
        rep.worst_super_margin = std::min(rep.worst_super_margin, super + C0 + tol);
        if (sub > C0 + tol || super < -C0 - tol) {
            ++rep.failures;
            rep.violating_nodes.push_back(node);
        }
    }
    return rep;
}

struct ComparisonReport {
    int trials = 0;
    int violations = 0;
    double min_margin_interior = std::numeric_limits<double>::infinity();
    double min_margin_all = std::numeric_limits<double>::infinity();
    int worst_trial = -1;
    int worst_node = -1;

    bool pass() const { return violations == 0; }
};

namespace detail {

// Random smooth function: a cubic polynomial with coefficients scaled to a
// sup-norm target over the given domain.
inline GridFunction random_smooth(const DomainPtr& dom, Rng& rng, double amplitude) {
    std::array<double, 8> c{};
    for (auto& x : c) x = rng.uniform(-1.0, 1.0);
    GridFunction f = GridFunction::from_fn(dom, [&](std::array<double, 2> p) {
        const double x = p[0], y = p[1];
        return c[0] + c[1] * x + c[2] * y + c[3] * x * y + c[4] * (x * x - y * y) +
               c[5] * x * x * y + c[6] * x * x * x + c[7] * y * y;
    });
    const double s = f.sup_norm();
    if (s > 0.0)
        for (auto& v : f.values()) v *= amplitude / s;
    return f;
}

} // namespace detail

// Builds ordered sub/supersolution pairs of the regularized equation and
// asserts they stay ordered, mirroring the comparison principle: solving with
// the source f - df (df >= 0) yields a subsolution of the f-equation and
// solving with f + df a supersolution, so the pair must satisfy u <= w
// (the Lemma 3.2 barriers follow the same orientation: the upper barrier is
// the one whose residual exceeds f).
inline ComparisonReport comparison_harness(const EllipticOperatorSpec& op,
                                           const DegeneracyParams& params, double eps, int trials,
                                           std::uint64_t seed, const DomainPtr& dom,
                                           const SolveConfig& cfg) {
    if (trials < 1) throw ConfigError("comparison_harness: trials must be >= 1");
    ComparisonReport rep;
    Rng rng(seed);
    DegeneracyParams p = params;
    p.epsilon = eps;
    const ExponentField theta = theta_field(GridFunction(dom, 0.0), p);
    for (int t = 0; t < trials; ++t) {
        GridFunction f0 = detail::random_smooth(dom, rng, 1.0);
        GridFunction df = detail::random_smooth(dom, rng, 0.2);
        for (auto& v : df.values()) v = std::abs(v);
        GridFunction g = detail::random_smooth(dom, rng, 1.0);
        const double gdrop = (t % 2 == 0) ? 0.0 : 0.25;  // alternate shared/ordered boundary data

        GridFunction f_hi = f0, f_lo = f0, g_lo = g;
        for (int id = 0; id < dom->node_count(); ++id) {
            f_hi[id] += df[id];
            f_lo[id] -= df[id];
            g_lo[id] -= gdrop;
        }
        const GridFunction u = solve_regularized_theta(theta, eps, f_lo, g_lo, op, cfg).u;
        const GridFunction w = solve_regularized_theta(theta, eps, f_hi, g, op, cfg).u;
        ++rep.trials;
        for (int id = 0; id < dom->node_count(); ++id) {
            const double margin = w[id] - u[id];
            rep.min_margin_all = std::min(rep.min_margin_all, margin);
            if (dom->is_interior(id))
                rep.min_margin_interior = std::min(rep.min_margin_interior, margin);
            if (margin < -1e-12) {
                ++rep.violations;
                rep.worst_trial = t;
                rep.worst_node = id;
            }
        }
    }
    return rep;
}

} // namespace ftx
