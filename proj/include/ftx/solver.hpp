#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ftx/degeneracy.hpp"
#include "ftx/errors.hpp"
#include "ftx/grid.hpp"
#include "ftx/operators.hpp"

namespace ftx {

enum class EpsilonSchedule { harmonic, geometric };

struct SolveConfig {
    double tol_inner = 1e-9;          // residual sup-norm target of the nodal sweeps
    double tol_fixed_point = 1e-8;    // successive-iterate sup-norm target of T
    double tol_continuation = 1e-8;   // inter-epsilon sup-norm target
    double damping = 1.0;             // update damping, (0,1]
    double pseudo_time_step = 1.0;    // reserved for the parallel Jacobi mode
    double relaxation = 0.0;          // nonlinear SOR factor; 0 selects it from the grid size
    int max_inner_iters = 200000;     // sweeps per solve
    int max_outer_iters = 60;         // Picard iterations of T
    int max_continuation_steps = 64;
    EpsilonSchedule epsilon_schedule = EpsilonSchedule::geometric;
    bool record_snapshots = false;

    void validate() const {
        if (!(tol_inner > 0.0) || !(tol_fixed_point > 0.0) || !(tol_continuation > 0.0))
            throw ConfigError("solver tolerances must be > 0");
        if (!(damping > 0.0 && damping <= 1.0)) throw ConfigError("solver.damping must lie in (0,1]");
        if (!(pseudo_time_step > 0.0)) throw ConfigError("solver.pseudo_time_step must be > 0");
        if (relaxation < 0.0 || relaxation >= 2.0)
            throw ConfigError("solver.relaxation must lie in [0,2) (0 = automatic)");
        if (max_inner_iters < 1 || max_outer_iters < 1 || max_continuation_steps < 1)
            throw ConfigError("solver iteration limits must be positive");
    }
};

struct EpsRecord {
    double eps = 0.0;
    int outer_iters = 0;
    long long sweeps = 0;
    double residual = 0.0;
    double delta_from_prev = std::numeric_limits<double>::quiet_NaN();
    bool fixed_point_converged = false;
};

struct SolveDiagnostics {
    std::vector<double> inner_residuals;  // per sweep, most recent inner solve
    std::vector<double> outer_deltas;     // per Picard iteration, most recent run
    std::vector<EpsRecord> continuation;  // per epsilon step
    std::vector<std::pair<double, GridFunction>> snapshots;
    bool inner_converged = false;
    bool fixed_point_converged = false;
    bool continuation_cauchy = false;
    bool non_cauchy_warning = false;
    long long total_sweeps = 0;
    int averaging_restarts = 0;
    double relaxation_used = 1.0;
    double final_epsilon = 0.0;
    // Self-consistency certificate: residual of the returned u against
    // theta_field(u), and the bound tol_inner + margin it must meet.
    double certificate_residual = 0.0;
    double certificate_bound = 0.0;
    bool certificate_ok = false;
};

class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, SolveDiagnostics diag)
        : std::runtime_error(what), diagnostics(std::move(diag)) {}
    SolveDiagnostics diagnostics;
};

struct SolveResult {
    GridFunction u;
    SolveDiagnostics diagnostics;
};

// Gradient magnitude entering the degeneracy prefactor. Per axis this is the
// central difference with a one-sided floor, max(|c_i|, min(|D+_i|, |D-_i|)):
// identical to the central difference wherever the one-sided differences share
// a sign, but nonzero at kink bottoms. A plain central difference vanishes at
// a symmetric kink, which collapses the prefactor to eps^theta and lets the
// scheme admit a spurious V-shaped funnel of slope jump |f| h / (2 eps) there;
// the floor removes that solution branch while keeping the same consistency
// order elsewhere.
inline double prefactor_gradient_norm(const GridFunction& u, int node) {
    const Domain& dom = *u.domain();
    if (!dom.is_interior(node)) throw StencilError("prefactor_gradient_norm: node is not interior");
    const double h = dom.h();
    static const Dir axes[2] = {Dir{1, 0}, Dir{0, 1}};
    double sum = 0.0;
    for (int k = 0; k < dom.dim(); ++k) {
        const int p = dom.neighbor(node, axes[k], +1);
        const int q = dom.neighbor(node, axes[k], -1);
        if (p < 0 || q < 0) throw StencilError("prefactor_gradient_norm: stencil leaves the node set");
        const double fwd = (u[p] - u[node]) / h;
        const double bwd = (u[node] - u[q]) / h;
        const double central = 0.5 * (fwd + bwd);
        const double g = std::max(std::abs(central), std::min(std::abs(fwd), std::abs(bwd)));
        sum += g * g;
    }
    return std::sqrt(sum);
}

// Residual of the regularized equation at an interior node:
//   (eps + |grad_h u|)^theta(x) * (eps*u + F_h(u)) - f.
inline double residual_regularized(const GridFunction& u, const ExponentField& theta, double eps,
                                   const GridFunction& f, const EllipticOperatorSpec& op, int node) {
    const double gn = prefactor_gradient_norm(u, node);
    const double pre = std::pow(eps + gn, theta.theta[node]);
    return pre * (eps * u[node] + apply_discrete(op, u, node)) - f[node];
}

inline double sup_residual_regularized(const GridFunction& u, const ExponentField& theta, double eps,
                                       const GridFunction& f, const EllipticOperatorSpec& op) {
    double worst = 0.0;
    for (int node : u.domain()->interior())
        worst = std::max(worst, std::abs(residual_regularized(u, theta, eps, f, op, node)));
    return worst;
}

namespace detail {

// Flattened neighbor tables for the sweep loops.
struct SweepWorkspace {
    DomainPtr dom;
    EllipticOperatorSpec op;
    int dim = 1;
    double h = 0.0;
    std::vector<int> nodes;       // interior ids in sweep order
    std::vector<int> axis_nb;     // 2*dim entries per node: +x,-x[,+y,-y]
    std::vector<int> dir_nb;      // 2*ndirs entries per node
    std::vector<double> inv_h2e2; // per direction
    std::vector<int> frame_begin; // ndirs prefix per frame, frame_begin.back() == ndirs
    int axis_frame = -1;

    SweepWorkspace(DomainPtr d, const EllipticOperatorSpec& o) : dom(std::move(d)), op(o) {
        dim = dom->dim();
        h = dom->h();
        op.validate(dim);
        const auto frames = op.effective_frames(dim);
        std::vector<Dir> dirs;
        frame_begin.push_back(0);
        for (std::size_t fi = 0; fi < frames.size(); ++fi) {
            bool axis = static_cast<int>(frames[fi].size()) == dim;
            for (const auto& e : frames[fi]) {
                dirs.push_back(e);
                inv_h2e2.push_back(1.0 / (h * h * dir_norm2(e)));
                if (dir_norm2(e) != 1) axis = false;
            }
            frame_begin.push_back(static_cast<int>(dirs.size()));
            if (axis && axis_frame < 0) axis_frame = static_cast<int>(fi);
        }
        const bool needs_axis_frame = op.kind == OperatorKind::negative_trace ||
                                      op.kind == OperatorKind::convex_combination;
        if (needs_axis_frame && axis_frame < 0)
            throw ConfigError("operator stencil must contain the axis frame for trace-form kinds");

        nodes = dom->interior();
        const int nd = static_cast<int>(dirs.size());
        axis_nb.resize(nodes.size() * static_cast<std::size_t>(2 * dim));
        dir_nb.resize(nodes.size() * static_cast<std::size_t>(2 * nd));
        static const Dir axes[2] = {Dir{1, 0}, Dir{0, 1}};
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            const int id = nodes[k];
            for (int a = 0; a < dim; ++a) {
                const int p = dom->neighbor(id, axes[a], +1);
                const int q = dom->neighbor(id, axes[a], -1);
                if (p < 0 || q < 0) throw StencilError("axis stencil leaves the node set");
                axis_nb[k * static_cast<std::size_t>(2 * dim) + static_cast<std::size_t>(2 * a)] = p;
                axis_nb[k * static_cast<std::size_t>(2 * dim) + static_cast<std::size_t>(2 * a + 1)] = q;
            }
            for (int j = 0; j < nd; ++j) {
                const int p = dom->neighbor(id, dirs[static_cast<std::size_t>(j)], +1);
                const int q = dom->neighbor(id, dirs[static_cast<std::size_t>(j)], -1);
                if (p < 0 || q < 0) throw StencilError("operator stencil leaves the node set");
                dir_nb[k * static_cast<std::size_t>(2 * nd) + static_cast<std::size_t>(2 * j)] = p;
                dir_nb[k * static_cast<std::size_t>(2 * nd) + static_cast<std::size_t>(2 * j + 1)] = q;
            }
        }
    }

    int ndirs() const { return frame_begin.back(); }

    // Kink-aware prefactor gradient; matches prefactor_gradient_norm. During a
    // sweep the center value is the pre-update one (lagged prefactor), which
    // keeps the nodal scalar equation monotone in the center.
    double grad_norm(const std::vector<double>& v, std::size_t k) const {
        const std::size_t base = k * static_cast<std::size_t>(2 * dim);
        const double c = v[static_cast<std::size_t>(nodes[k])];
        double sum = 0.0;
        for (int a = 0; a < dim; ++a) {
            const double up = v[static_cast<std::size_t>(axis_nb[base + static_cast<std::size_t>(2 * a)])];
            const double dn = v[static_cast<std::size_t>(axis_nb[base + static_cast<std::size_t>(2 * a + 1)])];
            const double fwd = (up - c) / h;
            const double bwd = (c - dn) / h;
            const double g = std::max(std::abs(0.5 * (fwd + bwd)), std::min(std::abs(fwd), std::abs(bwd)));
            sum += g * g;
        }
        return std::sqrt(sum);
    }

    // F_h at interior slot k with the center value replaced by t.
    double discrete_F(const std::vector<double>& v, std::size_t k, double t) const {
        const int nd = ndirs();
        const std::size_t base = k * static_cast<std::size_t>(2 * nd);
        auto delta = [&](int j) {
            const double vp = v[static_cast<std::size_t>(dir_nb[base + static_cast<std::size_t>(2 * j)])];
            const double vm = v[static_cast<std::size_t>(dir_nb[base + static_cast<std::size_t>(2 * j + 1)])];
            return (vp - 2.0 * t + vm) * inv_h2e2[static_cast<std::size_t>(j)];
        };
        switch (op.kind) {
            case OperatorKind::negative_trace: {
                double s = 0.0;
                for (int j = frame_begin[static_cast<std::size_t>(axis_frame)];
                     j < frame_begin[static_cast<std::size_t>(axis_frame) + 1]; ++j)
                    s += delta(j);
                return -s;
            }
            case OperatorKind::pucci_plus: {
                double best = -std::numeric_limits<double>::infinity();
                for (std::size_t fi = 0; fi + 1 < frame_begin.size(); ++fi) {
                    double s = 0.0;
                    for (int j = frame_begin[fi]; j < frame_begin[fi + 1]; ++j) {
                        const double d = delta(j);
                        s += d > 0.0 ? -op.lambda * d : -op.Lambda * d;
                    }
                    best = std::max(best, s);
                }
                return best;
            }
            case OperatorKind::pucci_minus: {
                double best = std::numeric_limits<double>::infinity();
                for (std::size_t fi = 0; fi + 1 < frame_begin.size(); ++fi) {
                    double s = 0.0;
                    for (int j = frame_begin[fi]; j < frame_begin[fi + 1]; ++j) {
                        const double d = delta(j);
                        s += d > 0.0 ? -op.Lambda * d : -op.lambda * d;
                    }
                    best = std::min(best, s);
                }
                return best;
            }
            case OperatorKind::convex_combination: {
                double s = 0.0;
                for (int j = frame_begin[static_cast<std::size_t>(axis_frame)];
                     j < frame_begin[static_cast<std::size_t>(axis_frame) + 1]; ++j)
                    s += delta(j);
                double pm = std::numeric_limits<double>::infinity();
                for (std::size_t fi = 0; fi + 1 < frame_begin.size(); ++fi) {
                    double t2 = 0.0;
                    for (int j = frame_begin[fi]; j < frame_begin[fi + 1]; ++j) {
                        const double d = delta(j);
                        t2 += d > 0.0 ? -op.Lambda * d : -op.lambda * d;
                    }
                    pm = std::min(pm, t2);
                }
                return op.weight * (-s) + (1.0 - op.weight) * pm;
            }
        }
        return 0.0;
    }

    // Root of eps*t + F_h(t) = target in the center value. The map is
    // strictly increasing in t, so the root is unique. Trace form solves in
    // closed form; the Pucci forms use safeguarded bisection (identical limit).
    double nodal_root(const std::vector<double>& v, std::size_t k, double eps, double target) const {
        if (op.kind == OperatorKind::negative_trace) {
            const int nd = ndirs();
            const std::size_t base = k * static_cast<std::size_t>(2 * nd);
            double coeff = eps, rhs = target;
            for (int j = frame_begin[static_cast<std::size_t>(axis_frame)];
                 j < frame_begin[static_cast<std::size_t>(axis_frame) + 1]; ++j) {
                const double vp = v[static_cast<std::size_t>(dir_nb[base + static_cast<std::size_t>(2 * j)])];
                const double vm = v[static_cast<std::size_t>(dir_nb[base + static_cast<std::size_t>(2 * j + 1)])];
                coeff += 2.0 * inv_h2e2[static_cast<std::size_t>(j)];
                rhs += (vp + vm) * inv_h2e2[static_cast<std::size_t>(j)];
            }
            return rhs / coeff;
        }
        const int center = nodes[k];
        double t0 = v[static_cast<std::size_t>(center)];
        auto G = [&](double t) { return eps * t + discrete_F(v, k, t) - target; };
        double g0 = G(t0);
        if (g0 == 0.0) return t0;
        double step = std::max(1.0, std::abs(t0));
        double lo = t0, hi = t0;
        if (g0 > 0.0) {
            for (int i = 0; i < 200 && G(lo) > 0.0; ++i) { lo -= step; step *= 2.0; }
        } else {
            for (int i = 0; i < 200 && G(hi) < 0.0; ++i) { hi += step; step *= 2.0; }
        }
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            (G(mid) < 0.0 ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }

    double sup_residual(const std::vector<double>& v, double eps, const std::vector<double>& theta,
                        const std::vector<double>& f) const {
        double worst = 0.0;
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            const int id = nodes[k];
            const double pre = std::pow(eps + grad_norm(v, k), theta[static_cast<std::size_t>(id)]);
            const double r = pre * (eps * v[static_cast<std::size_t>(id)] +
                                    discrete_F(v, k, v[static_cast<std::size_t>(id)])) -
                             f[static_cast<std::size_t>(id)];
            worst = std::max(worst, std::abs(r));
        }
        return worst;
    }
};

inline double auto_relaxation(const Domain& dom) {
    const int n = dom.spec().cells();
    const double w = 2.0 / (1.0 + std::sin(3.14159265358979323846 / (2.0 * n)));
    return std::clamp(w, 1.0, 1.95);
}

} // namespace detail

// Solves the regularized equation with a frozen exponent field by nodal
// nonlinear Gauss-Seidel: at each interior node the scalar equation
// (eps+|grad u|)^theta * (eps*t + F_h(t)) = f is solved for the center value
// with neighbors frozen (the prefactor does not involve the center), sweeping
// in the fixed node order, with over-relaxation and cfg.damping applied to
// the update. Boundary values are copied from g bit-for-bit.
inline SolveResult solve_regularized_theta(const ExponentField& theta, double eps,
                                           const GridFunction& f, const GridFunction& g,
                                           const EllipticOperatorSpec& op, const SolveConfig& cfg,
                                           const GridFunction* warm_start = nullptr) {
    cfg.validate();
    if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("solve_regularized: eps must lie in (0,1)");
    const DomainPtr dom = f.domain();
    detail::SweepWorkspace ws(dom, op);

    GridFunction u(dom, 0.0);
    if (warm_start) {
        u = *warm_start;
    } else {
        double mean = 0.0;
        for (int id : dom->boundary()) mean += g[id];
        mean /= std::max<std::size_t>(1, dom->boundary().size());
        for (int id : dom->interior()) u[id] = mean;
    }
    for (int id : dom->boundary()) u[id] = g[id];

    SolveDiagnostics diag;
    double relax = cfg.relaxation > 0.0 ? cfg.relaxation : detail::auto_relaxation(*dom);
    diag.relaxation_used = relax;
    diag.final_epsilon = eps;

    auto& v = u.values();
    const auto& th = theta.theta.values();
    const auto& fv = f.values();
    const double relax_cap = relax;
    double prev_resid = std::numeric_limits<double>::infinity();
    double resid_mark = std::numeric_limits<double>::infinity();  // residual at the last relax change
    int growth_streak = 0;
    int calm_streak = 0;

    for (int sweep = 0; sweep < cfg.max_inner_iters; ++sweep) {
        double update_sup = 0.0;
        for (std::size_t k = 0; k < ws.nodes.size(); ++k) {
            const int id = ws.nodes[k];
            const double pre = std::pow(eps + ws.grad_norm(v, k), th[static_cast<std::size_t>(id)]);
            const double root = ws.nodal_root(v, k, eps, fv[static_cast<std::size_t>(id)] / pre);
            const double old = v[static_cast<std::size_t>(id)];
            const double next = old + cfg.damping * relax * (root - old);
            update_sup = std::max(update_sup, std::abs(next - old));
            v[static_cast<std::size_t>(id)] = next;
        }
        const double resid = ws.sup_residual(v, eps, th, fv);
        diag.inner_residuals.push_back(resid);
        ++diag.total_sweeps;
        if (!std::isfinite(resid))
            throw NumericalError("solve_regularized: non-finite residual at eps=" + std::to_string(eps));
        if (resid <= cfg.tol_inner) {
            diag.inner_converged = true;
            break;
        }
        if (update_sup == 0.0) break;  // sweep fixed point at machine precision
        if (resid > prev_resid * (1.0 + 1e-12)) {
            calm_streak = 0;
            if (++growth_streak >= 3 && relax > 1.0) {
                relax = 1.0 + 0.5 * (relax - 1.0);
                if (relax < 1.001) relax = 1.0;
                growth_streak = 0;
                resid_mark = resid;
            }
        } else {
            growth_streak = 0;
            // over-relaxation recovers after a calm stretch, but only once the
            // residual has made real progress since the last change (no ping-pong)
            if (relax < relax_cap && ++calm_streak >= 40 && resid <= 0.25 * resid_mark) {
                relax = std::min(relax_cap, 1.0 + (relax - 1.0 + 0.05) * 1.5);
                calm_streak = 0;
                resid_mark = resid;
            }
        }
        diag.relaxation_used = relax;
        prev_resid = resid;
    }
    if (!diag.inner_converged)
        throw ConvergenceError("solve_regularized: max_inner_iters exceeded at eps=" +
                               std::to_string(eps), diag);
    // Certificate recomputed through the public residual path, independent of
    // the sweep workspace.
    diag.certificate_residual = sup_residual_regularized(u, theta, eps, f, op);
    diag.certificate_bound = cfg.tol_inner;
    diag.certificate_ok = diag.certificate_residual <= cfg.tol_inner * (1.0 + 1e-9) + 1e-15;
    return SolveResult{std::move(u), std::move(diag)};
}

// Solves with the exponent field built from the trial function v.
inline SolveResult solve_regularized(const GridFunction& v, double eps, const GridFunction& f,
                                     const GridFunction& g, const EllipticOperatorSpec& op,
                                     const DegeneracyParams& params, const SolveConfig& cfg,
                                     const GridFunction* warm_start = nullptr) {
    DegeneracyParams p = params;
    p.epsilon = eps;
    p.validate();
    return solve_regularized_theta(theta_field(v, p), eps, f, g, op, cfg, warm_start);
}

// Picard iteration of the map T: v -> u_eps^v, started from the solve with the
// midpoint exponent frozen. The fixed point exists but Picard convergence is
// not guaranteed; on detected oscillation the iteration restarts from the
// average of the last two iterates, and non-convergence raises with the
// oscillation history attached (the last two iterates are kept as candidates).
inline SolveResult fixed_point_T(double eps, const GridFunction& f, const GridFunction& g,
                                 const EllipticOperatorSpec& op, const DegeneracyParams& params,
                                 const SolveConfig& cfg, const GridFunction* warm_start = nullptr) {
    cfg.validate();
    DegeneracyParams p = params;
    p.epsilon = eps;
    p.validate();

    SolveDiagnostics diag;
    GridFunction v(f.domain(), 0.0);
    if (warm_start) {
        v = *warm_start;
    } else {
        const auto mid = constant_exponent_field(f.domain(), 0.5 * (p.theta1 + p.theta2));
        auto r0 = solve_regularized_theta(mid, eps, f, g, op, cfg);
        v = std::move(r0.u);
        diag.total_sweeps += r0.diagnostics.total_sweeps;
    }

    GridFunction u = v;
    SolveDiagnostics last_inner;
    double prev_delta = std::numeric_limits<double>::infinity();
    int stall = 0;
    for (int outer = 0; outer < cfg.max_outer_iters; ++outer) {
        const ExponentField theta = theta_field(v, p);
        auto res = solve_regularized_theta(theta, eps, f, g, op, cfg, &v);
        u = std::move(res.u);
        last_inner = std::move(res.diagnostics);
        diag.total_sweeps += last_inner.total_sweeps;

        const double delta = sup_diff(u, v);
        diag.outer_deltas.push_back(delta);
        if (delta <= cfg.tol_fixed_point) {
            v = std::move(u);
            diag.fixed_point_converged = true;
            break;
        }
        if (delta > 0.95 * prev_delta) ++stall; else stall = 0;
        prev_delta = delta;
        if (stall >= 2) {
            for (int id = 0; id < v.size(); ++id) v[id] = 0.5 * (v[id] + u[id]);
            ++diag.averaging_restarts;
            stall = 0;
        } else if (cfg.damping < 1.0) {
            for (int id = 0; id < v.size(); ++id) v[id] += cfg.damping * (u[id] - v[id]);
        } else {
            v = std::move(u);
        }
    }
    diag.inner_residuals = std::move(last_inner.inner_residuals);
    diag.inner_converged = last_inner.inner_converged;
    diag.relaxation_used = last_inner.relaxation_used;
    diag.final_epsilon = eps;
    if (!diag.fixed_point_converged) {
        // keep both iterates as multiplicity candidates
        diag.snapshots.emplace_back(eps, v);
        diag.snapshots.emplace_back(eps, u);
        throw ConvergenceError("fixed_point_T: max_outer_iters exceeded at eps=" +
                               std::to_string(eps), diag);
    }

    // Self-consistency certificate: residual of u_eps against its own exponent
    // field, bounded by tol_inner plus the theta-sensitivity margin
    // |ln(eps+|grad u|)| * (|f|+tol) * (theta2-theta1)/(2 eps) * ||u - v_last||.
    const ExponentField theta_self = theta_field(v, p);
    diag.certificate_residual = sup_residual_regularized(v, theta_self, eps, f, op);
    const double delta_last = diag.outer_deltas.empty() ? 0.0 : diag.outer_deltas.back();
    double sens = 0.0;
    for (int node : v.domain()->interior()) {
        const double gn = prefactor_gradient_norm(v, node);
        sens = std::max(sens, std::abs(std::log(eps + gn)) * (std::abs(f[node]) + cfg.tol_inner));
    }
    const double margin = sens * (p.theta2 - p.theta1) / (2.0 * eps) * delta_last;
    diag.certificate_bound = cfg.tol_inner + margin;
    diag.certificate_ok = diag.certificate_residual <= diag.certificate_bound * (1.0 + 1e-9) + 1e-15;
    return SolveResult{std::move(v), std::move(diag)};
}

inline double epsilon_step(EpsilonSchedule sched, int n) {
    return sched == EpsilonSchedule::geometric ? std::ldexp(1.0, -n) : 1.0 / (n + 1);
}

// Runs fixed_point_T along the epsilon schedule with warm starts, stopping at
// the Cauchy tolerance or at the schedule floor eps = h (epsilon below the
// grid spacing cannot be represented by the mollifier).
inline SolveResult continuation(const GridFunction& f, const GridFunction& g,
                                const EllipticOperatorSpec& op, const DegeneracyParams& params,
                                const SolveConfig& cfg) {
    cfg.validate();
    const double floor_eps = f.domain()->h();
    SolveDiagnostics diag;
    std::optional<GridFunction> prev;
    SolveResult last{GridFunction(f.domain(), 0.0), {}};

    for (int n = 1; n <= cfg.max_continuation_steps; ++n) {
        double eps = epsilon_step(cfg.epsilon_schedule, n);
        bool at_floor = false;
        if (eps <= floor_eps * (1.0 + 1e-12)) {
            eps = floor_eps;
            at_floor = true;
        }
        if (eps >= 1.0) continue;
        last = fixed_point_T(eps, f, g, op, params, cfg, prev ? &*prev : nullptr);

        EpsRecord rec;
        rec.eps = eps;
        rec.outer_iters = static_cast<int>(last.diagnostics.outer_deltas.size());
        rec.sweeps = last.diagnostics.total_sweeps;
        rec.residual = last.diagnostics.certificate_residual;
        rec.fixed_point_converged = last.diagnostics.fixed_point_converged;
        if (prev) rec.delta_from_prev = sup_diff(last.u, *prev);
        diag.continuation.push_back(rec);
        diag.total_sweeps += last.diagnostics.total_sweeps;
        diag.averaging_restarts += last.diagnostics.averaging_restarts;
        if (cfg.record_snapshots) diag.snapshots.emplace_back(eps, last.u);

        prev = last.u;
        if (prev && !std::isnan(rec.delta_from_prev) && rec.delta_from_prev <= cfg.tol_continuation) {
            diag.continuation_cauchy = true;
            break;
        }
        if (at_floor) break;
    }
    diag.non_cauchy_warning = !diag.continuation_cauchy;
    diag.inner_residuals = last.diagnostics.inner_residuals;
    diag.outer_deltas = last.diagnostics.outer_deltas;
    diag.inner_converged = last.diagnostics.inner_converged;
    diag.fixed_point_converged = last.diagnostics.fixed_point_converged;
    diag.relaxation_used = last.diagnostics.relaxation_used;
    diag.final_epsilon = last.diagnostics.final_epsilon;
    diag.certificate_residual = last.diagnostics.certificate_residual;
    diag.certificate_bound = last.diagnostics.certificate_bound;
    diag.certificate_ok = last.diagnostics.certificate_ok;
    return SolveResult{std::move(last.u), std::move(diag)};
}

// The transformed operator Fbar(M) = (r^2/K) F((K/r^2) M) of the zoom-in
// rescaling; for the positively homogeneous built-ins it coincides with F.
struct ScaledOperator {
    EllipticOperatorSpec base;
    double scale = 1.0;  // K / r^2

    double operator()(const SymMat& m) const { return apply_exact(base, m * scale) / scale; }
};

struct ScaleResult {
    GridFunction v;
    double K = 1.0;
    double C0_bar = 0.0;
    ScaledOperator op_bar;
};

// v(x) = u(r x) / K with K = ||u|| + max(C0, C0^(1/(1+theta2))) unless
// overridden; requires r to be a power of 1/2 whose zoom lands on grid nodes.
inline ScaleResult scale_problem(const GridFunction& u, double C0, double r, double theta2,
                                 const EllipticOperatorSpec& op,
                                 std::optional<double> K_override = std::nullopt) {
    if (!(r > 0.0 && r <= 1.0)) throw ConfigError("scale_problem: r must lie in (0,1]");
    if (!(C0 >= 0.0)) throw ConfigError("scale_problem: C0 must be >= 0");
    int exp2 = 0;
    const double mant = std::frexp(r, &exp2);
    if (std::abs(mant - 0.5) > 1e-15 && r != 1.0)
        throw ConfigError("scale_problem: r must be a power of 1/2 matching the grid");

    const Domain& dom = *u.domain();
    const double K = K_override ? *K_override
                                : u.sup_norm() + std::max(C0, std::pow(C0, 1.0 / (1.0 + theta2)));
    if (!(K > 0.0)) throw ConfigError("scale_problem: normalization K must be positive");
    const double C0_bar = C0 * std::max(std::pow(r, 2.0 + theta2) / std::pow(K, 1.0 + theta2),
                                        r * r / K);

    DomainSpec vs = dom.spec();
    vs.h = dom.h() / r;
    const double cells = vs.extent / vs.h;
    if (std::abs(cells - std::round(cells)) > 1e-9 || std::round(cells) < 1.0)
        throw ConfigError("scale_problem: r is not grid-compatible with the domain spacing");
    DomainPtr vdom = build_domain(vs, dom.frames());
    GridFunction v(vdom, 0.0);
    for (int id = 0; id < vdom->node_count(); ++id) {
        const Dir& i = vdom->lattice(id);
        const int src = dom.id_at(i[0], i[1]);  // r * (i * h/r) = i * h
        if (src < 0) throw ConfigError("scale_problem: zoomed node misses the source grid");
        v[id] = u[src] / K;
    }
    return ScaleResult{std::move(v), K, C0_bar, ScaledOperator{op, K / (r * r)}};
}

} // namespace ftx
