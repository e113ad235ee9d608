#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ftx/degeneracy.hpp"
#include "ftx/errors.hpp"
#include "ftx/grid.hpp"
#include "ftx/operators.hpp"
#include "ftx/solver.hpp"

namespace ftx {

// Constants of the explicit global barriers: a paraboloid cap anchored at an
// exterior point x0 and, per boundary node y, inverse-power profiles
// w_y(x) = M_b (R^-alpha - |x-x_y|^-alpha) centered at exterior sphere anchors.
struct BarrierSpec {
    std::array<double, 2> x0{0.0, 0.0};
    double K = 0.0;        // ||f||_inf
    double K1 = 0.0;       // max(K, lambda*d)
    double K2 = 0.0;       // paraboloid cap
    double R = 1.0;        // exterior sphere radius
    double R1 = 0.0;       // >= sup over nodes of |x - x_y|
    double alpha_b = 3.0;  // lambda*(alpha+2) - d*Lambda >= 1, alpha > 2
    double M_b = 0.0;
    double paraboloid_coeff = 0.0;  // K1 / (2*lambda*d)
    double g_sup = 0.0;             // sup |g| over boundary nodes
    std::vector<double> eta_levels;
    std::vector<double> C_eta;

    // anchors and effective touch radii per boundary node
    std::vector<std::array<double, 2>> anchors;
    std::vector<double> touch_radius;
    std::vector<int> boundary_ids;
};

namespace detail {

inline std::array<double, 2> exterior_anchor(const Domain& dom, int boundary_id, double R) {
    const auto z = dom.point(boundary_id);
    switch (dom.spec().shape) {
        case Shape::ball: {
            const double r = std::hypot(z[0], z[1]);
            const double s = 1.0 + R / r;
            return {z[0] * s, z[1] * s};
        }
        case Shape::interval:
            return {z[0] + R * (z[0] > 0.0 ? 1.0 : -1.0), 0.0};
        case Shape::box: {
            const auto& i = dom.lattice(boundary_id);
            const int n = dom.spec().cells();
            double n1 = std::abs(i[0]) == n ? (i[0] > 0 ? 1.0 : -1.0) : 0.0;
            double n2 = std::abs(i[1]) == n ? (i[1] > 0 ? 1.0 : -1.0) : 0.0;
            const double len = std::hypot(n1, n2);
            return {z[0] + R * n1 / len, z[1] + R * n2 / len};
        }
    }
    return z;
}

inline double dist2(const std::array<double, 2>& a, const std::array<double, 2>& b) {
    return std::hypot(a[0] - b[0], a[1] - b[1]);
}

} // namespace detail

inline BarrierSpec design_barrier(const GridFunction& g, const GridFunction& f,
                                  const EllipticOperatorSpec& op, int eta_levels_count = 6) {
    const Domain& dom = *g.domain();
    const int d = dom.dim();
    op.validate(d);

    BarrierSpec spec;
    spec.R = dom.spec().exterior_radius;
    spec.K = f.sup_norm();
    spec.K1 = std::max(spec.K, op.lambda * d);
    spec.x0 = {dom.extent() + 1.0, 0.0};
    spec.paraboloid_coeff = spec.K1 / (2.0 * op.lambda * d);

    double gsup = 0.0;
    for (int id : dom.boundary()) gsup = std::max(gsup, std::abs(g[id]));
    spec.g_sup = gsup;

    // Paraboloid inequality F(-(K1/(lambda d)) I) >= K1; holds for the
    // eigenvalue-sum built-ins, checked numerically for anything else.
    const double c = spec.K1 / (op.lambda * d);
    const double Fneg = apply_exact(op, SymMat::identity(d) * (-c));
    if (Fneg < spec.K1 * (1.0 - 1e-9))
        throw ConfigError("barrier infeasible: F(-(K1/(lambda d)) I) >= K1 fails (" +
                          std::to_string(Fneg) + " < " + std::to_string(spec.K1) + ")");
    const double Fpos = apply_exact(op, SymMat::identity(d) * c);
    if (Fpos > -spec.K1 * (1.0 - 1e-9))
        throw ConfigError("barrier infeasible: F((K1/(lambda d)) I) <= -K1 fails");

    // Smallest integer exponent > 2 with lambda*(alpha+2) - d*Lambda >= 1.
    double alpha = 3.0;
    while (op.lambda * (alpha + 2.0) - d * op.Lambda < 1.0 && alpha < 1e6) alpha += 1.0;
    if (op.lambda * (alpha + 2.0) - d * op.Lambda < 1.0)
        throw ConfigError("barrier infeasible: lambda*(alpha+2) - d*Lambda >= 1 unattainable");
    spec.alpha_b = alpha;

    spec.boundary_ids = dom.boundary();
    spec.anchors.reserve(spec.boundary_ids.size());
    for (int id : spec.boundary_ids)
        spec.anchors.push_back(detail::exterior_anchor(dom, id, spec.R));

    // R1 covers every node-to-anchor distance (the staircase ring can exceed
    // R + diam by O(h)).
    double r1 = spec.R + dom.diameter();
    for (const auto& a : spec.anchors)
        for (int id = 0; id < dom.node_count(); ++id)
            r1 = std::max(r1, detail::dist2(a, dom.point(id)));
    spec.R1 = r1;

    spec.M_b = std::max(std::pow(spec.R1, 1.0 + alpha) / alpha,
                        std::pow(spec.R1, 2.0 + alpha) * (spec.K + gsup) / alpha);

    // Touch radius per anchor: w_y must be >= 0 at every node, so the offset
    // uses the nearest node distance (R up to staircase effects).
    spec.touch_radius.reserve(spec.anchors.size());
    for (std::size_t k = 0; k < spec.anchors.size(); ++k) {
        double rmin = spec.R;
        for (int id = 0; id < dom.node_count(); ++id)
            rmin = std::min(rmin, detail::dist2(spec.anchors[k], dom.point(id)));
        spec.touch_radius.push_back(rmin);
    }

    double k2 = gsup;
    for (int id : dom.boundary())
        k2 = std::max(k2, gsup + spec.paraboloid_coeff *
                               std::pow(detail::dist2(dom.point(id), spec.x0), 2.0));
    spec.K2 = k2 + 0.5;

    // eta levels 1/2 .. 2^-k and the per-eta multipliers from the discrete
    // modulus of continuity of g over boundary node pairs.
    for (int k = 1; k <= eta_levels_count; ++k) spec.eta_levels.push_back(std::ldexp(1.0, -k));
    auto w_y = [&](std::size_t yk, const std::array<double, 2>& x) {
        const double r = detail::dist2(spec.anchors[yk], x);
        return spec.M_b * (std::pow(spec.touch_radius[yk], -spec.alpha_b) - std::pow(r, -spec.alpha_b));
    };
    for (double eta : spec.eta_levels) {
        double ceta = 1.0;
        for (std::size_t yk = 0; yk < spec.boundary_ids.size(); ++yk) {
            const double gy = g[spec.boundary_ids[yk]];
            for (int zid : dom.boundary()) {
                if (zid == spec.boundary_ids[yk]) continue;
                const double num = std::abs(g[zid] - gy) - eta;
                if (num <= 0.0) continue;
                const double wyz = w_y(yk, dom.point(zid));
                if (wyz > 1e-14 * spec.M_b) ceta = std::max(ceta, num / wyz);
            }
        }
        spec.C_eta.push_back(ceta);
    }
    return spec;
}

namespace detail {

inline double barrier_w_y(const BarrierSpec& spec, std::size_t yk, const std::array<double, 2>& x) {
    const double r = dist2(spec.anchors[yk], x);
    return spec.M_b * (std::pow(spec.touch_radius[yk], -spec.alpha_b) - std::pow(r, -spec.alpha_b));
}

} // namespace detail

// Upper barrier: min(w1, min over boundary anchors y and eta levels of
// g(y) + eta + C_eta * w_y).
inline GridFunction assemble_barrier_super(const GridFunction& g, const BarrierSpec& spec) {
    const Domain& dom = *g.domain();
    GridFunction w(g.domain(), 0.0);
    for (int id = 0; id < dom.node_count(); ++id) {
        const auto x = dom.point(id);
        double best = spec.K2 - spec.paraboloid_coeff * std::pow(detail::dist2(x, spec.x0), 2.0);
        for (std::size_t yk = 0; yk < spec.boundary_ids.size(); ++yk) {
            const double wy = detail::barrier_w_y(spec, yk, x);
            const double gy = g[spec.boundary_ids[yk]];
            for (std::size_t ek = 0; ek < spec.eta_levels.size(); ++ek)
                best = std::min(best, gy + spec.eta_levels[ek] + spec.C_eta[ek] * wy);
        }
        w[id] = best;
    }
    return w;
}

// Lower barrier, mirror construction.
inline GridFunction assemble_barrier_sub(const GridFunction& g, const BarrierSpec& spec) {
    const Domain& dom = *g.domain();
    GridFunction w(g.domain(), 0.0);
    for (int id = 0; id < dom.node_count(); ++id) {
        const auto x = dom.point(id);
        double best = -spec.K2 + spec.paraboloid_coeff * std::pow(detail::dist2(x, spec.x0), 2.0);
        for (std::size_t yk = 0; yk < spec.boundary_ids.size(); ++yk) {
            const double wy = detail::barrier_w_y(spec, yk, x);
            const double gy = g[spec.boundary_ids[yk]];
            for (std::size_t ek = 0; ek < spec.eta_levels.size(); ++ek)
                best = std::max(best, gy - spec.eta_levels[ek] - spec.C_eta[ek] * wy);
        }
        w[id] = best;
    }
    return w;
}

inline std::pair<GridFunction, BarrierSpec> build_barrier_super(const GridFunction& g,
                                                                const GridFunction& f,
                                                                const EllipticOperatorSpec& op,
                                                                int eta_levels_count = 6) {
    BarrierSpec spec = design_barrier(g, f, op, eta_levels_count);
    return {assemble_barrier_super(g, spec), std::move(spec)};
}

inline std::pair<GridFunction, BarrierSpec> build_barrier_sub(const GridFunction& g,
                                                              const GridFunction& f,
                                                              const EllipticOperatorSpec& op,
                                                              int eta_levels_count = 6) {
    BarrierSpec spec = design_barrier(g, f, op, eta_levels_count);
    return {assemble_barrier_sub(g, spec), std::move(spec)};
}

struct BarrierCheckReport {
    bool pass = true;
    int checked = 0;
    double worst_margin = std::numeric_limits<double>::infinity();
    std::vector<std::pair<int, double>> violations;  // (node, margin)
};

// Verifies residual_regularized(w) >= f - tol at every interior node.
inline BarrierCheckReport check_discrete_supersolution(const GridFunction& w, double eps,
                                                       const ExponentField& theta,
                                                       const GridFunction& f,
                                                       const EllipticOperatorSpec& op,
                                                       double tol_barrier) {
    BarrierCheckReport rep;
    for (int node : w.domain()->interior()) {
        const double margin = residual_regularized(w, theta, eps, f, op, node);
        rep.worst_margin = std::min(rep.worst_margin, margin);
        ++rep.checked;
        if (margin < -tol_barrier) {
            rep.pass = false;
            rep.violations.emplace_back(node, margin);
        }
    }
    return rep;
}

// Mirror: residual_regularized(w) <= f + tol everywhere.
inline BarrierCheckReport check_discrete_subsolution(const GridFunction& w, double eps,
                                                     const ExponentField& theta,
                                                     const GridFunction& f,
                                                     const EllipticOperatorSpec& op,
                                                     double tol_barrier) {
    BarrierCheckReport rep;
    for (int node : w.domain()->interior()) {
        const double margin = -residual_regularized(w, theta, eps, f, op, node);
        rep.worst_margin = std::min(rep.worst_margin, margin);
        ++rep.checked;
        if (margin < -tol_barrier) {
            rep.pass = false;
            rep.violations.emplace_back(node, margin);
        }
    }
    return rep;
}

} // namespace ftx
