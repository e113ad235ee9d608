#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ftx/errors.hpp"
#include "ftx/grid.hpp"
#include "ftx/rng.hpp"

namespace ftx {

// Symmetric 1x1 or 2x2 matrix with closed-form spectrum.
struct SymMat {
    int dim = 1;
    double a11 = 0.0, a12 = 0.0, a22 = 0.0;

    static SymMat scalar(double v) { return SymMat{1, v, 0.0, 0.0}; }
    static SymMat make2(double m11, double m12, double m22) { return SymMat{2, m11, m12, m22}; }
    static SymMat identity(int d) { return d == 1 ? scalar(1.0) : make2(1.0, 0.0, 1.0); }
    static SymMat diag(double e1, double e2) { return make2(e1, 0.0, e2); }

    SymMat operator+(const SymMat& o) const { return SymMat{dim, a11 + o.a11, a12 + o.a12, a22 + o.a22}; }
    SymMat operator*(double s) const { return SymMat{dim, s * a11, s * a12, s * a22}; }

    double trace() const { return dim == 1 ? a11 : a11 + a22; }

    std::array<double, 2> eigenvalues() const {
        if (dim == 1) return {a11, 0.0};
        const double mean = 0.5 * (a11 + a22);
        const double disc = std::hypot(0.5 * (a11 - a22), a12);
        return {mean - disc, mean + disc};
    }

    double max_eigenvalue() const {
        const auto e = eigenvalues();
        return dim == 1 ? e[0] : e[1];
    }

    double quad(double v1, double v2) const {  // v^T M v
        if (dim == 1) return a11 * v1 * v1;
        return a11 * v1 * v1 + 2.0 * a12 * v1 * v2 + a22 * v2 * v2;
    }
};

// Pucci extremal operators in the decreasing sign convention:
// P+(M) = -Lambda * sum(e_i < 0) - lambda * sum(e_i > 0).
inline double pucci_plus(const SymMat& m, double lambda, double Lambda) {
    const auto e = m.eigenvalues();
    double v = 0.0;
    for (int k = 0; k < m.dim; ++k) {
        const double ev = e[static_cast<std::size_t>(k)];
        v += ev > 0.0 ? -lambda * ev : -Lambda * ev;
    }
    return v;
}

inline double pucci_minus(const SymMat& m, double lambda, double Lambda) {
    const auto e = m.eigenvalues();
    double v = 0.0;
    for (int k = 0; k < m.dim; ++k) {
        const double ev = e[static_cast<std::size_t>(k)];
        v += ev > 0.0 ? -Lambda * ev : -lambda * ev;
    }
    return v;
}

enum class OperatorKind { negative_trace, pucci_plus, pucci_minus, convex_combination };

inline const char* operator_kind_name(OperatorKind k) {
    switch (k) {
        case OperatorKind::negative_trace: return "negative_trace";
        case OperatorKind::pucci_plus: return "pucci_plus";
        case OperatorKind::pucci_minus: return "pucci_minus";
        case OperatorKind::convex_combination: return "convex_combination";
    }
    return "?";
}

// A (lambda,Lambda)-elliptic operator F, decreasing in M, with F(0) = 0.
struct EllipticOperatorSpec {
    OperatorKind kind = OperatorKind::negative_trace;
    double lambda = 1.0;
    double Lambda = 1.0;
    double weight = 0.5;  // convex_combination: w * (-tr) + (1-w) * pucci_minus
    std::vector<Frame> frames;  // wide-stencil frames for the discrete form

    void validate(int dim) const {
        if (!(lambda > 0.0) || !(Lambda >= lambda))
            throw ConfigError("operator requires 0 < lambda <= Lambda");
        if (kind == OperatorKind::convex_combination && (weight < 0.0 || weight > 1.0))
            throw ConfigError("operator.weight must lie in [0,1]");
        const auto& fr = frames.empty() ? default_frames(dim) : frames;
        for (const auto& frame : fr) {
            if (frame.empty()) throw ConfigError("operator frame must be nonempty");
            for (std::size_t a = 0; a < frame.size(); ++a) {
                if (dir_norm2(frame[a]) == 0) throw ConfigError("operator frame contains a zero direction");
                for (std::size_t b = a + 1; b < frame.size(); ++b)
                    if (frame[a][0] * frame[b][0] + frame[a][1] * frame[b][1] != 0)
                        throw ConfigError("operator frame directions must be orthogonal");
            }
        }
    }

    std::vector<Frame> effective_frames(int dim) const {
        return frames.empty() ? default_frames(dim) : frames;
    }
};

inline EllipticOperatorSpec make_operator(OperatorKind kind, double lambda, double Lambda,
                                          double weight = 0.5) {
    EllipticOperatorSpec op;
    op.kind = kind;
    op.lambda = lambda;
    op.Lambda = Lambda;
    op.weight = weight;
    return op;
}

inline double apply_exact(const EllipticOperatorSpec& op, const SymMat& m) {
    switch (op.kind) {
        case OperatorKind::negative_trace: return -m.trace();
        case OperatorKind::pucci_plus: return pucci_plus(m, op.lambda, op.Lambda);
        case OperatorKind::pucci_minus: return pucci_minus(m, op.lambda, op.Lambda);
        case OperatorKind::convex_combination:
            return op.weight * (-m.trace()) + (1.0 - op.weight) * pucci_minus(m, op.lambda, op.Lambda);
    }
    return 0.0;
}

namespace detail {

// Frame aggregates of directional second differences, decreasing convention.
inline double frame_value_pucci_plus(const std::vector<double>& deltas, double lambda, double Lambda) {
    double v = 0.0;
    for (double d : deltas) v += d > 0.0 ? -lambda * d : -Lambda * d;
    return v;
}

inline double frame_value_pucci_minus(const std::vector<double>& deltas, double lambda, double Lambda) {
    double v = 0.0;
    for (double d : deltas) v += d > 0.0 ? -Lambda * d : -lambda * d;
    return v;
}

inline const Frame& axis_frame(const std::vector<Frame>& frames, int dim) {
    for (const auto& f : frames) {
        if (static_cast<int>(f.size()) != dim) continue;
        bool ok = true;
        for (const auto& e : f)
            if (dir_norm2(e) != 1) ok = false;
        if (ok) return f;
    }
    throw ConfigError("operator stencil must contain the axis frame for trace-form kinds");
}

} // namespace detail

// Wide-stencil monotone discretization of F(D^2 u) at an interior node.
// pucci_plus: max over frames of sum_i(-lambda*max(d_i,0) - Lambda*min(d_i,0));
// pucci_minus: min over frames of the mirrored sums; negative_trace: -sum over
// the axis frame. Exact on quadratics whose eigenframe lies in the stencil.
inline double apply_discrete(const EllipticOperatorSpec& op, const GridFunction& u, int node) {
    const Domain& dom = *u.domain();
    const auto frames = op.effective_frames(dom.dim());
    std::vector<double> deltas;
    auto frame_deltas = [&](const Frame& f) {
        deltas.clear();
        for (const auto& e : f) deltas.push_back(second_difference(u, node, e));
    };
    switch (op.kind) {
        case OperatorKind::negative_trace: {
            frame_deltas(detail::axis_frame(frames, dom.dim()));
            double s = 0.0;
            for (double d : deltas) s += d;
            return -s;
        }
        case OperatorKind::pucci_plus: {
            double best = -std::numeric_limits<double>::infinity();
            for (const auto& f : frames) {
                frame_deltas(f);
                best = std::max(best, detail::frame_value_pucci_plus(deltas, op.lambda, op.Lambda));
            }
            return best;
        }
        case OperatorKind::pucci_minus: {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& f : frames) {
                frame_deltas(f);
                best = std::min(best, detail::frame_value_pucci_minus(deltas, op.lambda, op.Lambda));
            }
            return best;
        }
        case OperatorKind::convex_combination: {
            frame_deltas(detail::axis_frame(frames, dom.dim()));
            double s = 0.0;
            for (double d : deltas) s += d;
            EllipticOperatorSpec pm = op;
            pm.kind = OperatorKind::pucci_minus;
            return op.weight * (-s) + (1.0 - op.weight) * apply_discrete(pm, u, node);
        }
    }
    return 0.0;
}

// Report of a sampled uniform-ellipticity check:
//   lambda*||N|| <= F(M) - F(M+N) <= Lambda*||N||, ||N|| = max eigenvalue, N >= 0.
struct EllipticityReport {
    bool pass = true;
    int samples = 0;
    double worst_lower_margin = std::numeric_limits<double>::infinity();
    double worst_upper_margin = std::numeric_limits<double>::infinity();
    std::optional<std::pair<SymMat, SymMat>> witness;  // (M, N) of the first violation
};

template <typename F>
EllipticityReport check_uniform_ellipticity_fn(const F& f, int dim, double lambda, double Lambda,
                                               int sample_count, std::uint64_t seed) {
    if (sample_count < 1) throw ConfigError("check_uniform_ellipticity: sample_count must be >= 1");
    EllipticityReport rep;
    Rng rng(seed);
    auto rand_sym = [&](double s) {
        if (dim == 1) return SymMat::scalar(rng.uniform(-s, s));
        return SymMat::make2(rng.uniform(-s, s), rng.uniform(-s, s), rng.uniform(-s, s));
    };
    auto square = [&](const SymMat& a) {
        if (a.dim == 1) return SymMat::scalar(a.a11 * a.a11);
        return SymMat::make2(a.a11 * a.a11 + a.a12 * a.a12, a.a12 * (a.a11 + a.a22),
                             a.a12 * a.a12 + a.a22 * a.a22);
    };
    auto run_case = [&](const SymMat& m, const SymMat& n) {
        const double norm = n.max_eigenvalue();
        if (norm <= 1e-14) return;
        const double diff = f(m) - f(m + n);
        const double lower = diff - lambda * norm;
        const double upper = Lambda * norm - diff;
        rep.worst_lower_margin = std::min(rep.worst_lower_margin, lower);
        rep.worst_upper_margin = std::min(rep.worst_upper_margin, upper);
        const double tol = 1e-12 * std::max({1.0, std::abs(diff), norm});
        if (lower < -tol || upper < -tol) {
            rep.pass = false;
            if (!rep.witness) rep.witness = std::make_pair(m, n);
        }
        ++rep.samples;
    };
    // Canonical perturbations first, then random (M, N = A^2) pairs.
    run_case(rand_sym(2.0), SymMat::identity(dim));
    if (dim == 2) run_case(rand_sym(2.0), SymMat::make2(1.0, 0.0, 0.0));
    while (rep.samples < sample_count) run_case(rand_sym(2.0), square(rand_sym(1.5)));
    return rep;
}

inline EllipticityReport check_uniform_ellipticity(const EllipticOperatorSpec& op, int dim,
                                                   int sample_count, std::uint64_t seed) {
    return check_uniform_ellipticity_fn([&](const SymMat& m) { return apply_exact(op, m); }, dim,
                                        op.lambda, op.Lambda, sample_count, seed);
}

} // namespace ftx
