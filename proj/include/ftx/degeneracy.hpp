#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "ftx/errors.hpp"
#include "ftx/grid.hpp"

namespace ftx {

// Degeneracy exponents 0 < theta1 <= theta2 and the regularization scale.
// Equality theta1 == theta2 is admitted for single-exponent runs.
struct DegeneracyParams {
    double theta1 = 1.0;
    double theta2 = 3.0;
    double epsilon = 0.5;

    void validate() const {
        if (!(theta1 > 0.0)) throw ConfigError("degeneracy.theta1 must be > 0");
        if (!(theta2 >= theta1)) throw ConfigError("degeneracy requires 0 < theta1 <= theta2");
        if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("degeneracy.epsilon must lie in (0,1)");
    }
};

// Nodal exponent field with theta1 <= theta(x) <= theta2; nodes of
// limit_exponent with |u| <= sign_tol carry NaN plus an undetermined flag.
struct ExponentField {
    GridFunction theta;
    std::vector<std::uint8_t> undetermined;  // empty when every node is determined

    bool is_undetermined(int id) const {
        return !undetermined.empty() && undetermined[static_cast<std::size_t>(id)] != 0;
    }
};

// g = clamp((v + eps) / (2 eps), 0, 1) on the domain; the zero extension
// beyond the domain happens inside mollify.
inline GridFunction clamp_indicator(const GridFunction& v, double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("clamp_indicator: eps must lie in (0,1)");
    GridFunction g(v.domain(), 0.0);
    for (int id = 0; id < v.size(); ++id)
        g[id] = std::max(std::min((v[id] + eps) / (2.0 * eps), 1.0), 0.0);
    return g;
}

// Discrete bump kernel: eta(x) = c * exp(1/((|x|/eps)^2 - 1)) on |x| < eps,
// sampled at lattice offsets and renormalized so the weights sum to one.
struct MollifierKernel {
    std::vector<Dir> offsets;
    std::vector<double> weights;
    double eps = 0.0;

    // Lipschitz constant of the induced map on [0,1]-valued inputs, measured
    // per unit length over one-cell shifts.
    double lipschitz(double h) const {
        double worst = 0.0;
        static const Dir axes[2] = {Dir{1, 0}, Dir{0, 1}};
        // dimension inferred from offsets
        int dim = 1;
        for (const auto& o : offsets)
            if (o[1] != 0) dim = 2;
        for (int k = 0; k < dim; ++k) {
            double total = 0.0;
            for (std::size_t a = 0; a < offsets.size(); ++a) {
                Dir shifted{offsets[a][0] + axes[k][0], offsets[a][1] + axes[k][1]};
                double w_shifted = 0.0;
                for (std::size_t b = 0; b < offsets.size(); ++b)
                    if (offsets[b] == shifted) { w_shifted = weights[b]; break; }
                total += std::abs(weights[a] - w_shifted);
            }
            worst = std::max(worst, total);
        }
        return worst / h;
    }
};

inline MollifierKernel build_mollifier(int dim, double h, double eps) {
    if (eps < h * (1.0 - 1e-12))
        throw ResolutionError("mollifier radius eps must be >= grid spacing h");
    MollifierKernel k;
    k.eps = eps;
    const int reach = static_cast<int>(std::floor(eps / h + 1e-12));
    double sum = 0.0;
    const int lo2 = dim == 1 ? 0 : -reach;
    const int hi2 = dim == 1 ? 0 : reach;
    for (int i2 = lo2; i2 <= hi2; ++i2)
        for (int i1 = -reach; i1 <= reach; ++i1) {
            const double r = std::hypot(i1 * h, i2 * h) / eps;
            if (r >= 1.0 - 1e-14) continue;
            const double w = std::exp(1.0 / (r * r - 1.0));
            k.offsets.push_back(Dir{i1, i2});
            k.weights.push_back(w);
            sum += w;
        }
    for (double& w : k.weights) w /= sum;
    return k;
}

// h_eps = g * eta_eps by discrete convolution; g is extended by zero beyond
// the domain, so samples falling outside contribute nothing.
inline GridFunction mollify(const GridFunction& g, double eps) {
    const Domain& dom = *g.domain();
    const MollifierKernel k = build_mollifier(dom.dim(), dom.h(), eps);
    GridFunction out(g.domain(), 0.0);
    for (int id = 0; id < dom.node_count(); ++id) {
        const Dir& c = dom.lattice(id);
        double acc = 0.0;
        for (std::size_t a = 0; a < k.offsets.size(); ++a) {
            const int nb = dom.id_at(c[0] - k.offsets[a][0], c[1] - k.offsets[a][1]);
            if (nb >= 0) acc += k.weights[a] * g[nb];
        }
        out[id] = acc;
    }
    return out;
}

// theta(x) = theta1 * h_eps^v(x) + (1 - h_eps^v(x)) * theta2.
inline ExponentField theta_field(const GridFunction& v, const DegeneracyParams& params) {
    params.validate();
    if (params.theta1 == params.theta2)  // constant field, no resolution constraint
        return ExponentField{GridFunction(v.domain(), params.theta1), {}};
    const GridFunction smoothed = mollify(clamp_indicator(v, params.epsilon), params.epsilon);
    GridFunction theta(v.domain(), 0.0);
    for (int id = 0; id < v.size(); ++id)
        theta[id] = params.theta1 * smoothed[id] + (1.0 - smoothed[id]) * params.theta2;
    return ExponentField{std::move(theta), {}};
}

inline ExponentField constant_exponent_field(const DomainPtr& dom, double theta) {
    return ExponentField{GridFunction(dom, theta), {}};
}

// Sharp limit exponent theta1 on {u > tol}, theta2 on {u < -tol}; nodes with
// |u| <= tol are flagged undetermined (the equation holds only as a pair of
// extremal inequalities there).
inline ExponentField limit_exponent(const GridFunction& u, const DegeneracyParams& params,
                                    double sign_tol) {
    if (sign_tol < 0.0) throw ConfigError("limit_exponent: sign_tol must be >= 0");
    GridFunction theta(u.domain(), std::numeric_limits<double>::quiet_NaN());
    std::vector<std::uint8_t> undet(static_cast<std::size_t>(u.size()), 0);
    bool any = false;
    for (int id = 0; id < u.size(); ++id) {
        if (u[id] > sign_tol) theta[id] = params.theta1;
        else if (u[id] < -sign_tol) theta[id] = params.theta2;
        else { undet[static_cast<std::size_t>(id)] = 1; any = true; }
    }
    if (!any) undet.clear();
    return ExponentField{std::move(theta), std::move(undet)};
}

} // namespace ftx
