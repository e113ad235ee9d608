#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ftx/affine_fit.hpp"
#include "ftx/errors.hpp"
#include "ftx/grid.hpp"

namespace ftx {

struct FreeBoundary {
    std::vector<int> omega_plus;
    std::vector<int> omega_minus;
    std::vector<int> free_boundary;
};

// omega_plus = {u > tol}, omega_minus = {u < -tol}; the free boundary holds
// the remaining nodes adjacent to a signed node plus the endpoints of edges
// whose ends carry opposite signs.
inline FreeBoundary extract_free_boundary(const GridFunction& u, double sign_tol) {
    if (sign_tol < 0.0) throw ConfigError("extract_free_boundary: sign_tol must be >= 0");
    const Domain& dom = *u.domain();
    FreeBoundary fb;
    std::vector<std::uint8_t> on_fb(static_cast<std::size_t>(dom.node_count()), 0);
    auto signed_node = [&](int id) { return u[id] > sign_tol || u[id] < -sign_tol; };
    static const Dir axes[2] = {Dir{1, 0}, Dir{0, 1}};
    for (int id = 0; id < dom.node_count(); ++id) {
        if (u[id] > sign_tol) fb.omega_plus.push_back(id);
        else if (u[id] < -sign_tol) fb.omega_minus.push_back(id);
        else {
            for (int a = 0; a < dom.dim(); ++a)
                for (int s : {-1, 1}) {
                    const int nb = dom.neighbor(id, axes[a], s);
                    if (nb >= 0 && signed_node(nb)) on_fb[static_cast<std::size_t>(id)] = 1;
                }
        }
    }
    for (int id = 0; id < dom.node_count(); ++id)
        for (int a = 0; a < dom.dim(); ++a) {
            const int nb = dom.neighbor(id, axes[a], +1);
            if (nb < 0) continue;
            if ((u[id] > sign_tol && u[nb] < -sign_tol) || (u[id] < -sign_tol && u[nb] > sign_tol)) {
                on_fb[static_cast<std::size_t>(id)] = 1;
                on_fb[static_cast<std::size_t>(nb)] = 1;
            }
        }
    for (int id = 0; id < dom.node_count(); ++id)
        if (on_fb[static_cast<std::size_t>(id)]) fb.free_boundary.push_back(id);
    return fb;
}

// Minimax affine fit of u over the grid nodes in the closed ball B_r(x0).
inline std::pair<AffineFit, double> best_affine_error(const GridFunction& u,
                                                      const std::array<double, 2>& x0, double r) {
    const Domain& dom = *u.domain();
    std::vector<std::array<double, 2>> xs;
    std::vector<double> us;
    for (int id = 0; id < dom.node_count(); ++id) {
        const auto p = dom.point(id);
        if (std::hypot(p[0] - x0[0], p[1] - x0[1]) <= r * (1.0 + 1e-12)) {
            xs.push_back(p);
            us.push_back(u[id]);
        }
    }
    if (static_cast<int>(xs.size()) < dom.dim() + 2)
        throw ResolutionError("best_affine_error: ball of radius " + std::to_string(r) +
                              " holds fewer than d+2 nodes");
    AffineFit fit = chebyshev_affine_fit(xs, us, dom.dim());
    return {fit, fit.error};
}

struct HolderEstimate {
    double alpha_hat = std::numeric_limits<double>::quiet_NaN();
    double slope = std::numeric_limits<double>::quiet_NaN();
    double fit_residual = std::numeric_limits<double>::quiet_NaN();
    bool smooth = false;  // affine-error floor reached, slope undefined
    bool valid = false;   // >= 4 radii and residual below threshold
    std::vector<double> radii;
    std::vector<double> errors;
};

// Log-log fit of the affine-approximation decay E(rho^k * r_base) across
// geometric scales; alpha_hat = slope - 1.
inline HolderEstimate estimate_gradient_holder(const GridFunction& u,
                                               const std::array<double, 2>& x0, double rho,
                                               int n_scales, double r_base = 0.0,
                                               double fit_residual_threshold = 0.25) {
    const Domain& dom = *u.domain();
    if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("estimate_gradient_holder: rho must lie in (0,1)");
    if (n_scales < 1) throw ConfigError("estimate_gradient_holder: n_scales must be >= 1");
    if (r_base <= 0.0) {
        if (dom.spec().shape == Shape::ball) r_base = dom.extent() - std::hypot(x0[0], x0[1]);
        else {
            r_base = dom.extent() - std::abs(x0[0]);
            if (dom.dim() == 2) r_base = std::min(r_base, dom.extent() - std::abs(x0[1]));
        }
        if (r_base <= 0.0) throw ResolutionError("estimate_gradient_holder: probe lies on the boundary");
    }
    if (r_base * std::pow(rho, n_scales) < 4.0 * dom.h() * (1.0 - 1e-12))
        throw ResolutionError("estimate_gradient_holder: smallest scale falls below 4h");

    HolderEstimate est;
    for (int k = 0; k <= n_scales; ++k) {
        const double r = r_base * std::pow(rho, k);
        est.radii.push_back(r);
        est.errors.push_back(best_affine_error(u, x0, r).second);
    }
    if (est.errors.back() < 1e-10) {
        est.smooth = true;
        return est;
    }
    // least squares on (log r, log E), skipping error-floor entries
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t k = 0; k < est.radii.size(); ++k) {
        if (est.errors[k] < 1e-14) continue;
        const double lx = std::log(est.radii[k]), ly = std::log(est.errors[k]);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
        ++n;
    }
    if (n < 2) {
        est.smooth = true;
        return est;
    }
    const double denom = n * sxx - sx * sx;
    est.slope = (n * sxy - sx * sy) / denom;
    est.alpha_hat = est.slope - 1.0;
    const double intercept = (sy - est.slope * sx) / n;
    double ss = 0.0;
    int used = 0;
    for (std::size_t k = 0; k < est.radii.size(); ++k) {
        if (est.errors[k] < 1e-14) continue;
        const double dev = std::log(est.errors[k]) - (intercept + est.slope * std::log(est.radii[k]));
        ss += dev * dev;
        ++used;
    }
    est.fit_residual = std::sqrt(ss / used);
    est.valid = used >= 4 && est.fit_residual <= fit_residual_threshold;
    return est;
}

struct PredictedExponent {
    double alpha_star = 0.0;
    bool attained = true;
    std::string annotation;
};

// min(alpha0, 1/(1+theta2)); when the homogeneous-equation exponent alpha0
// caps the range and alpha0 < 1, the range (0, alpha0) is open and the value
// is a supremum rather than a maximum.
inline PredictedExponent predicted_exponent(double theta2, double alpha0) {
    if (!(theta2 > 0.0)) throw ConfigError("predicted_exponent: theta2 must be > 0");
    if (!(alpha0 > 0.0 && alpha0 <= 1.0)) throw ConfigError("predicted_exponent: alpha0 must lie in (0,1]");
    PredictedExponent p;
    const double sharp = 1.0 / (1.0 + theta2);
    p.alpha_star = std::min(alpha0, sharp);
    if (sharp >= alpha0 && alpha0 < 1.0) {
        p.attained = false;
        p.annotation = "supremum, not attained";
    } else {
        p.annotation = "sharp exponent 1/(1+theta2)";
    }
    return p;
}

struct C1AlphaCertificate {
    double seminorm = 0.0;
    double normalizer = 0.0;
    double ratio = 0.0;
    long long pairs = 0;
};

// Discrete C^{1,alpha} seminorm over gradient pairs in B_tau at separations
// >= 2h, divided by ||u||_inf + max(C0, C0^{1/(1+theta2)}). Pairs closer than
// 2h measure discretization noise and are excluded.
inline C1AlphaCertificate c1alpha_certificate(const GridFunction& u, double tau, double alpha,
                                              double C0, double theta2) {
    if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("c1alpha_certificate: tau must lie in (0,1)");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("c1alpha_certificate: alpha must lie in (0,1]");
    const Domain& dom = *u.domain();
    std::vector<int> nodes;
    std::vector<std::array<double, 2>> grads;
    for (int id : dom.interior()) {
        const auto p = dom.point(id);
        if (std::hypot(p[0], p[1]) <= tau * dom.extent() * (1.0 + 1e-12)) {
            nodes.push_back(id);
            grads.push_back(gradient_central(u, id));
        }
    }
    C1AlphaCertificate cert;
    const double min_sep = 2.0 * dom.h() * (1.0 - 1e-12);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto pi = dom.point(nodes[i]);
        for (std::size_t j = i + 1; j < nodes.size(); ++j) {
            const auto pj = dom.point(nodes[j]);
            const double sep = std::hypot(pi[0] - pj[0], pi[1] - pj[1]);
            if (sep < min_sep) continue;
            const double dg = std::hypot(grads[i][0] - grads[j][0], grads[i][1] - grads[j][1]);
            cert.seminorm = std::max(cert.seminorm, dg / std::pow(sep, alpha));
            ++cert.pairs;
        }
    }
    cert.normalizer = u.sup_norm() + std::max(C0, std::pow(C0, 1.0 / (1.0 + theta2)));
    cert.ratio = cert.normalizer > 0.0 ? cert.seminorm / cert.normalizer : 0.0;
    return cert;
}

struct ProbeRecord {
    std::array<double, 2> x0{0.0, 0.0};
    HolderEstimate estimate;
};

struct RegularityReport {
    FreeBoundary sets;
    std::vector<ProbeRecord> probes;
    double alpha_star = 0.0;
    double alpha0 = 1.0;
    double theta2 = 0.0;
};

} // namespace ftx
