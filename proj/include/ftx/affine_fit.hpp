#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "ftx/errors.hpp"

namespace ftx {

// Affine function a + b.x together with its minimax error over a point set.
struct AffineFit {
    double a = 0.0;
    std::array<double, 2> b{0.0, 0.0};
    double error = 0.0;  // max |u - (a + b.x)| over the fitted points
    bool optimal = false;
    int iterations = 0;

    double eval(const std::array<double, 2>& x) const { return a + b[0] * x[0] + b[1] * x[1]; }
};

namespace detail {

// Dense Gaussian elimination with partial pivoting, n <= 4.
inline bool solve_dense(std::vector<std::vector<double>>& A, std::vector<double>& rhs) {
    const int n = static_cast<int>(rhs.size());
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
            if (std::abs(A[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]) >
                std::abs(A[static_cast<std::size_t>(piv)][static_cast<std::size_t>(c)]))
                piv = r;
        if (std::abs(A[static_cast<std::size_t>(piv)][static_cast<std::size_t>(c)]) < 1e-13)
            return false;
        std::swap(A[static_cast<std::size_t>(c)], A[static_cast<std::size_t>(piv)]);
        std::swap(rhs[static_cast<std::size_t>(c)], rhs[static_cast<std::size_t>(piv)]);
        for (int r = c + 1; r < n; ++r) {
            const double m = A[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] /
                             A[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
            for (int k = c; k < n; ++k)
                A[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)] -=
                    m * A[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)];
            rhs[static_cast<std::size_t>(r)] -= m * rhs[static_cast<std::size_t>(c)];
        }
    }
    for (int r = n - 1; r >= 0; --r) {
        double s = rhs[static_cast<std::size_t>(r)];
        for (int k = r + 1; k < n; ++k)
            s -= A[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)] * rhs[static_cast<std::size_t>(k)];
        rhs[static_cast<std::size_t>(r)] = s / A[static_cast<std::size_t>(r)][static_cast<std::size_t>(r)];
    }
    return true;
}

inline AffineFit least_squares_affine(const std::vector<std::array<double, 2>>& xs,
                                      const std::vector<double>& us, int dim) {
    const int m = dim + 1;
    std::vector<std::vector<double>> A(static_cast<std::size_t>(m),
                                       std::vector<double>(static_cast<std::size_t>(m), 0.0));
    std::vector<double> rhs(static_cast<std::size_t>(m), 0.0);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        std::array<double, 3> row{1.0, xs[i][0], xs[i][1]};
        for (int r = 0; r < m; ++r) {
            for (int c = 0; c < m; ++c)
                A[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] +=
                    row[static_cast<std::size_t>(r)] * row[static_cast<std::size_t>(c)];
            rhs[static_cast<std::size_t>(r)] += row[static_cast<std::size_t>(r)] * us[i];
        }
    }
    for (int r = 0; r < m; ++r) A[static_cast<std::size_t>(r)][static_cast<std::size_t>(r)] += 1e-12;
    solve_dense(A, rhs);
    AffineFit fit;
    fit.a = rhs[0];
    fit.b[0] = m > 1 ? rhs[1] : 0.0;
    fit.b[1] = m > 2 ? rhs[2] : 0.0;
    return fit;
}

} // namespace detail

// Discrete Chebyshev (minimax) affine fit by single-point exchange on d+2
// support points, initialized from least squares. Mirrors the sup-norm
// oscillation quantity exactly; the returned error is always the true maximum
// residual of the returned affine function.
inline AffineFit chebyshev_affine_fit(const std::vector<std::array<double, 2>>& xs,
                                      const std::vector<double>& us, int dim) {
    const int m = dim + 2;
    if (static_cast<int>(xs.size()) < m)
        throw ResolutionError("chebyshev_affine_fit: need at least d+2 points");

    auto residuals = [&](const AffineFit& f, std::vector<double>& r) {
        r.resize(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) r[i] = us[i] - f.eval(xs[i]);
    };
    auto max_abs_index = [](const std::vector<double>& r) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < r.size(); ++i)
            if (std::abs(r[i]) > std::abs(r[best])) best = i;
        return best;
    };

    AffineFit best = detail::least_squares_affine(xs, us, dim);
    std::vector<double> r;
    residuals(best, r);
    best.error = std::abs(r[max_abs_index(r)]);
    if (best.error < 1e-300) {
        best.optimal = true;
        return best;
    }
    double scale = 0.0;
    for (double u : us) scale = std::max(scale, std::abs(u));
    scale = std::max(scale, 1.0);

    // initial support: the m largest residuals
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return std::abs(r[a]) > std::abs(r[b]); });
    std::vector<std::size_t> support(order.begin(), order.begin() + m);
    std::vector<double> sigma(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k)
        sigma[static_cast<std::size_t>(k)] = r[support[static_cast<std::size_t>(k)]] >= 0.0 ? 1.0 : -1.0;

    // solve a + b.x_i + sigma_i E = u_i on the support
    auto solve_support = [&](const std::vector<std::size_t>& sup, const std::vector<double>& sg,
                             AffineFit& out) {
        std::vector<std::vector<double>> A(static_cast<std::size_t>(m),
                                           std::vector<double>(static_cast<std::size_t>(m), 0.0));
        std::vector<double> rhs(static_cast<std::size_t>(m), 0.0);
        for (int k = 0; k < m; ++k) {
            const auto& x = xs[sup[static_cast<std::size_t>(k)]];
            A[static_cast<std::size_t>(k)][0] = 1.0;
            for (int c = 0; c < dim; ++c)
                A[static_cast<std::size_t>(k)][static_cast<std::size_t>(1 + c)] = x[static_cast<std::size_t>(c)];
            A[static_cast<std::size_t>(k)][static_cast<std::size_t>(m - 1)] = sg[static_cast<std::size_t>(k)];
            rhs[static_cast<std::size_t>(k)] = us[sup[static_cast<std::size_t>(k)]];
        }
        if (!detail::solve_dense(A, rhs)) return false;
        out.a = rhs[0];
        out.b = {dim >= 1 ? rhs[1] : 0.0, dim >= 2 ? rhs[2] : 0.0};
        out.error = rhs[static_cast<std::size_t>(m - 1)];
        if (out.error < 0.0) return false;  // wrong sign pattern
        return true;
    };

    AffineFit cur;
    bool have = solve_support(support, sigma, cur);
    for (int iter = 0; iter < 200; ++iter) {
        if (!have) break;
        residuals(cur, r);
        const std::size_t j = max_abs_index(r);
        const double worst = std::abs(r[j]);
        if (worst < best.error) {
            best = cur;
            best.error = worst;
        }
        if (worst <= cur.error * (1.0 + 1e-10) + 1e-13 * scale) {
            best = cur;
            best.error = worst;
            best.optimal = true;
            best.iterations = iter;
            break;
        }
        // exchange: bring j in, drop the support point that maximizes E
        const double sj = r[j] >= 0.0 ? 1.0 : -1.0;
        AffineFit trial, chosen;
        int drop = -1;
        for (int k = 0; k < m; ++k) {
            auto sup = support;
            auto sg = sigma;
            sup[static_cast<std::size_t>(k)] = j;
            sg[static_cast<std::size_t>(k)] = sj;
            if (!solve_support(sup, sg, trial)) continue;
            if (trial.error > cur.error * (1.0 + 1e-14) && (drop < 0 || trial.error > chosen.error)) {
                chosen = trial;
                drop = k;
            }
        }
        if (drop < 0) break;  // no ascent available; keep the best seen
        support[static_cast<std::size_t>(drop)] = j;
        sigma[static_cast<std::size_t>(drop)] = sj;
        cur = chosen;
    }
    if (!best.optimal) {
        residuals(best, r);
        best.error = std::abs(r[max_abs_index(r)]);
    }
    return best;
}

} // namespace ftx
