#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ftx/degeneracy.hpp"
#include "ftx/grid.hpp"
#include "ftx/operators.hpp"
#include "ftx/oracles.hpp"
#include "ftx/rng.hpp"
#include "ftx/solver.hpp"

using namespace ftx;

namespace {

DomainPtr interval(double h) {
    DomainSpec s;
    s.shape = Shape::interval;
    s.extent = 1.0;
    s.h = h;
    return build_domain(s);
}

EllipticOperatorSpec trace1() { return make_operator(OperatorKind::negative_trace, 1.0, 1.0); }

SolveConfig quiet_cfg() {
    SolveConfig cfg;
    cfg.tol_inner = 1e-9;
    cfg.tol_fixed_point = 1e-8;
    return cfg;
}

} // namespace

TEST_CASE("residual vanishes identically for zero data") {
    auto dom = interval(0.25);
    GridFunction u(dom, 0.0), f(dom, 0.0);
    auto theta = constant_exponent_field(dom, 2.0);
    for (auto kind : {OperatorKind::negative_trace, OperatorKind::pucci_plus, OperatorKind::pucci_minus})
        for (int id : dom->interior())
            CHECK(residual_regularized(u, theta, 0.3, f, make_operator(kind, 1, 2), id) == 0.0);
}

TEST_CASE("residual of a constant state reduces to eps^(1+theta1)*c - f") {
    auto dom = interval(1.0 / 16);
    const double eps = 0.25, c = 0.5, fval = 0.125;
    DegeneracyParams prm{1.0, 3.0, eps};
    GridFunction u(dom, c), f(dom, fval);
    auto theta = theta_field(u, prm);  // v = u; theta = theta1 away from the collar
    for (int id : dom->interior()) {
        if (dom->distance_to_boundary(id) < eps) continue;
        const double expect = std::pow(eps, 1.0 + prm.theta1) * c - fval;
        CHECK_THAT(residual_regularized(u, theta, eps, f, trace1(), id),
                   Catch::Matchers::WithinAbs(expect, 1e-13));
    }
}

TEST_CASE("residual arithmetic check at x=0.5 for the parabola") {
    // independent hand evaluation: (0.1+0.5)^1 * (0.1*0.125 - 1) - f = -0.5925 - f
    auto dom = interval(0.25);
    GridFunction u = GridFunction::from_fn(dom, [](std::array<double, 2> p) { return 0.5 * p[0] * p[0]; });
    const double fval = 0.3;
    GridFunction f(dom, fval);
    auto theta = constant_exponent_field(dom, 1.0);
    const int node = dom->id_at(2, 0);
    REQUIRE(node >= 0);
    REQUIRE(dom->point(node)[0] == 0.5);
    const double grad = 0.5, eps = 0.1, Fh = -1.0, uc = 0.125;
    const double expect = (eps + grad) * (eps * uc + Fh) - fval;
    CHECK_THAT(expect, Catch::Matchers::WithinAbs(-0.5925 - fval, 1e-14));
    CHECK_THAT(residual_regularized(u, theta, eps, f, trace1(), node),
               Catch::Matchers::WithinAbs(expect, 1e-13));
}

TEST_CASE("zero data solves to the exact zero fixed point") {
    auto dom = interval(1.0 / 8);
    GridFunction f(dom, 0.0), g(dom, 0.0);
    for (auto kind : {OperatorKind::negative_trace, OperatorKind::pucci_minus}) {
        auto res = solve_regularized_theta(constant_exponent_field(dom, 1.5), 0.25, f, g,
                                           make_operator(kind, 1, 2), quiet_cfg());
        for (int id = 0; id < dom->node_count(); ++id) CHECK(res.u[id] == 0.0);
        CHECK(res.diagnostics.certificate_residual == 0.0);
        CHECK(res.diagnostics.inner_converged);
    }
}

TEST_CASE("solver tracks the one-phase profile at small eps") {
    // |u'|^1 * (-u'') = -1.125 has the exact solution |x|^{3/2}
    const double h = 1.0 / 32;
    auto dom = interval(h);
    auto oracle = oracle_one_phase(1.0, 1);
    CHECK_THAT(oracle.f_const, Catch::Matchers::WithinAbs(-1.125, 1e-15));
    GridFunction f(dom, oracle.f_const);
    GridFunction g = oracle.sample_u(dom);
    const double eps = 1e-3;
    DegeneracyParams prm{1.0, 1.0, eps};
    auto res = solve_regularized(GridFunction(dom, 0.0), eps, f, g, trace1(), prm, quiet_cfg());
    const double err = sup_diff(res.u, g);
    INFO("sup error vs |x|^{3/2}: " << err);
    CHECK(err <= 2.0 * (std::sqrt(h) + eps));
    CHECK(res.diagnostics.certificate_ok);
}

TEST_CASE("ordered source data produces ordered solutions") {
    // f1 <= f2 makes solve(f1) a subsolution of the f2-problem, so it stays
    // below: the solution map is monotone increasing in f.
    auto dom = interval(0.25);  // 9 nodes
    Rng rng(99);
    DegeneracyParams prm{1.0, 2.0, 0.25};
    const auto theta = theta_field(GridFunction(dom, 0.0), prm);
    for (int rep = 0; rep < 5; ++rep) {
        GridFunction f1(dom, 0.0), f2(dom, 0.0), g(dom, 0.0);
        for (int id = 0; id < dom->node_count(); ++id) {
            f1[id] = rng.uniform(-1.0, 1.0);
            f2[id] = f1[id] + rng.uniform(0.0, 1.0);
            g[id] = rng.uniform(-1.0, 1.0);
        }
        auto u1 = solve_regularized_theta(theta, 0.25, f1, g, trace1(), quiet_cfg()).u;
        auto u2 = solve_regularized_theta(theta, 0.25, f2, g, trace1(), quiet_cfg()).u;
        for (int id = 0; id < dom->node_count(); ++id) CHECK(u1[id] <= u2[id] + 1e-10);
    }
}

TEST_CASE("boundary values are imposed bit-for-bit") {
    auto dom = interval(1.0 / 8);
    Rng rng(5);
    GridFunction f(dom, 0.3), g(dom, 0.0);
    for (auto& v : g.values()) v = rng.uniform(-2, 2);
    DegeneracyParams prm{1.0, 3.0, 0.25};
    auto res = solve_regularized(GridFunction(dom, 0.0), 0.25, f, g, trace1(), prm, quiet_cfg());
    for (int id : dom->boundary()) CHECK(res.u[id] == g[id]);
}

TEST_CASE("fixed point with zero data converges immediately") {
    auto dom = interval(1.0 / 8);
    GridFunction f(dom, 0.0), g(dom, 0.0);
    DegeneracyParams prm{1.0, 3.0, 0.25};
    auto res = fixed_point_T(0.25, f, g, trace1(), prm, quiet_cfg());
    CHECK(res.diagnostics.fixed_point_converged);
    CHECK(res.diagnostics.outer_deltas.size() == 1);
    for (int id = 0; id < dom->node_count(); ++id) CHECK(res.u[id] == 0.0);
}

TEST_CASE("positive one-phase fixed point freezes theta at theta1") {
    // g >= eps and small negative f keep the solution positive, so the
    // self-consistent exponent equals theta1; re-solving with the frozen field
    // reproduces the fixed point. eps = h makes the mollifier the identity.
    const double h = 0.25, eps = 0.25;
    auto dom = interval(h);
    GridFunction f(dom, -0.05), g(dom, 2.0);
    DegeneracyParams prm{1.0, 3.0, eps};
    SolveConfig cfg = quiet_cfg();
    auto res = fixed_point_T(eps, f, g, trace1(), prm, cfg);
    REQUIRE(res.diagnostics.fixed_point_converged);
    for (int id = 0; id < dom->node_count(); ++id) CHECK(res.u[id] >= eps);

    auto th = theta_field(res.u, prm);
    for (int id = 0; id < dom->node_count(); ++id)
        CHECK_THAT(th.theta[id], Catch::Matchers::WithinAbs(prm.theta1, 1e-13));

    auto frozen = solve_regularized_theta(constant_exponent_field(dom, prm.theta1), eps, f, g,
                                          trace1(), cfg);
    CHECK(sup_diff(frozen.u, res.u) <= 5.0 * (cfg.tol_fixed_point + cfg.tol_inner));
    CHECK(res.diagnostics.certificate_ok);
}

TEST_CASE("odd data give an odd fixed point when theta is constant") {
    const double h = 1.0 / 16;
    auto dom = interval(h);
    GridFunction f = GridFunction::from_fn(dom, [](std::array<double, 2> p) { return 2.0 * p[0]; });
    GridFunction g = GridFunction::from_fn(dom, [](std::array<double, 2> p) { return p[0] * p[0] * p[0]; });
    DegeneracyParams prm{1.0, 1.0, 0.1};
    SolveConfig cfg = quiet_cfg();
    auto res = fixed_point_T(0.1, f, g, trace1(), prm, cfg);
    REQUIRE(res.diagnostics.fixed_point_converged);
    double asym = 0.0;
    for (int id = 0; id < dom->node_count(); ++id) {
        const auto& i = dom->lattice(id);
        const int mirror = dom->id_at(-i[0], 0);
        REQUIRE(mirror >= 0);
        asym = std::max(asym, std::abs(res.u[id] + res.u[mirror]));
    }
    CHECK(asym <= 10.0 * cfg.tol_fixed_point);  // scheme symmetry up to solve tolerances
}

TEST_CASE("continuation on zero data is trivially Cauchy") {
    auto dom = interval(1.0 / 8);
    GridFunction f(dom, 0.0), g(dom, 0.0);
    DegeneracyParams prm{1.0, 3.0, 0.5};
    auto res = continuation(f, g, trace1(), prm, quiet_cfg());
    CHECK(res.diagnostics.continuation_cauchy);
    for (int id = 0; id < dom->node_count(); ++id) CHECK(res.u[id] == 0.0);
}

TEST_CASE("continuation approaches the two-phase oracle under joint refinement") {
    auto oracle = oracle_two_phase(1.0, 3.0);
    double prev_err = 0.0;
    int k = 0;
    for (double h : {1.0 / 16, 1.0 / 32}) {
        auto dom = interval(h);
        GridFunction f = oracle.sample_f(dom);
        GridFunction g = oracle.sample_u(dom);
        DegeneracyParams prm{1.0, 3.0, 0.5};
        auto res = continuation(f, g, trace1(), prm, quiet_cfg());
        const double err = sup_diff(res.u, oracle.sample_u(dom));
        INFO("h=" << h << " sup error " << err);
        if (k > 0) CHECK(err < prev_err);
        prev_err = err;
        ++k;

        // successive continuation deltas settle (slack factor 2 after burn-in)
        const auto& recs = res.diagnostics.continuation;
        for (std::size_t i = 2; i + 1 < recs.size(); ++i)
            if (!std::isnan(recs[i].delta_from_prev) && !std::isnan(recs[i + 1].delta_from_prev))
                CHECK(recs[i + 1].delta_from_prev <= 2.0 * recs[i].delta_from_prev + 1e-12);
    }
    CHECK(prev_err < 0.08);
}

TEST_CASE("exhausted sweep budget raises a convergence error with diagnostics") {
    auto dom = interval(1.0 / 8);
    GridFunction f(dom, 1.0), g(dom, 0.0);
    SolveConfig cfg = quiet_cfg();
    cfg.max_inner_iters = 1;
    bool threw = false;
    try {
        solve_regularized_theta(constant_exponent_field(dom, 1.0), 0.25, f, g, trace1(), cfg);
    } catch (const ConvergenceError& e) {
        threw = true;
        CHECK(e.diagnostics.inner_residuals.size() == 1);
        CHECK_FALSE(e.diagnostics.inner_converged);
    }
    CHECK(threw);
}

TEST_CASE("scale_problem identity and the worked example") {
    auto dom = interval(1.0 / 32);
    GridFunction u = GridFunction::from_fn(dom, [](std::array<double, 2> p) {
        return std::cos(3.0 * p[0]);  // sup norm 1 attained at x=0
    });
    auto id = scale_problem(u, 1.0, 1.0, 3.0, trace1(), 1.0);
    CHECK(id.C0_bar == 1.0);
    CHECK(sup_diff(id.v, u) == 0.0);

    // ||u|| = 1, C0 = 1, theta2 = 3, r = 1/2: K = 2 and C0bar = max(2^-5/2^4, 2^-2/2) = 1/8
    auto sc = scale_problem(u, 1.0, 0.5, 3.0, trace1());
    CHECK_THAT(sc.K, Catch::Matchers::WithinAbs(2.0, 1e-12));
    CHECK_THAT(sc.C0_bar, Catch::Matchers::WithinAbs(0.125, 1e-12));
    CHECK(sc.v.domain()->spec().h == dom->h() / 0.5);
    // restriction: v(x) = u(x/2)/K exactly on nodes
    for (int vid = 0; vid < sc.v.domain()->node_count(); ++vid) {
        const auto& i = sc.v.domain()->lattice(vid);
        const int src = dom->id_at(i[0], i[1]);
        REQUIRE(src >= 0);
        CHECK(sc.v[vid] == u[src] / sc.K);
    }
    CHECK(sc.v.sup_norm() <= 1.0);

    // with r = eps <= K the rescaled bound drops below eps
    for (double eps : {0.5, 0.25, 0.125}) {
        auto z = scale_problem(u, 1.0, eps, 3.0, trace1());
        CHECK(z.v.sup_norm() <= 1.0 + 1e-15);
        CHECK(z.C0_bar <= eps + 1e-15);
    }

    CHECK_THROWS_AS(scale_problem(u, 1.0, 0.3, 3.0, trace1()), ConfigError);
}

TEST_CASE("the transformed operator keeps the declared ellipticity") {
    auto dom = interval(1.0 / 16);
    GridFunction u(dom, 1.0);
    auto op = make_operator(OperatorKind::negative_trace, 1.0, 2.0);
    auto sc = scale_problem(u, 1.0, 0.5, 3.0, op);
    auto rep = check_uniform_ellipticity_fn([&](const SymMat& m) { return sc.op_bar(m); }, 2,
                                            op.lambda, op.Lambda, 1000, 17);
    CHECK(rep.pass);
}

TEST_CASE("solver rejects invalid configuration") {
    SolveConfig cfg;
    cfg.damping = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = SolveConfig{};
    cfg.tol_inner = -1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    auto dom = interval(0.25);
    GridFunction f(dom, 0.0), g(dom, 0.0);
    CHECK_THROWS_AS(
        solve_regularized_theta(constant_exponent_field(dom, 1.0), 1.5, f, g, trace1(), SolveConfig{}),
        ConfigError);
}
