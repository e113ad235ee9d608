#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ftx/grid.hpp"
#include "ftx/operators.hpp"
#include "ftx/rng.hpp"

using namespace ftx;

namespace {

SymMat random_sym(Rng& rng, int dim, double s = 2.0) {
    if (dim == 1) return SymMat::scalar(rng.uniform(-s, s));
    return SymMat::make2(rng.uniform(-s, s), rng.uniform(-s, s), rng.uniform(-s, s));
}

DomainPtr box2(double h) {
    DomainSpec s;
    s.shape = Shape::box;
    s.extent = 1.0;
    s.h = h;
    return build_domain(s);
}

} // namespace

TEST_CASE("pucci extremal operators on canonical matrices") {
    const SymMat m = SymMat::diag(1.0, -1.0);
    CHECK_THAT(pucci_plus(m, 1.0, 2.0), Catch::Matchers::WithinAbs(1.0, 1e-14));
    CHECK_THAT(pucci_minus(m, 1.0, 2.0), Catch::Matchers::WithinAbs(-1.0, 1e-14));
    CHECK(pucci_plus(SymMat::make2(0, 0, 0), 1.0, 2.0) == 0.0);
    CHECK_THAT(pucci_plus(SymMat::identity(2), 1.0, 2.0), Catch::Matchers::WithinAbs(-2.0, 1e-14));
    CHECK_THAT(pucci_minus(SymMat::identity(2), 1.0, 2.0), Catch::Matchers::WithinAbs(-4.0, 1e-14));
}

TEST_CASE("pucci ordering on random matrices") {
    Rng rng(123);
    for (int i = 0; i < 1000; ++i) {
        const SymMat m = random_sym(rng, 2, 3.0);
        CHECK(pucci_minus(m, 1.0, 2.5) <= pucci_plus(m, 1.0, 2.5) + 1e-14);
    }
}

TEST_CASE("apply_exact built-ins") {
    CHECK(apply_exact(make_operator(OperatorKind::negative_trace, 1, 2), SymMat::diag(2, 3)) == -5.0);

    Rng rng(5);
    auto full = make_operator(OperatorKind::convex_combination, 1, 2, 1.0);
    for (int i = 0; i < 100; ++i) {
        const SymMat m = random_sym(rng, 2);
        CHECK_THAT(apply_exact(full, m), Catch::Matchers::WithinAbs(-m.trace(), 1e-13));
    }
}

TEST_CASE("negative_trace sits in the (1,d) spectral ellipticity band") {
    Rng rng(6);
    for (int i = 0; i < 500; ++i) {
        const SymMat m = random_sym(rng, 2);
        SymMat a = random_sym(rng, 2, 1.5);
        // N = A^2 is PSD
        const SymMat n = SymMat::make2(a.a11 * a.a11 + a.a12 * a.a12, a.a12 * (a.a11 + a.a22),
                                       a.a12 * a.a12 + a.a22 * a.a22);
        const double diff = -m.trace() + (m + n).trace();  // F(M) - F(M+N) = tr(N)
        const double norm = n.max_eigenvalue();
        CHECK(diff >= norm - 1e-12);
        CHECK(diff <= 2.0 * norm + 1e-12);
    }
}

TEST_CASE("sandwich: pucci_minus <= builtin op <= pucci_plus") {
    Rng rng(7);
    const double lam = 1.0, Lam = 2.0;
    auto ops = {make_operator(OperatorKind::negative_trace, lam, Lam),
                make_operator(OperatorKind::pucci_plus, lam, Lam),
                make_operator(OperatorKind::pucci_minus, lam, Lam),
                make_operator(OperatorKind::convex_combination, lam, Lam, 0.4)};
    for (int i = 0; i < 1000; ++i) {
        const SymMat m = random_sym(rng, 2, 3.0);
        for (const auto& op : ops) {
            const double v = apply_exact(op, m);
            CHECK(v >= pucci_minus(m, lam, Lam) - 1e-12);
            CHECK(v <= pucci_plus(m, lam, Lam) + 1e-12);
        }
    }
}

TEST_CASE("discrete operator matches the exact one on stencil-aligned quadratics") {
    auto dom = box2(0.25);
    GridFunction saddle = GridFunction::from_fn(
        dom, [](std::array<double, 2> p) { return 0.5 * (p[0] * p[0] - p[1] * p[1]); });
    auto pp = make_operator(OperatorKind::pucci_plus, 1.0, 2.0);
    for (int id : dom->interior())
        CHECK_THAT(apply_discrete(pp, saddle, id),
                   Catch::Matchers::WithinAbs(pucci_plus(SymMat::diag(1, -1), 1, 2), 1e-12));

    GridFunction bowl =
        GridFunction::from_fn(dom, [](std::array<double, 2> p) { return 0.5 * (p[0] * p[0] + p[1] * p[1]); });
    auto nt = make_operator(OperatorKind::negative_trace, 1.0, 2.0);
    for (int id : dom->interior())
        CHECK_THAT(apply_discrete(nt, bowl, id), Catch::Matchers::WithinAbs(-2.0, 1e-12));

    GridFunction affine =
        GridFunction::from_fn(dom, [](std::array<double, 2> p) { return 1.0 + 2.0 * p[0] - p[1]; });
    for (auto kind : {OperatorKind::negative_trace, OperatorKind::pucci_plus,
                      OperatorKind::pucci_minus, OperatorKind::convex_combination})
        for (int id : dom->interior())
            CHECK_THAT(apply_discrete(make_operator(kind, 1.0, 2.0), affine, id),
                       Catch::Matchers::WithinAbs(0.0, 1e-12));
}

TEST_CASE("rotated quadratics: the diagonal frame captures the pi/4 eigenframe") {
    auto dom = box2(0.25);
    // eigenframe at 45 degrees: u = ((x+y)^2 a + (x-y)^2 b)/4
    const double a = 1.0, b = -2.0;
    GridFunction u = GridFunction::from_fn(dom, [&](std::array<double, 2> p) {
        const double s = (p[0] + p[1]) / std::sqrt(2.0), t = (p[0] - p[1]) / std::sqrt(2.0);
        return 0.5 * (a * s * s + b * t * t);
    });
    const double exact = pucci_plus(SymMat::diag(a, b), 1.0, 2.0);
    auto with_diag = make_operator(OperatorKind::pucci_plus, 1.0, 2.0);
    auto axis_only = with_diag;
    axis_only.frames = {{Dir{1, 0}, Dir{0, 1}}};

    const int center = dom->id_at(0, 0);
    CHECK_THAT(apply_discrete(with_diag, u, center), Catch::Matchers::WithinAbs(exact, 1e-12));
    // axis frame alone underestimates the max; adding the diagonal frame closes the gap
    CHECK(apply_discrete(axis_only, u, center) < exact - 0.1);
}

TEST_CASE("discrete operator is monotone in neighbor values") {
    auto dom = box2(0.25);
    Rng rng(11);
    for (auto kind : {OperatorKind::negative_trace, OperatorKind::pucci_plus,
                      OperatorKind::pucci_minus, OperatorKind::convex_combination}) {
        auto op = make_operator(kind, 1.0, 2.0, 0.3);
        for (int rep = 0; rep < 40; ++rep) {
            GridFunction u(dom, 0.0);
            for (auto& v : u.values()) v = rng.uniform(-1, 1);
            const int node = dom->interior()[static_cast<std::size_t>(
                rng.uniform_int(0, dom->interior_count() - 1))];
            const double before = apply_discrete(op, u, node);
            const auto& frames = op.effective_frames(2);
            const auto& f = frames[static_cast<std::size_t>(rng.uniform_int(0, 1))];
            const auto& e = f[static_cast<std::size_t>(rng.uniform_int(0, 1))];
            const int nb = dom->neighbor(node, e, rng.uniform_int(0, 1) ? 1 : -1);
            REQUIRE(nb >= 0);
            u[nb] += 0.5;
            CHECK(apply_discrete(op, u, node) <= before + 1e-12);
        }
    }
}

TEST_CASE("ellipticity checker accepts correct declarations") {
    auto nt2 = make_operator(OperatorKind::negative_trace, 1.0, 2.0);
    CHECK(check_uniform_ellipticity(nt2, 2, 1000, 99).pass);

    auto nt1 = make_operator(OperatorKind::negative_trace, 1.0, 1.0);
    CHECK(check_uniform_ellipticity(nt1, 1, 1000, 99).pass);

    // in d=1 the Pucci operators are exactly (lambda,Lambda)-elliptic
    auto pm1 = make_operator(OperatorKind::pucci_minus, 1.0, 2.0);
    CHECK(check_uniform_ellipticity(pm1, 1, 1000, 99).pass);

    // in d=2 the spectral-norm upper bound needs Lambda widened to d*Lambda
    auto pm2 = make_operator(OperatorKind::pucci_minus, 1.0, 2.0);
    CHECK(check_uniform_ellipticity_fn(
              [&](const SymMat& m) { return apply_exact(pm2, m); }, 2, 1.0, 4.0, 1000, 99)
              .pass);
}

TEST_CASE("ellipticity checker rejects a bad declaration with a witness") {
    // negative_trace declared (2,d): N = I in d=1 gives F(M)-F(M+N) = 1 < 2
    auto bad = make_operator(OperatorKind::negative_trace, 2.0, 1.0 * 2.0);
    auto rep = check_uniform_ellipticity(bad, 1, 200, 3);
    CHECK_FALSE(rep.pass);
    REQUIRE(rep.witness.has_value());
    const auto& [m, n] = *rep.witness;
    const double diff = apply_exact(bad, m) - apply_exact(bad, m + n);
    CHECK(diff < 2.0 * n.max_eigenvalue());

    // d=2 spectral norm: pucci_minus with its raw (lambda,Lambda) fails on N = I
    auto pm2 = make_operator(OperatorKind::pucci_minus, 1.0, 2.0);
    auto rep2 = check_uniform_ellipticity(pm2, 2, 200, 3);
    CHECK_FALSE(rep2.pass);
}

TEST_CASE("operator frame validation") {
    auto op = make_operator(OperatorKind::pucci_plus, 1.0, 2.0);
    op.frames = {{Dir{1, 0}, Dir{1, 1}}};  // not orthogonal
    CHECK_THROWS_AS(op.validate(2), ConfigError);
    auto ok = make_operator(OperatorKind::negative_trace, 1.0, 2.0);
    CHECK_NOTHROW(ok.validate(2));
    CHECK_THROWS_AS(make_operator(OperatorKind::negative_trace, 2.0, 1.0).validate(2), ConfigError);
}
