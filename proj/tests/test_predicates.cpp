#include "ecarve/predicates.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace ecarve;

TEST_CASE("orient3d: coplanar points give zero") {
    CHECK(orient3d({0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}) == 0);
    CHECK(orient3d({0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}) == 0);
}

TEST_CASE("orient3d: sign flips with a swap") {
    const Point3 a(0, 0, 0), b(1, 0, 0), c(0, 1, 0), d(0, 0, 1);
    const int s = orient3d(a, b, c, d);
    CHECK(s != 0);
    CHECK(orient3d(b, a, c, d) == -s);
}

TEST_CASE("insphere: centroid of the unit tetra is inside (positive)") {
    const Point3 a(0, 0, 0), b(1, 0, 0), c(0, 1, 0), d(0, 0, 1);
    const Point3 centroid = (a + b + c + d) / 4.0;
    CHECK(insphere(a, b, c, d, centroid) == 1);
    CHECK(insphere(a, b, c, d, {10, 10, 10}) == -1);
}

TEST_CASE("insphere: cospherical query gives zero") {
    // Octahedron vertices lie on the unit sphere.
    const Point3 a(1, 0, 0), b(-1, 0, 0), c(0, 1, 0), d(0, 0, 1), e(0, -1, 0);
    CHECK(insphere_det(a, b, c, d, e) == 0);
    CHECK(insphere(a, b, c, d, e) == 0);
}

TEST_CASE("insphere: coplanar base gives zero") {
    CHECK(insphere({0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {0.3, 0.3, 0.3}) == 0);
}

TEST_CASE("predicate signs agree with rational oracle on random quintuples") {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    auto rnd = [&] { return Point3(u(rng), u(rng), u(rng)); };
    for (int i = 0; i < 10000; ++i) {
        const Point3 a = rnd(), b = rnd(), c = rnd(), d = rnd(), e = rnd();
        CHECK(orient3d(a, b, c, d) == oracle::orient3d_rational(a, b, c, d));
        CHECK(insphere_det(a, b, c, d, e) == oracle::insphere_rational(a, b, c, d, e));
    }
}

TEST_CASE("predicate signs agree with rational oracle near degeneracy") {
    std::mt19937_64 rng(103);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> g(-8, 8);
    std::uniform_real_distribution<double> tiny(-1e-14, 1e-14);

    // Nearly coplanar quadruples.
    for (int i = 0; i < 3000; ++i) {
        Point3 a(u(rng), u(rng), 0.0), b(u(rng), u(rng), 0.0), c(u(rng), u(rng), 0.0),
            d(u(rng), u(rng), tiny(rng));
        CHECK(orient3d(a, b, c, d) == oracle::orient3d_rational(a, b, c, d));
    }
    // Nearly/exactly cospherical quintuples: grid points on a sphere plus jitter.
    for (int i = 0; i < 3000; ++i) {
        auto on_sphere = [&] {
            Point3 p(u(rng), u(rng), u(rng));
            p.normalize();
            return p;
        };
        Point3 a = on_sphere(), b = on_sphere(), c = on_sphere(), d = on_sphere(),
            e = on_sphere();
        e += Point3(tiny(rng), tiny(rng), tiny(rng));
        CHECK(insphere_det(a, b, c, d, e) == oracle::insphere_rational(a, b, c, d, e));
    }
    // Exact integer-grid degeneracies.
    for (int i = 0; i < 3000; ++i) {
        auto gp = [&] { return Point3(g(rng), g(rng), g(rng)); };
        const Point3 a = gp(), b = gp(), c = gp(), d = gp(), e = gp();
        CHECK(orient3d(a, b, c, d) == oracle::orient3d_rational(a, b, c, d));
        CHECK(insphere_det(a, b, c, d, e) == oracle::insphere_rational(a, b, c, d, e));
    }
}

TEST_CASE("orient2d / incircle2d agree with rational oracle") {
    std::mt19937_64 rng(107);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::uniform_int_distribution<int> g(-6, 6);
    for (int i = 0; i < 5000; ++i) {
        const Point2 a(u(rng), u(rng)), b(u(rng), u(rng)), c(u(rng), u(rng)),
            d(u(rng), u(rng));
        CHECK(orient2d(a, b, c) == oracle::orient2d_rational(a, b, c));
        CHECK(incircle2d(a, b, c, d) == oracle::incircle2d_rational(a, b, c, d));
    }
    for (int i = 0; i < 5000; ++i) {
        const Point2 a(g(rng), g(rng)), b(g(rng), g(rng)), c(g(rng), g(rng)),
            d(g(rng), g(rng));
        CHECK(orient2d(a, b, c) == oracle::orient2d_rational(a, b, c));
        CHECK(incircle2d(a, b, c, d) == oracle::incircle2d_rational(a, b, c, d));
    }
}

TEST_CASE("orient3d filtered value brackets the exact determinant") {
    std::mt19937_64 rng(109);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 2000; ++i) {
        const Point3 a(u(rng), u(rng), u(rng)), b(u(rng), u(rng), u(rng)),
            c(u(rng), u(rng), u(rng)), d(u(rng), u(rng), u(rng));
        const FilteredValue f = orient3d_filtered(a, b, c, d);
        const Expansion exact = orient3d_expansion(a, b, c, d);
        double sum = 0.0;
        for (double x : exact) sum += x;
        CHECK(std::abs(sum - f.value) <= f.error);
        CHECK(expansion_sign(exact) == oracle::orient3d_rational(a, b, c, d));
    }
}

TEST_CASE("expansion arithmetic matches rational arithmetic") {
    std::mt19937_64 rng(113);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    for (int i = 0; i < 500; ++i) {
        const double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
        // (a*b - c*d) computed exactly two ways.
        const Expansion e = expansion_sub(expansion_mul(expansion_from(a), expansion_from(b)),
                                          expansion_mul(expansion_from(c), expansion_from(d)));
        const oracle::Rat r = oracle::rat(a) * oracle::rat(b) - oracle::rat(c) * oracle::rat(d);
        CHECK(expansion_sign(e) == oracle::sgn(r));
        if (!e.empty()) {
            oracle::Rat sum = 0;
            for (double x : e) sum += oracle::rat(x);
            CHECK(sum == r);
        } else {
            CHECK(r == 0);
        }
    }
}
