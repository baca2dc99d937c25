#include <doctest.h>

#include "msc/errors.hpp"
#include "msc/rootcert.hpp"

#include <cmath>

using namespace msc;

namespace {

Box2 box(double x0, double y0, double x1, double y1) {
    return Box2(Interval(Dyadic::from_double(x0), Dyadic::from_double(x1)),
                Interval(Dyadic::from_double(y0), Dyadic::from_double(y1)));
}

// independent oracle: bisection roots of 4x^3 - 39x + 30 on [-5, 5]
std::vector<double> cubic_oracle() {
    auto f = [](double x) { return 4 * x * x * x - 39 * x + 30; };
    std::vector<double> roots;
    double prev = -5;
    for (double x = -5 + 1e-3; x <= 5; x += 1e-3) {
        if (f(prev) * f(x) < 0) {
            double a = prev, b = x;
            for (int i = 0; i < 80; ++i) {
                double m = 0.5 * (a + b);
                (f(a) * f(m) <= 0 ? b : a) = m;
            }
            roots.push_back(0.5 * (a + b));
        }
        prev = x;
    }
    return roots;
}

// gradient of h = 10x - (13/2) r^2 + (1/3) r^4
GradientField fig_quartic() {
    return gradient_field(
        parse_field("10*x - (13/2)*(x^2+y^2) + (1/3)*(x^2+y^2)^2"));
}

} // namespace

TEST_CASE("predicate c0 detects sign-definite factors") {
    RootCertifier cert(parse_field("x"), parse_field("y"));
    CHECK(cert.predicate_c0(box(1, 1, 2, 2)));
    CHECK_FALSE(cert.predicate_c0(box(-1, -1, 1, 1)));
}

TEST_CASE("predicate c1 certifies the Jacobian and a sound alpha bound") {
    RootCertifier ab(parse_field("x"), parse_field("y"));
    PredicateReport r = ab.predicate_c1(box(-1, -1, 1, 1));
    CHECK(r.c1_holds);
    // normalized Jacobian is exactly 1, so alpha_lower = 1 + 1/6 <= pi/2
    CHECK(r.alpha_lower.to_double() == doctest::Approx(7.0 / 6).epsilon(1e-9));
    CHECK(r.alpha_lower.to_double() < 1.5707963268);

    // f=x, g=x+y/16: normalized Jacobian is (1/16)/sqrt(1+1/256)
    RootCertifier skew(parse_field("x"), parse_field("x + y/16"));
    PredicateReport s = skew.predicate_c1(box(-1, -1, 1, 1));
    CHECK(s.c1_holds);
    double L = (1.0 / 16) / std::sqrt(1 + 1.0 / 256);
    CHECK(s.alpha_lower.to_double() <= std::asin(L) + 1e-12);
    CHECK(s.alpha_lower.to_double() >= L - 1e-12);

    // degenerate Jacobian (h = x^3 gradient system) fails at any depth
    RootCertifier degen(parse_field("3*x^2"), parse_field("y"));
    CHECK_FALSE(degen.predicate_c1(box(-0.25, -0.25, 0.25, 0.25)).c1_holds);
    CHECK_FALSE(degen.predicate_c1(box(-0.001, -0.001, 0.001, 0.001)).c1_holds);
}

TEST_CASE("predicate c2 bounds gradient direction variation") {
    RootCertifier lin(parse_field("x + 2*y"), parse_field("y"));
    CHECK(lin.predicate_c2(box(-4, -4, 4, 4), 0)); // constant direction
    RootCertifier circ(parse_field("x^2 + y^2"), parse_field("y"));
    CHECK_FALSE(circ.predicate_c2(box(-1, -1, 1, 1), 0)); // full turn
    // small far-away box: direction nearly constant
    CHECK(circ.predicate_c2(box(10, 10, 10.01, 10.01), 0));
}

TEST_CASE("boundary crossing isolation brackets with certified signs") {
    RootCertifier cert(parse_field("y - 1/4"), parse_field("x"));
    Box2 outer = box(-1, -1, 2, 2);
    Dyadic max_len = Dyadic::from_double(1.0 / 64);
    auto v = cert.isolate_boundary_crossings(cert.f(), outer, max_len);
    REQUIRE(v.size() == 2);
    for (const auto& bi : v) {
        CHECK(bi.length() <= max_len);
        CHECK((bi.edge == Edge::Left || bi.edge == Edge::Right));
        CHECK(bi.span.contains(Dyadic::from_double(0.25)));
        // certified opposite signs at the endpoints
        auto p0 = bi.point_at(bi.span.lo), p1 = bi.point_at(bi.span.hi);
        int s0 = sign_at(cert.f(), p0[0], p0[1]);
        int s1 = sign_at(cert.f(), p1[0], p1[1]);
        CHECK(s0 * s1 == -1);
    }
    // near-diagonal line crossing two opposite corners' edges
    RootCertifier diag(parse_field("x - y - 1/8"), parse_field("x"));
    auto w = diag.isolate_boundary_crossings(diag.f(), outer, max_len);
    REQUIRE(w.size() == 2);
    // curve missing the box entirely: no crossings
    RootCertifier off(parse_field("y - 10"), parse_field("x"));
    CHECK(off.isolate_boundary_crossings(off.f(), outer, max_len).empty());
}

TEST_CASE("classifier reports transversal crossings and discards misses") {
    Box2 b = box(0, 0, 1, 1);
    RootCertifier hit(parse_field("x - 3/8"), parse_field("y - 3/8"));
    auto r = hit.classify_grid_box(b);
    REQUIRE(r.has_value());
    CHECK(r->inner.contains_point(Dyadic::from_double(0.375), Dyadic::from_double(0.375)));
    CHECK(r->outer.strictly_contains_box(Box2(Interval(r->inner.x.lo, r->inner.x.lo), r->inner.y)));
    CHECK(crossings_interleave(r->outer, r->f_crossings, r->g_crossings));

    // near-parallel curves with no intersection nearby: discard
    RootCertifier miss(parse_field("x - 3/8"), parse_field("x - 5/8 + y/100"));
    CHECK_FALSE(miss.classify_grid_box(b).has_value());
}

TEST_CASE("solve_system isolates the origin for the axis system") {
    auto pairs = solve_system(parse_field("x"), parse_field("y"),
                              box(-1, -1, 1, 1), 12);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].inner.contains_point(Dyadic(0), Dyadic(0)));
}

TEST_CASE("solve_system finds the three critical points of the quartic field") {
    GradientField g = fig_quartic();
    auto pairs = solve_system(g.hx, g.hy, box(-5, -5, 5, 5), 12);
    auto roots = cubic_oracle();
    REQUIRE(roots.size() == 3);
    REQUIRE(pairs.size() == 3);
    // every oracle root (x_i, 0) in exactly one inner box
    for (double r : roots) {
        int hits = 0;
        for (const auto& p : pairs)
            if (p.inner.contains_point(Dyadic::from_double(r), Dyadic(0))) ++hits;
        CHECK(hits == 1);
    }
    // outer boxes pairwise disjoint, certificates re-verified
    RootCertifier cert(g.hx, g.hy);
    for (size_t i = 0; i < pairs.size(); ++i) {
        for (size_t j = i + 1; j < pairs.size(); ++j)
            CHECK_FALSE(boxes_interiors_intersect(pairs[i].outer, pairs[j].outer));
        const auto& p = pairs[i];
        CHECK(cert.predicate_c1(p.grid_box).c1_holds);
        CHECK(crossings_interleave(p.outer, p.f_crossings, p.g_crossings));
        for (const auto& bi : {p.f_crossings[0], p.f_crossings[1]}) {
            auto a = bi.point_at(bi.span.lo), b2 = bi.point_at(bi.span.hi);
            CHECK(sign_at(g.hx, a[0], a[1]) * sign_at(g.hx, b2[0], b2[1]) == -1);
        }
        for (const auto& bi : {p.g_crossings[0], p.g_crossings[1]}) {
            auto a = bi.point_at(bi.span.lo), b2 = bi.point_at(bi.span.hi);
            CHECK(sign_at(g.hy, a[0], a[1]) * sign_at(g.hy, b2[0], b2[1]) == -1);
        }
    }
}

TEST_CASE("solve_system reports a clean miss on rootless domains") {
    auto pairs = solve_system(parse_field("x - 10"), parse_field("y"),
                              box(-1, -1, 1, 1), 8);
    CHECK(pairs.empty());
}

TEST_CASE("degenerate systems hit the depth cap honestly") {
    // double root: x^2 = 0, y = 0 has a singular Jacobian at the root
    CHECK_THROWS_AS(solve_system(parse_field("x^2"), parse_field("y"),
                                 box(-1, -1, 1, 1), 6),
                    MaxDepthExceeded);
}
