#include <doctest.h>

#include "msc/errors.hpp"
#include "msc/field.hpp"

#include <cmath>
#include <random>

using namespace msc;

namespace {

Box2 box(double x0, double y0, double x1, double y1) {
    return Box2(Interval(Dyadic::from_double(x0), Dyadic::from_double(x1)),
                Interval(Dyadic::from_double(y0), Dyadic::from_double(y1)));
}

bool encloses(const Interval& i, double v, double tol = 1e-12) {
    return i.lo.to_double() <= v + tol && v - tol <= i.hi.to_double();
}

} // namespace

TEST_CASE("parser handles precedence, powers, and functions") {
    ExprPtr e = parse_field("10*x - (13/2)*(x^2+y^2) + (1/3)*(x^2+y^2)^2");
    double x = 1.25, y = -0.5, r2 = x * x + y * y;
    double want = 10 * x - 6.5 * r2 + r2 * r2 / 3.0;
    Interval got = eval_point(e, Dyadic::from_double(x), Dyadic::from_double(y), 80);
    CHECK(encloses(got, want));

    ExprPtr t = parse_field("cos(x)*sin(y) + 0.2*(x+y)");
    double wt = std::cos(x) * std::sin(y) + 0.2 * (x + y);
    CHECK(encloses(eval_point(t, Dyadic::from_double(x), Dyadic::from_double(y), 80), wt));

    CHECK(encloses(eval_point(parse_field("2*x^3"), Dyadic(2), Dyadic(0), 80), 16.0));
    CHECK(encloses(eval_point(parse_field("-x^2"), Dyadic(3), Dyadic(0), 80), -9.0));
    CHECK(encloses(eval_point(parse_field("exp(x - 1)"), Dyadic(1), Dyadic(0), 80), 1.0));
}

TEST_CASE("decimal literals: power-of-two denominators exact, others enclosed") {
    ExprPtr half = parse_field("0.5");
    CHECK(half->value.is_point());
    CHECK(half->value.lo == Dyadic::from_double(0.5));
    ExprPtr fifth = parse_field("0.2");
    CHECK_FALSE(fifth->value.is_point());
    CHECK(fifth->value.width() <= Dyadic::power_of_two(-95));
    CHECK(encloses(fifth->value, 0.2, 1e-16));
}

TEST_CASE("parser rejects malformed input") {
    CHECK_THROWS_AS(parse_field("x +"), Error);
    CHECK_THROWS_AS(parse_field("foo(x)"), Error);
    CHECK_THROWS_AS(parse_field("x ^ -2"), Error);
    CHECK_THROWS_AS(parse_field("(x"), Error);
    CHECK_THROWS_AS(parse_field("x y"), Error);
}

TEST_CASE("differentiation matches hand-computed gradients") {
    // h = 10x - (13/2) r^2 + (1/3) r^4 has hx(x,0) = (4x^3 - 39x + 30)/3
    GradientField g = gradient_field(
        parse_field("10*x - (13/2)*(x^2+y^2) + (1/3)*(x^2+y^2)^2"));
    for (double x : {-3.0, -1.0, 0.5, 2.0, 3.2}) {
        double want = (4 * x * x * x - 39 * x + 30) / 3.0;
        CHECK(encloses(eval_point(g.hx, Dyadic::from_double(x), Dyadic(0), 96), want, 1e-10));
    }
    HessianExprs hs = hessian_exprs(g);
    // hxx = -13 + (4/3)(3x^2 + y^2) at (1,2): -13 + (4/3)*7
    CHECK(encloses(eval_point(hs.hxx, Dyadic(1), Dyadic(2), 96), -13 + 28.0 / 3, 1e-10));
    // hxy = (8/3) x y
    CHECK(encloses(eval_point(hs.hxy, Dyadic(1), Dyadic(2), 96), 16.0 / 3, 1e-10));
}

TEST_CASE("fuzz: derivative enclosures match central differences") {
    GradientField g = gradient_field(parse_field("cos(x)*sin(y) + 0.2*(x+y)"));
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> pt(-3.0, 3.0);
    for (int i = 0; i < 50; ++i) {
        double x = pt(rng), y = pt(rng), h = 1e-6;
        double dx = (std::cos(x + h) * std::sin(y) - std::cos(x - h) * std::sin(y)) / (2 * h) + 0.2;
        Interval got = eval_point(g.hx, Dyadic::from_double(x), Dyadic::from_double(y), 80);
        CHECK(got.lo.to_double() <= dx + 1e-9);
        CHECK(dx - 1e-9 <= got.hi.to_double());
    }
}

TEST_CASE("eval_box encloses sampled point values and is inclusion monotone") {
    ExprPtr e = parse_field("exp(0.5*x)*sin(y) - x*y^2");
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> pt(-2.0, 2.0);
    for (int i = 0; i < 40; ++i) {
        double x0 = pt(rng), y0 = pt(rng);
        Box2 inner = box(x0, y0, x0 + 0.1, y0 + 0.1);
        Box2 outer = box(x0 - 0.05, y0 - 0.05, x0 + 0.15, y0 + 0.15);
        Interval ri = eval_box(e, inner, 64);
        Interval ro = eval_box(e, outer, 64);
        CHECK(ro.contains(ri));
        for (double t : {0.0, 0.5, 1.0}) {
            double px = x0 + 0.1 * t, py = y0 + 0.1 * t;
            double v = std::exp(0.5 * px) * std::sin(py) - px * py * py;
            CHECK(ri.lo.to_double() <= v + 1e-10);
            CHECK(v - 1e-10 <= ri.hi.to_double());
        }
    }
}

TEST_CASE("eval_box converges as boxes shrink") {
    ExprPtr e = parse_field("x^2*y - sin(x+y)");
    Dyadic cx = Dyadic::from_double(0.7), cy = Dyadic::from_double(-0.3);
    Dyadic prev;
    for (int k = 1; k <= 8; ++k) {
        Dyadic h = Dyadic::power_of_two(-k);
        Box2 b(Interval(cx - h, cx + h), Interval(cy - h, cy + h));
        Dyadic w = eval_box(e, b, 80).width();
        if (k > 1) CHECK(w <= prev);
        prev = w;
    }
    CHECK(prev.to_double() < 0.05);
}

TEST_CASE("sign_at decides clear signs and throws on exact zeros") {
    ExprPtr e = parse_field("x^2 - 2");
    CHECK(sign_at(e, Dyadic(1), Dyadic(0)) == -1);
    CHECK(sign_at(e, Dyadic(2), Dyadic(0)) == 1);
    // x - 1 at x = 1 is exactly zero: no certified sign exists
    CHECK_THROWS_AS(sign_at(parse_field("x - 1"), Dyadic(1), Dyadic(0), 256),
                    SignUndecidable);
}

TEST_CASE("angle constants bound the gradient direction variation rate") {
    // h = x^2/2 + y^2, gradient (x, 2y); on [1,2]^2 the x-rate
    // |hx*hxy - hy*hxx| / |grad|^2 = 2y/(x^2+4y^2) has true max 0.4
    GradientField g = gradient_field(parse_field("0.5*x^2 + y^2"));
    HessianExprs hs = hessian_exprs(g);
    BoxUnion region;
    region.boxes.push_back(box(1, 1, 2, 2));
    AngleConstants ac = compute_angle_constants(g, hs, region, 96);
    CHECK(ac.c0.to_double() >= 0.4 - 1e-9);
    CHECK(ac.c0.to_double() <= 0.81); // interval slack at one-box resolution
    CHECK(ac.c1.to_double() >= 8.0 / 17 - 1e-9);
    // region touching the critical point at the origin cannot be bounded
    BoxUnion bad;
    bad.boxes.push_back(box(-1, -1, 1, 1));
    CHECK_THROWS_AS(compute_angle_constants(g, hs, bad, 96, 3), GradientVanishes);
}

TEST_CASE("funnel constants satisfy their defining inequalities") {
    GradientField g = gradient_field(parse_field("0.5*x^2 + y^2"));
    BoxUnion region;
    region.boxes.push_back(box(1, 1, 2, 2));
    FunnelConstants fc = compute_funnel_constants(g, region, 96);
    // F = 2y/x in [1,4] on the box
    CHECK(fc.a_qh.to_double() >= 4.0 - 1e-9);
    CHECK(fc.m1_qh == fc.a_qh);
    // composite constants follow their defining formulas
    CHECK(fc.c0 == max(fc.b_qh + fc.a_qh * fc.c_qh, fc.b_qv + fc.a_qv * fc.c_qv).ldexp2(1));
    CHECK(fc.c1 == max(fc.m_qh, fc.m_qv).ldexp2(1));
    CHECK(fc.c_max == max(fc.c_qh, fc.c_qv));
    CHECK(fc.d_min <= fc.c_max);
    CHECK(fc.theta0 == max(fc.theta_qh, fc.theta_qv));
    CHECK(fc.t_span == Dyadic(1));
    // tan(theta_qh) <= 1/(2 M1): verify numerically with slack
    CHECK(std::tan(fc.theta_qh.to_double()) <= 1.0 / (2 * fc.m1_qh.to_double()) + 1e-12);
    // |F_theta - F| <= M sin(theta) spot check at quasihorizontal points
    // of the box (|hy| <= 2|hx|, i.e. y <= x here)
    double th = fc.theta_qh.to_double();
    for (double x : {1.0, 1.5, 2.0})
        for (double y : {1.0, x}) {
            double hx = x, hy = 2 * y;
            double ft = (hx * std::sin(th) + hy * std::cos(th)) /
                        (hx * std::cos(th) - hy * std::sin(th));
            double f = hy / hx;
            CHECK(std::abs(ft - f) <= fc.m_qh.to_double() * std::sin(th) + 1e-12);
        }
}
