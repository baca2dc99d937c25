#include <doctest.h>

#include "msc/errors.hpp"
#include "msc/funnel.hpp"

#include <cmath>
#include <set>

using namespace msc;

namespace {

Box2 box(double x0, double y0, double x1, double y1) {
    return Box2(Interval(Dyadic::from_double(x0), Dyadic::from_double(x1)),
                Interval(Dyadic::from_double(y0), Dyadic::from_double(y1)));
}

Dyadic dy(double v) { return Dyadic::from_double(v); }

// small hand-set constants; ledger tests exercise the arithmetic, not the
// derivation of the constants from a field
FunnelConstants mild_fc() {
    FunnelConstants fc;
    fc.a_qh = fc.a_qv = Dyadic(2);
    fc.b_qh = fc.b_qv = Dyadic(1);
    fc.c_qh = Dyadic(1);
    fc.c_qv = Dyadic(2);
    fc.m1_qh = fc.m2_qh = fc.m_qh = Dyadic(1);
    fc.m1_qv = fc.m2_qv = fc.m_qv = Dyadic(1);
    fc.c0 = Dyadic(2);
    fc.c1 = Dyadic(4);
    fc.c2 = Dyadic(4); // 2 + c0 / d_min
    fc.c_max = Dyadic(2);
    fc.d_min = Dyadic(1);
    fc.theta_qh = fc.theta_qv = fc.theta0 = Dyadic::power_of_two(-2);
    fc.t_span = Dyadic(2);
    return fc;
}

} // namespace

TEST_CASE("direction classes split at slope two") {
    CHECK(classify_direction(Dyadic(1), Dyadic(0)) == DirClass::QuasiHorizontal);
    CHECK(classify_direction(Dyadic(0), Dyadic(1)) == DirClass::QuasiVertical);
    CHECK(classify_direction(Dyadic(1), Dyadic(3)) == DirClass::QuasiVertical);
    CHECK(classify_direction(Dyadic(3), Dyadic(-1)) == DirClass::QuasiHorizontal);
    CHECK(classify_direction(Dyadic(1), Dyadic(2)) == DirClass::Both);
    CHECK(classify_direction(Dyadic(-2), Dyadic(1)) == DirClass::Both);
    CHECK(classify_direction(Dyadic(1), Dyadic(1)) == DirClass::Both);
    CHECK_THROWS_AS(classify_direction(Dyadic(0), Dyadic(0)), ZeroVector);
}

TEST_CASE("grid width tracks the angle budget") {
    AngleConstants ac{Dyadic(1), Dyadic(1)};
    // theta / ((c0 + c1) sqrt 2) = 2^-4 / (2 sqrt 2) ~ 0.0221 -> 2^-6
    Dyadic w = grid_width_for(Dyadic::power_of_two(-4), ac, Dyadic(1));
    CHECK(w == Dyadic::power_of_two(-6));
    // result is never above the bound and is a power of two
    CHECK(w * (ac.c0 + ac.c1) * sqrt_up(Dyadic(2), 96) <=
          Dyadic::power_of_two(-4));
    // the cap binds when the constants are tiny
    AngleConstants tiny{Dyadic::power_of_two(-30), Dyadic::power_of_two(-30)};
    CHECK(grid_width_for(Dyadic::power_of_two(-4), tiny,
                         Dyadic::power_of_two(-8)) ==
          Dyadic::power_of_two(-8));
    // monotone in theta
    CHECK(grid_width_for(Dyadic::power_of_two(-6), ac, Dyadic(1)) <=
          grid_width_for(Dyadic::power_of_two(-4), ac, Dyadic(1)));
}

TEST_CASE("width arithmetic matches hand-computed values") {
    FunnelConstants fc = mild_fc();
    fc.c_qh = Dyadic(1);
    fc.c0 = Dyadic(1);
    fc.c1 = Dyadic(1);

    SUBCASE("single part bound") {
        // delta e + (w + sin theta)(e - 1) with delta = 2^-4, w = theta = 2^-6:
        // 0.0625 * e + (0.015625 + sin(0.015625)) * (e - 1) ~ 0.22358
        Dyadic b = fence_width_bound(Dyadic::power_of_two(-4), Dyadic(1),
                                     Dyadic::power_of_two(-6),
                                     Dyadic::power_of_two(-6),
                                     DirClass::QuasiHorizontal, fc);
        CHECK(dy(0.2235) <= b);
        CHECK(b <= dy(0.2237));
        // monotone in the entry width and the span
        CHECK(b <= fence_width_bound(Dyadic::power_of_two(-3), Dyadic(1),
                                     Dyadic::power_of_two(-6),
                                     Dyadic::power_of_two(-6),
                                     DirClass::QuasiHorizontal, fc));
        CHECK(b <= fence_width_bound(Dyadic::power_of_two(-4), Dyadic(2),
                                     Dyadic::power_of_two(-6),
                                     Dyadic::power_of_two(-6),
                                     DirClass::QuasiHorizontal, fc));
    }

    SUBCASE("turn boxes at least double a collapsed width") {
        Dyadic w = Dyadic::power_of_two(-6);
        CHECK(transition_width(w * Dyadic(3), w) == w * Dyadic(3));
        CHECK(transition_width(w.half(), w) == w.ldexp2(1));
        CHECK(transition_width(w, w) == w);
    }

    SUBCASE("total width bound grows with the part count") {
        Dyadic w = Dyadic::power_of_two(-8);
        Dyadic theta = Dyadic::power_of_two(-6);
        Dyadic t0 = total_width_bound(0, fc, w, theta);
        // zero parts: (c1 theta + c2 w) / d_min with no exponential factor
        Dyadic flat = div_up(fc.c1 * theta + fc.c2 * w, fc.d_min, 96);
        CHECK(t0 <= flat.round_up(80) + Dyadic::power_of_two(-40));
        CHECK(flat <= t0 + Dyadic::power_of_two(-40));
        CHECK(t0 <= total_width_bound(1, fc, w, theta));
        CHECK(total_width_bound(1, fc, w, theta) <=
              total_width_bound(3, fc, w, theta));
    }

    SUBCASE("admissibility agrees with the total bound") {
        Dyadic w = Dyadic::power_of_two(-10);
        Dyadic theta = Dyadic::power_of_two(-8);
        Dyadic total = total_width_bound(2, fc, w, theta);
        CHECK(width_parameters_admissible(2, fc, w, theta, total * Dyadic(2)));
        CHECK_FALSE(width_parameters_admissible(
            2, fc, w, theta, div_down(total, Dyadic(2), 96)));
    }

    SUBCASE("fundamental inequality degenerate cases") {
        CHECK(fundamental_inequality(Dyadic(), Dyadic(), Dyadic(), Dyadic(1),
                                     Dyadic(5))
                  .is_zero());
        // zero span: exactly the initial separation
        Dyadic d = fundamental_inequality(Dyadic::power_of_two(-3), Dyadic(1),
                                          Dyadic(1), Dyadic(1), Dyadic());
        CHECK(Dyadic::power_of_two(-3) <= d);
        CHECK(d <= Dyadic::power_of_two(-3) + Dyadic::power_of_two(-80));
    }
}

TEST_CASE("euler deviation bound covers the model equation") {
    // y' = y on [0, 1] from y(0) = 1; explicit Euler with step 2^-8 lands at
    // (1 + 2^-8)^256 and the worst deviation from e^x is about 0.0053
    const double h = 1.0 / 256.0;
    double y = 1.0, worst = 0.0;
    for (int k = 0; k < 256; ++k) {
        y += h * y;
        worst = std::max(worst, std::exp((k + 1) * h) - y);
    }
    CHECK(worst > 0.004);
    CHECK(worst < 0.006);
    // |F| <= 3, dF/dx = 0, dF/dy = 1 on the corridor
    Dyadic bound = euler_error_bound(Dyadic::power_of_two(-8), Dyadic(3),
                                     Dyadic(), Dyadic(1), Dyadic(1), Dyadic());
    CHECK(dy(worst) <= bound);
    // the bound is tight to well within a factor of eight
    CHECK(bound <= dy(8.0 * worst));
    // degenerate cases
    CHECK(euler_error_bound(Dyadic(), Dyadic(3), Dyadic(1), Dyadic(1), Dyadic(2),
                            Dyadic())
              .is_zero());
    Dyadic d0 = Dyadic::power_of_two(-4);
    CHECK(d0 <= euler_error_bound(Dyadic(), Dyadic(3), Dyadic(1), Dyadic(1),
                                  Dyadic(2), d0));
}

TEST_CASE("straight fences cross the domain and stay monotone") {
    GradientField g = gradient_field(parse_field("x"));
    Grid grid{Dyadic(0), Dyadic(0), Dyadic::power_of_two(-3)};
    Box2 domain = box(0, 0, 1, 1);
    FenceEnv env = make_fence_env(g, false, Dyadic::power_of_two(-4), grid,
                                  domain, StopSet{});

    DyPoint start{Dyadic::power_of_two(-4), Dyadic::power_of_two(-1)};
    Fence fp = build_fence(env, start, FenceSide::PlusTheta);
    Fence fm = build_fence(env, start, FenceSide::MinusTheta);

    for (const Fence* f : {&fp, &fm}) {
        CHECK(f->terminal == TerminalKind::DomainBoundary);
        CHECK(f->vertices.back().x == Dyadic(1));
        CHECK(f->vertices.size() <= 10); // ceil(15/16 / w) + 1 segments
        CHECK(f->cells.size() + 1 == f->vertices.size());
        // h = x is strictly increasing along the polyline
        for (std::size_t i = 0; i + 1 < f->vertices.size(); ++i)
            CHECK(f->vertices[i].x < f->vertices[i + 1].x);
        // one visit per grid box
        std::set<std::pair<std::int64_t, std::int64_t>> seen(f->cells.begin(),
                                                             f->cells.end());
        CHECK(seen.size() == f->cells.size());
    }
    // the +theta fence drifts up, the -theta fence drifts down
    CHECK(start.y < fp.vertices.back().y);
    CHECK(fm.vertices.back().y < start.y);

    // against -grad h the fence runs left and h decreases
    FenceEnv rev = make_fence_env(g, true, Dyadic::power_of_two(-4), grid,
                                  domain, StopSet{});
    Fence fr = build_fence(rev, DyPoint{dy(0.9375), Dyadic::power_of_two(-1)},
                           FenceSide::PlusTheta);
    CHECK(fr.terminal == TerminalKind::DomainBoundary);
    CHECK(fr.vertices.back().x == Dyadic(0));
    for (std::size_t i = 0; i + 1 < fr.vertices.size(); ++i)
        CHECK(fr.vertices[i + 1].x < fr.vertices[i].x);
}

TEST_CASE("fences stop on a critical box without entering it") {
    GradientField g = gradient_field(parse_field("x"));
    Grid grid{Dyadic(0), Dyadic(0), Dyadic::power_of_two(-3)};
    Box2 domain = box(0, 0, 1, 1);
    StopSet stops;
    stops.boxes.push_back(box(0.5, 0.25, 0.625, 0.75));
    stops.kinds.push_back(CriticalKind::Sink);
    FenceEnv env = make_fence_env(g, false, Dyadic::power_of_two(-4), grid,
                                  domain, stops);

    Fence f = build_fence(env, {Dyadic::power_of_two(-4), Dyadic::power_of_two(-1)},
                          FenceSide::PlusTheta);
    CHECK(f.terminal == TerminalKind::StopBox);
    CHECK(f.stop_box == 0);
    // the endpoint sits on the box face, never inside
    CHECK(f.vertices.back().x == Dyadic::power_of_two(-1));
    CHECK(Dyadic::power_of_two(-2) < f.vertices.back().y);
    CHECK(f.vertices.back().y < dy(0.75));

    // a box that only clips the segment interior also stops the fence, with
    // the endpoint rounded back outside
    StopSet offgrid;
    offgrid.boxes.push_back(box(0.53125, 0.25, 0.65625, 0.75));
    offgrid.kinds.push_back(CriticalKind::Sink);
    FenceEnv env2 = make_fence_env(g, false, Dyadic::power_of_two(-4), grid,
                                   domain, offgrid);
    Fence f2 = build_fence(env2, {Dyadic::power_of_two(-4), Dyadic::power_of_two(-1)},
                           FenceSide::PlusTheta);
    CHECK(f2.terminal == TerminalKind::StopBox);
    CHECK(f2.vertices.back().x <= dy(0.53125));
    CHECK(dy(0.53) < f2.vertices.back().x);
}

TEST_CASE("straight funnel exits the domain and encloses the trajectory") {
    GradientField g = gradient_field(parse_field("x"));
    Grid grid{Dyadic(0), Dyadic::from_double(-0.5), Dyadic::power_of_two(-4)};
    Box2 domain = box(0, -0.5, 1, 0.5);
    Box2 host = box(0, -0.0625, 0.125, 0.0625);
    StopSet stops;
    stops.boxes.push_back(host);
    stops.kinds.push_back(CriticalKind::Saddle);
    Dyadic theta = Dyadic::power_of_two(-6);
    FenceEnv env = make_fence_env(g, false, theta, grid, domain, stops);

    auto sep_at = [&](double c) {
        BoundaryInterval s;
        s.host = host;
        s.edge = Edge::Right;
        s.span = Interval(dy(c - 0.015625), dy(c + 0.015625));
        return s;
    };

    auto r = build_funnel(env, sep_at(0.0), theta, dy(0.5), 2, mild_fc(), 0);
    REQUIRE(std::holds_alternative<Funnel>(r));
    const Funnel& fn = std::get<Funnel>(r);
    CHECK(fn.kind == FunnelKind::ExitsDomain);
    CHECK(fn.transitions == 0);
    CHECK(fn.ledger.parts().size() == 1);
    CHECK(fn.ledger.all_sound());
    CHECK(fn.closing_arc.empty()); // both fences end on the same domain edge
    CHECK(fn.max_width <= dy(0.5));

    // the true separatrix of h = x from the middle of the interval is y = 0
    auto poly = fn.polygon();
    for (double x : {0.25, 0.5, 0.75})
        CHECK(point_in_polygon({dy(x), Dyadic()}, poly));
    CHECK_FALSE(point_in_polygon({dy(0.5), dy(0.25)}, poly));
    CHECK_FALSE(point_in_polygon({dy(0.5), dy(-0.25)}, poly));

    // a parallel funnel far enough up does not collide; an overlapping
    // separatrix interval does
    auto r2 = build_funnel(env, sep_at(0.25), theta, dy(0.5), 2, mild_fc(), 0);
    REQUIRE(std::holds_alternative<Funnel>(r2));
    CHECK_FALSE(funnels_intersect(fn, std::get<Funnel>(r2)));
    auto r3 = build_funnel(env, sep_at(0.015625), theta, dy(0.5), 2, mild_fc(), 0);
    REQUIRE(std::holds_alternative<Funnel>(r3));
    CHECK(funnels_intersect(fn, std::get<Funnel>(r3)));
}

TEST_CASE("funnel terminals decide the funnel kind") {
    GradientField g = gradient_field(parse_field("x"));
    Grid grid{Dyadic(0), Dyadic::from_double(-0.5), Dyadic::power_of_two(-4)};
    Box2 domain = box(0, -0.5, 1, 0.5);
    Box2 host = box(0, -0.0625, 0.125, 0.0625);
    Dyadic theta = Dyadic::power_of_two(-6);

    BoundaryInterval sep;
    sep.host = host;
    sep.edge = Edge::Right;
    sep.span = Interval(dy(-0.015625), dy(0.015625));

    auto run = [&](CriticalKind kind) {
        StopSet stops;
        stops.boxes.push_back(host);
        stops.kinds.push_back(CriticalKind::Saddle);
        stops.boxes.push_back(box(0.75, -0.25, 0.875, 0.25));
        stops.kinds.push_back(kind);
        FenceEnv env = make_fence_env(g, false, theta, grid, domain, stops);
        return build_funnel(env, sep, theta, dy(0.5), 2, mild_fc(), 0);
    };

    SUBCASE("both fences landing on a sink certify the connection") {
        auto r = run(CriticalKind::Sink);
        REQUIRE(std::holds_alternative<Funnel>(r));
        const Funnel& fn = std::get<Funnel>(r);
        CHECK(fn.kind == FunnelKind::UnstableToSink);
        CHECK(fn.plus.stop_box == 1);
        CHECK(fn.minus.stop_box == 1);
        CHECK(fn.plus.vertices.back().x == dy(0.75));
        auto poly = fn.polygon();
        CHECK(point_in_polygon({dy(0.5), Dyadic()}, poly));
        CHECK_FALSE(point_in_polygon({dy(0.8), Dyadic()}, poly));
    }

    SUBCASE("a saddle box in the path aborts the funnel") {
        auto r = run(CriticalKind::Saddle);
        REQUIRE(std::holds_alternative<FunnelFailure>(r));
        CHECK(std::get<FunnelFailure>(r).kind == FunnelFailureKind::SaddleBoxHit);
        CHECK(std::get<FunnelFailure>(r).detail == 1);
    }

    SUBCASE("landing on the wrong kind of box is reported") {
        auto r = run(CriticalKind::Source);
        REQUIRE(std::holds_alternative<FunnelFailure>(r));
        CHECK(std::get<FunnelFailure>(r).kind ==
              FunnelFailureKind::WrongBoxGrazed);
    }

    SUBCASE("one fence stopping while the other exits is a mismatch") {
        StopSet stops;
        stops.boxes.push_back(host);
        stops.kinds.push_back(CriticalKind::Saddle);
        // catches only the upward-drifting +theta fence
        stops.boxes.push_back(box(0.5, 0.0078125, 0.5625, 0.25));
        stops.kinds.push_back(CriticalKind::Sink);
        FenceEnv env = make_fence_env(g, false, theta, grid, domain, stops);
        auto r = build_funnel(env, sep, theta, dy(0.5), 2, mild_fc(), 0);
        REQUIRE(std::holds_alternative<FunnelFailure>(r));
        CHECK(std::get<FunnelFailure>(r).kind ==
              FunnelFailureKind::BoundaryMismatch);
    }

    SUBCASE("reverse funnels connect stable separatrices to sources") {
        GradientField gr = gradient_field(parse_field("x"));
        Box2 rhost = box(0.5, -0.0625, 0.625, 0.0625);
        StopSet stops;
        stops.boxes.push_back(rhost);
        stops.kinds.push_back(CriticalKind::Saddle);
        stops.boxes.push_back(box(0.125, -0.25, 0.25, 0.25));
        stops.kinds.push_back(CriticalKind::Source);
        FenceEnv env = make_fence_env(gr, true, theta, grid, domain, stops);
        BoundaryInterval rsep;
        rsep.host = rhost;
        rsep.edge = Edge::Left;
        rsep.span = Interval(dy(-0.015625), dy(0.015625));
        auto r = build_funnel(env, rsep, theta, dy(0.5), 2, mild_fc(), 0);
        REQUIRE(std::holds_alternative<Funnel>(r));
        CHECK(std::get<Funnel>(r).kind == FunnelKind::StableToSource);
    }
}

TEST_CASE("a turning funnel verifies its transition and stays sound") {
    // gradient flow of -2(x-1)^2 - (y-1)^2/2 from near (3/16, 0): the
    // trajectory satisfies 1 - y = c (1 - x)^(1/4), runs quasihorizontally,
    // turns, and climbs quasivertically into the sink box at (1, 1)
    GradientField g =
        gradient_field(parse_field("-2*(x-1)^2 - (1/2)*(y-1)^2"));
    Dyadic w = Dyadic::power_of_two(-10);
    Grid grid{Dyadic(0), Dyadic(-1), w};
    Box2 domain = box(0, -1, 2, 2);
    Box2 host = box(0.0625, -0.0625, 0.1875, 0.0625);
    Box2 sink = box(0.8125, 0.8125, 1.1875, 1.1875);
    StopSet stops;
    stops.boxes.push_back(host);
    stops.kinds.push_back(CriticalKind::Saddle);
    stops.boxes.push_back(sink);
    stops.kinds.push_back(CriticalKind::Sink);
    Dyadic theta = Dyadic::power_of_two(-5);
    FenceEnv env = make_fence_env(g, false, theta, grid, domain, stops);

    BoundaryInterval sep;
    sep.host = host;
    sep.edge = Edge::Right;
    sep.span = Interval(dy(-0.015625), dy(0.015625));

    auto r = build_funnel(env, sep, theta, Dyadic(1), 3, mild_fc(), 0);
    REQUIRE(std::holds_alternative<Funnel>(r));
    const Funnel& fn = std::get<Funnel>(r);
    CHECK(fn.kind == FunnelKind::UnstableToSink);
    CHECK(fn.transitions == 1);
    REQUIRE(fn.ledger.parts().size() >= 2);
    CHECK(fn.ledger.parts().front().kind == DirClass::QuasiHorizontal);
    CHECK(fn.ledger.parts().back().kind == DirClass::QuasiVertical);
    CHECK(fn.ledger.all_sound());
    CHECK(fn.max_width <= Dyadic(1));

    // closed-form trajectory from the separatrix midpoint (3/16, 0)
    auto poly = fn.polygon();
    double c = 1.0 / std::pow(1.0 - 3.0 / 16.0, 0.25);
    for (double x : {0.4, 0.6, 0.8, 0.9}) {
        double yx = 1.0 - c * std::pow(1.0 - x, 0.25);
        CHECK(point_in_polygon({dy(x), dy(yx)}, poly));
    }
    // a point in the quasivertical leg
    CHECK(point_in_polygon({dy(0.96), dy(1.0 - c * std::pow(0.04, 0.25))}, poly));
    // and points clearly off the corridor
    CHECK_FALSE(point_in_polygon({dy(0.5), dy(0.75)}, poly));
    CHECK_FALSE(point_in_polygon({dy(0.5), dy(-0.5)}, poly));

    // monotone h along both fences
    for (const Fence* f : {&fn.plus, &fn.minus}) {
        auto h = [&](const DyPoint& q) {
            double xv = q.x.to_double(), yv = q.y.to_double();
            return -2.0 * (xv - 1.0) * (xv - 1.0) -
                   0.5 * (yv - 1.0) * (yv - 1.0);
        };
        for (std::size_t i = 0; i + 1 < f->vertices.size(); ++i)
            CHECK(h(f->vertices[i]) < h(f->vertices[i + 1]));
    }
}

TEST_CASE("exact geometry predicates") {
    DyPoint a{Dyadic(0), Dyadic(0)}, b{Dyadic(4), Dyadic(0)};
    DyPoint c{Dyadic(2), Dyadic(3)}, d{Dyadic(2), Dyadic(-3)};
    CHECK(orient(a, b, c) > 0);
    CHECK(orient(a, b, d) < 0);
    CHECK(orient(a, b, DyPoint{Dyadic(2), Dyadic(0)}) == 0);

    CHECK(segments_intersect(a, b, c, d));
    CHECK(segments_intersect(a, b, DyPoint{Dyadic(2), Dyadic(0)},
                             DyPoint{Dyadic(2), Dyadic(1)})); // touching
    CHECK_FALSE(segments_intersect(a, b, DyPoint{Dyadic(0), Dyadic(1)},
                                   DyPoint{Dyadic(4), Dyadic(1)}));
    // collinear overlap
    CHECK(segments_intersect(a, b, DyPoint{Dyadic(3), Dyadic(0)},
                             DyPoint{Dyadic(6), Dyadic(0)}));
    CHECK_FALSE(segments_intersect(a, b, DyPoint{Dyadic(5), Dyadic(0)},
                                   DyPoint{Dyadic(6), Dyadic(0)}));

    std::vector<DyPoint> sq = {{Dyadic(0), Dyadic(0)},
                               {Dyadic(2), Dyadic(0)},
                               {Dyadic(2), Dyadic(2)},
                               {Dyadic(0), Dyadic(2)}};
    CHECK(point_in_polygon({Dyadic(1), Dyadic(1)}, sq));
    CHECK(point_in_polygon({Dyadic(2), Dyadic(1)}, sq)); // boundary counts
    CHECK(point_in_polygon({Dyadic(2), Dyadic(2)}, sq)); // corner counts
    CHECK_FALSE(point_in_polygon({Dyadic(3), Dyadic(1)}, sq));
    CHECK_FALSE(point_in_polygon({Dyadic(1), Dyadic(-1)}, sq));

    std::vector<DyPoint> sq2 = {{Dyadic(1), Dyadic(1)},
                                {Dyadic(3), Dyadic(1)},
                                {Dyadic(3), Dyadic(3)},
                                {Dyadic(1), Dyadic(3)}};
    std::vector<DyPoint> sq3 = {{Dyadic(5), Dyadic(5)},
                                {Dyadic(6), Dyadic(5)},
                                {Dyadic(6), Dyadic(6)},
                                {Dyadic(5), Dyadic(6)}};
    CHECK(polygons_intersect(sq, sq2));
    CHECK_FALSE(polygons_intersect(sq, sq3));
    // full containment is an intersection even without edge crossings
    std::vector<DyPoint> inner = {{Dyadic(1), Dyadic(1)},
                                  {Dyadic(1), Dyadic(1)},
                                  {Dyadic(1), Dyadic(1)}};
    std::vector<DyPoint> big = {{Dyadic(-9), Dyadic(-9)},
                                {Dyadic(9), Dyadic(-9)},
                                {Dyadic(9), Dyadic(9)},
                                {Dyadic(-9), Dyadic(9)}};
    CHECK(polygons_intersect(sq, big));
}
