#include "msc/boxgrid.hpp"

#include "msc/errors.hpp"

namespace msc {

bool boxes_intersect(const Box2& a, const Box2& b) {
    return intervals_overlap(a.x, b.x) && intervals_overlap(a.y, b.y);
}

bool boxes_interiors_intersect(const Box2& a, const Box2& b) {
    return a.x.lo < b.x.hi && b.x.lo < a.x.hi && a.y.lo < b.y.hi && b.y.lo < a.y.hi;
}

std::array<Box2, 4> subdivide(const Box2& b) {
    Dyadic mx = b.center_x(), my = b.center_y();
    Interval xl(b.x.lo, mx), xr(mx, b.x.hi);
    Interval yl(b.y.lo, my), yu(my, b.y.hi);
    return {Box2(xl, yl), Box2(xr, yl), Box2(xl, yu), Box2(xr, yu)};
}

Box2 surround(const Box2& b, const Dyadic& rho) {
    Dyadic dx = rho * b.width_x(), dy = rho * b.width_y();
    return Box2(Interval(b.x.lo - dx, b.x.hi + dx),
                Interval(b.y.lo - dy, b.y.hi + dy));
}

bool neighbors_disjoint(const Box2& i, const Box2& j) {
    return !boxes_intersect(surround(j, Dyadic(1)), i);
}

Edge opposite(Edge e) { return static_cast<Edge>((static_cast<int>(e) + 2) % 4); }

bool edges_perpendicular(Edge a, Edge b) {
    return (static_cast<int>(a) + static_cast<int>(b)) % 2 == 1;
}

Dyadic BoundaryInterval::fixed_coord() const {
    switch (edge) {
    case Edge::Bottom: return host.y.lo;
    case Edge::Right: return host.x.hi;
    case Edge::Top: return host.y.hi;
    case Edge::Left: return host.x.lo;
    }
    throw Error("bad edge");
}

std::array<Dyadic, 2> BoundaryInterval::point_at(const Dyadic& t) const {
    Dyadic f = fixed_coord();
    if (edge == Edge::Bottom || edge == Edge::Top) return {t, f};
    return {f, t};
}

Dyadic boundary_param(const Box2& b, Edge e, const Dyadic& coord) {
    Dyadic wx = b.width_x(), wy = b.width_y();
    switch (e) {
    case Edge::Bottom: return coord - b.x.lo;
    case Edge::Right: return wx + (coord - b.y.lo);
    case Edge::Top: return wx + wy + (b.x.hi - coord);
    case Edge::Left: return wx + wx + wy + (b.y.hi - coord);
    }
    throw Error("bad edge");
}

std::array<BoundaryInterval, 2> lr_intervals(const Box2& b, Edge e,
                                             const Dyadic& rho) {
    Box2 n = surround(b, rho);
    bool horizontal = (e == Edge::Bottom || e == Edge::Top);
    Dyadic d = horizontal ? b.width_x() : b.width_y();
    // half-length (1+rho)*d / sqrt(3), rounded toward zero so the total
    // length stays at or below the 2*(1+rho)*d/sqrt(3) cap
    Dyadic hl = div_down((Dyadic(1) + rho) * d, sqrt_up(Dyadic(3), 140), 120);

    auto clip = [](const Interval& a, const Interval& lim) {
        return Interval(max(a.lo, lim.lo), min(a.hi, lim.hi));
    };

    BoundaryInterval first, second;
    first.host = n;
    second.host = n;
    if (horizontal) {
        Dyadic c = (e == Edge::Bottom) ? b.y.lo : b.y.hi;
        Interval span = clip(Interval(c - hl, c + hl), n.y);
        first.edge = Edge::Left;
        first.span = span;
        second.edge = Edge::Right;
        second.span = span;
    } else {
        Dyadic c = (e == Edge::Left) ? b.x.lo : b.x.hi;
        Interval span = clip(Interval(c - hl, c + hl), n.x);
        first.edge = Edge::Bottom;
        first.span = span;
        second.edge = Edge::Top;
        second.span = span;
    }
    return {first, second};
}

bool BoxUnion::contains_point(const Dyadic& px, const Dyadic& py) const {
    for (const Box2& b : boxes)
        if (b.contains_point(px, py)) return true;
    return false;
}

Box2 BoxUnion::bounding_box() const {
    if (boxes.empty()) throw Error("bounding box of empty union");
    Box2 r = boxes.front();
    for (const Box2& b : boxes) {
        r.x = hull(r.x, b.x);
        r.y = hull(r.y, b.y);
    }
    return r;
}

namespace {

std::int64_t floor_quotient(const Dyadic& num, const Dyadic& den) {
    Dyadic q = div_down(num, den, 0); // integer-valued dyadic
    mpz_class v = q.mantissa();
    mpz_mul_2exp(v.get_mpz_t(), v.get_mpz_t(),
                 static_cast<mp_bitcnt_t>(q.exponent()));
    if (!v.fits_slong_p()) throw Error("grid index overflow");
    return v.get_si();
}

} // namespace

Box2 Grid::cell(std::int64_t i, std::int64_t j) const {
    Dyadic xl = x0 + Dyadic(i) * step, yl = y0 + Dyadic(j) * step;
    return Box2(Interval(xl, xl + step), Interval(yl, yl + step));
}

std::pair<std::int64_t, std::int64_t> Grid::locate(const Dyadic& px,
                                                   const Dyadic& py) const {
    return {floor_quotient(px - x0, step), floor_quotient(py - y0, step)};
}

} // namespace msc
