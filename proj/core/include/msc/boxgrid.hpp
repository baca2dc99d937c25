#pragma once

#include "msc/interval.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace msc {

// Axis-aligned box with exact dyadic corners.
struct Box2 {
    Interval x, y;

    Box2() = default;
    Box2(Interval ix, Interval iy) : x(std::move(ix)), y(std::move(iy)) {}

    Dyadic width_x() const { return x.width(); }
    Dyadic width_y() const { return y.width(); }
    Dyadic center_x() const { return x.mid(); }
    Dyadic center_y() const { return y.mid(); }

    bool contains_point(const Dyadic& px, const Dyadic& py) const {
        return x.contains(px) && y.contains(py);
    }
    bool contains_box(const Box2& o) const {
        return x.contains(o.x) && y.contains(o.y);
    }
    // interior containment: strict on every side
    bool strictly_contains_box(const Box2& o) const {
        return x.lo < o.x.lo && o.x.hi < x.hi && y.lo < o.y.lo && o.y.hi < y.hi;
    }
};

bool boxes_intersect(const Box2& a, const Box2& b);          // closed boxes
bool boxes_interiors_intersect(const Box2& a, const Box2& b);

// Quadrisection at the exact midpoints: children ordered SW, SE, NW, NE.
std::array<Box2, 4> subdivide(const Box2& b);

// Concentric enlargement that extends each side of b outward by rho times
// the edge length of that axis. rho must be nonnegative.
Box2 surround(const Box2& b, const Dyadic& rho);

// True when surround(j, 1) does not meet i, which guarantees that the
// half-surrounds of i and j have disjoint interiors.
bool neighbors_disjoint(const Box2& i, const Box2& j);

// Edges in ccw order; Bottom is y = y.lo, Right is x = x.hi, and so on.
enum class Edge : int { Bottom = 0, Right = 1, Top = 2, Left = 3 };

Edge opposite(Edge e);
bool edges_perpendicular(Edge a, Edge b);

// Sub-segment of one edge of a host box. span is the range of the varying
// coordinate (x on Bottom/Top, y on Left/Right).
struct BoundaryInterval {
    Box2 host;
    Edge edge = Edge::Bottom;
    Interval span;

    Dyadic fixed_coord() const;
    // endpoints and midpoint in the plane
    std::array<Dyadic, 2> point_at(const Dyadic& t) const; // t in span
    Dyadic length() const { return span.width(); }
};

// Perimeter coordinate of a point on an edge, increasing ccw from the
// bottom-left corner. Used to order boundary intervals.
Dyadic boundary_param(const Box2& b, Edge e, const Dyadic& coord);

// The two intervals on the edges of surround(b, rho) perpendicular to e,
// centered where the line through e meets them, with half-length
// (1+rho)*d/sqrt(3) (d = edge length of b), clipped to those edges.
// Returns {left-of-e interval, right-of-e interval} in ccw order along e.
std::array<BoundaryInterval, 2> lr_intervals(const Box2& b, Edge e,
                                             const Dyadic& rho);

// Finite union of boxes with membership queries.
struct BoxUnion {
    std::vector<Box2> boxes;

    bool contains_point(const Dyadic& px, const Dyadic& py) const;
    Box2 bounding_box() const;
};

// Uniform power-of-two grid over a square domain: cell (i, j) spans
// [x0 + i*step, x0 + (i+1)*step] x [y0 + j*step, ...].
struct Grid {
    Dyadic x0, y0, step;

    Box2 cell(std::int64_t i, std::int64_t j) const;
    // index of the cell containing (px, py), ties toward lower index
    std::pair<std::int64_t, std::int64_t> locate(const Dyadic& px,
                                                 const Dyadic& py) const;
};

} // namespace msc
