#include "msc/funnel.hpp"

#include "msc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <utility>

namespace msc {

namespace {

Dyadic clamp(const Dyadic& v, const Dyadic& lo, const Dyadic& hi) {
    return v < lo ? lo : (hi < v ? hi : v);
}

// Exact nonnegative rational n/d with d > 0, used for segment parameters.
struct Frac {
    Dyadic n, d;
};

int frac_cmp(const Frac& a, const Frac& b) {
    Dyadic l = a.n * b.d, r = b.n * a.d;
    return l < r ? -1 : (r < l ? 1 : 0);
}

int cross_sign(const Dyadic& ax, const Dyadic& ay, const Dyadic& bx,
               const Dyadic& by) {
    return (ax * by - ay * bx).sign();
}

// Uniform sign of an expression over a box, subdividing a few levels where
// the centered enclosure straddles zero.
bool uniform_sign(const ExprPtr& e, const ExprPtr& ex, const ExprPtr& ey,
                  const Box2& b, int want, std::int64_t p, int depth) {
    Interval v = eval_box_centered(e, ex, ey, b, p);
    if (want > 0 ? v.lo.sign() > 0 : v.hi.sign() < 0) return true;
    if (depth == 0) return false;
    if (b.width_x().is_zero() && b.width_y().is_zero()) return false;
    for (const Box2& c : subdivide(b))
        if (!uniform_sign(e, ex, ey, c, want, p, depth - 1)) return false;
    return true;
}

// Entry parameter t in [0, 1) of the open part of segment pt + t*(dx, dy)
// into the closed box s, exact. nullopt when the segment only touches the
// boundary or misses the box entirely.
std::optional<Frac> segment_box_entry(const DyPoint& pt, const Dyadic& dx,
                                      const Dyadic& dy, const Box2& s) {
    Frac lo{Dyadic(0), Dyadic(1)}, hi{Dyadic(1), Dyadic(1)};
    auto axis = [&](const Dyadic& p0, const Dyadic& d,
                    const Interval& range) -> bool {
        if (d.is_zero()) return range.contains(p0);
        Dyadic a = range.lo - p0, b = range.hi - p0;
        Frac clo, chi;
        if (d.sign() > 0) {
            clo = {a, d};
            chi = {b, d};
        } else {
            clo = {-b, -d};
            chi = {-a, -d};
        }
        if (frac_cmp(clo, lo) > 0) lo = clo;
        if (frac_cmp(chi, hi) < 0) hi = chi;
        return true;
    };
    if (!axis(pt.x, dx, s.x) || !axis(pt.y, dy, s.y)) return std::nullopt;
    // a positive-length parameter range is a genuine crossing; a degenerate
    // one is a touch (e.g. the start point sitting on the box boundary and
    // heading out) and does not stop the fence
    if (frac_cmp(lo, hi) >= 0) return std::nullopt;
    if (lo.n >= lo.d) return std::nullopt;           // enters past the segment end
    if (hi.n.sign() <= 0) return std::nullopt;       // left the box before t = 0
    if (lo.n.sign() < 0) lo = {Dyadic(0), Dyadic(1)};
    return lo;
}

bool on_box_boundary(const DyPoint& q, const Box2& b) {
    if (!b.contains_point(q.x, q.y)) return false;
    return q.x == b.x.lo || q.x == b.x.hi || q.y == b.y.lo || q.y == b.y.hi;
}

// Nearest boundary edge of b to a point at or just outside the boundary,
// and the perimeter parameter of the projection.
Dyadic snapped_boundary_param(const Box2& b, const DyPoint& q) {
    Dyadic cx = clamp(q.x, b.x.lo, b.x.hi);
    Dyadic cy = clamp(q.y, b.y.lo, b.y.hi);
    Dyadic dl = cx - b.x.lo, dr = b.x.hi - cx;
    Dyadic db = cy - b.y.lo, dt = b.y.hi - cy;
    Dyadic m = min(min(dl, dr), min(db, dt));
    if (m == db) return boundary_param(b, Edge::Bottom, cx);
    if (m == dr) return boundary_param(b, Edge::Right, cy);
    if (m == dt) return boundary_param(b, Edge::Top, cx);
    return boundary_param(b, Edge::Left, cy);
}

// Corners of b strictly between perimeter parameters p1 and p2 going ccw,
// in traversal order.
std::vector<DyPoint> corners_ccw(const Box2& b, const Dyadic& p1,
                                 const Dyadic& p2) {
    Dyadic wx = b.width_x(), wy = b.width_y();
    Dyadic perim = (wx + wy).ldexp2(1);
    std::array<std::pair<Dyadic, DyPoint>, 4> cs = {{
        {Dyadic(0), {b.x.lo, b.y.lo}},
        {wx, {b.x.hi, b.y.lo}},
        {wx + wy, {b.x.hi, b.y.hi}},
        {wx + wy + wx, {b.x.lo, b.y.hi}},
    }};
    Dyadic target = p2 - p1;
    if (target.sign() < 0) target += perim;
    std::vector<std::pair<Dyadic, DyPoint>> hits;
    for (const auto& [cp, pt] : cs) {
        Dyadic rel = cp - p1;
        if (rel.sign() < 0) rel += perim;
        if (rel.sign() > 0 && rel < target) hits.push_back({rel, pt});
    }
    std::sort(hits.begin(), hits.end(),
              [](const auto& a, const auto& b2) { return a.first < b2.first; });
    std::vector<DyPoint> out;
    for (auto& [rel, pt] : hits) out.push_back(pt);
    return out;
}

// Shorter boundary arc of b from the point a to the point z (both at or
// near the boundary), corner vertices only.
std::vector<DyPoint> closing_arc_on(const Box2& b, const DyPoint& a,
                                    const DyPoint& z) {
    Dyadic pa = snapped_boundary_param(b, a);
    Dyadic pz = snapped_boundary_param(b, z);
    Dyadic perim = (b.width_x() + b.width_y()).ldexp2(1);
    Dyadic fwd = pz - pa;
    if (fwd.sign() < 0) fwd += perim;
    if (fwd.ldexp2(1) <= perim) return corners_ccw(b, pa, pz);
    std::vector<DyPoint> rev = corners_ccw(b, pz, pa);
    std::reverse(rev.begin(), rev.end());
    return rev;
}

bool on_segment_collinear(const DyPoint& q, const DyPoint& a, const DyPoint& b) {
    return min(a.x, b.x) <= q.x && q.x <= max(a.x, b.x) && min(a.y, b.y) <= q.y &&
           q.y <= max(a.y, b.y);
}

struct PartSeg {
    DirClass kind = DirClass::Both;
    std::size_t first_edge = 0, last_edge = 0; // inclusive
    std::size_t last_exclusive = 0;            // last edge of this class seen
    Dyadic span;
};

// Splits fence edges into maximal quasihorizontal/quasivertical parts.
// Edges satisfying both bounds extend the current part; a part ends at the
// first edge that is exclusively of the opposite class.
std::vector<PartSeg> split_parts(const std::vector<DyPoint>& v) {
    std::vector<PartSeg> parts;
    if (v.size() < 2) return parts;
    PartSeg cur;
    bool open = false;
    for (std::size_t e = 0; e + 1 < v.size(); ++e) {
        Dyadic dx = v[e + 1].x - v[e].x, dy = v[e + 1].y - v[e].y;
        if (dx.is_zero() && dy.is_zero()) continue;
        DirClass c = classify_direction(dx, dy);
        if (!open) {
            cur = PartSeg{c == DirClass::Both ? DirClass::QuasiHorizontal : c,
                          e, e, e, Dyadic()};
            open = true;
        } else if (c != DirClass::Both && c != cur.kind) {
            parts.push_back(cur);
            cur = PartSeg{c, e, e, e, Dyadic()};
        }
        cur.last_edge = e;
        if (c == cur.kind) cur.last_exclusive = e;
        cur.span += cur.kind == DirClass::QuasiHorizontal ? dx.abs() : dy.abs();
    }
    if (open) parts.push_back(cur);
    return parts;
}

std::vector<std::array<double, 2>> to_doubles(const std::vector<DyPoint>& v) {
    std::vector<std::array<double, 2>> out;
    out.reserve(v.size());
    for (const auto& q : v) out.push_back({q.x.to_double(), q.y.to_double()});
    return out;
}

double min_dist(const std::array<double, 2>& q,
                const std::vector<std::array<double, 2>>& pts) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : pts) {
        double dx = q[0] - p[0], dy = q[1] - p[1];
        best = std::min(best, dx * dx + dy * dy);
    }
    return std::sqrt(best);
}

// Diagnostic width measurements run in doubles (certified statements come
// from the ledger bounds, not from these); inflate before comparing.
Dyadic measured_up(double d) { return Dyadic::from_double(d * (1.0 + 1e-9) + 1e-300); }

// One contiguous run of fence segments whose cells fall in [i0,i1]x[j0,j1].
struct CellRun {
    std::size_t first = 0, last = 0;
    bool found = false, contiguous = true, interior = true;
};

CellRun find_run(const Fence& f, std::int64_t i0, std::int64_t i1,
                 std::int64_t j0, std::int64_t j1) {
    CellRun r;
    for (std::size_t s = 0; s < f.cells.size(); ++s) {
        auto [i, j] = f.cells[s];
        bool in = i0 <= i && i <= i1 && j0 <= j && j <= j1;
        if (!in) continue;
        if (!r.found) {
            r.found = true;
            r.first = r.last = s;
        } else if (s == r.last + 1) {
            r.last = s;
        } else {
            r.contiguous = false;
        }
    }
    if (r.found && (r.first == 0 || r.last + 1 >= f.cells.size()))
        r.interior = false; // run touches a fence end, not a clean pass-through
    return r;
}

// Side bitmask of a point on the boundary of the box S: 1 left, 2 right,
// 4 bottom, 8 top.
int side_bits(const DyPoint& q, const Box2& S) {
    int b = 0;
    if (q.x == S.x.lo) b |= 1;
    if (q.x == S.x.hi) b |= 2;
    if (q.y == S.y.lo) b |= 4;
    if (q.y == S.y.hi) b |= 8;
    return b;
}

// Both fences must cross S in a single pass, enter through one common side
// and leave through a different common side (at a class switch the path
// runs diagonally, so entry and exit are usually opposite sides).
bool verify_turn_box(const Fence& fp, const Fence& fm, const Box2& S,
                     std::int64_t i0, std::int64_t i1, std::int64_t j0,
                     std::int64_t j1) {
    CellRun rp = find_run(fp, i0, i1, j0, j1);
    CellRun rm = find_run(fm, i0, i1, j0, j1);
    if (!rp.found || !rm.found || !rp.contiguous || !rm.contiguous ||
        !rp.interior || !rm.interior)
        return false;
    int in_p = side_bits(fp.vertices[rp.first], S);
    int in_m = side_bits(fm.vertices[rm.first], S);
    int out_p = side_bits(fp.vertices[rp.last + 1], S);
    int out_m = side_bits(fm.vertices[rm.last + 1], S);
    int entry = in_p & in_m, exit = out_p & out_m;
    if (entry == 0 || exit == 0) return false;
    // some common entry side must differ from some common exit side
    return (entry & ~exit) != 0 || (exit & ~entry) != 0 ||
           (entry & (entry - 1)) != 0;
}

} // namespace

bool box_overlaps_polygon(const Box2& b, const std::vector<DyPoint>& poly) {
    std::array<DyPoint, 4> corners = {{{b.x.lo, b.y.lo},
                                       {b.x.hi, b.y.lo},
                                       {b.x.hi, b.y.hi},
                                       {b.x.lo, b.y.hi}}};
    for (const auto& c : corners)
        if (point_in_polygon(c, poly)) return true;
    for (const auto& v : poly)
        if (b.contains_point(v.x, v.y)) return true;
    double xlo = b.x.lo.to_double() - 1e-12, xhi = b.x.hi.to_double() + 1e-12;
    double ylo = b.y.lo.to_double() - 1e-12, yhi = b.y.hi.to_double() + 1e-12;
    std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const DyPoint& a = poly[i];
        const DyPoint& z = poly[(i + 1) % n];
        double ax = a.x.to_double(), ay = a.y.to_double();
        double zx = z.x.to_double(), zy = z.y.to_double();
        if (std::max(ax, zx) < xlo || std::min(ax, zx) > xhi ||
            std::max(ay, zy) < ylo || std::min(ay, zy) > yhi)
            continue;
        for (int e = 0; e < 4; ++e)
            if (segments_intersect(a, z, corners[e], corners[(e + 1) % 4]))
                return true;
    }
    return false;
}

DirClass classify_direction(const Dyadic& vx, const Dyadic& vy) {
    Dyadic ax = vx.abs(), ay = vy.abs();
    if (ax.is_zero() && ay.is_zero()) throw ZeroVector();
    bool qh = ay <= ax.ldexp2(1);
    bool qv = ax <= ay.ldexp2(1);
    if (qh && qv) return DirClass::Both;
    return qh ? DirClass::QuasiHorizontal : DirClass::QuasiVertical;
}

Dyadic grid_width_for(const Dyadic& theta, const AngleConstants& ac,
                      const Dyadic& cap, std::int64_t p) {
    Dyadic denom = (ac.c0 + ac.c1) * sqrt_up(Dyadic(2), p);
    Dyadic bound = denom.sign() > 0 ? div_down(theta, denom, p) : cap;
    bound = min(bound, cap);
    if (bound.sign() <= 0) throw Error("grid width bound is not positive");
    // largest power of two <= bound
    std::int64_t bits =
        static_cast<std::int64_t>(mpz_sizeinbase(bound.mantissa().get_mpz_t(), 2));
    return Dyadic::power_of_two(bits - 1 + bound.exponent());
}

FenceEnv make_fence_env(const GradientField& g, bool reverse,
                        const Dyadic& theta, const Grid& grid,
                        const Box2& domain, StopSet stops, std::int64_t p) {
    FenceEnv env;
    env.g = g;
    env.hess = hessian_exprs(g);
    env.reverse = reverse;
    env.cos_t = iv_cos(Interval(theta), p);
    env.sin_t = iv_sin(Interval(theta), p);
    env.grid = grid;
    env.domain = domain;
    env.stops = std::move(stops);
    env.p = p;
    return env;
}

AdvanceStep advance_fence(const FenceEnv& env, const DyPoint& pt,
                          FenceSide side, int level_hint) {
    IntervalVec2 gv =
        eval_gradient(env.g, Box2(Interval(pt.x), Interval(pt.y)), env.p);
    if (env.reverse) gv = {-gv.x, -gv.y};
    Interval s = side == FenceSide::PlusTheta ? env.sin_t : -env.sin_t;
    Interval dx = env.cos_t * gv.x - s * gv.y;
    Interval dy = s * gv.x + env.cos_t * gv.y;
    if (dx.contains_zero() && dy.contains_zero())
        throw GradientVanishes("fence direction enclosure contains zero");

    // the containing grid cell; a start point on a grid line belongs to the
    // cell the direction points into
    auto [i, j] = env.grid.locate(pt.x, pt.y);
    Box2 cell = env.grid.cell(i, j);
    if (pt.x == cell.x.lo) {
        if (dx.hi.sign() < 0)
            --i;
        else if (dx.lo.sign() < 0)
            throw OrientationUndecided(
                "fence direction straddles a vertical grid line");
    }
    if (pt.y == cell.y.lo) {
        if (dy.hi.sign() < 0)
            --j;
        else if (dy.lo.sign() < 0)
            throw OrientationUndecided(
                "fence direction straddles a horizontal grid line");
    }
    cell = env.grid.cell(i, j);
    Box2 B(Interval(max(cell.x.lo, env.domain.x.lo),
                    min(cell.x.hi, env.domain.x.hi)),
           Interval(max(cell.y.lo, env.domain.y.lo),
                    min(cell.y.hi, env.domain.y.hi)));
    if (!(B.x.lo <= B.x.hi) || !(B.y.lo <= B.y.hi) ||
        !B.contains_point(pt.x, pt.y))
        throw Error("fence point left the domain");

    // representative direction: the extreme corner of the direction box on
    // the fence's own side, so rounding errors push the polyline away from
    // the enclosed separatrix, never into it
    bool have = false;
    Dyadic bx, by;
    std::array<std::array<Dyadic, 2>, 4> corners = {
        {{dx.lo, dy.lo}, {dx.hi, dy.lo}, {dx.hi, dy.hi}, {dx.lo, dy.hi}}};
    for (const auto& c : corners) {
        if (c[0].is_zero() && c[1].is_zero()) continue;
        if (!have) {
            bx = c[0];
            by = c[1];
            have = true;
            continue;
        }
        int cs = cross_sign(bx, by, c[0], c[1]);
        if (side == FenceSide::PlusTheta ? cs > 0 : cs < 0) {
            bx = c[0];
            by = c[1];
        }
    }
    if (!have) throw GradientVanishes("fence direction enclosure is zero");
    // exit of the ray pt + t * (bx, by) through the boundary of a box that
    // starts as the grid cell and is bisected around pt whenever the sign
    // certificates do not resolve over it; near a saddle the gradient
    // direction turns faster than any fixed grid can track, so the step
    // shortens locally instead of forcing a finer grid everywhere
    bool plus = side == FenceSide::PlusTheta;
    bool has_tx = bx.sign() != 0, has_ty = by.sign() != 0;
    int want_det = (plus ? -1 : 1) * (env.reverse ? -1 : 1);
    int want_mono = env.reverse ? -1 : 1;
    auto bisect = [&]() {
        // bisect around pt; on a midline the ray direction picks the side
        Dyadic mx = (B.x.lo + B.x.hi).half(), my = (B.y.lo + B.y.hi).half();
        if (pt.x < mx || (pt.x == mx && bx.sign() < 0))
            B.x = Interval(B.x.lo, mx);
        else
            B.x = Interval(mx, B.x.hi);
        if (pt.y < my || (pt.y == my && by.sign() < 0))
            B.y = Interval(B.y.lo, my);
        else
            B.y = Interval(my, B.y.hi);
    };
    if (level_hint > 40) level_hint = 40;
    for (int level = 0; level < level_hint; ++level) bisect();
    for (int level = level_hint;; ++level) {
        Dyadic nx = bx.sign() > 0 ? B.x.hi - pt.x : pt.x - B.x.lo;
        Dyadic ny = by.sign() > 0 ? B.y.hi - pt.y : pt.y - B.y.lo;
        Dyadic ddx = bx.abs(), ddy = by.abs();
        DyPoint q;
        int cmp = has_tx && has_ty ? (nx * ddy - ny * ddx).sign() : 0;
        if (has_tx && has_ty && cmp == 0) {
            // exact corner exit
            q = {bx.sign() > 0 ? B.x.hi : B.x.lo,
                 by.sign() > 0 ? B.y.hi : B.y.lo};
        } else if (has_tx && (!has_ty || cmp < 0)) {
            q.x = bx.sign() > 0 ? B.x.hi : B.x.lo;
            Dyadic num = nx * by;
            // round the exit ccw along the cell boundary for the +theta
            // fence, cw for the -theta fence
            bool up = (bx.sign() > 0) == plus;
            Dyadic off =
                up ? div_up(num, ddx, env.p) : div_down(num, ddx, env.p);
            q.y = clamp(pt.y + off, B.y.lo, B.y.hi);
        } else {
            q.y = by.sign() > 0 ? B.y.hi : B.y.lo;
            Dyadic num = ny * bx;
            bool up = (by.sign() > 0) != plus;
            Dyadic off =
                up ? div_up(num, ddy, env.p) : div_down(num, ddy, env.p);
            q.x = clamp(pt.x + off, B.x.lo, B.x.hi);
        }
        if (q == pt) throw OrientationUndecided("fence made no progress");

        Dyadic Dx = q.x - pt.x, Dy = q.y - pt.y;
        ExprPtr cDx = Expr::constant(Interval(Dx));
        ExprPtr cDy = Expr::constant(Interval(Dy));
        // barrier certificate: det(segment, grad h) keeps one sign on the box
        ExprPtr det_e =
            Expr::sub(Expr::mul(cDx, env.g.hy), Expr::mul(cDy, env.g.hx));
        ExprPtr det_x = Expr::sub(Expr::mul(cDx, env.hess.hxy),
                                  Expr::mul(cDy, env.hess.hxx));
        ExprPtr det_y = Expr::sub(Expr::mul(cDx, env.hess.hyy),
                                  Expr::mul(cDy, env.hess.hxy));
        bool ok = uniform_sign(det_e, det_x, det_y, B, want_det, env.p, 0);
        if (ok) {
            // h is strictly monotone along the segment
            ExprPtr mono_e = Expr::add(Expr::mul(cDx, env.g.hx),
                                       Expr::mul(cDy, env.g.hy));
            ExprPtr mono_x = Expr::add(Expr::mul(cDx, env.hess.hxx),
                                       Expr::mul(cDy, env.hess.hxy));
            ExprPtr mono_y = Expr::add(Expr::mul(cDx, env.hess.hxy),
                                       Expr::mul(cDy, env.hess.hyy));
            ok = uniform_sign(mono_e, mono_x, mono_y, B, want_mono, env.p, 0);
        }
        if (ok) return {q, {i, j}, level};
        if (level >= 48)
            throw OrientationUndecided(
                "fence certificate failed near (" +
                std::to_string(pt.x.to_double()) + ", " +
                std::to_string(pt.y.to_double()) + ")");
        bisect();
    }
}

Fence build_fence(const FenceEnv& env, const DyPoint& start, FenceSide side,
                  std::size_t max_steps) {
    Fence f;
    f.side = side;
    f.reverse = env.reverse;
    f.vertices.push_back(start);

    std::set<std::pair<std::int64_t, std::int64_t>> visited;
    std::pair<std::int64_t, std::int64_t> prev_cell{INT64_MIN, INT64_MIN};
    int consec = 0;
    int hint = 0;
    DyPoint cur = start;

    for (std::size_t step = 0; step < max_steps; ++step) {
        if (on_box_boundary(cur, env.domain)) {
            f.terminal = TerminalKind::DomainBoundary;
            return f;
        }
        AdvanceStep st = advance_fence(env, cur, side, hint);
        hint = st.level > 0 ? st.level - 1 : 0;
        Dyadic Dx = st.next.x - cur.x, Dy = st.next.y - cur.y;

        // earliest stop-box entry along the segment, exact
        int hit_box = -1;
        Frac hit_t{Dyadic(0), Dyadic(1)};
        for (std::size_t k = 0; k < env.stops.boxes.size(); ++k) {
            auto t = segment_box_entry(cur, Dx, Dy, env.stops.boxes[k]);
            if (!t) continue;
            if (hit_box < 0 || frac_cmp(*t, hit_t) < 0) {
                hit_box = static_cast<int>(k);
                hit_t = *t;
            }
        }
        if (hit_box >= 0) {
            // truncate at the entry, rounding back toward cur so the
            // endpoint stays outside the box
            DyPoint q = cur;
            if (hit_t.n.sign() > 0) {
                Dyadic ox = Dx.sign() >= 0 ? div_down(hit_t.n * Dx, hit_t.d, env.p)
                                           : div_up(hit_t.n * Dx, hit_t.d, env.p);
                Dyadic oy = Dy.sign() >= 0 ? div_down(hit_t.n * Dy, hit_t.d, env.p)
                                           : div_up(hit_t.n * Dy, hit_t.d, env.p);
                q = {cur.x + ox, cur.y + oy};
            }
            if (!(q == cur)) {
                f.vertices.push_back(q);
                f.cells.push_back(st.cell);
            }
            f.terminal = TerminalKind::StopBox;
            f.stop_box = hit_box;
            return f;
        }

        if (st.cell != prev_cell) {
            if (!visited.insert(st.cell).second)
                throw LoopDetected("fence revisited a grid box");
            prev_cell = st.cell;
            consec = 1;
        } else if (++consec > 256) {
            // bisected steps legitimately revisit a cell many times near a
            // saddle, but the count stays small; past this the fence is
            // converging to a point instead of crossing the cell
            throw LoopDetected("fence stalled inside one grid box");
        }

        f.vertices.push_back(st.next);
        f.cells.push_back(st.cell);
        cur = st.next;
    }
    throw MaxDepthExceeded("fence exceeded the step budget");
}

Dyadic exp_up(const Dyadic& x, std::int64_t p) {
    // beyond any practical range the series evaluation is hopeless; use
    // e^x <= 2^ceil(x log2 e), saturated at 2^8192 so downstream dyadic
    // sums stay cheap (any width bound that large carries no information)
    if (Dyadic(64) < x) {
        // log2(e) < 6497320848556798 * 2^-52
        Dyadic scaled = x * Dyadic(mpz_class("6497320848556798"), -52);
        Dyadic k = -div_down(-scaled, Dyadic(1), 0); // ceil
        double kd = k.to_double() + 1;
        return Dyadic::power_of_two(
            kd > 8192 ? 8192 : static_cast<std::int64_t>(kd));
    }
    return iv_exp(Interval(x), p).hi;
}

Dyadic fence_width_bound(const Dyadic& delta, const Dyadic& span, const Dyadic& w,
                         const Dyadic& theta, DirClass kind,
                         const FunnelConstants& fc, std::int64_t p) {
    Dyadic C = kind == DirClass::QuasiVertical
                   ? fc.c_qv
                   : (kind == DirClass::QuasiHorizontal ? fc.c_qh
                                                        : max(fc.c_qh, fc.c_qv));
    // the bound is monotone increasing in C, so flooring C up keeps it valid
    // and avoids the removable singularity at C = 0
    C = max(C, Dyadic::power_of_two(-20));
    Dyadic E = exp_up(C * span, p);
    Dyadic sin_t = max(iv_sin(Interval(theta), p).hi, Dyadic());
    Dyadic drift = (fc.c0 * w + fc.c1 * sin_t) * (E - Dyadic(1));
    return (delta * E + div_up(drift, C, p)).round_up(p);
}

Dyadic transition_width(const Dyadic& d, const Dyadic& w) {
    return w <= d ? d : w.ldexp2(1);
}

Dyadic total_width_bound(int parts, const FunnelConstants& fc, const Dyadic& w,
                         const Dyadic& theta, std::int64_t p) {
    Dyadic E = exp_up(fc.c_max * Dyadic(parts) * fc.t_span, p);
    return div_up((fc.c1 * theta + fc.c2 * w) * E, fc.d_min, p);
}

bool width_parameters_admissible(int parts, const FunnelConstants& fc,
                                 const Dyadic& w, const Dyadic& theta,
                                 const Dyadic& epsilon, std::int64_t p) {
    Dyadic E = exp_up(fc.c_max * Dyadic(parts) * fc.t_span, p);
    return fc.c1 * theta + fc.c2 * w <= div_down(fc.d_min * epsilon, E, p);
}

Dyadic euler_error_bound(const Dyadic& eta, const Dyadic& a, const Dyadic& b,
                         const Dyadic& c, const Dyadic& span,
                         const Dyadic& delta0, std::int64_t p) {
    Dyadic C = max(c, Dyadic::power_of_two(-20));
    Dyadic E = exp_up(C * span, p);
    Dyadic defect = eta * (b + a * C) * (E - Dyadic(1));
    return (delta0 * E + div_up(defect, C, p)).round_up(p);
}

Dyadic fundamental_inequality(const Dyadic& delta, const Dyadic& eps1,
                              const Dyadic& eps2, const Dyadic& c,
                              const Dyadic& span, std::int64_t p) {
    Dyadic C = max(c, Dyadic::power_of_two(-20));
    Dyadic E = exp_up(C * span, p);
    return (delta * E + div_up((eps1 + eps2) * (E - Dyadic(1)), C, p)).round_up(p);
}

WidthLedger::WidthLedger(FunnelConstants fc, Dyadic w, Dyadic theta,
                         Dyadic delta0)
    : fc_(std::move(fc)), w_(std::move(w)), theta_(std::move(theta)),
      bound_(std::move(delta0)) {}

bool WidthLedger::push_part(DirClass kind, const Dyadic& measured_entry,
                            const Dyadic& span, std::int64_t p) {
    Dyadic entry_bound =
        parts_.empty() ? bound_ : transition_width(bound_, w_);
    Dyadic exit_bound = fence_width_bound(entry_bound, span, w_, theta_, kind,
                                          fc_, p);
    bool sound = measured_entry <= entry_bound;
    parts_.push_back({kind, measured_entry, span, entry_bound, exit_bound, sound});
    bound_ = exit_bound;
    return sound;
}

bool WidthLedger::all_sound() const {
    for (const auto& pt : parts_)
        if (!pt.sound) return false;
    return true;
}

std::vector<DyPoint> Funnel::polygon() const {
    std::vector<DyPoint> poly(plus.vertices);
    poly.insert(poly.end(), closing_arc.begin(), closing_arc.end());
    poly.insert(poly.end(), minus.vertices.rbegin(), minus.vertices.rend());
    return poly;
}

std::variant<Funnel, FunnelFailure> build_funnel(const FenceEnv& env,
                                                 const BoundaryInterval& sep,
                                                 const Dyadic& theta,
                                                 const Dyadic& epsilon,
                                                 int transition_cap,
                                                 const FunnelConstants& fc,
                                                 int origin_stop) {
    // the +theta fence starts at the ccw-later endpoint of the separatrix
    // interval, the -theta fence at the ccw-earlier one
    Dyadic plo = boundary_param(sep.host, sep.edge, sep.span.lo);
    Dyadic phi = boundary_param(sep.host, sep.edge, sep.span.hi);
    Dyadic t_plus = plo < phi ? sep.span.hi : sep.span.lo;
    Dyadic t_minus = plo < phi ? sep.span.lo : sep.span.hi;
    auto pp = sep.point_at(t_plus);
    auto pm = sep.point_at(t_minus);

    Funnel fn;
    fn.sep = sep;
    fn.plus = build_fence(env, {pp[0], pp[1]}, FenceSide::PlusTheta);
    fn.minus = build_fence(env, {pm[0], pm[1]}, FenceSide::MinusTheta);

    // terminal reconciliation
    auto kind_of = [&](int id) { return env.stops.kinds[std::size_t(id)]; };
    for (const Fence* f : {&fn.plus, &fn.minus}) {
        if (f->terminal == TerminalKind::StopBox &&
            kind_of(f->stop_box) == CriticalKind::Saddle)
            return FunnelFailure{FunnelFailureKind::SaddleBoxHit, f->stop_box};
    }
    int terminal_box = -1;
    if (fn.plus.terminal != fn.minus.terminal) {
        int id = fn.plus.terminal == TerminalKind::StopBox ? fn.plus.stop_box
                                                           : fn.minus.stop_box;
        return FunnelFailure{FunnelFailureKind::BoundaryMismatch, id};
    }
    if (fn.plus.terminal == TerminalKind::StopBox) {
        if (fn.plus.stop_box != fn.minus.stop_box)
            return FunnelFailure{FunnelFailureKind::WrongBoxGrazed,
                                 fn.plus.stop_box};
        terminal_box = fn.plus.stop_box;
        CriticalKind expected =
            env.reverse ? CriticalKind::Source : CriticalKind::Sink;
        if (kind_of(terminal_box) != expected)
            return FunnelFailure{FunnelFailureKind::WrongBoxGrazed, terminal_box};
        fn.kind = env.reverse ? FunnelKind::StableToSource
                              : FunnelKind::UnstableToSink;
    } else {
        fn.kind = FunnelKind::ExitsDomain;
    }

    // part structure and transition count
    std::vector<PartSeg> parts_p = split_parts(fn.plus.vertices);
    std::vector<PartSeg> parts_m = split_parts(fn.minus.vertices);
    int m = static_cast<int>(std::max(parts_p.size(), parts_m.size())) - 1;
    if (m < 0) m = 0;
    fn.transitions = m;
    if (m > transition_cap)
        return FunnelFailure{FunnelFailureKind::TransitionsExceeded, m};

    // each direction switch must happen inside one verified turn box no
    // wider than epsilon: both fences pass through it once, entering and
    // leaving through adjacent sides
    Dyadic w = env.grid.step;
    std::int64_t eps_cells =
        std::max<std::int64_t>(1, (std::int64_t)(epsilon.to_double() /
                                                 w.to_double()));
    for (std::size_t k = 0; k + 1 < parts_p.size(); ++k) {
        // edges between the parts are valid for both classes, so the switch
        // itself happens at the single first edge of the next part; the box
        // grows from its cell until it catches the other fence too
        std::size_t lo_e = parts_p[k + 1].first_edge;
        std::size_t hi_e = parts_p[k + 1].first_edge;
        std::int64_t i0 = INT64_MAX, i1 = INT64_MIN, j0 = INT64_MAX,
                     j1 = INT64_MIN;
        for (std::size_t e = lo_e; e <= hi_e && e < fn.plus.cells.size(); ++e) {
            i0 = std::min(i0, fn.plus.cells[e].first);
            i1 = std::max(i1, fn.plus.cells[e].first);
            j0 = std::min(j0, fn.plus.cells[e].second);
            j1 = std::max(j1, fn.plus.cells[e].second);
        }
        bool ok = false;
        while (std::max(i1 - i0, j1 - j0) + 1 <= eps_cells) {
            Box2 S(Interval(env.grid.cell(i0, j0).x.lo,
                            env.grid.cell(i1, j1).x.hi),
                   Interval(env.grid.cell(i0, j0).y.lo,
                            env.grid.cell(i1, j1).y.hi));
            if (verify_turn_box(fn.plus, fn.minus, S, i0, i1, j0, j1)) {
                ok = true;
                break;
            }
            --i0;
            ++i1;
            --j0;
            ++j1;
        }
        if (!ok) {
            if (getenv("MSC_TRACE"))
                fprintf(stderr,
                        "[msc] turn box %zu failed: edges %zu..%zu cells "
                        "%lld..%lld x %lld..%lld eps_cells=%lld at (%g, %g)\n",
                        k, lo_e, hi_e, (long long)i0, (long long)i1,
                        (long long)j0, (long long)j1, (long long)eps_cells,
                        fn.plus.vertices[lo_e].x.to_double(),
                        fn.plus.vertices[lo_e].y.to_double());
            return FunnelFailure{FunnelFailureKind::TransitionsExceeded,
                                 static_cast<int>(k)};
        }
    }

    // inductive width bookkeeping along the +theta fence parts; the entry
    // width of each part is measured against the -theta fence vertex set
    auto dp = to_doubles(fn.plus.vertices);
    auto dm = to_doubles(fn.minus.vertices);
    Dyadic delta0 = sep.length();
    fn.ledger = WidthLedger(fc, w, theta, delta0);
    for (std::size_t k = 0; k < parts_p.size(); ++k) {
        Dyadic measured =
            k == 0 ? delta0
                   : measured_up(min_dist(dp[parts_p[k].first_edge], dm));
        // a measured width above its inductive bound breaks the enclosure
        // argument outright; the bound exceeding epsilon does not (the
        // bounds are one-sided and the loop gates on measured widths)
        if (!fn.ledger.push_part(parts_p[k].kind, measured, parts_p[k].span,
                                 env.p))
            return FunnelFailure{FunnelFailureKind::WidthExceeded,
                                 static_cast<int>(k)};
    }

    // measured width: symmetric vertex-set separation of the two fences
    double wd = 0.0;
    for (const auto& q : dp) wd = std::max(wd, min_dist(q, dm));
    for (const auto& q : dm) wd = std::max(wd, min_dist(q, dp));
    fn.max_width = max(measured_up(wd), delta0);
    if (epsilon < fn.max_width)
        return FunnelFailure{FunnelFailureKind::WidthExceeded, -1};

    // closing arc between the fence endpoints along the terminal boundary
    const Box2& tb = terminal_box >= 0
                         ? env.stops.boxes[std::size_t(terminal_box)]
                         : env.domain;
    fn.closing_arc = closing_arc_on(tb, fn.plus.vertices.back(),
                                    fn.minus.vertices.back());

    // nothing but the origin saddle box and the terminal box may touch the
    // funnel region
    std::vector<DyPoint> poly = fn.polygon();
    for (std::size_t k = 0; k < env.stops.boxes.size(); ++k) {
        int id = static_cast<int>(k);
        if (id == origin_stop || id == terminal_box) continue;
        if (!box_overlaps_polygon(env.stops.boxes[k], poly)) continue;
        if (kind_of(id) == CriticalKind::Saddle)
            return FunnelFailure{FunnelFailureKind::SaddleBoxHit, id};
        return FunnelFailure{FunnelFailureKind::WrongBoxGrazed, id};
    }

    return fn;
}

int orient(const DyPoint& a, const DyPoint& b, const DyPoint& c) {
    return ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)).sign();
}

bool point_in_polygon(const DyPoint& q, const std::vector<DyPoint>& poly) {
    std::size_t n = poly.size();
    if (n < 3) return false;
    bool in = false;
    for (std::size_t i = 0; i < n; ++i) {
        const DyPoint& a = poly[i];
        const DyPoint& b = poly[(i + 1) % n];
        if (orient(a, b, q) == 0 && on_segment_collinear(q, a, b)) return true;
        if ((a.y > q.y) != (b.y > q.y)) {
            int o = orient(a, b, q);
            if (b.y > a.y ? o > 0 : o < 0) in = !in;
        }
    }
    return in;
}

bool segments_intersect(const DyPoint& a, const DyPoint& b, const DyPoint& c,
                        const DyPoint& d) {
    int o1 = orient(a, b, c), o2 = orient(a, b, d);
    int o3 = orient(c, d, a), o4 = orient(c, d, b);
    if (o1 == 0 && on_segment_collinear(c, a, b)) return true;
    if (o2 == 0 && on_segment_collinear(d, a, b)) return true;
    if (o3 == 0 && on_segment_collinear(a, c, d)) return true;
    if (o4 == 0 && on_segment_collinear(b, c, d)) return true;
    return o1 * o2 < 0 && o3 * o4 < 0;
}

bool polygons_intersect(const std::vector<DyPoint>& a,
                        const std::vector<DyPoint>& b) {
    if (a.size() < 3 || b.size() < 3) return false;
    if (point_in_polygon(a[0], b) || point_in_polygon(b[0], a)) return true;

    // double-precision bounding boxes as a cheap prefilter; verdicts come
    // from the exact tests
    auto bbox = [](const DyPoint& p, const DyPoint& q) {
        return std::array<double, 4>{
            std::min(p.x.to_double(), q.x.to_double()) - 1e-12,
            std::max(p.x.to_double(), q.x.to_double()) + 1e-12,
            std::min(p.y.to_double(), q.y.to_double()) - 1e-12,
            std::max(p.y.to_double(), q.y.to_double()) + 1e-12};
    };
    std::vector<std::array<double, 4>> bb;
    bb.reserve(b.size());
    for (std::size_t j = 0; j < b.size(); ++j)
        bb.push_back(bbox(b[j], b[(j + 1) % b.size()]));
    for (std::size_t i = 0; i < a.size(); ++i) {
        const DyPoint& p = a[i];
        const DyPoint& q = a[(i + 1) % a.size()];
        auto ab = bbox(p, q);
        for (std::size_t j = 0; j < b.size(); ++j) {
            if (ab[1] < bb[j][0] || bb[j][1] < ab[0] || ab[3] < bb[j][2] ||
                bb[j][3] < ab[2])
                continue;
            if (segments_intersect(p, q, b[j], b[(j + 1) % b.size()]))
                return true;
        }
    }
    return false;
}

bool funnels_intersect(const Funnel& a, const Funnel& b) {
    return polygons_intersect(a.polygon(), b.polygon());
}

} // namespace msc
