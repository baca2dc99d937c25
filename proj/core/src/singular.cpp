#include "msc/singular.hpp"

#include "msc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

namespace msc {

namespace {

// check must be monotone under box inclusion (true on a box stays true on
// sub-boxes); subdivision only tightens the interval evaluations
template <typename F>
bool holds_on(const Box2& b, int depth, F&& check) {
    if (check(b)) return true;
    if (depth == 0) return false;
    for (const Box2& c : subdivide(b))
        if (!holds_on(c, depth - 1, check)) return false;
    return true;
}

// certified sign of an interval-valued functional over a box; 0 = undecided
template <typename F>
int sign_over(const Box2& b, int depth, F&& fn) {
    Interval v = fn(b);
    if (!v.contains_zero()) return v.lo.sign();
    if (depth == 0) return 0;
    int s = 0;
    for (const Box2& c : subdivide(b)) {
        int sc = sign_over(c, depth - 1, fn);
        if (sc == 0 || (s != 0 && sc != s)) return 0;
        s = sc;
    }
    return s;
}

Dyadic dot2(const DyadicVec2& a, const DyadicVec2& b) {
    return a[0] * b[0] + a[1] * b[1];
}

IntervalVec2 mat_vec(const IntervalMat2& h, const DyadicVec2& v) {
    Interval v0(v[0]), v1(v[1]);
    return {h.a * v0 + h.b * v1, h.c * v0 + h.d * v1};
}

Interval norm2_iv(const IntervalVec2& v) {
    return iv_pow(v.x, 2) + iv_pow(v.y, 2);
}

// |lambda_s| bounds for a saddle-side enclosure (lambda_s < 0)
struct AbsBounds {
    Dyadic lo, hi;
};

AbsBounds abs_bounds(const Interval& iv) {
    Dyadic lo = iv.mig(), hi = iv.mag();
    return {lo, hi};
}

ExprPtr psi_curve(const GradientField& g, const DyadicVec2& v, const Interval& cb,
                  const Interval& sb) {
    // det(v, X_angle) = (v0 sin - v1 cos) hx + (v0 cos + v1 sin) hy
    Interval a = iv_mul(Interval(v[0]), sb) - iv_mul(Interval(v[1]), cb);
    Interval b = iv_mul(Interval(v[0]), cb) + iv_mul(Interval(v[1]), sb);
    return Expr::add(Expr::mul(Expr::constant(a), g.hx),
                     Expr::mul(Expr::constant(b), g.hy));
}

Interval param_range_of(const Box2& host, const BoundaryInterval& bi) {
    Dyadic a = boundary_param(host, bi.edge, bi.span.lo);
    Dyadic b = boundary_param(host, bi.edge, bi.span.hi);
    return Interval(min(a, b), max(a, b));
}

// axis-aligned edge frame: u is the outward sweep coordinate of edge e
// (u = su * coordinate on axis au), v the coordinate varying along e
struct EdgeFrame {
    int au;    // 0 = x axis carries u, 1 = y axis
    int su;    // sign of u relative to that axis
    Edge edge;

    static EdgeFrame of(Edge e) {
        switch (e) {
        case Edge::Right: return {0, 1, e};
        case Edge::Left: return {0, -1, e};
        case Edge::Top: return {1, 1, e};
        default: return {1, -1, e};
        }
    }

    Dyadic u_of_edge(const Box2& b) const {
        const Interval& ax = au == 0 ? b.x : b.y;
        return su > 0 ? ax.hi : -ax.lo;
    }
    Interval v_range(const Box2& b) const { return au == 0 ? b.y : b.x; }
    Box2 world_box(const Interval& u, const Interval& v) const {
        Interval a = su > 0 ? u : Interval(-u.hi, -u.lo);
        return au == 0 ? Box2(a, v) : Box2(v, a);
    }
    std::array<Dyadic, 2> world_point(const Dyadic& u, const Dyadic& v) const {
        Dyadic a = su > 0 ? u : -u;
        return au == 0 ? std::array<Dyadic, 2>{a, v} : std::array<Dyadic, 2>{v, a};
    }
    Interval g_u(const IntervalVec2& g) const {
        const Interval& c = au == 0 ? g.x : g.y;
        return su > 0 ? c : -c;
    }
    Interval g_v(const IntervalVec2& g) const { return au == 0 ? g.y : g.x; }
};

int nudged_sign(const ExprPtr& e, const EdgeFrame& f, const Dyadic& u, Dyadic v,
                const Dyadic& room) {
    for (int k = 4; k <= 10; ++k) {
        try {
            auto pt = f.world_point(u, v);
            return sign_at(e, pt[0], pt[1]);
        } catch (const SignUndecidable&) {
            v += room.ldexp2(-k);
        }
    }
    auto pt = f.world_point(u, v);
    return sign_at(e, pt[0], pt[1]);
}

// single sign-change bracket of psi = 0 on the segment {u} x vr, bisected
// down to max_len; nullopt when the crossing count is not exactly one
std::optional<Interval> bracket_on_segment(const ExprPtr& psi, const EdgeFrame& f,
                                           const Dyadic& u, const Interval& vr,
                                           const Dyadic& max_len) {
    const int kSamples = 8;
    Dyadic step = div_down(vr.width(), Dyadic(kSamples), 80);
    std::vector<Dyadic> vs;
    std::vector<int> sg;
    for (int i = 0; i <= kSamples; ++i) {
        Dyadic v = i == kSamples ? vr.hi : vr.lo + step * Dyadic(i);
        vs.push_back(v);
        sg.push_back(nudged_sign(psi, f, u, v, step));
    }
    std::optional<Interval> found;
    for (int i = 0; i < kSamples; ++i) {
        if (sg[i] == sg[i + 1]) continue;
        if (found) return std::nullopt; // more than one crossing
        Dyadic lo = vs[i], hi = vs[i + 1];
        int slo = sg[i];
        while (max_len < hi - lo) {
            static const std::pair<int, int> fracs[] = {
                {1, 1}, {3, 3}, {5, 3}, {7, 4}, {9, 4}, {5, 4}, {11, 4}};
            Dyadic span = hi - lo, m;
            int sm = 0;
            bool split = false;
            for (auto [num, shift] : fracs) {
                m = lo + span * Dyadic(num).ldexp2(-shift);
                try {
                    auto pt = f.world_point(u, m);
                    sm = sign_at(psi, pt[0], pt[1]);
                    split = true;
                    break;
                } catch (const SignUndecidable&) {
                }
            }
            if (!split) return std::nullopt;
            if (sm == slo) lo = m; else hi = m;
        }
        found = Interval(lo, hi);
    }
    return found;
}

// one-sided fence sweep from (u0, v) to the line u = u_target. An upper
// fence uses the maximal transversal slope over a self-consistent box
// around its own segment (so orbits below cannot cross it upward), a
// lower fence the minimal slope. dist0 is a positive lower bound on
// u0 minus the u-coordinate of the critical point; the strip width grows
// with the distance from the saddle so the per-strip slack stays
// proportional to the fence separation.
std::optional<Dyadic> sweep_fence(const GradientField& g, bool reverse,
                                  const EdgeFrame& f, const Dyadic& u0,
                                  const Dyadic& u_target, Dyadic v,
                                  const Interval& v_limit, const Dyadic& dist0,
                                  bool upper, std::int64_t p) {
    Dyadic u = u0;
    while (u < u_target) {
        Dyadic du = min((u - u0 + dist0).ldexp2(-4), u_target - u);
        // size the strip from a zero-height slope estimate; a strip as wide
        // as du would feed its own slack back into the slope and put a
        // constant floor under the fence separation
        Box2 seg0 = f.world_box(Interval(u, u + du), Interval(v, v));
        IntervalVec2 g0 = eval_gradient(g, seg0, p);
        if (reverse) g0 = {-g0.x, -g0.y};
        Interval gu0 = f.g_u(g0);
        if (gu0.lo.sign() <= 0) return std::nullopt;
        Dyadic pad =
            max(du * div_up(f.g_v(g0).mag(), gu0.lo, p), du.ldexp2(-40)).ldexp2(1);
        bool stepped = false;
        for (int k = 0; k < 16 && !stepped; ++k) {
            Interval region(v - pad, v + pad);
            Box2 world = f.world_box(Interval(u, u + du), region);
            IntervalVec2 gv = eval_gradient(g, world, p);
            if (reverse) gv = {-gv.x, -gv.y};
            Interval gu = f.g_u(gv), gt = f.g_v(gv);
            if (gu.lo.sign() <= 0) return std::nullopt;
            Dyadic sl = upper ? div_up(gt.hi, gt.hi.sign() >= 0 ? gu.lo : gu.hi, p)
                              : div_down(gt.lo, gt.lo.sign() <= 0 ? gu.lo : gu.hi, p);
            Dyadic vn = v + du * sl;
            if (region.contains(vn)) {
                v = vn;
                stepped = true;
            } else {
                pad = pad.ldexp2(1);
            }
        }
        if (!stepped || !v_limit.contains(v)) return std::nullopt;
        u += du;
    }
    return v;
}

} // namespace

const Dyadic& omega1_lower() {
    static const Dyadic w(mpz_class("178183099658858824"), -60);
    return w;
}

const Dyadic& atan_half_lower() {
    static const Dyadic w(mpz_class("534549298976576474"), -60);
    return w;
}

CriticalKind classify_singularity(const CertifiedBoxPair& pair,
                                  const HessianExprs& hess, std::int64_t p,
                                  int max_refine) {
    auto det_of = [&](const Box2& b) { return iv_det2(eval_hessian(hess, b, p)); };
    int sd = sign_over(pair.outer, max_refine, det_of);
    if (sd < 0) return CriticalKind::Saddle;
    if (sd > 0) {
        auto trace_of = [&](const Box2& b) {
            IntervalMat2 h = eval_hessian(hess, b, p);
            return h.a + h.d;
        };
        int st = sign_over(pair.outer, max_refine, trace_of);
        if (st < 0) return CriticalKind::Sink;
        if (st > 0) return CriticalKind::Source;
    }
    throw ClassificationUndecided("critical point type unresolved over the outer box");
}

EigenData eigen_at_center(const CertifiedBoxPair& pair, const HessianExprs& hess,
                          std::int64_t p) {
    Dyadic cx = pair.grid_box.center_x(), cy = pair.grid_box.center_y();
    Interval hxx = eval_point(hess.hxx, cx, cy, p);
    Interval hxy = eval_point(hess.hxy, cx, cy, p);
    Interval hyy = eval_point(hess.hyy, cx, cy, p);
    Interval disc = iv_pow(hxx - hyy, 2) + Interval(Dyadic(4)) * iv_pow(hxy, 2);
    Interval root = iv_sqrt(disc, p);
    Interval half(Dyadic(1).half());
    EigenData e;
    e.lambda_u = (hxx + hyy + root) * half;
    e.lambda_s = (hxx + hyy - root) * half;

    Dyadic vx = hxy.mid();
    Dyadic vy = e.lambda_u.mid() - hxx.mid();
    Dyadic scale = max(max(hxx.mag(), hyy.mag()), hxy.mag());
    Dyadic n2 = vx * vx + vy * vy;
    if (scale.is_zero() || n2 <= (scale * scale).ldexp2(-40)) {
        // off-diagonal negligible: the closed form degenerates, take the
        // axis of the dominant diagonal entry
        bool x_axis = hyy.mid() < hxx.mid();
        vx = Dyadic(x_axis ? 1 : 0);
        vy = Dyadic(x_axis ? 0 : 1);
    } else {
        int k = std::ilogb(n2.to_double()) / 2;
        vx = vx.ldexp2(-k).round_down(64);
        vy = vy.ldexp2(-k).round_down(64);
    }
    e.Vu = {vx, vy};
    e.Vs = {-vy, vx};
    return e;
}

bool certify_conditions(const CertifiedBoxPair& pair, const HessianExprs& hess,
                        const EigenData& eigen, const Dyadic& a,
                        const Dyadic& delta, std::int64_t p) {
    if (eigen.lambda_u.lo.sign() <= 0 || eigen.lambda_s.hi.sign() >= 0)
        return false;
    Dyadic n2 = dot2(eigen.Vu, eigen.Vu);
    Dyadic a2 = a * a;
    Dyadic lu_lo = eigen.lambda_u.lo, lu_hi = eigen.lambda_u.hi;
    AbsBounds ls = abs_bounds(eigen.lambda_s);
    IntervalVec2 vu_iv{Interval(eigen.Vu[0]), Interval(eigen.Vu[1])};
    IntervalVec2 vs_iv{Interval(eigen.Vs[0]), Interval(eigen.Vs[1])};

    auto check = [&](const Box2& b) {
        IntervalMat2 h = eval_hessian(hess, b, p);
        IntervalVec2 hvu = mat_vec(h, eigen.Vu), hvs = mat_vec(h, eigen.Vs);
        Interval qu = norm2_iv(hvu), qs = norm2_iv(hvs);
        // distortion: (lambda/a)|V| <= |HV| <= a lambda |V|, squared
        if (!(lu_hi * lu_hi * n2 <= a2 * qu.lo)) return false;
        if (!(qu.hi <= a2 * (lu_lo * lu_lo * n2))) return false;
        if (!(ls.hi * ls.hi * n2 <= a2 * qs.lo)) return false;
        if (!(qs.hi <= a2 * (ls.lo * ls.lo * n2))) return false;
        // near-diagonality
        Interval ipu = iv_dot(hvu, vu_iv), ips = iv_dot(hvs, vs_iv);
        if (!(lu_hi * n2 <= ipu.lo.ldexp2(1))) return false;
        if (!(ls.hi * n2 <= (-ips.hi).ldexp2(1))) return false;
        Interval cross = iv_dot(hvs, vu_iv);
        return cross.mag() <= delta * n2;
    };
    return holds_on(pair.outer, 3, check);
}

WedgeParams wedge_params(const EigenData& eigen, const Dyadic& a, std::int64_t p) {
    if (eigen.lambda_u.lo.sign() <= 0 || eigen.lambda_s.hi.sign() >= 0)
        throw ClassificationUndecided("wedge parameters need certified saddle eigenvalues");
    WedgeParams w;
    w.a = a;
    w.omega1 = omega1_lower();
    // sin(w1) >= w1 - w1^3/6
    Dyadic sinw1 = w.omega1 - div_up(w.omega1 * w.omega1 * w.omega1, Dyadic(6), p);
    AbsBounds ls = abs_bounds(eigen.lambda_s);
    Dyadic r1 = div_down(ls.lo, eigen.lambda_u.hi, p);
    Dyadic r2 = div_down(eigen.lambda_u.lo, ls.hi, p);
    Dyadic rmin = min(r1, r2);
    Dyadic den = (a * a * sqrt_up(Dyadic(2), p)).ldexp2(2); // 4 a^2 sqrt(2)
    Dyadic bound = div_down(sinw1 * rmin, den, p);
    // sin(beta) <= beta, so beta = bound is admissible; stay below omega1
    w.beta = min(bound, (w.omega1 * Dyadic(255)).ldexp2(-8));
    Dyadic lmin = min(eigen.lambda_u.lo, ls.lo);
    Dyadic d1 = div_down(sinw1 * lmin, a.ldexp2(3), p);
    Dyadic d2 = (w.beta * lmin).ldexp2(-2); // beta/4 <= tan(beta)/4
    w.delta = min(d1, d2);
    return w;
}

std::array<BoundaryInterval, 4> separatrix_intervals(const GradientField& g,
                                                     const CertifiedBoxPair& pair,
                                                     const EigenData& eigen,
                                                     const WedgeParams& wedge,
                                                     std::int64_t p) {
    Interval cb = iv_cos(Interval(wedge.beta), p);
    Interval sb = iv_sin(Interval(wedge.beta), p);
    ExprPtr psis[4] = {
        psi_curve(g, eigen.Vu, cb, sb), psi_curve(g, eigen.Vu, cb, -sb),
        psi_curve(g, eigen.Vs, cb, sb), psi_curve(g, eigen.Vs, cb, -sb)};

    Dyadic d = pair.grid_box.width_x();
    Dyadic max_len = (d * wedge.omega1).ldexp2(-2);

    struct Crossing {
        BoundaryInterval bi;
        Interval prange;
        int curve;
    };
    std::vector<Crossing> cs;
    for (int i = 0; i < 4; ++i) {
        RootCertifier rc(psis[i], psis[i], p);
        auto v = rc.isolate_boundary_crossings(rc.f(), pair.outer, max_len);
        if (v.size() != 2)
            throw WedgeCrossingUndecided("wedge boundary curve crossing count " +
                                         std::to_string(v.size()));
        for (auto& bi : v) cs.push_back({bi, param_range_of(pair.outer, bi), i});
    }
    std::sort(cs.begin(), cs.end(), [](const Crossing& a, const Crossing& b) {
        return a.prange.lo < b.prange.lo;
    });

    // pair adjacent crossings into the four wedge intervals: each pair must
    // hold the +beta and -beta curve of one family
    auto valid_pair = [&](const Crossing& a, const Crossing& b) {
        return a.curve / 2 == b.curve / 2 && a.curve != b.curve;
    };
    int phase = -1;
    for (int ph = 0; ph < 2 && phase < 0; ++ph) {
        bool ok = true;
        for (int k = 0; k < 4 && ok; ++k)
            ok = valid_pair(cs[(2 * k + ph) % 8], cs[(2 * k + 1 + ph) % 8]);
        if (ok) phase = ph;
    }
    if (phase < 0)
        throw WedgeCrossingUndecided("wedge crossings do not pair around the boundary");

    struct WedgeInterval {
        BoundaryInterval bi;
        int family; // 0 unstable, 1 stable
    };
    std::vector<WedgeInterval> merged;
    for (int k = 0; k < 4; ++k) {
        const Crossing& a = cs[(2 * k + phase) % 8];
        const Crossing& b = cs[(2 * k + 1 + phase) % 8];
        if (a.bi.edge != b.bi.edge)
            throw WedgeCrossingUndecided("wedge interval straddles a corner");
        BoundaryInterval bi;
        bi.host = pair.outer;
        bi.edge = a.bi.edge;
        bi.span = hull(a.bi.span, b.bi.span);
        merged.push_back({bi, a.curve / 2});
    }
    for (int k = 0; k < 4; ++k)
        if (merged[k].family == merged[(k + 1) % 4].family)
            throw WedgeCrossingUndecided("wedge intervals do not alternate");
    // pairwise disjoint along the boundary
    std::vector<Interval> prs;
    for (auto& m : merged) prs.push_back(param_range_of(pair.outer, m.bi));
    std::sort(prs.begin(), prs.end(),
              [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    Dyadic perim = (pair.outer.width_x() + pair.outer.width_y()).ldexp2(1);
    for (int k = 0; k < 4; ++k) {
        Dyadic nxt = k == 3 ? prs[0].lo + perim : prs[k + 1].lo;
        if ((nxt - prs[k].hi).sign() <= 0)
            throw WedgeCrossingUndecided("wedge intervals overlap");
    }

    // gradient/edge angle >= omega1 at all endpoints: |cos| <= cos(omega1),
    // certified by squares with cos(w1) >= 1 - w1^2/2
    Dyadic t = Dyadic(1) - (wedge.omega1 * wedge.omega1).half();
    Dyadic cos2w1 = t * t;
    for (auto& m : merged) {
        for (const Dyadic& vt : {m.bi.span.lo, m.bi.span.hi}) {
            auto pt = m.bi.point_at(vt);
            Interval gx = eval_point(g.hx, pt[0], pt[1], p);
            Interval gy = eval_point(g.hy, pt[0], pt[1], p);
            bool horiz = m.bi.edge == Edge::Bottom || m.bi.edge == Edge::Top;
            Interval along = horiz ? gx : gy;
            Interval n2 = iv_pow(gx, 2) + iv_pow(gy, 2);
            if (!(iv_pow(along, 2).hi <= cos2w1 * n2.lo))
                throw WedgeCrossingUndecided("gradient too tangent at an interval endpoint");
        }
    }

    // order each family by the side of the eigenvector axis
    Dyadic ccx = pair.grid_box.center_x(), ccy = pair.grid_box.center_y();
    auto side = [&](const BoundaryInterval& bi, const DyadicVec2& v) {
        auto m = bi.point_at(bi.span.mid());
        return ((m[0] - ccx) * v[0] + (m[1] - ccy) * v[1]).sign();
    };
    std::array<BoundaryInterval, 4> out;
    bool got_u = false, got_s = false;
    for (auto& m : merged) {
        if (m.family == 0) {
            int s = side(m.bi, eigen.Vu);
            out[s >= 0 ? 0 : 1] = m.bi;
            got_u = true;
        } else {
            int s = side(m.bi, eigen.Vs);
            out[s >= 0 ? 2 : 3] = m.bi;
            got_s = true;
        }
    }
    (void)got_u;
    (void)got_s;
    return out;
}

CertifiedBoxPair relocate_critical(const RootCertifier& cert, const Box2& box,
                                   int max_extra) {
    std::vector<Box2> level = {box};
    for (int extra = 1; extra <= max_extra; ++extra) {
        std::vector<Box2> next;
        for (const Box2& b : level)
            for (const Box2& c : subdivide(b))
                if (!cert.predicate_c0(c)) next.push_back(c);
        for (const Box2& c : next) {
            try {
                if (auto r = cert.classify_grid_box(c)) return *r;
            } catch (const ClassificationUndecided&) {
            }
        }
        level = std::move(next);
        if (level.empty()) break;
    }
    throw MaxDepthExceeded("could not relocate the critical point in a sub-box");
}

SaddleData build_saddle_data(const GradientField& g, const HessianExprs& hess,
                             const CertifiedBoxPair& pair, std::int64_t p,
                             int max_refine) {
    RootCertifier cert(g.hx, g.hy, p);
    CertifiedBoxPair cur = pair;
    Dyadic a(2);
    for (int it = 0; it <= max_refine; ++it) {
        EigenData e = eigen_at_center(cur, hess, p);
        if (e.lambda_u.lo.sign() > 0 && e.lambda_s.hi.sign() < 0) {
            WedgeParams w = wedge_params(e, a, p);
            if (certify_conditions(cur, hess, e, a, w.delta, p)) {
                try {
                    auto iv = separatrix_intervals(g, cur, e, w, p);
                    SaddleData s;
                    s.pair = cur;
                    s.pair.kind = CriticalKind::Saddle;
                    s.eigen = e;
                    s.wedge = w;
                    s.unstable_intervals = {iv[0], iv[1]};
                    s.stable_intervals = {iv[2], iv[3]};
                    return s;
                } catch (const WedgeCrossingUndecided&) {
                }
            }
        }
        cur = relocate_critical(cert, cur.grid_box);
    }
    throw MaxDepthExceeded("saddle wedge refinement failed at depth cap");
}

BoundaryInterval narrow_separatrix_interval(const GradientField& g,
                                            const HessianExprs& hess,
                                            const SaddleData& s, int which,
                                            const Dyadic& target_width,
                                            std::int64_t p, int max_levels,
                                            std::vector<Dyadic>* width_trace) {
    (void)hess;
    if (which < 0 || which > 3) throw Error("separatrix interval id out of range");
    bool stable = which >= 2;
    const BoundaryInterval& j0 =
        stable ? s.stable_intervals[which - 2] : s.unstable_intervals[which];
    EdgeFrame f = EdgeFrame::of(j0.edge);
    Box2 ni = s.pair.outer;
    Dyadic u_target = f.u_of_edge(ni);
    Interval v_limit = f.v_range(ni);

    Interval cb = iv_cos(Interval(s.wedge.beta), p);
    Interval sb = iv_sin(Interval(s.wedge.beta), p);
    const DyadicVec2& axis = stable ? s.eigen.Vs : s.eigen.Vu;
    ExprPtr psi_p = psi_curve(g, axis, cb, sb);
    ExprPtr psi_m = psi_curve(g, axis, cb, -sb);

    RootCertifier cert(g.hx, g.hy, p);
    CertifiedBoxPair cur = s.pair;
    Interval span = j0.span;
    std::vector<Dyadic> widths;
    for (int n = 0; n <= max_levels; ++n) {
        if (n > 0) cur = relocate_critical(cert, cur.grid_box);
        Dyadic wn = cur.grid_box.width_x();
        Dyadic bn = f.u_of_edge(cur.outer);
        if (!(bn < u_target)) continue; // zoom level does not protrude yet
        Interval seg = f.v_range(cur.outer);
        Dyadic blen = wn.ldexp2(-6);
        auto brp = bracket_on_segment(psi_p, f, bn, seg, blen);
        auto brm = bracket_on_segment(psi_m, f, bn, seg, blen);
        if (!brp || !brm)
            throw NarrowingStalled("wedge crossings unresolved at a zoom level");
        Interval start = hull(*brp, *brm);
        auto hi_end = sweep_fence(g, stable, f, bn, u_target, start.hi, v_limit,
                                  wn.half(), true, p);
        auto lo_end = sweep_fence(g, stable, f, bn, u_target, start.lo, v_limit,
                                  wn.half(), false, p);
        if (!hi_end || !lo_end)
            throw NarrowingStalled("fence sweep failed at a zoom level");
        // both the previous and the new interval are certified enclosures
        Dyadic lo = max(span.lo, *lo_end), hi = min(span.hi, *hi_end);
        if (hi < lo) throw NarrowingStalled("fence intervals inconsistent");
        span = Interval(lo, hi);
        widths.push_back(span.width());
        if (width_trace) width_trace->push_back(span.width());
        if (span.width() <= target_width) {
            BoundaryInterval bi;
            bi.host = ni;
            bi.edge = j0.edge;
            bi.span = span;
            return bi;
        }
        size_t m = widths.size();
        if (m >= 5 && !(widths[m - 1] < widths[m - 5]))
            throw NarrowingStalled("separatrix interval width stopped contracting");
    }
    throw NarrowingStalled("zoom level cap reached before target width");
}

std::optional<BoundaryInterval> extend_separatrix_interval(
    const GradientField& g, const SaddleData& s, int which,
    const BoundaryInterval& narrowed, const Box2& target, std::int64_t p) {
    if (which < 0 || which > 3) throw Error("separatrix interval id out of range");
    bool stable = which >= 2;
    EdgeFrame f = EdgeFrame::of(narrowed.edge);
    Dyadic u0 = f.u_of_edge(s.pair.outer);
    Dyadic ut = f.u_of_edge(target);
    if (ut < u0) return std::nullopt;
    if (!(u0 < ut)) return narrowed;
    Interval v_limit = f.v_range(target);
    if (!v_limit.contains(narrowed.span)) return std::nullopt;
    Dyadic dist0 = s.pair.grid_box.width_x().half();
    auto hi = sweep_fence(g, stable, f, u0, ut, narrowed.span.hi, v_limit,
                          dist0, true, p);
    auto lo = sweep_fence(g, stable, f, u0, ut, narrowed.span.lo, v_limit,
                          dist0, false, p);
    if (!hi || !lo || *hi < *lo) return std::nullopt;
    BoundaryInterval bi;
    bi.host = target;
    bi.edge = narrowed.edge;
    bi.span = Interval(*lo, *hi);
    return bi;
}

ExtremumBox refine_extremum_box(const GradientField& g, const HessianExprs& hess,
                                const CertifiedBoxPair& pair, CriticalKind kind,
                                std::int64_t p, int max_refine) {
    if (kind != CriticalKind::Sink && kind != CriticalKind::Source)
        throw Error("transversal box construction needs a source or sink");
    bool sink = kind == CriticalKind::Sink;
    RootCertifier cert(g.hx, g.hy, p);
    CertifiedBoxPair cur = pair;
    Dyadic quarter_atan = atan_half_lower().ldexp2(-2);

    for (int it = 0; it <= max_refine; ++it) {
        EigenData e = eigen_at_center(cur, hess, p);
        Box2 j1 = cur.inner;
        Box2 j2 = surround(j1, Dyadic(1));
        Box2 j3 = surround(j2, Dyadic(1));
        Dyadic n2 = dot2(e.Vu, e.Vu);
        Dyadic lu = e.lambda_u.mig(), ls = e.lambda_s.mig();

        auto check = [&](const Box2& b) {
            IntervalMat2 h = eval_hessian(hess, b, p);
            IntervalVec2 h1 = mat_vec(h, e.Vu), h2 = mat_vec(h, e.Vs);
            // |HV_i| >= |lambda_i| |V_i| / 2, squared
            if (!(lu * lu * n2 <= norm2_iv(h1).lo.ldexp2(2))) return false;
            if (!(ls * ls * n2 <= norm2_iv(h2).lo.ldexp2(2))) return false;
            Interval cross = iv_dot(h1, {Interval(e.Vs[0]), Interval(e.Vs[1])});
            return cross.mag() <= quarter_atan * n2;
        };
        bool ok = lu.sign() > 0 && ls.sign() > 0 && holds_on(j3, 3, check);

        Dyadic cx = cur.grid_box.center_x(), cy = cur.grid_box.center_y();
        Dyadic half1, half2;
        if (ok) {
            // smallest frame-aligned box containing j2
            for (const Dyadic& sx : {j2.x.lo - cx, j2.x.hi - cx})
                for (const Dyadic& sy : {j2.y.lo - cy, j2.y.hi - cy}) {
                    half1 = max(half1, div_up((sx * e.Vu[0] + sy * e.Vu[1]).abs(), n2, p));
                    half2 = max(half2, div_up((sx * e.Vs[0] + sy * e.Vs[1]).abs(), n2, p));
                }
            // transversality of the frame components of the gradient on the
            // four edges, checked on subdivided parallelogram hulls
            const int kSlices = 8;
            auto edge_ok = [&](const DyadicVec2& n_vec, const Dyadic& hn,
                               const DyadicVec2& t_vec, const Dyadic& ht,
                               int want_sign) {
                // normal component of the gradient as one expression, so the
                // centered evaluation keeps the cancellation between the
                // hx and hy contributions that plain interval products lose
                ExprPtr nx = Expr::constant(Interval(n_vec[0]));
                ExprPtr ny = Expr::constant(Interval(n_vec[1]));
                ExprPtr psi_e = Expr::add(Expr::mul(nx, g.hx), Expr::mul(ny, g.hy));
                ExprPtr psi_x = Expr::add(Expr::mul(nx, hess.hxx), Expr::mul(ny, hess.hxy));
                ExprPtr psi_y = Expr::add(Expr::mul(nx, hess.hxy), Expr::mul(ny, hess.hyy));
                Dyadic step = ht.ldexp2(1); // full edge length 2*ht, sliced below
                for (int i = 0; i < kSlices; ++i) {
                    Dyadic t0 = -ht + div_down(step * Dyadic(i), Dyadic(kSlices), p);
                    Dyadic t1 = i + 1 == kSlices
                                    ? ht
                                    : -ht + div_up(step * Dyadic(i + 1), Dyadic(kSlices), p);
                    Interval tr(t0, t1);
                    Interval wx = Interval(cx + hn * n_vec[0]) + tr * Interval(t_vec[0]);
                    Interval wy = Interval(cy + hn * n_vec[1]) + tr * Interval(t_vec[1]);
                    Interval psi = eval_box_centered(psi_e, psi_x, psi_y, Box2(wx, wy), p);
                    int sgn = psi.contains_zero() ? 0 : psi.lo.sign();
                    if (sgn != want_sign) return false;
                }
                return true;
            };
            int outward = sink ? -1 : 1; // frame gradient component vs outward normal
            DyadicVec2 neg_vu{-e.Vu[0], -e.Vu[1]}, neg_vs{-e.Vs[0], -e.Vs[1]};
            if (edge_ok(e.Vu, half1, e.Vs, half2, outward) &&
                edge_ok(neg_vu, half1, e.Vs, half2, outward) &&
                edge_ok(e.Vs, half2, e.Vu, half1, outward) &&
                edge_ok(neg_vs, half2, e.Vu, half1, outward)) {
                ExtremumBox box;
                box.pair = cur;
                box.pair.kind = kind;
                box.v1 = e.Vu;
                box.v2 = e.Vs;
                box.cx = cx;
                box.cy = cy;
                box.half1 = half1;
                box.half2 = half2;
                box.polarity = sink ? Polarity::InwardSink : Polarity::OutwardSource;
                box.j3 = j3;
                return box;
            }
        }
        cur = relocate_critical(cert, cur.grid_box);
    }
    throw MaxDepthExceeded("transversal extremum box refinement failed at depth cap");
}

} // namespace msc
