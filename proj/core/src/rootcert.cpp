#include "msc/rootcert.hpp"

#include "msc/errors.hpp"

#include <algorithm>
#include <set>

namespace msc {

namespace {

const Dyadic kHalf(mpz_class(1), -1);

Dyadic perimeter(const Box2& b) {
    return (b.width_x() + b.width_y()).ldexp2(1);
}

struct BoundaryPoint {
    Edge edge;
    Dyadic coord; // varying coordinate on that edge
    Dyadic x, y;
};

// Inverse of boundary_param: point at ccw perimeter coordinate t.
BoundaryPoint boundary_point(const Box2& b, const Dyadic& t) {
    Dyadic wx = b.width_x(), wy = b.width_y();
    if (t < wx) return {Edge::Bottom, b.x.lo + t, b.x.lo + t, b.y.lo};
    Dyadic u = t - wx;
    if (u < wy) return {Edge::Right, b.y.lo + u, b.x.hi, b.y.lo + u};
    u = u - wy;
    if (u < wx) return {Edge::Top, b.x.hi - u, b.x.hi - u, b.y.hi};
    u = u - wx;
    return {Edge::Left, b.y.hi - u, b.x.lo, b.y.hi - u};
}

// Perimeter interval of a boundary interval (always within one edge).
Interval param_range(const Box2& host, const BoundaryInterval& bi) {
    Dyadic a = boundary_param(host, bi.edge, bi.span.lo);
    Dyadic b = boundary_param(host, bi.edge, bi.span.hi);
    return Interval(min(a, b), max(a, b));
}

enum class Verdict { Interleaved, NotInterleaved, Ambiguous };

Verdict interleave_verdict(const Box2& host,
                           const std::array<BoundaryInterval, 2>& f_iv,
                           const std::array<BoundaryInterval, 2>& g_iv) {
    struct Tagged {
        Interval range;
        int tag;
    };
    std::vector<Tagged> items;
    for (const auto& bi : f_iv) items.push_back({param_range(host, bi), 0});
    for (const auto& bi : g_iv) items.push_back({param_range(host, bi), 1});
    std::sort(items.begin(), items.end(),
              [](const Tagged& a, const Tagged& b) { return a.range.lo < b.range.lo; });
    Dyadic perim = perimeter(host);
    for (int i = 0; i < 4; ++i) {
        const Interval& cur = items[i].range;
        const Interval& nxt = items[(i + 1) % 4].range;
        Dyadic gap = (i == 3) ? (nxt.lo + perim) - cur.hi : nxt.lo - cur.hi;
        if (gap.sign() <= 0) return Verdict::Ambiguous;
    }
    for (int i = 0; i < 4; ++i)
        if (items[i].tag == items[(i + 1) % 4].tag) return Verdict::NotInterleaved;
    return Verdict::Interleaved;
}

} // namespace

bool crossings_interleave(const Box2& host,
                          const std::array<BoundaryInterval, 2>& f_iv,
                          const std::array<BoundaryInterval, 2>& g_iv) {
    return interleave_verdict(host, f_iv, g_iv) == Verdict::Interleaved;
}

RootCertifier::RootCertifier(ExprPtr f, ExprPtr g, std::int64_t p)
    : f_(std::move(f)), g_(std::move(g)), p_(p) {
    fx_ = differentiate(f_, 0);
    fy_ = differentiate(f_, 1);
    gx_ = differentiate(g_, 0);
    gy_ = differentiate(g_, 1);
    cos_threshold_ = iv_cos(iv_div(pi_interval(), Interval(Dyadic(30)), 90), 90).hi;
}

int RootCertifier::cached_sign(int which, const Dyadic& x, const Dyadic& y) const {
    auto key = std::make_tuple(which, x, y);
    auto it = sign_cache_.find(key);
    if (it != sign_cache_.end()) return it->second;
    int s = sign_at(which == 0 ? f_ : g_, x, y);
    sign_cache_.emplace(std::move(key), s);
    return s;
}

bool RootCertifier::predicate_c0(const Box2& b) const {
    if (!eval_box_centered(f_, fx_, fy_, b, p_).contains_zero()) return true;
    return !eval_box_centered(g_, gx_, gy_, b, p_).contains_zero();
}

PredicateReport RootCertifier::predicate_c1(const Box2& b) const {
    Box2 n = surround(b, Dyadic(1));
    IntervalMat2 jac{eval_box(fx_, n, p_), eval_box(fy_, n, p_),
                     eval_box(gx_, n, p_), eval_box(gy_, n, p_)};
    Interval det = iv_det2(jac);
    PredicateReport rep;
    rep.c0_holds = predicate_c0(b);
    if (det.contains_zero()) return rep;
    rep.c1_holds = true;
    // normalized Jacobian lower bound L = min|det| / max(|grad f| |grad g|)
    Interval nf = iv_pow(jac.a, 2) + iv_pow(jac.b, 2);
    Interval ng = iv_pow(jac.c, 2) + iv_pow(jac.d, 2);
    Dyadic denom = sqrt_up(nf.mag() * ng.mag(), p_);
    Dyadic L = div_down(det.mig(), denom, p_);
    if (L.sign() <= 0) L = Dyadic::power_of_two(-p_);
    if (Dyadic(1) < L) L = Dyadic(1);
    // arcsin(L) >= L + L^3/6 (all series terms positive)
    rep.alpha_lower = L + div_down(L * L * L, Dyadic(6), p_);
    return rep;
}

bool RootCertifier::predicate_c2(const Box2& b, int which) const {
    Box2 n = surround(b, Dyadic(1));
    const ExprPtr& dx = which == 0 ? fx_ : gx_;
    const ExprPtr& dy = which == 0 ? fy_ : gy_;
    Interval vx = eval_box(dx, n, p_), vy = eval_box(dy, n, p_);
    Interval norm2 = iv_pow(vx, 2) + iv_pow(vy, 2);
    if (norm2.contains_zero()) return false;
    // the gradient enclosure is a zero-free rectangle, so the extreme
    // directions occur at its corners; the worst pairwise cosine is the
    // minimum over corner pairs
    Dyadic cx[2] = {vx.lo, vx.hi}, cy[2] = {vy.lo, vy.hi};
    Dyadic lo_cos(1);
    bool first = true;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) {
            Dyadic ux = cx[i & 1], uy = cy[i >> 1];
            Dyadic wx = cx[j & 1], wy = cy[j >> 1];
            Dyadic dot = ux * wx + uy * wy;
            if (dot.sign() <= 0) return false;
            Dyadic den = sqrt_up((ux * ux + uy * uy) * (wx * wx + wy * wy), p_);
            Dyadic c = div_down(dot, den, p_);
            lo_cos = first ? c : min(lo_cos, c);
            first = false;
        }
    return cos_threshold_ <= lo_cos;
}

std::vector<BoundaryInterval> RootCertifier::isolate_boundary_crossings(
    const ExprPtr& curvefn, const Box2& outer, const Dyadic& max_len,
    const std::vector<Dyadic>& extra_params) const {
    int which = curvefn.get() == f_.get() ? 0 : (curvefn.get() == g_.get() ? 1 : -1);
    auto sign_of = [&](const Dyadic& x, const Dyadic& y) {
        return which >= 0 ? cached_sign(which, x, y) : sign_at(curvefn, x, y);
    };

    Dyadic perim = perimeter(outer);
    std::set<Dyadic> params;
    Dyadic wx = outer.width_x(), wy = outer.width_y();
    Dyadic corners[4] = {Dyadic(), wx, wx + wy, wx + wx + wy};
    for (int c = 0; c < 4; ++c) {
        Dyadic base = corners[c];
        Dyadic len = (c % 2 == 0) ? wx : wy;
        for (int q = 0; q < 4; ++q)
            params.insert(base + len.ldexp2(-2) * Dyadic(q));
    }
    for (const Dyadic& t : extra_params)
        if (Dyadic() <= t && t < perim) params.insert(t);

    auto sign_at_param = [&](const Dyadic& t) {
        BoundaryPoint pt = boundary_point(outer, t);
        return sign_of(pt.x, pt.y);
    };
    // Sample points are ours to choose: if one lands exactly on the curve,
    // nudge it forward by shrinking dyadic steps until the sign resolves.
    auto resolved_sign = [&](Dyadic& t, const Dyadic& room) {
        for (int k = 4; k <= 8; ++k) {
            try {
                return sign_at_param(t);
            } catch (const SignUndecidable&) {
                t += room.ldexp2(-k);
            }
        }
        return sign_at_param(t); // propagate if still undecidable
    };

    std::vector<Dyadic> ts(params.begin(), params.end());
    std::vector<int> signs;
    signs.reserve(ts.size());
    for (size_t i = 0; i < ts.size(); ++i) {
        Dyadic next = (i + 1 < ts.size()) ? ts[i + 1] : perim;
        Dyadic room = next - ts[i];
        signs.push_back(resolved_sign(ts[i], room));
    }

    std::vector<BoundaryInterval> out;
    size_t n = ts.size();
    for (size_t i = 0; i < n; ++i) {
        size_t j = (i + 1) % n;
        if (signs[i] == signs[j]) continue;
        Dyadic t0 = ts[i], t1 = (j == 0) ? perim : ts[j];
        int s0 = signs[i];
        // bisect the bracket down to max_len, staying on one edge between
        // corner breakpoints
        while (max_len < t1 - t0) {
            // midpoint split preferred; when a split point lands exactly on
            // the curve, fall back through off-center fractions
            static const std::pair<int, int> fracs[] = {
                {1, 1}, {3, 3}, {5, 3}, {7, 4}, {9, 4}, {5, 4}, {11, 4}};
            Dyadic span = t1 - t0, tm;
            int sm = 0;
            bool split = false;
            for (auto [num, shift] : fracs) {
                tm = t0 + span * Dyadic(num).ldexp2(-shift);
                try {
                    sm = sign_at_param(tm);
                    split = true;
                    break;
                } catch (const SignUndecidable&) {
                }
            }
            if (!split)
                throw SignUndecidable("no resolvable split point in bracket");
            if (sm == s0) t0 = tm; else t1 = tm;
        }
        BoundaryPoint p0 = boundary_point(outer, t0);
        Dyadic t1c = (t1 == perim) ? Dyadic() : t1;
        BoundaryPoint p1 = boundary_point(outer, t1c);
        BoundaryInterval bi;
        bi.host = outer;
        // after bisection below a quarter edge the bracket cannot span a
        // corner unless it started at one; classify by the segment interior
        BoundaryPoint pmid = boundary_point(outer, (t0 + ((t1 == perim) ? perim : t1)).half());
        bi.edge = pmid.edge;
        Dyadic c0 = (p0.edge == bi.edge) ? p0.coord
                                         : ((bi.edge == Edge::Bottom || bi.edge == Edge::Top)
                                                ? p0.x : p0.y);
        Dyadic c1 = (p1.edge == bi.edge) ? p1.coord
                                         : ((bi.edge == Edge::Bottom || bi.edge == Edge::Top)
                                                ? p1.x : p1.y);
        bi.span = Interval(min(c0, c1), max(c0, c1));
        out.push_back(bi);
    }
    return out;
}

std::optional<CertifiedBoxPair> RootCertifier::classify_grid_box(const Box2& b) const {
    PredicateReport rep = predicate_c1(surround(b, Dyadic(1)));
    if (!rep.c1_holds)
        throw ClassificationUndecided("C1 does not hold on the surround");
    Box2 inner = surround(b, kHalf);
    Box2 outer = surround(b, Dyadic(1));
    Dyadic d = b.width_x();
    // lower rounding of d/2 * tan(alpha/2) via tan t >= t
    Dyadic max_len = (d * rep.alpha_lower).ldexp2(-2);

    auto extra = [&](const Box2& host, const Dyadic& rho) {
        std::vector<Dyadic> ps;
        for (Edge e : {Edge::Bottom, Edge::Right, Edge::Top, Edge::Left}) {
            for (const BoundaryInterval& bi : lr_intervals(b, e, rho)) {
                ps.push_back(boundary_param(host, bi.edge, bi.span.lo));
                ps.push_back(boundary_param(host, bi.edge, bi.span.hi));
            }
        }
        return ps;
    };

    auto isolate2 = [&](const ExprPtr& fn, const Box2& host, const Dyadic& rho)
        -> std::optional<std::array<BoundaryInterval, 2>> {
        auto v = isolate_boundary_crossings(fn, host, max_len, extra(host, rho));
        if (v.empty()) return std::nullopt;
        if (v.size() != 2)
            throw ClassificationUndecided("unexpected boundary crossing count");
        return std::array<BoundaryInterval, 2>{v[0], v[1]};
    };

    auto f_out = isolate2(f_, outer, Dyadic(1));
    auto g_out = isolate2(g_, outer, Dyadic(1));
    if (!f_out || !g_out) return std::nullopt; // a curve misses the box
    auto f_in = isolate2(f_, inner, kHalf);
    auto g_in = isolate2(g_, inner, kHalf);
    if (!f_in || !g_in) return std::nullopt;

    Verdict vo = interleave_verdict(outer, *f_out, *g_out);
    Verdict vi = interleave_verdict(inner, *f_in, *g_in);
    if (vo == Verdict::Ambiguous || vi == Verdict::Ambiguous)
        throw ClassificationUndecided("crossing intervals overlap");
    if (vo != Verdict::Interleaved || vi != Verdict::Interleaved)
        return std::nullopt;

    CertifiedBoxPair pair;
    pair.grid_box = b;
    pair.inner = inner;
    pair.outer = outer;
    pair.f_crossings = *f_out;
    pair.g_crossings = *g_out;
    pair.alpha_lower = rep.alpha_lower;
    return pair;
}

std::vector<CertifiedBoxPair> solve_system(const ExprPtr& f, const ExprPtr& g,
                                           const Box2& domain, int max_depth,
                                           std::int64_t p) {
    RootCertifier cert(f, g, p);
    std::vector<Box2> active = {domain};
    for (int level = 0; level <= max_depth; ++level) {
        std::vector<Box2> kept;
        for (const Box2& b : active)
            if (!cert.predicate_c0(b)) kept.push_back(b);
        active = std::move(kept);
        if (active.empty()) return {};

        // fields with slowly varying gradients certify on boxes comparable
        // to the whole domain; downstream geometry (attached boxes, funnel
        // clearance) needs the certified pairs small relative to it
        bool all_pass = level >= 6;
        for (const Box2& b : active) {
            if (!all_pass) break;
            Box2 n = surround(b, Dyadic(1));
            if (!cert.predicate_c1(n).c1_holds || !cert.predicate_c2(n, 0) ||
                !cert.predicate_c2(n, 1)) {
                all_pass = false;
                break;
            }
        }

        if (all_pass) {
            std::vector<Box2> ordered = active;
            std::sort(ordered.begin(), ordered.end(),
                      [](const Box2& a, const Box2& b) {
                          if (a.x.lo != b.x.lo) return a.x.lo < b.x.lo;
                          return a.y.lo < b.y.lo;
                      });
            Grid grid{domain.x.lo, domain.y.lo, ordered.front().width_x()};
            std::set<std::pair<std::int64_t, std::int64_t>> processed;
            std::vector<CertifiedBoxPair> pairs;
            bool undecided = false;
            for (const Box2& b : ordered) {
                auto [ix, iy] = grid.locate(b.center_x(), b.center_y());
                if (processed.count({ix, iy})) continue;
                std::optional<CertifiedBoxPair> r;
                try {
                    r = cert.classify_grid_box(b);
                } catch (const ClassificationUndecided&) {
                    undecided = true;
                    break;
                }
                if (r) {
                    pairs.push_back(*r);
                    // any box whose surround overlaps ours reports the same
                    // root; mark the Chebyshev-2 neighborhood processed
                    for (std::int64_t dx = -2; dx <= 2; ++dx)
                        for (std::int64_t dy = -2; dy <= 2; ++dy)
                            processed.insert({ix + dx, iy + dy});
                }
            }
            if (!undecided) return pairs;
        }

        if (level == max_depth) break;
        std::vector<Box2> next;
        next.reserve(active.size() * 4);
        for (const Box2& b : active)
            for (const Box2& c : subdivide(b)) next.push_back(c);
        active = std::move(next);
    }
    throw MaxDepthExceeded("root isolation unresolved at depth cap with " +
                           std::to_string(active.size()) + " boxes");
}

} // namespace msc
