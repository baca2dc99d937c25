#include "msc/complexbuild.hpp"

#include "msc/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <utility>

namespace msc {

namespace {

// pi/30 rounded down; the practical starting angle
Dyadic default_theta() {
    return div_down(pi_interval().lo, Dyadic(30), 40);
}

std::vector<Box2> subtract_box(const Box2& r, const Box2& c) {
    if (!boxes_interiors_intersect(r, c)) return {r};
    std::vector<Box2> out;
    Dyadic xl = max(r.x.lo, c.x.lo), xh = min(r.x.hi, c.x.hi);
    if (r.x.lo < c.x.lo) out.push_back(Box2(Interval(r.x.lo, c.x.lo), r.y));
    if (c.x.hi < r.x.hi) out.push_back(Box2(Interval(c.x.hi, r.x.hi), r.y));
    if (r.y.lo < c.y.lo)
        out.push_back(Box2(Interval(xl, xh), Interval(r.y.lo, c.y.lo)));
    if (c.y.hi < r.y.hi)
        out.push_back(Box2(Interval(xl, xh), Interval(c.y.hi, r.y.hi)));
    return out;
}

BoxUnion region_minus(const Box2& domain, const std::vector<Box2>& holes) {
    std::vector<Box2> rects = {domain};
    for (const Box2& h : holes) {
        std::vector<Box2> next;
        for (const Box2& r : rects)
            for (Box2& piece : subtract_box(r, h)) next.push_back(std::move(piece));
        rects = std::move(next);
    }
    BoxUnion u;
    u.boxes = std::move(rects);
    if (getenv("MSC_TRACE"))
        fprintf(stderr, "[msc] region_minus: %zu holes -> %zu rects\n",
                holes.size(), u.boxes.size());
    return u;
}

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

// gradient strictly inward (sink) or outward (source) on all four edges
bool trap_edges_transversal(const GradientField& g, const HessianExprs& hess,
                            const Box2& t, bool sink, std::int64_t p) {
    int out = sink ? -1 : 1; // sign of the outward gradient component
    Box2 right(Interval(t.x.hi, t.x.hi), t.y);
    Box2 left(Interval(t.x.lo, t.x.lo), t.y);
    Box2 top(t.x, Interval(t.y.hi, t.y.hi));
    Box2 bottom(t.x, Interval(t.y.lo, t.y.lo));
    return uniform_sign(g.hx, hess.hxx, hess.hxy, right, out, p, 5) &&
           uniform_sign(g.hx, hess.hxx, hess.hxy, left, -out, p, 5) &&
           uniform_sign(g.hy, hess.hxy, hess.hyy, top, out, p, 5) &&
           uniform_sign(g.hy, hess.hxy, hess.hyy, bottom, -out, p, 5);
}

// concentric enlargement of b by the factor 2^k
Box2 scaled_box(const Box2& b, int k) {
    if (k <= 0) return b;
    Dyadic rho = (Dyadic(1).ldexp2(k) - Dyadic(1)).half();
    return surround(b, rho);
}

Dyadic floor_pow2(const Dyadic& x) {
    // largest power of two <= x (x > 0)
    if (x.sign() <= 0) throw Error("floor_pow2 needs a positive value");
    std::int64_t bits =
        static_cast<std::int64_t>(mpz_sizeinbase(x.mantissa().get_mpz_t(), 2));
    return Dyadic::power_of_two(bits - 1 + x.exponent());
}

const char* reason_name(RetryReason r) {
    switch (r) {
    case RetryReason::WidthExceeded: return "width exceeded";
    case RetryReason::TransitionsExceeded: return "transitions exceeded";
    case RetryReason::FunnelCollision: return "funnel collision";
    case RetryReason::WrongBoxGrazed: return "wrong box grazed";
    case RetryReason::SaddleBoxHit: return "saddle box hit";
    case RetryReason::BoundaryMismatch: return "boundary mismatch";
    case RetryReason::FenceUndecided: return "fence undecided";
    }
    return "unknown";
}

} // namespace

std::variant<MSComplex, AbortReport> compute_ms_complex(
    const ExprPtr& h, const Box2& domain, const BuildOptions& opts) {
    RunTrace trace;
    auto abort_with = [&](AbortKind k, std::string d) {
        return AbortReport{k, std::move(d), trace};
    };
    const std::int64_t p = opts.precision;

    try {
        GradientField g = gradient_field(h);
        HessianExprs hess = hessian_exprs(g);

        // Step 1: certified isolation and classification
        std::vector<CertifiedBoxPair> pairs =
            solve_system(g.hx, g.hy, domain, opts.max_depth, p);
        std::vector<SaddleData> saddles;
        std::vector<ExtremumBox> extrema;
        for (CertifiedBoxPair& pr : pairs) {
            pr.kind = classify_singularity(pr, hess, p);
            if (pr.kind == CriticalKind::Saddle)
                saddles.push_back(build_saddle_data(g, hess, pr, p));
            else
                extrema.push_back(refine_extremum_box(g, hess, pr, pr.kind, p));
        }
        const std::size_t S = saddles.size();

        MSComplex out;
        out.h = h;
        out.domain = domain;
        out.m_cap = opts.m0;
        out.theta = opts.theta_init.is_zero() ? default_theta() : opts.theta_init;
        if (pairs.empty()) {
            out.trace = trace;
            return out; // no critical points: empty complex, zero funnels
        }

        Dyadic min_edge = min(domain.width_x(), domain.width_y());
        Dyadic box_limit = min_edge.ldexp2(-3);

        // Launch and trap exponents: box i is the certified outer box
        // enlarged concentrically by 2^k. The wedge machinery certifies on
        // very small boxes; the funnel grid only stays tractable when the
        // region the fences cross keeps its distance from the critical
        // points, so the funnels attach to these enlarged boxes instead.
        std::vector<int> lk(S, 0);
        std::vector<int> tk(extrema.size(), 0);
        auto launch_of = [&](std::size_t i) {
            return scaled_box(saddles[i].pair.outer, lk[i]);
        };
        auto trap_of = [&](std::size_t j) {
            return scaled_box(extrema[j].pair.outer, tk[j]);
        };
        auto all_boxes_except = [&](int skip_saddle, int skip_trap) {
            std::vector<Box2> bs;
            for (std::size_t i = 0; i < S; ++i)
                if (static_cast<int>(i) != skip_saddle) bs.push_back(launch_of(i));
            for (std::size_t j = 0; j < extrema.size(); ++j)
                if (static_cast<int>(j) != skip_trap) bs.push_back(trap_of(j));
            return bs;
        };
        auto box_fits = [&](const Box2& cand, int skip_saddle, int skip_trap) {
            if (!domain.contains_box(cand)) return false;
            if (box_limit < cand.width_x() || box_limit < cand.width_y())
                return false;
            for (const Box2& o : all_boxes_except(skip_saddle, skip_trap))
                if (boxes_intersect(cand, o)) return false;
            return true;
        };

        // base narrowed separatrix intervals on the (tiny) outer boxes;
        // the narrowing has a slack floor, so relax the target when it
        // stalls, and fall back to the raw wedge crossing interval when the
        // zoom sweeps fail outright (they march along one edge direction
        // and lose transversality when the separatrix runs diagonally)
        std::vector<std::array<BoundaryInterval, 4>> base(S);
        for (std::size_t i = 0; i < S; ++i) {
            for (int k = 0; k < 4; ++k) {
                Dyadic target = saddles[i].pair.outer.width_x().ldexp2(-3);
                for (int attempt = 0;; ++attempt) {
                    try {
                        base[i][k] = narrow_separatrix_interval(
                            g, hess, saddles[i], k, target, p);
                        break;
                    } catch (const NarrowingStalled&) {
                        if (attempt == 3) {
                            base[i][k] = k < 2
                                             ? saddles[i].unstable_intervals
                                                   [std::size_t(k)]
                                             : saddles[i].stable_intervals
                                                   [std::size_t(k - 2)];
                            break;
                        }
                        target = target.ldexp2(2);
                    }
                }
            }
        }

        // grow traps while the edge transversality certifies
        for (std::size_t j = 0; j < extrema.size(); ++j) {
            bool sink = extrema[j].pair.kind == CriticalKind::Sink;
            while (true) {
                Box2 cand = trap_of(j);
                ++tk[j];
                Box2 next = trap_of(j);
                --tk[j];
                if (!box_fits(next, -1, static_cast<int>(j))) break;
                if (!trap_edges_transversal(g, hess, next, sink, p)) break;
                (void)cand;
                ++tk[j];
            }
        }
        // grow launch boxes while all four outward sweeps still certify and
        // the propagated intervals stay narrow relative to the box
        for (std::size_t i = 0; i < S; ++i) {
            while (true) {
                ++lk[i];
                Box2 next = launch_of(i);
                --lk[i];
                if (!box_fits(next, static_cast<int>(i), -1)) break;
                Dyadic cap = next.width_x().ldexp2(-3);
                bool ok = true;
                for (int k = 0; k < 4 && ok; ++k) {
                    auto e = extend_separatrix_interval(g, saddles[i], k,
                                                        base[i][k], next, p);
                    if (!e || cap < e->span.width()) ok = false;
                }
                if (!ok) break;
                ++lk[i];
            }
        }

        Dyadic theta = out.theta;
        int m_cap = opts.m0;
        Dyadic epsilon, w;
        int retries = 0;
        bool recompute_constants = true;
        bool first_constants = true;
        AngleConstants ac;
        FunnelConstants fc;

        // accepted funnels survive retries that leave the grid, angle, and
        // attached boxes untouched; rebuilding them dominates the pass cost
        std::map<std::pair<int, int>, Funnel> funnel_cache;
        Dyadic cache_w, cache_theta;
        std::vector<int> cache_lk, cache_tk;
        bool cache_valid = false;

        while (true) {
            if (retries > opts.max_retries)
                return abort_with(AbortKind::ResourceCap, "retry cap exceeded");
            if (theta < Dyadic::power_of_two(-16))
                return abort_with(AbortKind::ResourceCap,
                                  "rotation angle underflow");

            std::vector<Box2> holes = all_boxes_except(-1, -1);
            Dyadic hole_min;
            for (const Box2& b : holes) {
                Dyadic wd = min(b.width_x(), b.width_y());
                hole_min = hole_min.is_zero() ? wd : min(hole_min, wd);
            }

            // Step 2: constants over the domain minus the attached boxes,
            // and the funnel width budget
            if (recompute_constants) {
                ++trace.constant_passes;
                BoxUnion region = region_minus(domain, holes);
                // the sweeps refine adaptively next to the excluded boxes;
                // the default depth falls one or two levels short there
                ac = compute_angle_constants(g, hess, region, p, 14);
                fc = compute_funnel_constants(g, region, p, 14);
                epsilon = first_constants ? hole_min : min(epsilon, hole_min);
                first_constants = false;
                recompute_constants = false;
            }

            // Step 3: grid selection and separatrix intervals. The grid
            // width starts from a practical scale and only shrinks when a
            // per-cell certificate fails: the theoretical admissible width
            // is far below what the certificates actually need, and every
            // fence segment carries its own certified signs either way.
            if (w.is_zero())
                w = floor_pow2(min(min_edge.ldexp2(-8), hole_min.ldexp2(-2)));
            if (w < min_edge.ldexp2(-24))
                return abort_with(AbortKind::ResourceCap, "grid width underflow");
            Grid grid{domain.x.lo, domain.y.lo, w};

            if (!cache_valid || !(cache_w == w) || !(cache_theta == theta) ||
                cache_lk != lk || cache_tk != tk) {
                funnel_cache.clear();
                cache_w = w;
                cache_theta = theta;
                cache_lk = lk;
                cache_tk = tk;
                cache_valid = true;
            }

            std::vector<std::array<BoundaryInterval, 4>> seps(S);
            bool restart = false;
            auto retry = [&](RetryReason reason, int detail) {
                ++retries;
                trace.events.push_back({reason, detail, epsilon, theta, m_cap});
                restart = true;
                if (getenv("MSC_TRACE"))
                    fprintf(stderr, "[msc] retry reason=%d detail=%d w=%g theta=%g eps=%g m=%d\n",
                            (int)reason, detail, w.to_double(), theta.to_double(),
                            epsilon.to_double(), m_cap);
            };
            if (getenv("MSC_TRACE"))
                fprintf(stderr, "[msc] pass start w=%g theta=%g eps=%g m=%d\n",
                        w.to_double(), theta.to_double(), epsilon.to_double(), m_cap);

            // the funnels need room to stay below epsilon, so the entry
            // intervals must start well within it
            Dyadic sep_cap = epsilon.ldexp2(-2);
            for (std::size_t i = 0; i < S && !restart; ++i) {
                Box2 L = launch_of(i);
                for (int k = 0; k < 4 && !restart; ++k) {
                    std::optional<BoundaryInterval> ext =
                        extend_separatrix_interval(g, saddles[i], k, base[i][k],
                                                   L, p);
                    if (!ext || sep_cap < ext->span.width()) {
                        if (lk[i] > 0) {
                            --lk[i]; // smaller launch box, shorter sweeps
                            recompute_constants = true;
                            retry(RetryReason::SaddleBoxHit, static_cast<int>(i));
                        } else {
                            return abort_with(
                                AbortKind::SuspectedDegeneracy,
                                "separatrix interval does not reach the launch "
                                "box at the required width");
                        }
                        break;
                    }
                    seps[i][k] = *ext;
                }
            }
            if (restart) continue;

            StopSet stops;
            for (std::size_t i = 0; i < S; ++i) {
                stops.boxes.push_back(launch_of(i));
                stops.kinds.push_back(CriticalKind::Saddle);
            }
            for (std::size_t j = 0; j < extrema.size(); ++j) {
                stops.boxes.push_back(trap_of(j));
                stops.kinds.push_back(extrema[j].pair.kind);
            }
            FenceEnv env_fwd =
                make_fence_env(g, false, theta, grid, domain, stops, p);
            FenceEnv env_rev =
                make_fence_env(g, true, theta, grid, domain, stops, p);

            // Step 4: trace all funnels, mapping each failure to a
            // parameter adjustment
            ++trace.funnel_passes;
            std::vector<Funnel> funnels;
            std::vector<Connection> conns;

            for (std::size_t i = 0; i < S && !restart; ++i) {
                for (int slot = 0; slot < 4 && !restart; ++slot) {
                    const FenceEnv& env = slot < 2 ? env_fwd : env_rev;
                    auto hit = funnel_cache.find({static_cast<int>(i), slot});
                    if (hit != funnel_cache.end() &&
                        epsilon < hit->second.max_width)
                        hit = funnel_cache.end(); // stale after an eps halving
                    std::variant<Funnel, FunnelFailure> r;
                    if (hit != funnel_cache.end()) {
                        r = hit->second;
                    } else
                    try {
                        r = build_funnel(env, seps[i][slot], theta, epsilon,
                                         m_cap, fc, static_cast<int>(i));
                    } catch (const OrientationUndecided& e) {
                        if (getenv("MSC_TRACE"))
                            fprintf(stderr, "[msc] fence slot=%d orientation: %s\n", slot, e.what());
                        w = w.half();
                        retry(RetryReason::FenceUndecided, slot);
                        continue;
                    } catch (const LoopDetected& e) {
                        if (getenv("MSC_TRACE"))
                            fprintf(stderr, "[msc] fence slot=%d loop: %s\n", slot, e.what());
                        w = w.half();
                        retry(RetryReason::FenceUndecided, slot);
                        continue;
                    } catch (const GradientVanishes& e) {
                        if (getenv("MSC_TRACE"))
                            fprintf(stderr, "[msc] fence slot=%d gradient: %s\n", slot, e.what());
                        w = w.half();
                        retry(RetryReason::FenceUndecided, slot);
                        continue;
                    }

                    if (std::holds_alternative<FunnelFailure>(r)) {
                        FunnelFailure f = std::get<FunnelFailure>(r);
                        switch (f.kind) {
                        case FunnelFailureKind::WidthExceeded:
                            // the fences follow the gradient rotated by
                            // +-theta, so their separation scales with the
                            // angle; the grid only rounds vertices at the
                            // working precision and is left alone
                            m_cap *= 2;
                            theta = theta.half();
                            retry(RetryReason::WidthExceeded, f.detail);
                            break;
                        case FunnelFailureKind::TransitionsExceeded:
                            m_cap *= 2;
                            retry(RetryReason::TransitionsExceeded, f.detail);
                            break;
                        case FunnelFailureKind::WrongBoxGrazed: {
                            int id = f.detail;
                            bool shrunk = false;
                            if (id >= static_cast<int>(S) &&
                                id < static_cast<int>(S + extrema.size())) {
                                int j = id - static_cast<int>(S);
                                if (tk[std::size_t(j)] > 0) {
                                    --tk[std::size_t(j)];
                                    shrunk = true;
                                }
                            } else if (id >= 0 && id < static_cast<int>(S)) {
                                if (lk[std::size_t(id)] > 0) {
                                    --lk[std::size_t(id)];
                                    shrunk = true;
                                }
                            }
                            if (shrunk)
                                recompute_constants = true;
                            else
                                epsilon = epsilon.half();
                            retry(RetryReason::WrongBoxGrazed, f.detail);
                            break;
                        }
                        case FunnelFailureKind::BoundaryMismatch:
                            epsilon = epsilon.half();
                            retry(RetryReason::BoundaryMismatch, f.detail);
                            break;
                        case FunnelFailureKind::SaddleBoxHit: {
                            int id = f.detail;
                            if (id >= 0 && id < static_cast<int>(S) &&
                                lk[std::size_t(id)] > 0) {
                                --lk[std::size_t(id)];
                                recompute_constants = true;
                            } else {
                                epsilon = epsilon.half();
                            }
                            retry(RetryReason::SaddleBoxHit, f.detail);
                            break;
                        }
                        case FunnelFailureKind::FunnelCollision:
                            epsilon = epsilon.half();
                            retry(RetryReason::FunnelCollision, f.detail);
                            break;
                        }
                        continue;
                    }

                    Funnel fn = std::get<Funnel>(std::move(r));
                    funnel_cache[{static_cast<int>(i), slot}] = fn;
                    if (hit == funnel_cache.end() && getenv("MSC_TRACE"))
                        fprintf(stderr, "[msc] funnel saddle=%zu slot=%d kind=%d verts=%zu width=%g\n",
                                i, slot, (int)fn.kind, fn.plus.vertices.size(),
                                fn.max_width.to_double());
                    int other = -1;
                    for (std::size_t q = 0; q < funnels.size(); ++q)
                        if (funnels_intersect(fn, funnels[q])) {
                            other = static_cast<int>(q);
                            break;
                        }
                    if (other >= 0) {
                        epsilon = epsilon.half();
                        retry(RetryReason::FunnelCollision, other);
                        continue;
                    }

                    Connection conn;
                    conn.saddle = static_cast<int>(i);
                    conn.slot = slot;
                    conn.kind = fn.kind;
                    conn.extremum = fn.kind == FunnelKind::ExitsDomain
                                        ? -1
                                        : fn.plus.stop_box - static_cast<int>(S);
                    conns.push_back(conn);
                    funnels.push_back(std::move(fn));
                }
            }
            if (restart) continue;

            out.saddles = std::move(saddles);
            out.extrema = std::move(extrema);
            for (std::size_t i = 0; i < S; ++i)
                out.launch.push_back(scaled_box(out.saddles[i].pair.outer, lk[i]));
            for (std::size_t j = 0; j < out.extrema.size(); ++j)
                out.traps.push_back(scaled_box(out.extrema[j].pair.outer, tk[j]));
            out.funnels = std::move(funnels);
            out.connectivity = std::move(conns);
            out.theta = theta;
            out.w = w;
            out.epsilon = epsilon;
            out.m_cap = m_cap;
            out.trace = std::move(trace);
            return out;
        }
    } catch (const ClassificationUndecided& e) {
        return abort_with(AbortKind::SuspectedDegeneracy, e.what());
    } catch (const WedgeCrossingUndecided& e) {
        return abort_with(AbortKind::SuspectedDegeneracy, e.what());
    } catch (const NarrowingStalled& e) {
        return abort_with(AbortKind::SuspectedDegeneracy, e.what());
    } catch (const SignUndecidable& e) {
        return abort_with(AbortKind::SuspectedDegeneracy, e.what());
    } catch (const MaxDepthExceeded& e) {
        return abort_with(AbortKind::ResourceCap, e.what());
    } catch (const Error& e) {
        return abort_with(AbortKind::ResourceCap, e.what());
    }
}

ConnectivityGraph connectivity_graph(const MSComplex& c) {
    ConnectivityGraph gr;
    for (std::size_t i = 0; i < c.saddles.size(); ++i)
        gr.nodes.push_back({"saddle:" + std::to_string(i), NodeKind::Saddle});
    for (std::size_t j = 0; j < c.extrema.size(); ++j) {
        bool sink = c.extrema[j].pair.kind == CriticalKind::Sink;
        gr.nodes.push_back({(sink ? "sink:" : "source:") + std::to_string(j),
                            sink ? NodeKind::Sink : NodeKind::Source});
    }
    for (const Connection& conn : c.connectivity) {
        GraphEdge e;
        e.from = "saddle:" + std::to_string(conn.saddle);
        e.slot = conn.slot;
        e.kind = conn.kind;
        if (conn.kind == FunnelKind::ExitsDomain) {
            std::string id = "boundary:" + std::to_string(conn.saddle) + ":" +
                             std::to_string(conn.slot);
            gr.nodes.push_back({id, NodeKind::Boundary});
            e.to = id;
        } else {
            bool sink = conn.kind == FunnelKind::UnstableToSink;
            e.to = (sink ? "sink:" : "source:") + std::to_string(conn.extremum);
        }
        gr.edges.push_back(std::move(e));
    }
    return gr;
}

bool ValidationReport::all_pass() const {
    for (const ValidationItem& it : items)
        if (!it.pass) return false;
    return true;
}

ValidationReport validate_complex(const MSComplex& c, std::int64_t p) {
    ValidationReport rep;
    auto add = [&](std::string name, bool pass, std::string detail = "") {
        rep.items.push_back({std::move(name), pass, std::move(detail)});
    };
    GradientField g = gradient_field(c.h);
    HessianExprs hess = hessian_exprs(g);

    // critical pair certificates: boundary crossings bracket sign changes
    // and interleave ccw
    auto check_pair = [&](const CertifiedBoxPair& pr, const std::string& tag) {
        bool ok = crossings_interleave(pr.outer, pr.f_crossings, pr.g_crossings);
        std::string why = ok ? "" : "crossings fail to interleave";
        for (int which = 0; which < 2 && ok; ++which) {
            const ExprPtr& curve = which == 0 ? g.hx : g.hy;
            const auto& ivs = which == 0 ? pr.f_crossings : pr.g_crossings;
            for (const BoundaryInterval& bi : ivs) {
                auto a = bi.point_at(bi.span.lo);
                auto b = bi.point_at(bi.span.hi);
                try {
                    if (sign_at(curve, a[0], a[1]) * sign_at(curve, b[0], b[1]) >=
                        0) {
                        ok = false;
                        why = "crossing endpoints do not change sign";
                    }
                } catch (const SignUndecidable&) {
                    ok = false;
                    why = "crossing endpoint sign undecidable";
                }
            }
        }
        add(tag + " pair crossings", ok, why);
    };
    for (std::size_t i = 0; i < c.saddles.size(); ++i)
        check_pair(c.saddles[i].pair, "saddle " + std::to_string(i));
    for (std::size_t j = 0; j < c.extrema.size(); ++j)
        check_pair(c.extrema[j].pair, "extremum " + std::to_string(j));

    for (std::size_t i = 0; i < c.saddles.size(); ++i) {
        const SaddleData& s = c.saddles[i];
        bool ok = certify_conditions(s.pair, hess, s.eigen, s.wedge.a,
                                     s.wedge.delta, p);
        add("saddle " + std::to_string(i) + " wedge conditions", ok,
            ok ? "" : "distortion or near-diagonality fails on the outer box");
    }

    // trap transversality: the gradient crosses every trap edge the right way
    for (std::size_t j = 0; j < c.traps.size(); ++j) {
        bool sink = c.extrema[j].pair.kind == CriticalKind::Sink;
        bool ok = c.traps[j].contains_box(c.extrema[j].pair.outer) &&
                  trap_edges_transversal(g, hess, c.traps[j], sink, p);
        add("trap " + std::to_string(j) + " edge transversality", ok,
            ok ? "" : "gradient not transversal on a trap edge");
    }

    // fence certificates, re-derived from scratch per segment
    auto check_fence = [&](const Fence& f, const std::string& tag) {
        bool barrier = true, mono = true, unique = true;
        std::set<std::pair<std::int64_t, std::int64_t>> seen;
        std::pair<std::int64_t, std::int64_t> prev{INT64_MIN, INT64_MIN};
        for (std::size_t k = 0; k < f.cells.size(); ++k) {
            if (f.cells[k] != prev) {
                if (!seen.insert(f.cells[k]).second) unique = false;
                prev = f.cells[k];
            }
            // the crossing and monotonicity arguments live on the segment,
            // so its hull is the tightest sound certificate box
            const DyPoint& a = f.vertices[k];
            const DyPoint& b = f.vertices[k + 1];
            Box2 B(Interval(min(a.x, b.x), max(a.x, b.x)),
                   Interval(min(a.y, b.y), max(a.y, b.y)));
            Dyadic Dx = b.x - a.x;
            Dyadic Dy = b.y - a.y;
            ExprPtr cDx = Expr::constant(Interval(Dx));
            ExprPtr cDy = Expr::constant(Interval(Dy));
            ExprPtr det_e =
                Expr::sub(Expr::mul(cDx, g.hy), Expr::mul(cDy, g.hx));
            ExprPtr det_x =
                Expr::sub(Expr::mul(cDx, hess.hxy), Expr::mul(cDy, hess.hxx));
            ExprPtr det_y =
                Expr::sub(Expr::mul(cDx, hess.hyy), Expr::mul(cDy, hess.hxy));
            int want_det = (f.side == FenceSide::PlusTheta ? -1 : 1) *
                           (f.reverse ? -1 : 1);
            if (!uniform_sign(det_e, det_x, det_y, B, want_det, p, 3))
                barrier = false;
            ExprPtr mono_e =
                Expr::add(Expr::mul(cDx, g.hx), Expr::mul(cDy, g.hy));
            ExprPtr mono_x =
                Expr::add(Expr::mul(cDx, hess.hxx), Expr::mul(cDy, hess.hxy));
            ExprPtr mono_y =
                Expr::add(Expr::mul(cDx, hess.hxy), Expr::mul(cDy, hess.hyy));
            if (!uniform_sign(mono_e, mono_x, mono_y, B,
                              f.reverse ? -1 : 1, p, 3))
                mono = false;
        }
        add(tag + " barrier signs", barrier,
            barrier ? "" : "det(segment, grad h) sign not constant over a box");
        add(tag + " h-monotonicity", mono,
            mono ? "" : "h not strictly monotone along a segment");
        add(tag + " box-visit uniqueness", unique,
            unique ? "" : "a grid box is revisited");
    };
    for (std::size_t fi = 0; fi < c.funnels.size(); ++fi) {
        check_fence(c.funnels[fi].plus, "funnel " + std::to_string(fi) + " plus");
        check_fence(c.funnels[fi].minus,
                    "funnel " + std::to_string(fi) + " minus");
    }

    // pairwise disjointness and clearance from non-terminal critical boxes
    bool disjoint = true;
    for (std::size_t a = 0; a < c.funnels.size() && disjoint; ++a)
        for (std::size_t b = a + 1; b < c.funnels.size() && disjoint; ++b)
            if (funnels_intersect(c.funnels[a], c.funnels[b])) disjoint = false;
    add("funnel disjointness", disjoint,
        disjoint ? "" : "two funnel polygons overlap");

    for (std::size_t fi = 0; fi < c.funnels.size(); ++fi) {
        const Funnel& fn = c.funnels[fi];
        const Connection& conn = c.connectivity[fi];
        auto poly = fn.polygon();
        bool clear = true;
        for (std::size_t i = 0; i < c.launch.size(); ++i) {
            if (static_cast<int>(i) == conn.saddle) continue;
            if (box_overlaps_polygon(c.launch[i], poly)) clear = false;
        }
        for (std::size_t j = 0; j < c.traps.size(); ++j) {
            if (conn.kind != FunnelKind::ExitsDomain &&
                static_cast<int>(j) == conn.extremum)
                continue;
            if (box_overlaps_polygon(c.traps[j], poly)) clear = false;
        }
        add("funnel " + std::to_string(fi) + " critical-box clearance", clear,
            clear ? "" : "a non-terminal critical box meets the funnel");

        bool term = true;
        std::string why;
        if (conn.kind == FunnelKind::ExitsDomain) {
            auto on_bd = [&](const DyPoint& q) {
                return q.x == c.domain.x.lo || q.x == c.domain.x.hi ||
                       q.y == c.domain.y.lo || q.y == c.domain.y.hi;
            };
            if (!on_bd(fn.plus.vertices.back()) ||
                !on_bd(fn.minus.vertices.back())) {
                term = false;
                why = "fences do not end on the domain boundary";
            }
        } else {
            CriticalKind expected = conn.kind == FunnelKind::UnstableToSink
                                        ? CriticalKind::Sink
                                        : CriticalKind::Source;
            int id = conn.extremum;
            if (id < 0 || id >= static_cast<int>(c.extrema.size())) {
                term = false;
                why = "terminal extremum id out of range";
            } else if (c.extrema[std::size_t(id)].pair.kind != expected) {
                term = false;
                why = "terminal box kind does not match the funnel kind";
            } else if (fn.plus.stop_box != fn.minus.stop_box) {
                term = false;
                why = "fences stop on different boxes";
            }
        }
        add("funnel " + std::to_string(fi) + " terminal consistency", term, why);
    }

    // trace parameter monotonicity (epsilon non-increasing, m_cap
    // non-decreasing)
    bool monotone = true;
    for (std::size_t k = 1; k < c.trace.events.size(); ++k) {
        if (c.trace.events[k].epsilon > c.trace.events[k - 1].epsilon)
            monotone = false;
        if (c.trace.events[k].m_cap < c.trace.events[k - 1].m_cap)
            monotone = false;
    }
    add("trace parameter monotonicity", monotone,
        monotone ? "" : std::string(reason_name(RetryReason::WidthExceeded)) +
                            " sequence not monotone");

    return rep;
}

} // namespace msc
