#pragma once

#include "msc/boxgrid.hpp"
#include "msc/field.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

namespace msc {

struct PredicateReport {
    bool c0_holds = false;
    bool c1_holds = false;
    bool c2_holds = false;
    Dyadic alpha_lower; // positive iff c1_holds
};

enum class CriticalKind { Unclassified, Saddle, Source, Sink };

// Isolation certificate for one root: the root lies in inner, is unique in
// outer, and the four boundary crossings of the two curves on the outer
// boundary are bracketed by certified sign changes and interleave ccw.
struct CertifiedBoxPair {
    Box2 grid_box; // generating grid box I
    Box2 inner;    // surround(I, 1/2)
    Box2 outer;    // surround(I, 1)
    std::array<BoundaryInterval, 2> f_crossings;
    std::array<BoundaryInterval, 2> g_crossings;
    Dyadic alpha_lower;
    CriticalKind kind = CriticalKind::Unclassified;
};

// Certified root isolation for the system f = 0, g = 0 on a square domain.
class RootCertifier {
public:
    RootCertifier(ExprPtr f, ExprPtr g, std::int64_t p = 96);

    // no solution in b: the range of f or of g over b excludes zero
    bool predicate_c0(const Box2& b) const;

    // at most one solution in b: the interval Jacobian over surround(b, 1)
    // excludes zero; alpha_lower is a dyadic lower bound on the arcsin of
    // the certified normalized-Jacobian bound
    PredicateReport predicate_c1(const Box2& b) const;

    // gradient direction of f (which = 0) or g (which = 1) varies by less
    // than pi/30 over surround(b, 1)
    bool predicate_c2(const Box2& b, int which) const;

    // Brackets the crossings of curvefn = 0 with the boundary of outer.
    // Initial breakpoints are the corners, edge quarter points, and any
    // extra_params (perimeter coordinates); each sign-change segment is
    // bisected down to max_len. Empty result means no crossing detected.
    std::vector<BoundaryInterval> isolate_boundary_crossings(
        const ExprPtr& curvefn, const Box2& outer, const Dyadic& max_len,
        const std::vector<Dyadic>& extra_params = {}) const;

    // Full three-case classification of one grid box. nullopt = Discard.
    // Throws ClassificationUndecided when no certified verdict exists at
    // this resolution (caller subdivides).
    std::optional<CertifiedBoxPair> classify_grid_box(const Box2& b) const;

    const ExprPtr& f() const { return f_; }
    const ExprPtr& g() const { return g_; }

    int sign_f(const Dyadic& x, const Dyadic& y) const { return cached_sign(0, x, y); }
    int sign_g(const Dyadic& x, const Dyadic& y) const { return cached_sign(1, x, y); }

private:
    int cached_sign(int which, const Dyadic& x, const Dyadic& y) const;

    ExprPtr f_, g_;
    ExprPtr fx_, fy_, gx_, gy_;
    std::int64_t p_;
    Dyadic cos_threshold_; // upper dyadic bound of cos(pi/30)
    mutable std::map<std::tuple<int, Dyadic, Dyadic>, int> sign_cache_;
};

// Uniform-depth subdivision driver: descends until every surviving box
// passes C1/C2 on its surround and classifies cleanly, then reports the
// deduplicated certified pairs in lexicographic order of box origin.
std::vector<CertifiedBoxPair> solve_system(const ExprPtr& f, const ExprPtr& g,
                                           const Box2& domain, int max_depth,
                                           std::int64_t p = 96);

// Cyclic interleaving test used by the classifier and the certificate
// re-checks: intervals tagged 0/1 must alternate and be pairwise disjoint
// along the ccw boundary of their host box.
bool crossings_interleave(const Box2& host,
                          const std::array<BoundaryInterval, 2>& f_iv,
                          const std::array<BoundaryInterval, 2>& g_iv);

} // namespace msc
