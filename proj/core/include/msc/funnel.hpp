#pragma once

#include "msc/field.hpp"
#include "msc/rootcert.hpp"

#include <cstdint>
#include <utility>
#include <variant>
#include <vector>

namespace msc {

// |v2| <= 2|v1| is quasihorizontal, |v1| <= 2|v2| quasivertical; every
// nonzero vector is at least one of the two.
enum class DirClass { QuasiHorizontal, QuasiVertical, Both };
DirClass classify_direction(const Dyadic& vx, const Dyadic& vy);

enum class FenceSide { PlusTheta, MinusTheta };

struct DyPoint {
    Dyadic x, y;
    friend bool operator==(const DyPoint& a, const DyPoint& b) {
        return a.x == b.x && a.y == b.y;
    }
};

// Largest power of two <= min(theta / ((C0 + C1) * sqrt(2)), cap): grid
// cells of that width have gradient angle variation below theta. cap is
// normally the domain edge length (binds when the constants are tiny).
Dyadic grid_width_for(const Dyadic& theta, const AngleConstants& ac,
                      const Dyadic& cap, std::int64_t p = 96);

// Critical boxes fences terminate on (or must avoid). Ids are indices.
struct StopSet {
    std::vector<Box2> boxes;
    std::vector<CriticalKind> kinds; // parallel to boxes
};

enum class TerminalKind { None, DomainBoundary, StopBox };

// Euler polyline of the rotated gradient field. Each segment starts on a
// grid edge (or on the originating saddle box boundary), lies in one
// closed grid cell, and carries a certified orientation sign of
// det(segment direction, field) over that cell, which makes the polyline
// a one-way barrier for the flow.
struct Fence {
    std::vector<DyPoint> vertices;
    std::vector<std::pair<std::int64_t, std::int64_t>> cells; // per segment
    FenceSide side = FenceSide::PlusTheta;
    bool reverse = false; // traced against -grad h (stable separatrices)
    TerminalKind terminal = TerminalKind::None;
    int stop_box = -1; // id when terminal == StopBox
};

// Immutable context shared by all fence steps: field, rotation angle
// enclosures, grid, domain, and the boxes to stop on.
struct FenceEnv {
    GradientField g;
    HessianExprs hess;
    bool reverse = false;
    Interval cos_t, sin_t; // enclosures of cos/sin of the rotation angle
    Grid grid;
    Box2 domain;
    StopSet stops;
    std::int64_t p = 96;
};

FenceEnv make_fence_env(const GradientField& g, bool reverse,
                        const Dyadic& theta, const Grid& grid,
                        const Box2& domain, StopSet stops, std::int64_t p = 96);

// One Euler step: the exit point of the ray from pt with the rotated
// field direction on the boundary of the containing grid cell, rounded
// away from the enclosed separatrix, plus certified orientation and
// h-monotonicity signs over the cell. Throws OrientationUndecided /
// GradientVanishes.
struct AdvanceStep {
    DyPoint next;
    std::pair<std::int64_t, std::int64_t> cell;
    int level = 0; // bisection depth the certificates resolved at
};
// level_hint pre-bisects the certificate box; the caller passes the depth
// of the previous step so consecutive steps in a difficult region skip the
// failing coarse levels.
AdvanceStep advance_fence(const FenceEnv& env, const DyPoint& pt, FenceSide side,
                          int level_hint = 0);

// Iterates advance_fence from start until the polyline reaches the domain
// boundary or enters a stop box, enforcing the one-visit-per-box rule.
// Throws LoopDetected when a cell is revisited (constants too loose).
Fence build_fence(const FenceEnv& env, const DyPoint& start, FenceSide side,
                  std::size_t max_steps = std::size_t(1) << 20);

// --- width arithmetic (all bounds rounded up) ---

Dyadic exp_up(const Dyadic& x, std::int64_t p);

// delta * e^{C s} + (c0 w + c1 sin(theta)) (e^{C s} - 1) / C with C the
// per-region-class constant; bounds the fence separation after running a
// quasihorizontal (quasivertical) part of horizontal (vertical) extent s.
Dyadic fence_width_bound(const Dyadic& delta, const Dyadic& span, const Dyadic& w,
                         const Dyadic& theta, DirClass kind,
                         const FunnelConstants& fc, std::int64_t p = 96);

// Width after a turn box: d if d >= w, else 2w.
Dyadic transition_width(const Dyadic& d, const Dyadic& w);

// (c1 theta + c2 w) e^{C M T} / D for M quasihorizontal/quasivertical parts.
Dyadic total_width_bound(int parts, const FunnelConstants& fc, const Dyadic& w,
                         const Dyadic& theta, std::int64_t p = 96);

// The inverse test: c1 theta + c2 w <= D e^{-C M T} epsilon, certifying the
// funnel stays narrower than epsilon for up to `parts` parts.
bool width_parameters_admissible(int parts, const FunnelConstants& fc,
                                 const Dyadic& w, const Dyadic& theta,
                                 const Dyadic& epsilon, std::int64_t p = 96);

// Deviation of an Euler polyline with step eta from a true solution of
// y' = F(x, y) with |F| <= a, |dF/dx| <= b, |dF/dy| <= c and initial
// separation delta0: delta0 e^{c s} + eta (b + a c)(e^{c s} - 1)/c.
Dyadic euler_error_bound(const Dyadic& eta, const Dyadic& a, const Dyadic& b,
                         const Dyadic& c, const Dyadic& span,
                         const Dyadic& delta0, std::int64_t p = 96);

// Separation of two approximate solutions with defects eps1, eps2 and
// initial separation delta: delta e^{c s} + (eps1 + eps2)(e^{c s} - 1)/c.
Dyadic fundamental_inequality(const Dyadic& delta, const Dyadic& eps1,
                              const Dyadic& eps2, const Dyadic& c,
                              const Dyadic& span, std::int64_t p = 96);

// Inductive width bookkeeping along the quasihorizontal/quasivertical
// parts of a funnel. push_part advances the bound (entry bound = previous
// exit bound through a turn box) and records whether the measured entry
// width respects it.
struct WidthPart {
    DirClass kind = DirClass::Both;
    Dyadic entry_width; // measured
    Dyadic span;
    Dyadic entry_bound;
    Dyadic exit_bound;
    bool sound = true;
};

class WidthLedger {
public:
    WidthLedger() = default;
    WidthLedger(FunnelConstants fc, Dyadic w, Dyadic theta, Dyadic delta0);

    bool push_part(DirClass kind, const Dyadic& measured_entry,
                   const Dyadic& span, std::int64_t p = 96);

    const std::vector<WidthPart>& parts() const { return parts_; }
    const Dyadic& current_bound() const { return bound_; }
    bool all_sound() const;

private:
    FunnelConstants fc_;
    Dyadic w_, theta_, bound_;
    std::vector<WidthPart> parts_;
};

enum class FunnelKind { UnstableToSink, StableToSource, ExitsDomain };

enum class FunnelFailureKind {
    WidthExceeded,
    TransitionsExceeded,
    FunnelCollision,
    WrongBoxGrazed,
    SaddleBoxHit,
    BoundaryMismatch,
};
struct FunnelFailure {
    FunnelFailureKind kind;
    int detail = -1; // box id / funnel id / transition count, by kind
};

struct Funnel {
    BoundaryInterval sep;
    Fence plus, minus;
    std::vector<DyPoint> closing_arc; // from the end of plus to the end of minus
    int transitions = 0;              // quasih/quasiv switches along the fences
    Dyadic max_width;
    FunnelKind kind = FunnelKind::ExitsDomain;
    WidthLedger ledger;

    // closed boundary: sep, plus fence, closing arc, minus fence reversed
    std::vector<DyPoint> polygon() const;
};

// Builds both fences of one separatrix interval and assembles the funnel,
// enforcing the width cap epsilon and the transition cap, and checking
// that no non-terminal critical box is grazed. origin_stop is the id of
// the saddle box hosting sep (excluded from the grazing check).
std::variant<Funnel, FunnelFailure> build_funnel(const FenceEnv& env,
                                                 const BoundaryInterval& sep,
                                                 const Dyadic& theta,
                                                 const Dyadic& epsilon,
                                                 int transition_cap,
                                                 const FunnelConstants& fc,
                                                 int origin_stop = -1);

// --- exact dyadic geometry ---

// sign of the cross product (b - a) x (c - a)
int orient(const DyPoint& a, const DyPoint& b, const DyPoint& c);
bool point_in_polygon(const DyPoint& q, const std::vector<DyPoint>& poly);
bool segments_intersect(const DyPoint& a, const DyPoint& b, const DyPoint& c,
                        const DyPoint& d);
bool polygons_intersect(const std::vector<DyPoint>& a,
                        const std::vector<DyPoint>& b);
bool box_overlaps_polygon(const Box2& b, const std::vector<DyPoint>& poly);
bool funnels_intersect(const Funnel& a, const Funnel& b);

} // namespace msc
