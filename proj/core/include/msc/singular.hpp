#pragma once

#include "msc/field.hpp"
#include "msc/rootcert.hpp"

#include <array>
#include <cstdint>
#include <optional>

namespace msc {

using DyadicVec2 = std::array<Dyadic, 2>;

// Eigen decomposition of the Hessian at the center of a critical box.
// Vs is Vu rotated by +90 degrees, exactly, so the norms agree and
// det(Vu, Vs) = |Vu|^2 without rounding.
struct EigenData {
    Interval lambda_u, lambda_s; // enclosures, lambda_u >= lambda_s
    DyadicVec2 Vu{}, Vs{};
};

// Parameters of the wedge pair around a saddle. beta is the angular
// half-opening of the gradient cone, delta the off-diagonal Hessian
// tolerance; both are maximal dyadic values under the admissibility
// inequalities, rounded conservatively.
struct WedgeParams {
    Dyadic a;      // Hessian distortion factor, > 1
    Dyadic omega1; // fixed angle constant, lower dyadic bound of (1/3)*arctan(1/2)
    Dyadic beta;   // in (0, omega1)
    Dyadic delta;  // > 0
};

// A fully refined saddle: certificate, eigen frame, wedge parameters, and
// the four boundary intervals where the wedges cross the outer box. The
// intervals alternate unstable/stable counterclockwise; index 0 of each
// array is the interval on the +Vu (resp. +Vs) side.
struct SaddleData {
    CertifiedBoxPair pair;
    EigenData eigen;
    WedgeParams wedge;
    std::array<BoundaryInterval, 2> unstable_intervals;
    std::array<BoundaryInterval, 2> stable_intervals;
};

enum class Polarity { InwardSink, OutwardSource };

// Rotated box around a source or sink on whose boundary the gradient is
// transversal. The box is {center + s*V1 + t*V2 : |s| <= half1, |t| <= half2}
// with exact dyadic frame vectors (V2 = rotate90(V1)).
struct ExtremumBox {
    CertifiedBoxPair pair;
    DyadicVec2 v1{}, v2{};
    Dyadic cx, cy;       // world center
    Dyadic half1, half2; // half extents in frame multiples of v1, v2
    Polarity polarity = Polarity::InwardSink;
    Box2 j3; // outer verification box of the construction
};

// Fixed angle constants, rounded down at 2^-60.
const Dyadic& omega1_lower();    // (1/3) * arctan(1/2)
const Dyadic& atan_half_lower(); // arctan(1/2)

// Certified critical point type from the signs of the Hessian determinant
// and trace over the outer box. Subdivides the evaluation up to max_refine
// levels; throws ClassificationUndecided if a sign never resolves.
CriticalKind classify_singularity(const CertifiedBoxPair& pair,
                                  const HessianExprs& hess, std::int64_t p = 96,
                                  int max_refine = 8);

// Eigenvalue enclosures and dyadic eigenvector approximations of the
// Hessian at the center of the grid box. Falls back to coordinate axes
// when the off-diagonal entry is negligible (the closed form degenerates).
EigenData eigen_at_center(const CertifiedBoxPair& pair, const HessianExprs& hess,
                          std::int64_t p = 96);

// Interval verification of the Hessian distortion bounds (factor a) and
// the near-diagonality bounds (tolerance delta) at every point of the
// outer box. False means the caller should shrink the saddle box.
bool certify_conditions(const CertifiedBoxPair& pair, const HessianExprs& hess,
                        const EigenData& eigen, const Dyadic& a,
                        const Dyadic& delta, std::int64_t p = 96);

// Maximal admissible wedge parameters for the given eigenvalues, a fixed.
WedgeParams wedge_params(const EigenData& eigen, const Dyadic& a,
                         std::int64_t p = 96);

// Crossing intervals of the four wedge boundary curves with the outer box
// boundary, paired into two unstable and two stable intervals (in that
// order: unstable +Vu side, unstable -Vu side, stable +Vs, stable -Vs).
// Verifies alternation, disjointness, and the gradient/edge angle bound
// at all endpoints. Throws WedgeCrossingUndecided when a certified
// pairing does not exist at this resolution.
std::array<BoundaryInterval, 4> separatrix_intervals(
    const GradientField& g, const CertifiedBoxPair& pair, const EigenData& eigen,
    const WedgeParams& wedge, std::int64_t p = 96);

// Full saddle refinement: shrinks the certified box (relocating the saddle
// with the grid classifier) until the wedge conditions certify and the
// four separatrix intervals isolate, with a = 2.
SaddleData build_saddle_data(const GradientField& g, const HessianExprs& hess,
                             const CertifiedBoxPair& pair, std::int64_t p = 96,
                             int max_refine = 8);

// Narrows one separatrix interval (which: 0/1 unstable, 2/3 stable, same
// order as SaddleData) to width <= target_width without refining the
// saddle box: zooms in on the saddle by nested subdivision and propagates
// a certified two-sided fence from the wedge crossings of each zoom level
// back to the hosting edge of the outer box. Throws NarrowingStalled when
// the width stops contracting.
// width_trace, when given, receives the certified interval width after
// each zoom level (useful for monitoring the contraction rate).
BoundaryInterval narrow_separatrix_interval(const GradientField& g,
                                            const HessianExprs& hess,
                                            const SaddleData& s, int which,
                                            const Dyadic& target_width,
                                            std::int64_t p = 96,
                                            int max_levels = 48,
                                            std::vector<Dyadic>* width_trace = nullptr);

// Propagates a separatrix boundary interval outward from the saddle's
// outer box to the matching edge of a larger enclosing box, by sweeping a
// certified upper and lower fence strip by strip (the strips widen with
// the distance from the saddle). Returns the enclosure on the target
// edge, or nullopt when a sweep loses transversality or leaves the
// target's cross range before arriving.
std::optional<BoundaryInterval> extend_separatrix_interval(
    const GradientField& g, const SaddleData& s, int which,
    const BoundaryInterval& narrowed, const Box2& target, std::int64_t p = 96);

// Builds the rotated transversal box around a source or sink: nested
// concentric boxes J1 in J2 in J3 (factor 3), eigenframe from the center
// Hessian, distortion checks over J3, and an edgewise transversality
// check of the frame components of the gradient on the rotated hull of
// J2. Shrinks the critical box until the checks pass.
ExtremumBox refine_extremum_box(const GradientField& g, const HessianExprs& hess,
                                const CertifiedBoxPair& pair, CriticalKind kind,
                                std::int64_t p = 96, int max_refine = 12);

// Deterministic descent to a certified sub-box: searches the subdivision
// tree of box (breadth-first, SW/SE/NW/NE order) for the first cell whose
// grid classifier certificate holds. Used to relocate a critical point
// when a box must shrink. Throws MaxDepthExceeded.
CertifiedBoxPair relocate_critical(const RootCertifier& cert, const Box2& box,
                                   int max_extra = 4);

} // namespace msc
