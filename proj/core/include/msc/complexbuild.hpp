#pragma once

#include "msc/funnel.hpp"
#include "msc/singular.hpp"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace msc {

struct BuildOptions {
    int max_depth = 40;       // subdivision depth cap
    int max_retries = 64;     // total restarts of the funnel phase
    std::int64_t precision = 96;
    Dyadic theta_init;        // zero = pi/30, the practical default
    int m0 = 4;               // initial transition cap
};

enum class RetryReason {
    WidthExceeded,
    TransitionsExceeded,
    FunnelCollision,
    WrongBoxGrazed,
    SaddleBoxHit,
    BoundaryMismatch,
    FenceUndecided, // orientation/loop/gradient trouble while tracing
};

// One restart of the funnel phase: why, and the parameters in force after
// the adjustment.
struct RetryEvent {
    RetryReason reason;
    int detail = -1;
    Dyadic epsilon, theta;
    int m_cap = 0;
};

struct RunTrace {
    std::vector<RetryEvent> events;
    int funnel_passes = 0; // times the funnel phase was (re)started
    int constant_passes = 0;
};

// Connection of one separatrix slot (0/1 unstable, 2/3 stable) of a saddle.
struct Connection {
    int saddle = 0;
    int slot = 0;
    FunnelKind kind = FunnelKind::ExitsDomain;
    int extremum = -1; // index into extrema, or -1 for the domain boundary
};

struct MSComplex {
    ExprPtr h;
    Box2 domain;
    std::vector<SaddleData> saddles;
    std::vector<ExtremumBox> extrema;
    // enlarged boxes the funnels attach to, one per saddle / extremum:
    // launch[i] encloses saddles[i].pair.outer and hosts its four
    // separatrix intervals (propagated outward by certified sweeps);
    // traps[j] encloses extrema[j].pair.outer with gradient certified
    // transversal (inward for sinks, outward for sources) on all four
    // edges, so a funnel entering it certifiably connects to extremum j
    std::vector<Box2> launch;
    std::vector<Box2> traps;
    std::vector<Funnel> funnels; // 4 per saddle, ordered (saddle, slot)
    std::vector<Connection> connectivity;
    // parameters in force when the funnels were accepted
    Dyadic theta, w, epsilon;
    int m_cap = 0;
    RunTrace trace;
};

enum class AbortKind { SuspectedDegeneracy, ResourceCap };

struct AbortReport {
    AbortKind kind = AbortKind::ResourceCap;
    std::string detail;
    RunTrace trace;
};

// Full pipeline: isolate and classify the critical points, refine saddles
// and extrema, choose the grid and angle, trace all funnels, and retry with
// adjusted parameters on geometric failures until the complex assembles or
// a cap is hit.
std::variant<MSComplex, AbortReport> compute_ms_complex(
    const ExprPtr& h, const Box2& domain, const BuildOptions& opts = {});

// --- connectivity graph ---

enum class NodeKind { Saddle, Source, Sink, Boundary };

struct GraphNode {
    std::string id; // "saddle:0", "sink:1", "boundary:2:1" (funnel-indexed)
    NodeKind kind = NodeKind::Boundary;
};

struct GraphEdge {
    std::string from, to;
    int slot = 0;
    FunnelKind kind = FunnelKind::ExitsDomain;
};

struct ConnectivityGraph {
    std::vector<GraphNode> nodes;
    std::vector<GraphEdge> edges; // saddle-major, slot order
};

ConnectivityGraph connectivity_graph(const MSComplex& c);

// --- independent certificate audit ---

struct ValidationItem {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationItem> items;
    bool all_pass() const;
};

// Re-verifies every structural certificate of the complex from scratch:
// root-pair boundary crossings, wedge conditions, fence barrier and
// monotonicity signs, box-visit uniqueness, funnel disjointness, and
// terminal consistency of the connectivity.
ValidationReport validate_complex(const MSComplex& c, std::int64_t p = 96);

} // namespace msc
