#pragma once

#include <stdexcept>
#include <string>

namespace msc {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Interval divisor straddles zero.
struct DivisionByZeroInterval : Error {
    DivisionByZeroInterval() : Error("interval divisor contains zero") {}
};

// Sign of an exact quantity could not be decided within the precision cap.
struct SignUndecidable : Error {
    explicit SignUndecidable(const std::string& what) : Error(what) {}
};

// A gradient enclosure contains zero where a nonzero gradient is required.
struct GradientVanishes : Error {
    explicit GradientVanishes(const std::string& what) : Error(what) {}
};

struct MaxDepthExceeded : Error {
    explicit MaxDepthExceeded(const std::string& what) : Error(what) {}
};

// Grid-box classifier could not reach a verdict at the current resolution.
struct ClassificationUndecided : Error {
    explicit ClassificationUndecided(const std::string& what) : Error(what) {}
};

// Separatrix wedge curves did not yield the expected boundary crossings.
struct WedgeCrossingUndecided : Error {
    explicit WedgeCrossingUndecided(const std::string& what) : Error(what) {}
};

// Interval narrowing made no progress.
struct NarrowingStalled : Error {
    explicit NarrowingStalled(const std::string& what) : Error(what) {}
};

// Direction classification of the zero vector.
struct ZeroVector : Error {
    ZeroVector() : Error("cannot classify the direction of the zero vector") {}
};

// Fence segment orientation certificate failed.
struct OrientationUndecided : Error {
    explicit OrientationUndecided(const std::string& what) : Error(what) {}
};

// Fence ran into a critical box it was not allowed to touch.
struct CriticalBoxHit : Error {
    explicit CriticalBoxHit(const std::string& what) : Error(what) {}
};

// Fence revisited a grid box, indicating a cycle.
struct LoopDetected : Error {
    explicit LoopDetected(const std::string& what) : Error(what) {}
};

} // namespace msc
