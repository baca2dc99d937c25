#pragma once

#include "msc/dyadic.hpp"

#include <cstdint>

namespace msc {

// Closed interval with exact dyadic endpoints. Ring operations are exact;
// division and the transcendental enclosures round outward to the 2^-p grid.
struct Interval {
    Dyadic lo, hi;

    Interval() = default;
    explicit Interval(const Dyadic& p) : lo(p), hi(p) {}
    Interval(Dyadic l, Dyadic h) : lo(std::move(l)), hi(std::move(h)) {}
    Interval(long l, long h) : lo(l), hi(h) {}

    bool is_point() const { return lo == hi; }
    bool contains_zero() const { return lo.sign() <= 0 && hi.sign() >= 0; }
    bool contains(const Dyadic& v) const { return lo <= v && v <= hi; }
    bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }

    Dyadic width() const { return hi - lo; }
    Dyadic mid() const { return (lo + hi).half(); }
    Dyadic mag() const { return max(lo.abs(), hi.abs()); } // max |x|
    Dyadic mig() const {                                   // min |x|
        return contains_zero() ? Dyadic() : min(lo.abs(), hi.abs());
    }

    Interval round_out(std::int64_t p) const {
        return Interval(lo.round_down(p), hi.round_up(p));
    }

    friend bool operator==(const Interval& a, const Interval& b) {
        return a.lo == b.lo && a.hi == b.hi;
    }
};

Interval iv_add(const Interval& a, const Interval& b);
Interval iv_sub(const Interval& a, const Interval& b);
Interval iv_mul(const Interval& a, const Interval& b);
Interval iv_neg(const Interval& a);
Interval iv_div(const Interval& a, const Interval& b, std::int64_t p);
Interval iv_pow(const Interval& a, long n); // n >= 0, exact
Interval iv_sqrt(const Interval& a, std::int64_t p);
Interval iv_sin(const Interval& a, std::int64_t p);
Interval iv_cos(const Interval& a, std::int64_t p);
Interval iv_exp(const Interval& a, std::int64_t p);

inline Interval operator+(const Interval& a, const Interval& b) { return iv_add(a, b); }
inline Interval operator-(const Interval& a, const Interval& b) { return iv_sub(a, b); }
inline Interval operator*(const Interval& a, const Interval& b) { return iv_mul(a, b); }
inline Interval operator-(const Interval& a) { return iv_neg(a); }

Interval hull(const Interval& a, const Interval& b);
bool intervals_overlap(const Interval& a, const Interval& b);

// Tight two-sided enclosure of pi, width 2^-256.
const Interval& pi_interval();

struct IntervalVec2 {
    Interval x, y;
};

// Row-major [[a, b], [c, d]].
struct IntervalMat2 {
    Interval a, b, c, d;
};

Interval iv_dot(const IntervalVec2& u, const IntervalVec2& v);
Interval iv_det2(const IntervalMat2& m);

} // namespace msc
