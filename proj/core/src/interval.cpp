#include "msc/interval.hpp"

#include "msc/errors.hpp"

#include <algorithm>
#include <cmath>

namespace msc {

Interval iv_add(const Interval& a, const Interval& b) {
    return Interval(a.lo + b.lo, a.hi + b.hi);
}

Interval iv_sub(const Interval& a, const Interval& b) {
    return Interval(a.lo - b.hi, a.hi - b.lo);
}

Interval iv_neg(const Interval& a) { return Interval(-a.hi, -a.lo); }

Interval iv_mul(const Interval& a, const Interval& b) {
    Dyadic c[4] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
    Dyadic lo = c[0], hi = c[0];
    for (int i = 1; i < 4; ++i) {
        if (c[i] < lo) lo = c[i];
        if (hi < c[i]) hi = c[i];
    }
    return Interval(std::move(lo), std::move(hi));
}

Interval iv_div(const Interval& a, const Interval& b, std::int64_t p) {
    if (b.contains_zero()) throw DivisionByZeroInterval();
    Dyadic lo = div_down(a.lo, b.lo, p), hi = div_up(a.lo, b.lo, p);
    const Dyadic* nums[2] = {&a.lo, &a.hi};
    const Dyadic* dens[2] = {&b.lo, &b.hi};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            Dyadic d = div_down(*nums[i], *dens[j], p);
            Dyadic u = div_up(*nums[i], *dens[j], p);
            if (d < lo) lo = d;
            if (hi < u) hi = u;
        }
    return Interval(std::move(lo), std::move(hi));
}

Interval iv_pow(const Interval& a, long n) {
    if (n < 0) throw Error("iv_pow exponent must be nonnegative");
    if (n == 0) return Interval(1, 1);
    auto dpow = [](Dyadic base, long k) {
        Dyadic r(1);
        while (k > 0) {
            if (k & 1) r = r * base;
            base = base * base;
            k >>= 1;
        }
        return r;
    };
    if (n % 2 == 0) return Interval(dpow(a.mig(), n), dpow(a.mag(), n));
    return Interval(dpow(a.lo, n), dpow(a.hi, n));
}

Interval iv_sqrt(const Interval& a, std::int64_t p) {
    if (a.hi.sign() < 0) throw Error("iv_sqrt of negative interval");
    Dyadic lo = a.lo.sign() < 0 ? Dyadic() : sqrt_down(a.lo, p);
    return Interval(std::move(lo), sqrt_up(a.hi, p));
}

Interval hull(const Interval& a, const Interval& b) {
    return Interval(min(a.lo, b.lo), max(a.hi, b.hi));
}

bool intervals_overlap(const Interval& a, const Interval& b) {
    return a.lo <= b.hi && b.lo <= a.hi;
}

const Interval& pi_interval() {
    // floor(pi * 2^256); successor is an upper bound.
    static const Interval pi = [] {
        mpz_class m("3637715768917663242802349427777298626533933773283924299587"
                    "72151117938894466185");
        Dyadic lo(m, -256);
        return Interval(lo, lo + Dyadic::power_of_two(-256));
    }();
    return pi;
}

namespace {

// Alternating Taylor series for sin/cos at a dyadic point. All partial
// products are kept as enclosures, so the result is a true enclosure.
Interval sin_point(const Dyadic& x, std::int64_t p) {
    const std::int64_t wp = p + 24;
    Interval X(x);
    Interval x2 = (X * X).round_out(wp);
    Interval sum = X, term = X;
    for (long k = 1;; ++k) {
        long den = (2 * k) * (2 * k + 1);
        term = iv_div(-(term * x2).round_out(wp), Interval(Dyadic(den)), wp);
        sum = sum + term;
        Dyadic t = term.mag();
        if (t < Dyadic::power_of_two(-(p + 8)) && x2.hi <= Dyadic((2 * k + 2) * (2 * k + 3))) {
            // remaining terms decrease in magnitude and alternate
            sum = sum + Interval(-t, t);
            break;
        }
    }
    return sum.round_out(p);
}

Interval cos_point(const Dyadic& x, std::int64_t p) {
    const std::int64_t wp = p + 24;
    Interval X(x);
    Interval x2 = (X * X).round_out(wp);
    Interval sum(1, 1), term(1, 1);
    for (long k = 1;; ++k) {
        long den = (2 * k - 1) * (2 * k);
        term = iv_div(-(term * x2).round_out(wp), Interval(Dyadic(den)), wp);
        sum = sum + term;
        Dyadic t = term.mag();
        if (t < Dyadic::power_of_two(-(p + 8)) && x2.hi <= Dyadic((2 * k + 1) * (2 * k + 2))) {
            sum = sum + Interval(-t, t);
            break;
        }
    }
    return sum.round_out(p);
}

Interval exp_point(const Dyadic& x, std::int64_t p) {
    const std::int64_t wp = p + 24;
    Interval X(x);
    Interval sum(1, 1), term(1, 1);
    for (long k = 1;; ++k) {
        term = iv_div((term * X).round_out(wp), Interval(Dyadic(k)), wp);
        sum = sum + term;
        Dyadic t = term.mag();
        if (t < Dyadic::power_of_two(-(p + 8)) && X.mag() <= Dyadic(k + 1).half()) {
            // geometric tail with ratio <= 1/2
            sum = sum + Interval(-t, t);
            break;
        }
    }
    return sum.round_out(p);
}

Interval clip_unit(Interval s) {
    if (s.lo < Dyadic(-1)) s.lo = Dyadic(-1);
    if (Dyadic(1) < s.hi) s.hi = Dyadic(1);
    return s;
}

// Enclosure of k * pi / 2.
Interval half_pi_multiple(long k) {
    Interval kpi = pi_interval() * Interval(Dyadic(k));
    return Interval(kpi.lo.half(), kpi.hi.half());
}

} // namespace

Interval iv_sin(const Interval& a, std::int64_t p) {
    if (Dyadic(7) <= a.width() || Dyadic::power_of_two(40) <= a.mag())
        return Interval(-1, 1);
    Interval s = hull(sin_point(a.lo, p), sin_point(a.hi, p));
    // extend to +-1 where a critical point (2k+1) * pi/2 may lie inside
    double approx = a.lo.to_double() / 1.5707963267948966;
    long n0 = static_cast<long>(std::floor(approx)) - 2;
    for (long n = n0; n <= n0 + 9; ++n) {
        if ((n % 2) == 0) continue;
        Interval c = half_pi_multiple(n);
        if (a.lo <= c.hi && c.lo <= a.hi) {
            long r = ((n % 4) + 4) % 4;
            if (r == 1) s.hi = Dyadic(1); else s.lo = Dyadic(-1);
        }
    }
    return clip_unit(s);
}

Interval iv_cos(const Interval& a, std::int64_t p) {
    if (Dyadic(7) <= a.width() || Dyadic::power_of_two(40) <= a.mag())
        return Interval(-1, 1);
    Interval s = hull(cos_point(a.lo, p), cos_point(a.hi, p));
    // critical points k * pi: even k gives +1, odd k gives -1
    double approx = a.lo.to_double() / 3.141592653589793;
    long n0 = static_cast<long>(std::floor(approx)) - 2;
    for (long n = n0; n <= n0 + 5; ++n) {
        Interval c = half_pi_multiple(2 * n);
        if (a.lo <= c.hi && c.lo <= a.hi) {
            if (((n % 2) + 2) % 2 == 0) s.hi = Dyadic(1); else s.lo = Dyadic(-1);
        }
    }
    return clip_unit(s);
}

Interval iv_exp(const Interval& a, std::int64_t p) {
    Interval r(exp_point(a.lo, p).lo, exp_point(a.hi, p).hi);
    if (r.lo.sign() < 0) r.lo = Dyadic();
    return r;
}

Interval iv_dot(const IntervalVec2& u, const IntervalVec2& v) {
    return u.x * v.x + u.y * v.y;
}

Interval iv_det2(const IntervalMat2& m) { return m.a * m.d - m.b * m.c; }

} // namespace msc
