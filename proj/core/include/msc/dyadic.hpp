#pragma once

#include <gmpxx.h>

#include <compare>
#include <cstdint>
#include <string>

namespace msc {

// Exact binary rational m * 2^e with arbitrary-precision mantissa.
// Canonical form: m is odd or zero (zero has e = 0), so representations
// are unique and equality is structural.
class Dyadic {
public:
    Dyadic() : m_(0), e_(0) {}
    Dyadic(long v) : m_(v), e_(0) { normalize(); }
    Dyadic(const mpz_class& m, std::int64_t e) : m_(m), e_(e) { normalize(); }

    // Every double is a dyadic rational; conversion is exact.
    static Dyadic from_double(double d);
    static Dyadic power_of_two(std::int64_t e) { return Dyadic(mpz_class(1), e); }

    const mpz_class& mantissa() const { return m_; }
    std::int64_t exponent() const { return e_; }

    bool is_zero() const { return m_ == 0; }
    int sign() const { return sgn(m_); }

    Dyadic operator-() const;
    Dyadic half() const;                       // exact division by 2
    Dyadic ldexp2(std::int64_t k) const;       // exact scaling by 2^k
    Dyadic abs() const { return sign() < 0 ? -*this : *this; }

    friend Dyadic operator+(const Dyadic& a, const Dyadic& b);
    friend Dyadic operator-(const Dyadic& a, const Dyadic& b);
    friend Dyadic operator*(const Dyadic& a, const Dyadic& b);
    Dyadic& operator+=(const Dyadic& b) { return *this = *this + b; }
    Dyadic& operator-=(const Dyadic& b) { return *this = *this - b; }
    Dyadic& operator*=(const Dyadic& b) { return *this = *this * b; }

    friend bool operator==(const Dyadic& a, const Dyadic& b) {
        return a.e_ == b.e_ && a.m_ == b.m_;
    }
    friend std::strong_ordering operator<=>(const Dyadic& a, const Dyadic& b);

    // Largest multiple of 2^-p that is <= value (round_down) resp. smallest
    // one >= value (round_up). Exact values are returned unchanged.
    Dyadic round_down(std::int64_t p) const;
    Dyadic round_up(std::int64_t p) const;

    double to_double() const; // nearest representable, inexact in general
    std::string to_string() const; // "m*2^e" debugging form

private:
    void normalize();

    mpz_class m_;
    std::int64_t e_;
};

inline Dyadic abs(const Dyadic& a) { return a.abs(); }
inline const Dyadic& min(const Dyadic& a, const Dyadic& b) { return b < a ? b : a; }
inline const Dyadic& max(const Dyadic& a, const Dyadic& b) { return a < b ? b : a; }

// Directed rounding of the rational a/b to the grid of multiples of 2^-p.
// b must be nonzero.
Dyadic div_down(const Dyadic& a, const Dyadic& b, std::int64_t p);
Dyadic div_up(const Dyadic& a, const Dyadic& b, std::int64_t p);

// Directed rounding of sqrt(a) (a >= 0) to the 2^-p grid.
Dyadic sqrt_down(const Dyadic& a, std::int64_t p);
Dyadic sqrt_up(const Dyadic& a, std::int64_t p);

} // namespace msc
