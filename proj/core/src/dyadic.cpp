#include "msc/dyadic.hpp"

#include "msc/errors.hpp"

#include <cmath>

namespace msc {

namespace {

mpz_class shl(const mpz_class& m, std::int64_t k) {
    mpz_class r;
    mpz_mul_2exp(r.get_mpz_t(), m.get_mpz_t(), static_cast<mp_bitcnt_t>(k));
    return r;
}

} // namespace

void Dyadic::normalize() {
    if (m_ == 0) {
        e_ = 0;
        return;
    }
    mp_bitcnt_t s = mpz_scan1(m_.get_mpz_t(), 0);
    if (s > 0) {
        mpz_tdiv_q_2exp(m_.get_mpz_t(), m_.get_mpz_t(), s);
        e_ += static_cast<std::int64_t>(s);
    }
}

Dyadic Dyadic::from_double(double d) {
    if (!std::isfinite(d)) throw Error("dyadic from non-finite double");
    if (d == 0.0) return Dyadic();
    int ex = 0;
    double fr = std::frexp(d, &ex); // |fr| in [0.5, 1)
    mpz_class m(std::ldexp(fr, 53)); // integer by construction
    return Dyadic(m, static_cast<std::int64_t>(ex) - 53);
}

Dyadic Dyadic::operator-() const {
    Dyadic r;
    r.m_ = -m_;
    r.e_ = e_;
    return r;
}

Dyadic Dyadic::half() const { return is_zero() ? Dyadic() : Dyadic(m_, e_ - 1); }

Dyadic Dyadic::ldexp2(std::int64_t k) const {
    return is_zero() ? Dyadic() : Dyadic(m_, e_ + k);
}

Dyadic operator+(const Dyadic& a, const Dyadic& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    std::int64_t e = a.e_ < b.e_ ? a.e_ : b.e_;
    return Dyadic(shl(a.m_, a.e_ - e) + shl(b.m_, b.e_ - e), e);
}

Dyadic operator-(const Dyadic& a, const Dyadic& b) { return a + (-b); }

Dyadic operator*(const Dyadic& a, const Dyadic& b) {
    if (a.is_zero() || b.is_zero()) return Dyadic();
    return Dyadic(a.m_ * b.m_, a.e_ + b.e_);
}

std::strong_ordering operator<=>(const Dyadic& a, const Dyadic& b) {
    int sa = a.sign(), sb = b.sign();
    if (sa != sb) return sa <=> sb;
    if (sa == 0) return std::strong_ordering::equal;
    std::int64_t e = a.e_ < b.e_ ? a.e_ : b.e_;
    int c = cmp(shl(a.m_, a.e_ - e), shl(b.m_, b.e_ - e));
    return c <=> 0;
}

Dyadic Dyadic::round_down(std::int64_t p) const {
    if (is_zero() || e_ >= -p) return *this;
    mpz_class q;
    mpz_fdiv_q_2exp(q.get_mpz_t(), m_.get_mpz_t(), static_cast<mp_bitcnt_t>(-p - e_));
    return Dyadic(q, -p);
}

Dyadic Dyadic::round_up(std::int64_t p) const {
    if (is_zero() || e_ >= -p) return *this;
    mpz_class q;
    mpz_cdiv_q_2exp(q.get_mpz_t(), m_.get_mpz_t(), static_cast<mp_bitcnt_t>(-p - e_));
    return Dyadic(q, -p);
}

double Dyadic::to_double() const {
    if (is_zero()) return 0.0;
    signed long ex = 0;
    double d = mpz_get_d_2exp(&ex, m_.get_mpz_t());
    return std::ldexp(d, static_cast<int>(ex + e_));
}

std::string Dyadic::to_string() const {
    return m_.get_str() + "*2^" + std::to_string(e_);
}

Dyadic div_down(const Dyadic& a, const Dyadic& b, std::int64_t p) {
    if (b.is_zero()) throw DivisionByZeroInterval();
    // floor(a/b * 2^p) / 2^p, computed as an exact integer floor division.
    mpz_class num = a.mantissa(), den = b.mantissa();
    if (den < 0) { num = -num; den = -den; }
    std::int64_t k = a.exponent() - b.exponent() + p;
    if (k >= 0) num = shl(num, k); else den = shl(den, -k);
    mpz_class q;
    mpz_fdiv_q(q.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
    return Dyadic(q, -p);
}

Dyadic div_up(const Dyadic& a, const Dyadic& b, std::int64_t p) {
    if (b.is_zero()) throw DivisionByZeroInterval();
    mpz_class num = a.mantissa(), den = b.mantissa();
    if (den < 0) { num = -num; den = -den; }
    std::int64_t k = a.exponent() - b.exponent() + p;
    if (k >= 0) num = shl(num, k); else den = shl(den, -k);
    mpz_class q;
    mpz_cdiv_q(q.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
    return Dyadic(q, -p);
}

Dyadic sqrt_down(const Dyadic& a, std::int64_t p) {
    if (a.sign() < 0) throw Error("sqrt of negative dyadic");
    if (a.is_zero()) return Dyadic();
    // floor(sqrt(a) * 2^p) = isqrt(floor(a * 2^(2p))); floor commutes with
    // isqrt for nonnegative reals.
    std::int64_t k = a.exponent() + 2 * p;
    mpz_class n;
    if (k >= 0) {
        n = shl(a.mantissa(), k);
    } else {
        mpz_fdiv_q_2exp(n.get_mpz_t(), a.mantissa().get_mpz_t(),
                        static_cast<mp_bitcnt_t>(-k));
    }
    mpz_class s;
    mpz_sqrt(s.get_mpz_t(), n.get_mpz_t());
    return Dyadic(s, -p);
}

Dyadic sqrt_up(const Dyadic& a, std::int64_t p) {
    Dyadic lo = sqrt_down(a, p);
    if (lo * lo == a) return lo;
    return lo + Dyadic::power_of_two(-p);
}

} // namespace msc
