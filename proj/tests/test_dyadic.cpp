#include <doctest.h>

#include "msc/dyadic.hpp"
#include "msc/errors.hpp"

#include <random>

using namespace msc;

TEST_CASE("canonical form keeps mantissa odd or zero") {
    Dyadic a(mpz_class(12), 0); // 12 = 3 * 2^2
    CHECK(a.mantissa() == 3);
    CHECK(a.exponent() == 2);
    Dyadic z(mpz_class(0), 17);
    CHECK(z.is_zero());
    CHECK(z.exponent() == 0);
}

TEST_CASE("ring operations are exact") {
    Dyadic a = Dyadic::from_double(0.75);
    Dyadic b = Dyadic::from_double(-2.5);
    CHECK((a + b).to_double() == -1.75);
    CHECK((a - b).to_double() == 3.25);
    CHECK((a * b).to_double() == -1.875);
    CHECK((a.half() + a.half()) == a);
    CHECK(a.ldexp2(3).to_double() == 6.0);
}

TEST_CASE("double round trip is exact") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-1e6, 1e6);
    for (int i = 0; i < 200; ++i) {
        double d = dist(rng);
        CHECK(Dyadic::from_double(d).to_double() == d);
    }
}

TEST_CASE("ordering matches rational values across exponents") {
    Dyadic a(mpz_class(1), -1);  // 0.5
    Dyadic b(mpz_class(3), -2);  // 0.75
    Dyadic c(mpz_class(-5), -3); // -0.625
    CHECK(a < b);
    CHECK(c < a);
    CHECK(a == Dyadic::from_double(0.5));
    CHECK(max(a, b) == b);
    CHECK(min(a, c) == c);
}

TEST_CASE("directed rounding to a coarser grid brackets the value") {
    Dyadic v(mpz_class(11), -4); // 0.6875
    CHECK(v.round_down(2) == Dyadic(mpz_class(2), -2)); // 0.5
    CHECK(v.round_up(2) == Dyadic(mpz_class(3), -2));   // 0.75
    CHECK(v.round_down(4) == v);
    CHECK(v.round_up(4) == v);
    Dyadic n = -v;
    CHECK(n.round_down(2) == Dyadic(mpz_class(-3), -2));
    CHECK(n.round_up(2) == Dyadic(mpz_class(-2), -2));
}

TEST_CASE("directed division brackets the exact quotient") {
    Dyadic a(7), b(3);
    Dyadic lo = div_down(a, b, 20), hi = div_up(a, b, 20);
    CHECK(lo < hi);
    CHECK(hi - lo == Dyadic::power_of_two(-20));
    CHECK(lo * b <= a);
    CHECK(a <= hi * b);
    // negative divisor
    Dyadic nlo = div_down(a, -b, 20), nhi = div_up(a, -b, 20);
    CHECK(nlo == -hi);
    CHECK(nhi == -lo);
    // exact quotient is returned on both sides
    CHECK(div_down(Dyadic(6), Dyadic(4), 10) == div_up(Dyadic(6), Dyadic(4), 10));
    CHECK_THROWS_AS(div_down(a, Dyadic(), 10), DivisionByZeroInterval);
}

TEST_CASE("directed square root brackets the exact root") {
    Dyadic two(2);
    Dyadic lo = sqrt_down(two, 60), hi = sqrt_up(two, 60);
    CHECK(lo * lo <= two);
    CHECK(two <= hi * hi);
    CHECK(hi - lo <= Dyadic::power_of_two(-60));
    // sqrt(2) = 1.41421356237309504880...
    CHECK(lo.to_double() == doctest::Approx(1.4142135623730951).epsilon(1e-15));
    CHECK(sqrt_down(Dyadic(9), 10) == Dyadic(3));
    CHECK(sqrt_up(Dyadic(9), 10) == Dyadic(3));
}

TEST_CASE("fuzz: directed division is sound for random dyadics") {
    std::mt19937_64 rng(42);
    std::uniform_int_distribution<long> mant(-4000, 4000);
    std::uniform_int_distribution<int> expo(-8, 8);
    for (int i = 0; i < 500; ++i) {
        Dyadic a(mpz_class(mant(rng)), expo(rng));
        Dyadic b(mpz_class(mant(rng)), expo(rng));
        if (b.is_zero()) continue;
        Dyadic lo = div_down(a, b, 30), hi = div_up(a, b, 30);
        CHECK(lo <= hi);
        if (b.sign() > 0) {
            CHECK(lo * b <= a);
            CHECK(a <= hi * b);
        } else {
            CHECK(a <= lo * b);
            CHECK(hi * b <= a);
        }
    }
}
