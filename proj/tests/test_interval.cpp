#include <doctest.h>

#include "msc/errors.hpp"
#include "msc/interval.hpp"

#include <cmath>
#include <random>

using namespace msc;

namespace {

Interval iv(double lo, double hi) {
    return Interval(Dyadic::from_double(lo), Dyadic::from_double(hi));
}

// the enclosures are tighter than a double ulp, so test containment of the
// true value via a +-1ulp bracket around its nearest-double approximation
bool contains_d(const Interval& i, double v) {
    Dyadic pad = Dyadic::from_double(std::abs(v) * 1e-15 + 1e-300);
    return i.lo <= Dyadic::from_double(v) + pad &&
           Dyadic::from_double(v) - pad <= i.hi;
}

} // namespace

TEST_CASE("ring operations on intervals are exact and sound") {
    Interval a = iv(-1.5, 2.0), b = iv(0.25, 3.0);
    CHECK((a + b) == iv(-1.25, 5.0));
    CHECK((a - b) == iv(-4.5, 1.75));
    CHECK((a * b) == iv(-4.5, 6.0));
    CHECK(iv_pow(iv(-2.0, 1.0), 2) == iv(0.0, 4.0));
    CHECK(iv_pow(iv(-2.0, 1.0), 3) == iv(-8.0, 1.0));
    CHECK(iv_pow(iv(0.5, 2.0), 0) == iv(1.0, 1.0));
}

TEST_CASE("division rounds outward and rejects zero divisors") {
    Interval a = iv(1.0, 2.0), b = iv(3.0, 4.0);
    Interval q = iv_div(a, b, 40);
    CHECK(contains_d(q, 1.0 / 3.9999999));
    CHECK(q.lo <= div_down(Dyadic(1), Dyadic(4), 40));
    CHECK(div_up(Dyadic(2), Dyadic(3), 40) <= q.hi);
    CHECK(q.width() <= Dyadic::from_double(2.0 / 3 - 0.25) + Dyadic::power_of_two(-38));
    CHECK_THROWS_AS(iv_div(a, iv(-1.0, 1.0), 40), DivisionByZeroInterval);
}

TEST_CASE("pi enclosure is tight and correct") {
    const Interval& pi = pi_interval();
    CHECK(pi.lo.to_double() == doctest::Approx(3.141592653589793).epsilon(1e-15));
    CHECK(pi.width() == Dyadic::power_of_two(-256));
    CHECK(contains_d(pi, 3.14159265358979323846));
}

TEST_CASE("sin/cos/exp point enclosures contain frozen oracle values") {
    // oracle: 200-bit evaluations, 30 digits
    // sin(5/4)   =  0.948984619355586214348490847036
    // cos(-27/8) = -0.972883945979446376162885941385
    // exp(1/2)   =  1.64872127070012814684865078781
    // exp(-3)    =  0.0497870683678639429793424156501
    Interval s = iv_sin(Interval(Dyadic::from_double(1.25)), 80);
    CHECK(contains_d(s, 0.9489846193555862));
    CHECK(s.width() <= Dyadic::power_of_two(-70));

    Interval c = iv_cos(Interval(Dyadic::from_double(-3.375)), 80);
    CHECK(contains_d(c, -0.9728839459794464));
    CHECK(c.width() <= Dyadic::power_of_two(-70));

    Interval e = iv_exp(Interval(Dyadic::from_double(0.5)), 80);
    CHECK(contains_d(e, 1.6487212707001282));
    Interval em = iv_exp(Interval(Dyadic::from_double(-3.0)), 80);
    CHECK(contains_d(em, 0.049787068367863944));
    CHECK(em.lo.sign() > 0);
}

TEST_CASE("sin/cos ranges catch interior extrema") {
    // [1, 2] contains pi/2 where sin attains 1
    Interval s = iv_sin(iv(1.0, 2.0), 60);
    CHECK(s.hi == Dyadic(1));
    CHECK(contains_d(s, std::sin(1.0)));
    // [3, 4] contains pi where cos attains -1
    Interval c = iv_cos(iv(3.0, 4.0), 60);
    CHECK(c.lo == Dyadic(-1));
    // wide argument collapses to [-1, 1]
    CHECK(iv_sin(iv(-10.0, 10.0), 60) == Interval(-1, 1));
}

TEST_CASE("fuzz: transcendental enclosures contain sampled true values") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> pt(-6.0, 6.0);
    std::uniform_real_distribution<double> wd(0.0, 0.5);
    for (int i = 0; i < 200; ++i) {
        double a = pt(rng), w = wd(rng);
        Interval x = iv(a, a + w);
        Interval s = iv_sin(x, 60), c = iv_cos(x, 60), e = iv_exp(x, 60);
        for (double t : {0.0, 0.31, 0.77, 1.0}) {
            double v = a + t * w;
            // doubles of library sin/cos are within 1 ulp; pad generously
            CHECK(s.lo.to_double() <= std::sin(v) + 1e-12);
            CHECK(std::sin(v) - 1e-12 <= s.hi.to_double());
            CHECK(c.lo.to_double() <= std::cos(v) + 1e-12);
            CHECK(std::cos(v) - 1e-12 <= c.hi.to_double());
            CHECK(e.lo.to_double() <= std::exp(v) * (1 + 1e-13));
            CHECK(std::exp(v) * (1 - 1e-13) <= e.hi.to_double());
        }
    }
}

TEST_CASE("fuzz: enclosures are inclusion monotone") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> pt(-5.0, 5.0);
    std::uniform_real_distribution<double> wd(0.0, 0.4);
    for (int i = 0; i < 100; ++i) {
        double a = pt(rng), w = wd(rng), g = wd(rng);
        Interval inner = iv(a, a + w);
        Interval outer = iv(a - g, a + w + g);
        CHECK(iv_sin(outer, 60).contains(iv_sin(inner, 60)));
        CHECK(iv_cos(outer, 60).contains(iv_cos(inner, 60)));
        CHECK(iv_exp(outer, 60).contains(iv_exp(inner, 60)));
        Interval b = iv(1.0, 1.5);
        CHECK((outer * b).contains(inner * b));
        CHECK(iv_div(b, outer + iv(7.0, 7.0), 50).contains(iv_div(b, inner + iv(7.0, 7.0), 50)));
    }
}

TEST_CASE("convergence: tighter arguments give tighter sin enclosures") {
    Dyadic c = Dyadic::from_double(0.7);
    Dyadic prev_width;
    bool first = true;
    for (int k = 2; k <= 10; ++k) {
        Dyadic h = Dyadic::power_of_two(-k);
        Interval s = iv_sin(Interval(c - h, c + h), 60);
        if (!first) CHECK(s.width() <= prev_width);
        prev_width = s.width();
        first = false;
    }
    CHECK(prev_width <= Dyadic::from_double(0.01));
}

TEST_CASE("vector and matrix helpers") {
    IntervalVec2 u{iv(1.0, 1.0), iv(2.0, 2.0)};
    IntervalVec2 v{iv(-1.0, -1.0), iv(0.5, 0.5)};
    CHECK(iv_dot(u, v) == iv(0.0, 0.0));
    IntervalMat2 m{iv(1.0, 2.0), iv(0.0, 0.0), iv(0.0, 0.0), iv(3.0, 4.0)};
    Interval d = iv_det2(m);
    CHECK(d == iv(3.0, 8.0));
    CHECK(contains_d(iv_sqrt(iv(2.0, 2.0), 60), 1.4142135623730951));
}
