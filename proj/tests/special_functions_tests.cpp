#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "convocode/special_functions.hpp"

using namespace convocode::math;

TEST_CASE("chi-squared upper tail matches published critical values") {
    // Upper-tail areas at the classic critical points.
    CHECK(chi_squared_upper_tail(3.841, 1) == doctest::Approx(0.05).epsilon(2e-3));
    CHECK(chi_squared_upper_tail(5.991, 2) == doctest::Approx(0.05).epsilon(2e-3));
    CHECK(chi_squared_upper_tail(6.635, 1) == doctest::Approx(0.01).epsilon(2e-3));
    CHECK(chi_squared_upper_tail(9.488, 4) == doctest::Approx(0.05).epsilon(2e-3));
    CHECK(chi_squared_upper_tail(0.0, 3) == 1.0);
}

TEST_CASE("chi-squared quantile recovered by bisection is 3.841 at df=1, alpha=0.05") {
    double lo = 0.0, hi = 30.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (chi_squared_upper_tail(mid, 1) > 0.05) lo = mid;
        else hi = mid;
    }
    CHECK(0.5 * (lo + hi) == doctest::Approx(3.841).epsilon(1e-3));
}

TEST_CASE("regularized gamma functions are complementary and monotone") {
    for (const double a : {0.5, 1.0, 2.5, 7.0}) {
        double prev = -1.0;
        for (double x = 0.0; x <= 20.0; x += 0.25) {
            const double p = reg_lower_gamma(a, x);
            const double q = reg_upper_gamma(a, x);
            CHECK(p + q == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(p >= prev - 1e-12);
            prev = p;
        }
    }
}

TEST_CASE("student t two-tailed p matches published critical values") {
    // Two-tailed alpha = 0.05 critical points.
    CHECK(student_t_two_tailed(12.706, 1) == doctest::Approx(0.05).epsilon(2e-3));
    CHECK(student_t_two_tailed(3.182, 3) == doctest::Approx(0.05).epsilon(2e-3));
    CHECK(student_t_two_tailed(2.776, 4) == doctest::Approx(0.05).epsilon(2e-3));
    CHECK(student_t_two_tailed(2.045, 29) == doctest::Approx(0.05).epsilon(2e-3));
    // Two-tailed alpha = 0.01.
    CHECK(student_t_two_tailed(5.841, 3) == doctest::Approx(0.01).epsilon(2e-3));
    // Symmetry and the trivial point.
    CHECK(student_t_two_tailed(-2.5, 7) == doctest::Approx(student_t_two_tailed(2.5, 7)));
    CHECK(student_t_two_tailed(0.0, 5) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("incomplete beta satisfies the reflection identity") {
    for (const double a : {0.5, 1.5, 4.0}) {
        for (const double b : {0.5, 2.0, 6.0}) {
            for (double x = 0.05; x < 1.0; x += 0.1) {
                const double lhs = reg_incomplete_beta(a, b, x);
                const double rhs = 1.0 - reg_incomplete_beta(b, a, 1.0 - x);
                CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
            }
        }
    }
    CHECK(reg_incomplete_beta(2.0, 3.0, 0.0) == 0.0);
    CHECK(reg_incomplete_beta(2.0, 3.0, 1.0) == 1.0);
}
