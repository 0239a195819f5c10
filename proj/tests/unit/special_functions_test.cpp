// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <utility>
#include <vector>

#include "nanonmr/special_functions.hpp"

using namespace nanonmr;

namespace {

double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

// Reference values from tools/oracle/envelope_oracle.py (mpmath, 50 digits).
const std::vector<std::pair<double, double>> kErfcxReference = {
    {0.0, 1.0},
    {0.1, 0.89645697996912664193},
    {0.5, 0.61569034419292587487},
    {1.0, 0.42758357615580700441},
    {1.9, 0.26650937366167264968},
    {2.1, 0.24511912334517234674},
    {5.0, 0.11070463773306862637},
    {10.0, 0.056140992743822585858},
    {30.0, 0.018795888861416751497},
    {100.0, 0.0056416137829894329036},
    {1e4, 0.000056418958072680841152},
};

const std::vector<std::pair<double, double>> kEiReference = {
    {-30.0, -3.0215520106888125448e-15},
    {-10.0, -4.1569689296853242774e-6},
    {-2.1, -0.042614341508515068821},
    {-1.0, -0.21938393439552027368},
    {-0.1, -1.8229239584193906661},
    {0.5, 0.45421990486317357992},
    {1.0, 1.8951178163559367555},
    {5.0, 40.185275355803177455},
    {20.0, 25615652.66405658882},
    {45.0, 794391603570445377.15},
    {100.0, 2.7155527448538798219e+41},
};

}  // namespace

TEST(Erfcx, MatchesArbitraryPrecisionReference) {
    for (const auto& [x, want] : kErfcxReference) {
        EXPECT_LT(rel_err(special::erfcx(x), want), 1e-13) << "x=" << x;
    }
}

TEST(Erfcx, ContinuousAcrossBranchSwitch) {
    const double below = special::erfcx(std::nextafter(4.0, 0.0));
    const double above = special::erfcx(4.0);
    EXPECT_LT(rel_err(below, above), 1e-14);
}

TEST(Erfcx, NegativeArgumentsUseReflection) {
    // erfcx(-x) = 2 exp(x^2) - erfcx(x)
    EXPECT_NEAR(special::erfcx(-1.0), 2.0 * std::exp(1.0) - 0.42758357615580700441, 1e-13);
}

TEST(ExpIntEi, MatchesArbitraryPrecisionReference) {
    for (const auto& [x, want] : kEiReference) {
        EXPECT_LT(rel_err(special::expint_ei(x), want), 1e-10) << "x=" << x;
    }
}

TEST(ExpIntEi, ZeroIsDomainError) { EXPECT_THROW(special::expint_ei(0.0), DomainError); }

TEST(Sinc, SmallArgumentBranchIsContinuous) {
    EXPECT_DOUBLE_EQ(special::sinc(0.0), 1.0);
    EXPECT_NEAR(special::sinc(0.99e-4), std::sin(0.99e-4) / 0.99e-4, 4e-16);
    EXPECT_NEAR(special::sinc(std::acos(-1.0)), 0.0, 1e-16);
}
