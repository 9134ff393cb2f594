#include <cmath>
#include <complex>

#include <gtest/gtest.h>

#include "collective/core.hpp"

using namespace collective;

namespace {

// int_0^inf dk (1 + (k/wM)^2)^(-2n) = wM sqrt(pi) Gamma(2n - 1/2) / (2 Gamma(2n))
double lorentzian_power(double omegaM, int n) {
    return omegaM * std::sqrt(pi) * std::tgamma(2 * n - 0.5) / (2.0 * std::tgamma(2.0 * n));
}

}  // namespace

TEST(Validate, DefaultsAccepted) {
    ModelParams p;
    EXPECT_EQ(validate(p, true), p);
}

TEST(Validate, ZeroCoupling) {
    ModelParams p;
    p.lambda = 0.0;
    try {
        validate(p);
        FAIL() << "expected InvalidArgument";
    } catch (const InvalidArgument& e) {
        EXPECT_STREQ(e.what(), "coupling must be positive");
    }
}

TEST(Validate, CoincidentAtoms) {
    ModelParams p;
    p.x2 = p.x1;
    EXPECT_NO_THROW(validate(p, false));
    try {
        validate(p, true);
        FAIL() << "expected InvalidArgument";
    } catch (const InvalidArgument& e) {
        EXPECT_STREQ(e.what(), "coincident atoms");
    }
}

TEST(Validate, OtherInvariants) {
    ModelParams p;
    p.omegaM = -1;
    EXPECT_THROW(validate(p), InvalidArgument);
    p = {};
    p.omega1 = 0;
    EXPECT_THROW(validate(p), InvalidArgument);
    p = {};
    p.n_ff = 0;
    EXPECT_THROW(validate(p), InvalidArgument);
    p = {};
    p.x2 = NAN;
    EXPECT_THROW(validate(p), InvalidArgument);
}

TEST(Validate, Idempotent) {
    ModelParams p{1.5, 0.1, 3.0, 2, -0.5, 4.0};
    EXPECT_EQ(validate(validate(p, true), true), validate(p, true));
}

TEST(Sector, SigmaAndTags) {
    EXPECT_EQ(sigma(Sector::symmetric), 1.0);
    EXPECT_EQ(sigma(Sector::antisymmetric), -1.0);
    EXPECT_EQ(sigma(Sector::one_atom), 0.0);
    for (auto s : {Sector::symmetric, Sector::antisymmetric, Sector::one_atom}) {
        EXPECT_EQ(sector_from_string(tag(s)), s);
        EXPECT_EQ(sector_from_string(to_string(s)), s);
    }
    EXPECT_THROW(sector_from_string("x"), InvalidArgument);
}

TEST(Params, JsonRoundTrip) {
    ModelParams p{1.5, 0.1, 3.0, 2, -0.5, 4.0};
    EXPECT_EQ(params_from_json(to_json(p)), p);
    EXPECT_EQ(params_from_json(nlohmann::json::object()), ModelParams{});
}

TEST(Quadrature, ClosedFormOracle) {
    for (int n : {1, 2, 3}) {
        const double wM = 5.0;
        auto f = [&](double k) { return 1.0 / std::pow(1.0 + (k / wM) * (k / wM), 2 * n); };
        const double got = quad::integrate_halfline(f, 0.0, wM, {1e-14, 1e-13, 4000});
        EXPECT_NEAR(got, lorentzian_power(wM, n), 1e-10) << "n=" << n;
    }
    EXPECT_NEAR(lorentzian_power(5.0, 1), pi * 5.0 / 4.0, 1e-15);
}

TEST(Quadrature, ComplexIntegrandAndPanels) {
    auto f = [](double k) { return std::exp(std::complex<double>(0.0, 3.0 * k)); };
    auto r = quad::adaptive(f, {0.0, 2.0}, {1e-14, 1e-13, 1000}, 0.1);
    ASSERT_TRUE(r.converged);
    const auto exact = (std::exp(std::complex<double>(0.0, 6.0)) - 1.0) / std::complex<double>(0.0, 3.0);
    EXPECT_LT(std::abs(r.value - exact), 1e-13);
    EXPECT_GE(r.panels.size(), 20u);
    for (const auto& p : r.panels) EXPECT_LE(p.b - p.a, 0.1 + 1e-15);
}

TEST(Quadrature, BudgetExhaustionReported) {
    auto f = [](double k) { return std::sin(1.0 / (k + 1e-6)); };
    auto r = quad::adaptive(f, {0.0, 1.0}, {1e-15, 1e-15, 20});
    EXPECT_FALSE(r.converged);
    EXPECT_THROW(quad::integrate(f, 0.0, 1.0, {1e-15, 1e-15, 20}), ConvergenceError);
}

TEST(Instability, DefaultMargin) {
    ModelParams p;
    const auto m = instability_margin(p);
    EXPECT_NEAR(m.value, 2.0 - 2.0 * 0.0025 * pi * 5.0 / 4.0, 1e-12);
    EXPECT_NEAR(m.value, 1.98037, 1e-5);
    EXPECT_TRUE(m.unstable());
    EXPECT_FALSE(m.marginal);
}

TEST(Instability, FreeLimit) {
    ModelParams p;
    p.lambda = 1e-9;
    EXPECT_NEAR(instability_margin(p).value, p.omega1, 1e-15);
}

TEST(Instability, MarginalAtThreshold) {
    ModelParams p;
    p.omega1 = 2.0 * p.lambda * p.lambda * pi * p.omegaM / 4.0;
    const auto m = instability_margin(p);
    EXPECT_NEAR(m.value, 0.0, 1e-12);
    EXPECT_TRUE(m.marginal);
    EXPECT_FALSE(m.unstable());
}

TEST(Instability, Monotone) {
    double prev = INFINITY;
    for (double lam = 0.01; lam <= 0.5; lam += 0.02) {
        ModelParams p;
        p.lambda = lam;
        const double m = instability_margin(p).value;
        EXPECT_LT(m, prev);
        prev = m;
    }
    prev = -INFINITY;
    for (double w = 0.5; w <= 4.0; w += 0.25) {
        ModelParams p;
        p.omega1 = w;
        const double m = instability_margin(p).value;
        EXPECT_GT(m, prev);
        prev = m;
    }
}

TEST(QuadSpec, ResolveAndValidate) {
    ModelParams p;
    auto q = resolve(QuadratureSpec{}, p);
    EXPECT_DOUBLE_EQ(q.cutoff, 1000.0);
    QuadratureSpec bad;
    bad.cutoff = 10.0;
    EXPECT_THROW(resolve(bad, p), InvalidArgument);
}
