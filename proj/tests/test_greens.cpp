#include <cmath>
#include <complex>

#include <gtest/gtest.h>

#include "collective/greens.hpp"

using namespace collective;

namespace {

const ModelParams defaults{};
constexpr double x_wide = 29.025;

ModelParams with_lambda(double lam) {
    ModelParams p;
    p.lambda = lam;
    return p;
}

}  // namespace

TEST(FormFactor, Values) {
    EXPECT_EQ(form_factor_sq(0.0, defaults), cplx(0.0));
    EXPECT_NEAR(form_factor_sq(2.0, defaults).real(), 2.0 / (1.16 * 1.16), 1e-15);
    EXPECT_NEAR(form_factor_sq(2.0, defaults).real(), 1.48626, 1e-4);
    const cplx z{2.0, -0.02};
    EXPECT_LT(std::abs(form_factor_sq(z, defaults) - std::conj(form_factor_sq(std::conj(z), defaults))), 1e-15);
    EXPECT_THROW(form_factor_sq(cplx(0.0, 5.0), defaults), InvalidArgument);
    EXPECT_THROW(form_factor_sq(cplx(0.0, -5.0), defaults), InvalidArgument);
}

TEST(FormFactor, MatchesRealAxisHelper) {
    for (double k : {0.1, 1.0, 4.0, 30.0})
        EXPECT_NEAR(form_factor_sq(k, defaults).real(), form_factor_sq_real(k, defaults), 1e-15);
}

TEST(ContinuedIntegral, ConstantClosedForm) {
    const double c = 0.7, cutoff = 1000.0;
    const cplx z{1.0, 1.0};
    auto f = [&](cplx) { return cplx(c); };
    const cplx got = continued_halfline_integral(f, z, cutoff, {1e-14, 1e-13, 4000});
    const cplx want = c * (std::log(z) - std::log(z - cutoff));
    EXPECT_LT(std::abs(got - want), 1e-12);
}

TEST(ContinuedIntegral, BoundaryContinuity) {
    const auto p = defaults;
    auto f = [&](cplx k) { return 2.0 * p.lambda * p.lambda * form_factor_sq(k, p); };
    for (double w : {0.5, 2.0, 7.0}) {
        double prev = 0.0;
        for (double d : {1e-2, 1e-3, 1e-4}) {
            const cplx below = continued_halfline_integral(f, cplx(w, -d), 1000.0, {}, Tail::mapped);
            const cplx above = continued_halfline_integral(f, cplx(w, d), 1000.0, {}, Tail::mapped);
            const double gap = std::abs(below - above);
            if (prev > 0.0) {
                EXPECT_NEAR(gap / prev, 0.1, 0.01) << "first order in delta";
            }
            prev = gap;
        }
        EXPECT_LT(prev, 1e-5);
    }
}

TEST(ContinuedIntegral, RealAxisMatchesEta) {
    const auto p = defaults;
    auto f = [&](cplx k) { return 2.0 * p.lambda * p.lambda * form_factor_sq(k, p); };
    const auto q = resolve({}, p);
    const cplx integral = continued_halfline_integral(f, 2.0, q.cutoff, q.tolerance(), Tail::mapped);
    const cplx eta = eta_plus(2.0, Sector::one_atom, 0.0, p);
    EXPECT_LT(std::abs(eta - (2.0 - p.omega1 - integral)), 1e-14);
    EXPECT_NEAR(integral.imag(), -pi * f(2.0).real(), 1e-13);
}

TEST(ContinuedIntegral, RejectsNegativeRealAxis) {
    auto f = [](cplx) { return cplx(1.0); };
    EXPECT_THROW(continued_halfline_integral(f, cplx(-1.0, 0.0), 100.0, {}), InvalidArgument);
}

TEST(ExpIntegral, PlusMinusJump) {
    // + and - continuations differ by the full residue 2 pi i w(z) e^{i s z D}.
    const auto p = defaults;
    auto w = [&](cplx k) { return form_factor_sq(k, p); };
    for (int s : {+1, -1})
        for (cplx z : {cplx(2.0, -0.05), cplx(1.0, 0.0), cplx(3.0, 0.4)}) {
            const cplx plus = continued_exp_integral(w, z, 3.0, s, {}, Branch::plus);
            const cplx minus = continued_exp_integral(w, z, 3.0, s, {}, Branch::minus);
            EXPECT_LT(std::abs(plus - minus + 2.0 * pi * I * w(z) * expi(z, s * 3.0)), 1e-12);
        }
}

TEST(Eta, IndependentQuadratureOracle) {
    // Reference values from 30-digit quadrature of the plain integral in the
    // upper half-plane and of the principal value on the axis.
    struct Case {
        cplx z;
        Sector s;
        double x;
        cplx want;
    };
    const Case cases[] = {
        {{2.0, 0.3}, Sector::one_atom, 0.0, {0.013250977390418355, 0.32079763537876552}},
        {{2.0, 0.3}, Sector::symmetric, 5.0, {0.016510788282820916, 0.31654411037950643}},
        {{1.5, 0.1}, Sector::antisymmetric, 29.025, {-0.4820928521067238, 0.11805936735082272}},
        {{3.0, 1.0}, Sector::symmetric, 1.0, {1.0054605717872935, 1.0083210072449738}},
        {{2.0, 0.0}, Sector::one_atom, 0.0, {0.014756442293466086, 0.023347151111695841}},
    };
    for (const auto& c : cases) EXPECT_LT(std::abs(eta_plus(c.z, c.s, c.x, defaults) - c.want), 1e-12) << c.z;
}

TEST(Eta, FreeLimit) {
    const auto p = with_lambda(1e-9);
    for (cplx z : {cplx(1.0, -0.1), cplx(2.5, 0.0), cplx(0.5, 0.3)})
        for (auto s : {Sector::one_atom, Sector::symmetric, Sector::antisymmetric})
            EXPECT_LT(std::abs(eta_plus(z, s, 3.0, p) - (z - p.omega1)), 1e-12);
}

TEST(Eta, DeltaTermOnAxis) {
    EXPECT_NEAR(eta_plus(2.0, Sector::one_atom, 0.0, defaults).imag(), 2 * pi * 0.0025 * 2.0 / (1.16 * 1.16), 1e-12);
    EXPECT_NEAR(eta_plus(2.0, Sector::one_atom, 0.0, defaults).imag(), 0.023345, 1e-5);
}

TEST(Eta, SchwarzReflectionAndJump) {
    const auto p = defaults;
    const double lam2 = p.lambda * p.lambda;
    for (auto s : {Sector::symmetric, Sector::antisymmetric, Sector::one_atom})
        for (double w : {0.3, 1.0, 1.985, 2.7, 6.0}) {
            const double x = 7.3;
            const double sg = s == Sector::one_atom ? 0.0 : sigma(s);
            const double f = 2.0 * lam2 * form_factor_sq_real(w, p) * (1.0 + sg * std::cos(w * x));
            // eta from below with no continuation term: eta^+(w - i0) - 2 pi i f.
            const cplx lower = eta_plus(cplx(w, -1e-9), s, x, p) - 2.0 * pi * I * f;
            EXPECT_LT(std::abs(lower - std::conj(eta_plus(w, s, x, p))), 1e-8);
            EXPECT_LT(std::abs(eta_minus(w, s, x, p) - std::conj(eta_plus(w, s, x, p))), 1e-15);
            const cplx jump = eta_plus(w, s, x, p) - eta_minus(w, s, x, p);
            EXPECT_LT(std::abs(jump - 2.0 * pi * I * f), 1e-12);
        }
}

TEST(Eta, BoundaryContinuityTwoAtom) {
    for (auto s : {Sector::symmetric, Sector::antisymmetric})
        for (double w : {1.7, 2.05, 2.6}) {
            const double gap3 = std::abs(eta_plus({w, -1e-3}, s, x_wide, defaults) - eta_plus({w, 1e-3}, s, x_wide, defaults));
            const double gap5 = std::abs(eta_plus({w, -1e-5}, s, x_wide, defaults) - eta_plus({w, 1e-5}, s, x_wide, defaults));
            EXPECT_NEAR(gap5 / gap3, 1e-2, 2e-3);
            EXPECT_LT(gap5, 1e-4);
        }
}

TEST(Eta, OverflowGuard) {
    EXPECT_THROW(eta_plus({2.0, -30.0}, Sector::symmetric, 30.0, defaults), OverflowError);
    EXPECT_NO_THROW(eta_plus({2.0, -30.0}, Sector::one_atom, 30.0, defaults));
}

TEST(Eta, TranslationAndValidation) {
    ModelParams shifted = defaults;
    shifted.x1 = 10.0;
    shifted.x2 = 11.0;
    EXPECT_LT(std::abs(eta_plus({2.0, -0.01}, Sector::symmetric, 1.0, shifted) -
                       eta_plus({2.0, -0.01}, Sector::symmetric, 1.0, defaults)),
              1e-15);
    ModelParams same = defaults;
    same.x2 = same.x1;
    EXPECT_THROW(eta_plus(2.0, Sector::symmetric, 1.0, same), InvalidArgument);
}

TEST(Pole, OneAtom) {
    const auto z1 = find_pole(Sector::one_atom, 0.0, 2.0, defaults);
    EXPECT_NEAR(z1.omega_tilde(), 1.985, 2e-3);
    EXPECT_NEAR(z1.gamma(), 0.0235, 2e-3);
    EXPECT_LT(z1.residual, 1e-10 * std::max(1.0, std::abs(z1.value)));
    EXPECT_GE(z1.gamma(), 0.0);
}

TEST(Pole, SuperAndSubRadiantAt12_7) {
    const auto z1 = one_atom_pole(defaults);
    const auto zs = principal_pole(Sector::symmetric, 12.7, defaults);
    const auto za = principal_pole(Sector::antisymmetric, 12.7, defaults);
    EXPECT_LT(za.gamma(), 1e-4);
    EXPECT_GT(za.gamma(), 0.0);
    // Weak-coupling value 2 gamma_1 times the e^{gamma x21} enhancement.
    EXPECT_GT(zs.gamma(), 1.8 * z1.gamma());
}

TEST(Pole, NormalizationAgainstCentralDifference) {
    for (auto [s, x] : {std::pair{Sector::one_atom, 0.0}, {Sector::symmetric, x_wide}, {Sector::antisymmetric, x_wide},
                        {Sector::symmetric, 12.7}}) {
        const auto z = principal_pole(s, x, defaults);
        const double h = 3e-6;
        const cplx d = (eta_plus(z.value + h, s, x, defaults) - eta_plus(z.value - h, s, x, defaults)) / (2 * h);
        EXPECT_LT(std::abs(z.normalization * d - 1.0), 1e-8) << to_string(s) << " x=" << x;
    }
}

TEST(Pole, SeedValidationAndWrongBranch) {
    EXPECT_THROW(find_pole(Sector::one_atom, 0.0, cplx(2.0, 0.5), defaults), InvalidArgument);
    PoleOptions opt;
    opt.max_iterations = 0;
    EXPECT_THROW(find_pole(Sector::one_atom, 0.0, cplx(0.5, 0.0), defaults, {}, opt), ConvergenceError);
}

TEST(Pole, SelfConsistentFieldAssembly) {
    for (auto [s, x] : {std::pair{Sector::one_atom, 0.0}, {Sector::symmetric, x_wide}, {Sector::antisymmetric, 12.7}}) {
        const auto z = principal_pole(s, x, defaults);
        ModelParams p = defaults;
        p.x2 = p.x1 + std::max(x, 1.0);
        EXPECT_LT(std::abs(self_consistent_energy(z, p) - z.value), 1e-11) << to_string(s);
    }
}

TEST(WeakCoupling, OneAtomReduction) {
    const auto e = weak_coupling_estimate(Sector::one_atom, 1.0, defaults);
    EXPECT_TRUE(e.estimate);
    EXPECT_NEAR(e.gamma(), 2 * pi * 0.0025 * form_factor_sq_real(2.0, defaults), 5e-4);
}

TEST(WeakCoupling, AgreesWithSolverAtWideSeparation) {
    for (auto s : {Sector::symmetric, Sector::antisymmetric}) {
        const auto e = weak_coupling_estimate(s, x_wide, defaults);
        const auto z = principal_pole(s, x_wide, defaults);
        EXPECT_LT(std::abs(e.value - z.value), 1e-3) << to_string(s);
    }
}

TEST(WeakCoupling, SubradiantBranch) {
    // cos(omega x21) = -1 in the symmetric sector kills the bracket.
    const auto z1 = one_atom_pole(defaults);
    const double x = 5.0 * pi / z1.omega_tilde();
    const auto e = weak_coupling_estimate(Sector::symmetric, x, defaults);
    EXPECT_LT(e.gamma(), 0.1 * z1.gamma());
}

TEST(PoleScan, LatticeSpacing) {
    const auto scan = pole_scan(Sector::symmetric, x_wide, -3, 3, defaults);
    ASSERT_TRUE(scan.gaps.empty());
    ASSERT_EQ(scan.poles.size(), 7u);
    const auto zs = principal_pole(Sector::symmetric, x_wide, defaults);
    for (const auto& e : scan.poles) {
        EXPECT_LT(e.residual, 1e-10 * std::max(1.0, std::abs(e.value)));
        EXPECT_GE(e.gamma(), 0.0);
        if (e.lattice_index == 0) {
            EXPECT_LT(std::abs(e.value - zs.value), 1e-12);
            continue;
        }
        const double want = (lattice_seed(zs.value, Sector::symmetric, e.lattice_index, x_wide) - zs.value).real();
        EXPECT_NEAR((e.value - zs.value).real() / want, 1.0, 0.1) << "n=" << e.lattice_index;
        if (e.lattice_index > 0) {
            EXPECT_NEAR((e.value - zs.value).real(), 0.21647 * e.lattice_index, 0.1 * 0.21647 * e.lattice_index);
        }
    }
    for (std::size_t i = 1; i < scan.poles.size(); ++i)
        EXPECT_LT(scan.poles[i - 1].value.real(), scan.poles[i].value.real());
}

TEST(PoleScan, PrincipalOnlyAndSectorCheck) {
    const auto scan = pole_scan(Sector::antisymmetric, 12.7, 0, 0, defaults);
    ASSERT_EQ(scan.poles.size(), 1u);
    EXPECT_EQ(scan.poles[0].lattice_index, 0);
    EXPECT_THROW(pole_scan(Sector::one_atom, 12.7, 0, 0, defaults), InvalidArgument);
}

TEST(ContinuumWeight, ZerosAndSumRule) {
    const double x = 12.7;
    EXPECT_NEAR(continuum_weight(2 * pi / x, Sector::antisymmetric, x, defaults), 0.0, 1e-18);
    const auto q = resolve({}, defaults);
    for (auto s : {Sector::one_atom, Sector::symmetric}) {
        auto w = [&](double k) { return k > 0.0 ? continuum_weight(k, s, x_wide, defaults) : 0.0; };
        const auto z = principal_pole(s, x_wide, defaults);
        std::vector<double> breaks{0.0, q.cutoff};
        for (double k = 0.05; k < 6.0; k += 0.05) breaks.push_back(k);
        breaks.push_back(z.omega_tilde());
        const double body = quad::integrate(w, breaks, {1e-12, 1e-10, 20000});
        const double tail = quad::integrate_halfline(w, q.cutoff, q.cutoff, {1e-14, 1e-10, 4000});
        EXPECT_NEAR(body + tail, 1.0, 1e-8) << to_string(s);
    }
}

TEST(ContinuumWeight, LorentzianNearPole) {
    const auto z1 = one_atom_pole(defaults);
    const double g = z1.gamma();
    const double peak = continuum_weight(z1.omega_tilde(), Sector::one_atom, 0.0, defaults);
    const double half = continuum_weight(z1.omega_tilde() + g, Sector::one_atom, 0.0, defaults);
    EXPECT_NEAR(half / peak, 0.5, 0.05);
    EXPECT_NEAR(peak, 1.0 / (pi * g), 0.05 / (pi * g));
}

TEST(ContourMap, MaximaAtPoles) {
    const Region r{1.3, 2.7, -0.1, 0.0};
    const int nx = 141, ny = 51;
    const auto m = contour_map(r, nx, ny, Sector::symmetric, x_wide, defaults);
    EXPECT_EQ(m.overflow_cells, 0);
    for (double v : m.values) EXPECT_FALSE(std::isnan(v));
    const auto scan = pole_scan(Sector::symmetric, x_wide, -3, 3, defaults);
    const double dx = (r.re_max - r.re_min) / (nx - 1), dy = (r.im_max - r.im_min) / (ny - 1);
    for (const auto& e : scan.poles) {
        if (e.value.imag() < r.im_min) continue;
        const int ix = int(std::lround((e.value.real() - r.re_min) / dx));
        const int iy = int(std::lround((e.value.imag() - r.im_min) / dy));
        // Grid maximum in a 5x5 window sits within one cell of the root.
        int bx = ix, by = iy;
        for (int i = std::max(0, ix - 2); i <= std::min(nx - 1, ix + 2); ++i)
            for (int j = std::max(0, iy - 2); j <= std::min(ny - 1, iy + 2); ++j)
                if (m.at(i, j) > m.at(bx, by)) bx = i, by = j;
        EXPECT_LE(std::abs(bx - ix), 1) << "n=" << e.lattice_index;
        EXPECT_LE(std::abs(by - iy), 1) << "n=" << e.lattice_index;
    }
}

TEST(ContourMap, OverflowSentinelAndAsymmetry) {
    const auto m = contour_map({1.9, 2.1, -40.0, -25.0}, 3, 3, Sector::symmetric, x_wide, defaults);
    EXPECT_EQ(m.overflow_cells, 9);
    for (double v : m.values) EXPECT_EQ(v, ContourMap::overflow);
    const cplx z{2.2, -0.05};
    EXPECT_GT(std::abs(eta_plus(z, Sector::symmetric, x_wide, defaults) -
                       std::conj(eta_plus(std::conj(z), Sector::symmetric, x_wide, defaults))),
              1e-3);
}

TEST(ContourMap, FreeLimitHasNoInteriorMaxima) {
    const auto m = contour_map({1.5, 2.5, -0.1, -0.01}, 21, 10, Sector::symmetric, x_wide, with_lambda(1e-6));
    // Values increase monotonically toward the axis: no isolated maxima below it.
    for (int ix = 0; ix < m.nx; ++ix)
        for (int iy = 1; iy < m.ny; ++iy) EXPECT_GT(m.at(ix, iy), m.at(ix, iy - 1));
}
