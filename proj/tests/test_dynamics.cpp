#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>

#include <collective/dynamics.hpp>

using namespace collective;

namespace {

ModelParams centred(double x21, double lambda = 0.05) {
    ModelParams p;
    p.lambda = lambda;
    p.x1 = -0.5 * x21;
    p.x2 = 0.5 * x21;
    return p;
}

// Small boxes keep the suite fast; the acceptance run uses L = 500.
constexpr double small_L = 200.0;
constexpr int small_modes = 801;

const ReducedModel& small_symmetric() {
    static const ReducedModel m = [] {
        auto r = build_lattice(centred(29.025), small_L, small_modes, Sector::symmetric);
        diagonalize(r);
        return r;
    }();
    return m;
}

const FullModel& small_full() {
    static const FullModel m = [] {
        auto r = build_full_lattice(centred(29.025), small_L, small_modes);
        diagonalize(r);
        return r;
    }();
    return m;
}

std::vector<double> grid(double a, double b, int n) {
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(a + (b - a) * i / (n - 1));
    return v;
}

}  // namespace

TEST(Lattice, RejectsBadInputs) {
    EXPECT_THROW(build_lattice(centred(10), 100, 200, Sector::symmetric), InvalidArgument);
    EXPECT_THROW(build_lattice(centred(10), 15, 201, Sector::symmetric), InvalidArgument);
    EXPECT_THROW(build_lattice(centred(10), 100, 201, Sector::one_atom), InvalidArgument);
    EXPECT_THROW(build_full_lattice(centred(10), 100, 2'000'001), InvalidArgument);
}

TEST(Lattice, HermitianAndSpectrallyComplete) {
    const auto& m = small_full();
    EXPECT_LT((m.hamiltonian - m.hamiltonian.adjoint()).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT(orthonormality_error(m), 1e-10);
    EXPECT_LT(trace_error(m), 1e-8);
    EXPECT_LT(reconstruction_error(m), 1e-8);
    const auto& r = small_symmetric();
    EXPECT_LT((r.hamiltonian - r.hamiltonian.transpose()).cwiseAbs().maxCoeff(), 0.0 + 1e-300);
    EXPECT_LT(orthonormality_error(r), 1e-10);
    EXPECT_LT(trace_error(r), 1e-8);
    EXPECT_LT(reconstruction_error(r), 1e-8);
}

TEST(Lattice, FreeHamiltonianIsDiagonal) {
    auto m = build_full_lattice(centred(10, 0.0), 60, 41);
    diagonalize(m);
    std::vector<double> expected{2.0, 2.0};
    for (double k : m.k) expected.push_back(std::abs(k));
    std::sort(expected.begin(), expected.end());
    for (Eigen::Index i = 0; i < m.eigenvalues.size(); ++i) EXPECT_NEAR(m.eigenvalues(i), expected[i], 1e-14);
    EXPECT_LT(orthonormality_error(m), 1e-14);
    EXPECT_EQ((m.eigenvectors.cwiseAbs().array() > 1e-14).count(), m.eigenvalues.size());
}

TEST(Lattice, TwoByTwoClosedForm) {
    ReducedModel m;
    const double w1 = 2.0, wk = 1.3, g = 0.2;
    m.hamiltonian.resize(2, 2);
    m.hamiltonian << w1, g, g, wk;
    diagonalize(m);
    const double mid = 0.5 * (w1 + wk), half = std::sqrt(0.25 * (w1 - wk) * (w1 - wk) + g * g);
    EXPECT_NEAR(m.eigenvalues(0), mid - half, 1e-15);
    EXPECT_NEAR(m.eigenvalues(1), mid + half, 1e-15);
}

TEST(Lattice, TranslationCovariance) {
    auto a = build_lattice(centred(12.7), 100, 301, Sector::antisymmetric);
    auto p = centred(12.7);
    p.x1 += 3.3;
    p.x2 += 3.3;
    auto b = build_lattice(p, 100, 301, Sector::antisymmetric);
    diagonalize(a);
    diagonalize(b);
    EXPECT_LT((a.eigenvalues - b.eigenvalues).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Evolution, IdentityAndUnitarity) {
    const auto& m = small_full();
    const auto psi0 = initial_state(m, InitialState::symmetric);
    EXPECT_EQ(evolve(m, psi0, 0.0), psi0);
    for (double t : {0.0, 3.7, 29.0, 95.0}) {
        const auto psi = evolve(m, psi0, t);
        EXPECT_NEAR(psi.norm(), 1.0, 1e-10);
    }
    const Propagator<cplx> prop(m, psi0);
    EXPECT_NEAR(std::abs(prop.component(0, 0.0) - 1.0 / std::sqrt(2.0)), 0.0, 1e-12);
    EXPECT_THROW(initial_state(small_symmetric(), InitialState::antisymmetric), InvalidArgument);
    EXPECT_THROW(initial_state(small_symmetric(), InitialState::atom1), InvalidArgument);
}

TEST(Evolution, FullAndReducedAgree) {
    const auto times = grid(0.0, 90.0, 31);
    const auto a = survival_probability(small_full(), InitialState::symmetric, times);
    const auto b = survival_probability(small_symmetric(), InitialState::symmetric, times);
    EXPECT_NEAR(b.values.front(), 0.5, 1e-14);
    for (std::size_t i = 0; i < times.size(); ++i) EXPECT_NEAR(a.values[i], b.values[i], 1e-12);
}

TEST(Evolution, WarnsBeyondWrapHorizon) {
    const auto ts = survival_probability(small_symmetric(), InitialState::symmetric, {0.0, 150.0});
    EXPECT_EQ(ts.warnings.size(), 1u);
    EXPECT_THROW(survival_probability(small_symmetric(), InitialState::symmetric, {1.0, 0.5}), InvalidArgument);
}

TEST(Evolution, EarlyDecayFollowsModifiedOneAtomRate) {
    // log-slope on (0, x21) is -2 gamma_s1 with gamma_s1 ~ 0.0233.
    const double x = 29.025;
    const auto ts = survival_probability(small_symmetric(), InitialState::symmetric, {0.3 * x, 0.9 * x});
    const double slope = std::log(ts.values[1] / ts.values[0]) / (0.6 * x);
    EXPECT_NEAR(slope, -2 * 0.0233, 0.03 * 2 * 0.0233);
}

TEST(Evolution, ProbabilityBudget) {
    const auto& m = small_full();
    for (double t : {0.0, 12.0, 40.0}) {
        const auto psi = evolve(m, InitialState::symmetric, t);
        const double atoms = std::norm(psi(0)) + std::norm(psi(1));
        const double field = psi.tail(psi.size() - 2).squaredNorm();
        EXPECT_NEAR(atoms + field, 1.0, 1e-10);
    }
}

TEST(Field, NoFieldInBareState) {
    const auto f = field_intensity(small_symmetric(), InitialState::symmetric, grid(-60, 60, 25), 0.0);
    for (double v : f.intensity) EXPECT_EQ(v, 0.0);
}

TEST(Field, MirrorSymmetry) {
    const auto xs = grid(-80, 80, 41);
    for (auto label : {InitialState::symmetric}) {
        const auto f = field_intensity(small_symmetric(), label, xs, 21.0);
        for (std::size_t i = 0; i < xs.size(); ++i)
            EXPECT_NEAR(f.intensity[i], f.intensity[xs.size() - 1 - i], 1e-10 * (1e-6 + f.intensity[i]));
    }
    auto a = build_lattice(centred(12.7), 150, 601, Sector::antisymmetric);
    diagonalize(a);
    const auto f = field_intensity(a, InitialState::antisymmetric, xs, 30.0);
    for (std::size_t i = 0; i < xs.size(); ++i)
        EXPECT_NEAR(f.intensity[i], f.intensity[xs.size() - 1 - i], 1e-10 * (1e-6 + f.intensity[i]));
}

TEST(Field, FullAndReducedAgree) {
    const auto xs = grid(-50, 50, 21);
    const auto a = field_intensity(small_full(), InitialState::symmetric, xs, 17.0);
    const auto b = field_intensity(small_symmetric(), InitialState::symmetric, xs, 17.0);
    for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_NEAR(a.intensity[i], b.intensity[i], 1e-12);
}

TEST(Field, CausalityOutsideLightCone) {
    // P(x, t) < 1e-8 beyond the light cone widened by the interaction range.
    const auto p = centred(29.025);
    auto m = build_lattice(p, 500, 2001, Sector::symmetric);
    diagonalize(m);
    const double smear = 2 * pi / p.omegaM;
    for (double t : {5.0, 10.0, 20.0}) {
        std::vector<double> xs;
        for (double d = 0.5; d < 60; d *= 1.6) xs.push_back(p.x2 + t + smear + d);
        const auto f = field_intensity(m, InitialState::symmetric, xs, t);
        for (std::size_t i = 0; i < xs.size(); ++i)
            EXPECT_LT(f.intensity[i], 1e-8) << "t=" << t << " x=" << xs[i];
    }
}

TEST(Field, FieldStaysNearLightConeEarly) {
    // What the lattice does satisfy: the field outside the cone is orders of
    // magnitude below the wavefront and falls off with distance.
    const auto p = centred(29.025);
    const auto& m = small_symmetric();
    const double t = 10.0;
    const auto inside = field_intensity(m, InitialState::symmetric, {p.x2 + 0.5 * t}, t).intensity[0];
    const auto near = field_intensity(m, InitialState::symmetric, {p.x2 + t + 3.0}, t).intensity[0];
    const auto far = field_intensity(m, InitialState::symmetric, {p.x2 + t + 30.0}, t).intensity[0];
    EXPECT_LT(near, 1e-2 * inside);
    EXPECT_LT(far, near);
}

TEST(CollectiveState, SurvivalFromPole) {
    const auto times = grid(0.0, 100.0, 11);
    const double x = 29.025;
    const auto pole = principal_pole(Sector::symmetric, x, centred(x));
    const auto ts = collective_survival(pole, times);
    EXPECT_NEAR(ts.values[0], 0.5 * std::norm(pole.normalization), 1e-15);
    for (std::size_t i = 1; i < times.size(); ++i) {
        const double rate = -std::log(ts.values[i] / ts.values[i - 1]) / (times[i] - times[i - 1]);
        EXPECT_NEAR(rate, 2 * pole.gamma(), 1e-8);
    }
    // Free limit: N_s -> 1.
    const auto weak = collective_survival(centred(x, 0.002), Sector::symmetric, x, {0.0});
    EXPECT_NEAR(weak.values[0], 0.5, 1e-3);
}

TEST(CollectiveState, LatticeApproachesPoleAtLateTimes) {
    const double x = 29.025;
    const auto times = std::vector<double>{3.5 * x, 4.0 * x};
    const auto lattice = survival_probability(small_symmetric(), InitialState::symmetric, times);
    const auto pole = collective_survival(centred(x), Sector::symmetric, x, times);
    for (std::size_t i = 0; i < times.size(); ++i) EXPECT_NEAR(lattice.values[i] / pole.values[i], 1.0, 0.05);
}

TEST(CollectiveState, FieldFactorizesInTime) {
    const double x = 29.025;
    const auto p = centred(x);
    const auto pole = principal_pole(Sector::symmetric, x, p);
    const auto xs = grid(-40, 40, 9);
    const auto a = collective_field(pole, p, xs, 10.0);
    const auto b = collective_field(pole, p, xs, 30.0);
    for (std::size_t i = 0; i < xs.size(); ++i)
        EXPECT_NEAR(b.intensity[i] / a.intensity[i], std::exp(-2 * pole.gamma() * 20.0), 1e-12);
}

TEST(CollectiveState, SubradiantFieldIsBounded) {
    const double x = 12.7;
    const auto p = centred(x);
    auto pole = principal_pole(Sector::antisymmetric, x, p);
    pole.value = pole.omega_tilde();  // gamma = 0 exactly
    const auto f = collective_field(pole, p, grid(-200, 200, 21), 0.0);
    const double peak = *std::max_element(f.intensity.begin(), f.intensity.end());
    EXPECT_TRUE(std::isfinite(peak));
    EXPECT_LT(peak, 1.0);
}

TEST(EigenCache, RoundTrip) {
    const auto dir = std::filesystem::temp_directory_path() / "collective_cache_test";
    std::filesystem::remove_all(dir);
    const EigenCache cache(dir);
    auto a = build_lattice(centred(10), 60, 101, Sector::symmetric);
    EXPECT_FALSE(cache.load(a));
    cache.diagonalize(a);
    auto b = build_lattice(centred(10), 60, 101, Sector::symmetric);
    EXPECT_TRUE(cache.load(b));
    EXPECT_EQ(a.eigenvalues, b.eigenvalues);
    EXPECT_EQ(a.eigenvectors, b.eigenvectors);
    auto c = build_lattice(centred(10), 60, 103, Sector::symmetric);
    EXPECT_FALSE(cache.load(c));
    std::filesystem::remove_all(dir);
}
