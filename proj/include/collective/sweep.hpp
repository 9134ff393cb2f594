#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "dynamics.hpp"
#include "greens.hpp"

namespace collective {

/// Principal poles of both sectors at one separation.
struct SweepRecord {
    double x21 = 0.0;
    ComplexEnergy zs, za;
    bool converged_s = false, converged_a = false;
    std::string flag_s, flag_a;  // "", "restart", "failed: ..."

    const ComplexEnergy& pole(Sector s) const { return s == Sector::symmetric ? zs : za; }
    bool converged(Sector s) const { return s == Sector::symmetric ? converged_s : converged_a; }
};

struct Sweep {
    std::vector<SweepRecord> records;
    std::vector<std::string> warnings;
};

namespace detail {

// The principal root sits within half a lattice spacing of the one-atom energy.
inline bool is_principal(const ComplexEnergy& z, const ComplexEnergy& z1, double x21) {
    return std::abs(z.omega_tilde() - z1.omega_tilde()) <= pi / x21;
}

}  // namespace detail

/// Continuation sweep of the principal poles over an increasing x21 grid.
/// Each point is seeded with the previous root of its sector (omega1 at the
/// first point); a point that fails or lands outside the principal window is
/// restarted from the weak-coupling seed. Unresolved points are flagged.
inline Sweep sweep_poles(const std::vector<double>& grid, const ModelParams& params, const QuadratureSpec& quad = {}) {
    const auto p = validate(params);
    const auto q = resolve(quad, p);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0)) throw InvalidArgument("sweep distances must be positive");
        if (i && !(grid[i] > grid[i - 1])) throw InvalidArgument("sweep grid must be strictly increasing");
    }
    Sweep out;
    const auto z1 = one_atom_pole(p, q);
    if (!grid.empty() && grid.back() > 1.0 / z1.gamma())
        out.warnings.push_back("grid extends beyond 1/gamma_1 where gamma_j ~ 1/x21");

    std::optional<cplx> seed_s, seed_a;
    for (double x : grid) {
        SweepRecord r;
        r.x21 = x;
        for (Sector s : {Sector::symmetric, Sector::antisymmetric}) {
            auto& seed = s == Sector::symmetric ? seed_s : seed_a;
            auto& pole = s == Sector::symmetric ? r.zs : r.za;
            auto& ok = s == Sector::symmetric ? r.converged_s : r.converged_a;
            auto& flag = s == Sector::symmetric ? r.flag_s : r.flag_a;
            std::string failure;
            try {
                pole = find_pole(s, x, seed.value_or(cplx(p.omega1, 0.0)), p, q);
                ok = detail::is_principal(pole, z1, x);
                if (!ok) failure = "continuation left the principal window";
            } catch (const Error& e) {
                failure = e.what();
            }
            if (!ok) {
                try {
                    pole = principal_pole(s, x, p, q);
                    ok = detail::is_principal(pole, z1, x);
                    flag = ok ? "restart" : "failed: no principal root";
                } catch (const Error& e) {
                    flag = std::string("failed: ") + e.what();
                }
            }
            seed = ok ? std::optional<cplx>(pole.value) : std::nullopt;
        }
        out.records.push_back(r);
    }
    return out;
}

/// F_j = -d omega~_j / dx21 by finite differences on the sweep grid.
/// Heuristic, as the underlying picture is.
inline TimeSeries force_indicator(const std::vector<SweepRecord>& records, Sector s) {
    TimeSeries ts;
    ts.label = std::string("F_") + std::string(tag(s)) + " (heuristic)";
    const std::size_t n = records.size();
    std::size_t usable = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const bool here = records[i].converged(s);
        const bool prev = i > 0 && records[i - 1].converged(s);
        const bool next = i + 1 < n && records[i + 1].converged(s);
        if (!here || (!prev && !next)) continue;
        double d;
        if (prev && next)
            d = (records[i + 1].pole(s).omega_tilde() - records[i - 1].pole(s).omega_tilde()) /
                (records[i + 1].x21 - records[i - 1].x21);
        else if (next)
            d = (records[i + 1].pole(s).omega_tilde() - records[i].pole(s).omega_tilde()) /
                (records[i + 1].x21 - records[i].x21);
        else
            d = (records[i].pole(s).omega_tilde() - records[i - 1].pole(s).omega_tilde()) /
                (records[i].x21 - records[i - 1].x21);
        ts.t.push_back(records[i].x21);
        ts.values.push_back(-d);
        if (prev && next) ++usable;
    }
    if (usable == 0) throw InvalidArgument("force indicator needs at least 3 consecutive converged records");
    return ts;
}

struct StablePoint {
    double x21 = 0.0;
    bool stable = false;  // dF/dx21 < 0
};

/// Roots of a force series by bracketing and bisection of its piecewise
/// linear interpolant. Series whose magnitude never exceeds `noise_floor`
/// give no roots.
inline std::vector<StablePoint> stable_points(const TimeSeries& force, double noise_floor = 1e-12) {
    std::vector<StablePoint> out;
    const auto& x = force.t;
    const auto& F = force.values;
    double peak = 0.0;
    for (double v : F) peak = std::max(peak, std::abs(v));
    if (peak <= noise_floor) return out;
    for (std::size_t i = 0; i + 1 < F.size(); ++i) {
        if (F[i] == 0.0 && i > 0 && F[i - 1] * F[i + 1] < 0.0) {
            out.push_back({x[i], F[i + 1] < F[i - 1]});
            continue;
        }
        if (!(F[i] * F[i + 1] < 0.0)) continue;
        auto lin = [&](double u) { return F[i] + (F[i + 1] - F[i]) * (u - x[i]) / (x[i + 1] - x[i]); };
        boost::math::tools::eps_tolerance<double> tol(50);
        std::uintmax_t iters = 100;
        const auto [a, b] = boost::math::tools::bisect(lin, x[i], x[i + 1], tol, iters);
        out.push_back({0.5 * (a + b), F[i + 1] < F[i]});
    }
    return out;
}

struct ZeroDecaySolution {
    Sector sector = Sector::symmetric;
    int n = 0;
    int m = 0;             // phase multiple: 2n+1 (symmetric) or 2n (antisymmetric)
    double omega_o = 0.0;  // real energy of the stationary state
    double x21_zero = 0.0; // m pi / omega_o
    double residual = 0.0; // |eta^+(omega_o)| at x21_zero
    double gamma_check = std::numeric_limits<double>::quiet_NaN();  // gamma from find_pole there
};

/// Real energy omega° of the zero-decay state with phase m pi:
/// omega° = omega1 + 2 lambda^2 PV int v^2 [1 + sigma cos(m pi k / omega°)] / (omega° - k),
/// by damped fixed point; then x21 = m pi / omega°.
inline ZeroDecaySolution zero_decay_solve(Sector s, int n, const ModelParams& params, const QuadratureSpec& quad = {}) {
    const auto p = validate(params);
    const auto q = resolve(quad, p);
    if (s == Sector::one_atom) throw InvalidArgument("zero-decay states need a two-atom sector");
    const int m = s == Sector::symmetric ? 2 * n + 1 : 2 * n;
    if (m < 1) throw InvalidArgument("zero-decay index out of range for this sector");
    if (!instability_margin(p, q).unstable())
        throw InvalidArgument("instability condition does not hold: no solution guaranteed");
    auto eta = [&](double w) { return eta_plus(cplx(w, 0.0), s, m * pi / w, p, q); };
    double w = p.omega1;
    double residual = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 500; ++it) {
        const double step = 0.5 * eta(w).real();
        w -= step;
        if (!(w > 0.0 && w < p.omegaM)) throw ConvergenceError("zero-decay fixed point left (0, omegaM)");
        if (std::abs(step) < 1e-14 * w) break;
    }
    residual = std::abs(eta(w));
    if (!(residual < 1e-9)) throw ConvergenceError("zero-decay fixed point did not converge");
    ZeroDecaySolution z;
    z.sector = s;
    z.n = n;
    z.m = m;
    z.omega_o = w;
    z.x21_zero = m * pi / w;
    z.residual = residual;
    try {
        z.gamma_check = find_pole(s, z.x21_zero, cplx(w, 0.0), p, q).gamma();
    } catch (const Error&) {
    }
    return z;
}

struct PairRelation {
    double max_deviation = 0.0;  // max |z_1 - (z_s + z_a)/2|
    double at_x21 = 0.0;
    std::size_t points = 0;
};

inline PairRelation pair_relation_check(const std::vector<SweepRecord>& records, const ModelParams& p,
                                        const QuadratureSpec& q = {}) {
    const auto z1 = one_atom_pole(p, q);
    PairRelation r;
    for (const auto& rec : records) {
        if (!rec.converged_s || !rec.converged_a) continue;
        const double d = std::abs(z1.value - 0.5 * (rec.zs.value + rec.za.value));
        ++r.points;
        if (d >= r.max_deviation) r.max_deviation = d, r.at_x21 = rec.x21;
    }
    return r;
}

/// Angular criterion for a vanishing decay rate in d dimensions at u = omega~ x21:
/// d = 1: 2 (1 + sigma cos u); d = 3: 2 (1 + sigma sin u / u);
/// d = 2: int_0^pi (1 + sigma cos(u cos theta)) d theta with weight 1 (provisional).
inline double angular_factor(int d, Sector s, double u) {
    if (!(u >= 0.0)) throw InvalidArgument("angular factor needs u >= 0");
    if (s == Sector::one_atom) throw InvalidArgument("angular factor needs a two-atom sector");
    const double sg = sigma(s);
    switch (d) {
    case 1: return 2.0 * (1.0 + sg * std::cos(u));
    case 3: return 2.0 * (1.0 + sg * (u == 0.0 ? 1.0 : std::sin(u) / u));
    case 2: {
        auto f = [&](double th) { return 1.0 + sg * std::cos(u * std::cos(th)); };
        std::vector<double> breaks{0.0, pi};
        const int pieces = 1 + static_cast<int>(u / 4.0);
        for (int i = 1; i < pieces; ++i) breaks.push_back(pi * i / pieces);
        return quad::integrate(f, breaks, {1e-15, 1e-13, 2000}, "angular factor");
    }
    default: throw InvalidArgument("dimension must be 1, 2 or 3");
    }
}

struct SubradianceRoots {
    std::vector<double> roots;  // in (u_lo, u_hi]
    bool vanishes_at_contact = false;  // factor -> 0 as u -> 0
};

/// Zeros of angular_factor on (u_lo, u_hi]. d = 1 gives the closed-form
/// lattice (2n+1) pi (symmetric) or 2n pi (antisymmetric); d = 2, 3 are
/// scanned for sign changes and for tangential zeros (|f| minima below 1e-10).
inline SubradianceRoots subradiance_roots(int d, Sector s, double u_lo, double u_hi) {
    if (!(u_lo >= 0.0 && u_hi > u_lo && std::isfinite(u_hi))) throw InvalidArgument("bad u range");
    SubradianceRoots out;
    out.vanishes_at_contact = std::abs(angular_factor(d, s, 0.0)) < 1e-12;
    if (d == 1) {
        const double first = s == Sector::symmetric ? pi : 2.0 * pi;
        for (int n = 0;; ++n) {
            const double u = first + 2.0 * pi * n;
            if (u > u_hi) break;
            if (u > u_lo) out.roots.push_back(u);
        }
        return out;
    }
    const int samples = std::max(200, static_cast<int>(20 * (u_hi - u_lo)));
    auto f = [&](double u) { return angular_factor(d, s, u); };
    std::vector<double> u(samples + 1), v(samples + 1);
    for (int i = 0; i <= samples; ++i) {
        u[i] = u_lo + (u_hi - u_lo) * i / samples;
        v[i] = f(u[i]);
    }
    boost::math::tools::eps_tolerance<double> tol(50);
    for (int i = 0; i < samples; ++i) {
        if (i == 0 && u_lo == 0.0) continue;
        if (v[i] * v[i + 1] < 0.0) {
            std::uintmax_t iters = 200;
            const auto [a, b] = boost::math::tools::bisect(f, u[i], u[i + 1], tol, iters);
            out.roots.push_back(0.5 * (a + b));
        } else if (i > 0 && std::abs(v[i]) < std::abs(v[i - 1]) && std::abs(v[i]) <= std::abs(v[i + 1])) {
            std::uintmax_t iters = 200;
            const auto [um, fm] = boost::math::tools::brent_find_minima(
                [&](double x) { return std::abs(f(x)); }, u[i - 1], u[i + 1], 50, iters);
            if (fm < 1e-10) out.roots.push_back(um);
        }
    }
    return out;
}

}  // namespace collective
