#pragma once

#include <cmath>
#include <functional>
#include <string>

#include <nlohmann/json.hpp>

#include "greens.hpp"

namespace collective {

/// Two cavities of vertical size D side-coupled to a lead of width W, in the
/// dimensionless units where xi^{m,n} = m^2 + n^2/D^2 and E_{k,l} = k^2/pi^2 + l^2/W^2.
struct WaveguideParams {
    double D = 1.0;
    double W = 1.0;
    int m0 = 1, n0 = 1;  // retained cavity mode
    int l_max = 10;      // channels 1..l_max
    /// Squared coupling v0(k, l)^2, analytic in k near the positive axis.
    std::function<cplx(cplx k, int l)> coupling_sq;

    double g0 = 0.05;  // scale of the default coupling
    double kc = 5.0;   // its momentum cutoff
};

/// Default coupling v0(k, l) = g0 k / (1 + (k/kc)^2) e^{-2(l-1)}.
inline std::function<cplx(cplx, int)> default_coupling(double g0, double kc) {
    return [g0, kc](cplx k, int l) {
        const cplx r = 1.0 + (k / kc) * (k / kc);
        return g0 * g0 * k * k / (r * r) * std::exp(-4.0 * (l - 1));
    };
}

inline double cavity_energy(int m, int n, double D) {
    if (m < 1 || n < 1) throw InvalidArgument("cavity mode indices must be >= 1");
    if (!(D > 0.0)) throw InvalidArgument("cavity size must be positive");
    return double(m) * m + double(n) * n / (D * D);
}

inline double lead_energy(double k, int l, double W) {
    if (l < 1) throw InvalidArgument("lead channel index must be >= 1");
    if (!(W > 0.0)) throw InvalidArgument("lead width must be positive");
    return k * k / (pi * pi) + double(l) * l / (W * W);
}

/// k0(E) = pi sqrt(E - E_{0,1}), continued with the principal square root.
inline cplx open_momentum(cplx E, double W) { return pi * std::sqrt(E - 1.0 / (W * W)); }

namespace detail {

inline WaveguideParams checked(WaveguideParams wg) {
    const double xi0 = cavity_energy(wg.m0, wg.n0, wg.D);
    const double e01 = lead_energy(0.0, 1, wg.W), e02 = lead_energy(0.0, 2, wg.W);
    if (wg.l_max < 2) throw InvalidArgument("l_max must be >= 2");
    if (!(xi0 > e01 && xi0 < e02)) throw InvalidArgument("cavity level outside the single-open-channel window");
    if (!wg.coupling_sq) wg.coupling_sq = default_coupling(wg.g0, wg.kc);
    return wg;
}

inline quad::Tolerance wg_tolerance() { return {1e-14, 1e-11, 4000}; }

// int_0^inf g(k) cos(k D) dk for g analytic and decaying in |arg k| <= pi/4,
// on the rays k = r e^{+-i pi/4} where e^{+-ikD} decays.
template <class G>
cplx ray_cos_integral(const G& g, double D, double scale) {
    auto real_axis = [&](double k) -> cplx { return g(cplx(k, 0.0)); };
    if (D == 0.0) return quad::integrate_halfline(real_axis, 0.0, scale, wg_tolerance(), {1.0, scale}, "channel integral");
    cplx sum = 0.0;
    for (int s : {+1, -1}) {
        const cplx dir = std::polar(1.0, s * pi / 4);
        auto h = [&](double r) -> cplx {
            const cplx k = r * dir;
            return g(k) * std::exp(I * double(s) * k * D) * dir;
        };
        const double decay = std::sqrt(2.0) / D;
        sum += quad::integrate_halfline(h, 0.0, std::min(scale, decay), wg_tolerance(), {decay, 4 * decay, scale},
                                        "channel ray integral");
    }
    return 0.5 * sum;
}

}  // namespace detail

inline double xi0(const WaveguideParams& wg) { return cavity_energy(wg.m0, wg.n0, wg.D); }

/// Level shift 2 int dk sum_l v0^2 (1 + sigma cos k x21) / (z - E_{k,l})^+.
/// Only the open channel l = 1 is continued; its pole is handled through
/// 1/(z - E_{k,1}) = pi^2/(2 k0) [1/(k0 - k) + 1/(k0 + k)].
inline cplx waveguide_self_energy(cplx z, Sector s, double x21, const WaveguideParams& params) {
    const auto wg = detail::checked(params);
    const double sg = s == Sector::one_atom ? 0.0 : sigma(s);
    const auto tol = detail::wg_tolerance();
    const cplx k0 = open_momentum(z, wg.W);
    auto w1 = [&](cplx k) { return wg.coupling_sq(k, 1); };
    QuadratureSpec q;
    q.cutoff = 200.0 * std::max(wg.kc, 1.0);
    q.rel_tol = tol.rel_tol;
    q.abs_tol = tol.abs_tol;
    cplx open = continued_cos_integral(w1, k0, 0.0, q);
    if (sg != 0.0) open += sg * continued_cos_integral(w1, k0, x21, q);
    // The k0 + k half and the closed channels have no pole in |arg k| <= pi/4.
    auto regular = [&](cplx k) { return wg.coupling_sq(k, 1) / (k0 + k); };
    open += detail::ray_cos_integral(regular, 0.0, wg.kc);
    if (sg != 0.0) open += sg * detail::ray_cos_integral(regular, x21, wg.kc);
    cplx total = pi * pi / (2.0 * k0) * open;
    for (int l = 2; l <= wg.l_max; ++l) {
        auto closed = [&](cplx k) { return wg.coupling_sq(k, l) / (z - (k * k / (pi * pi) + double(l) * l / (wg.W * wg.W))); };
        total += detail::ray_cos_integral(closed, 0.0, wg.kc);
        if (sg != 0.0) total += sg * detail::ray_cos_integral(closed, x21, wg.kc);
    }
    return 2.0 * total;
}

inline cplx eta_wg(cplx z, Sector s, double x21, const WaveguideParams& wg) {
    if (s != Sector::one_atom && std::abs(open_momentum(z, wg.W).imag()) * x21 > exponent_limit)
        throw OverflowError("open-channel momentum * x21 exceeds the exponent limit");
    return z - xi0(wg) - waveguide_self_energy(z, s, x21, wg);
}

struct ExistenceCheck {
    bool ok = false;
    double margin = 0.0;  // xi0 - E_{0,1} - 2 int sum_l v0^2 / (E_{k,l} - E_{0,1})
};

inline ExistenceCheck existence_check(const WaveguideParams& params) {
    const auto wg = detail::checked(params);
    const double e01 = lead_energy(0.0, 1, wg.W);
    double sum = 0.0;
    for (int l = 1; l <= wg.l_max; ++l) {
        auto f = [&](double k) {
            return wg.coupling_sq(k, l).real() / (lead_energy(k, l, wg.W) - e01);
        };
        sum += quad::integrate_halfline(f, 0.0, wg.kc, detail::wg_tolerance(), {1.0, wg.kc, 10.0 * wg.kc},
                                        "existence integral");
    }
    ExistenceCheck out;
    out.margin = xi0(wg) - e01 - 2.0 * sum;
    out.ok = out.margin > 0.0;
    return out;
}

/// g(xi) = n / sqrt(xi - E_{0,1}): k0(xi) g(xi) = n pi.
inline double trap_distance(double xi, int n, Sector s, double W) {
    const double e01 = lead_energy(0.0, 1, W);
    if (!(xi > e01)) throw InvalidArgument("trap energy must lie above the channel threshold");
    if (s == Sector::one_atom) throw InvalidArgument("trap distance needs a two-atom sector");
    if (n < 1) throw InvalidArgument("trap index must be >= 1");
    const bool odd = n % 2 == 1;
    if (odd != (s == Sector::symmetric)) throw InvalidArgument("parity rule: n odd for symmetric, even for antisymmetric");
    return n / std::sqrt(xi - e01);
}

struct TrapSolution {
    Sector sector = Sector::symmetric;
    int n = 0;
    double xi0 = 0.0;
    double xi_tilde = 0.0;
    double x21_trap = 0.0;
    double gamma_residual = std::numeric_limits<double>::quiet_NaN();
    double margin = 0.0;
};

/// Damped fixed point xi <- xi0 + Re Sigma(xi; g(xi)) for the stationary level.
inline TrapSolution solve_trap(const WaveguideParams& params, int n, Sector s) {
    const auto wg = detail::checked(params);
    const auto exist = existence_check(wg);
    if (!exist.ok) throw InvalidArgument("existence condition violated (margin " + std::to_string(exist.margin) + ")");
    trap_distance(xi0(wg), n, s, wg.W);  // parity and index checks
    const double e01 = lead_energy(0.0, 1, wg.W), e02 = lead_energy(0.0, 2, wg.W);
    double xi = xi0(wg);
    bool done = false;
    for (int it = 0; it < 500 && !done; ++it) {
        const double step = 0.5 * eta_wg(xi, s, trap_distance(xi, n, s, wg.W), wg).real();
        xi -= step;
        if (!(xi > e01 && xi < e02)) throw ConvergenceError("trap fixed point left the single-channel window");
        done = std::abs(step) < 1e-14 * xi;
    }
    if (!done) throw ConvergenceError("trap fixed point did not converge");
    TrapSolution out;
    out.sector = s;
    out.n = n;
    out.xi0 = xi0(wg);
    out.xi_tilde = xi;
    out.x21_trap = trap_distance(xi, n, s, wg.W);
    out.margin = exist.margin;
    return out;
}

/// Root of z - xi0 - Sigma(z) near `seed` (xi0 by default).
inline ComplexEnergy collective_pole_wg(const WaveguideParams& params, Sector s, double x21,
                                        std::optional<cplx> seed = std::nullopt) {
    const auto wg = detail::checked(params);
    auto f = [&](cplx z) { return eta_wg(z, s, x21, wg); };
    const auto [z, residual] = solve_root(f, seed.value_or(cplx(xi0(wg), 0.0)), PoleOptions{},
                                          std::min(0.5, 1.0 / std::max(x21, 1.0)), "waveguide pole search");
    ComplexEnergy out;
    out.value = z;
    out.sector = s;
    out.residual = residual;
    out.normalization = 1.0 / cauchy_derivative(f, z, derivative_radius(x21));
    return out;
}

/// Trap solve plus the closed-loop pole check at x21_trap.
inline TrapSolution solve_and_check_trap(const WaveguideParams& wg, int n, Sector s) {
    auto t = solve_trap(wg, n, s);
    t.gamma_residual = collective_pole_wg(wg, s, t.x21_trap, cplx(t.xi_tilde, 0.0)).gamma();
    return t;
}

inline nlohmann::json to_json(const TrapSolution& t) {
    return {{"sector", std::string(to_string(t.sector))},
            {"n", t.n},
            {"xi0", t.xi0},
            {"xi_tilde", t.xi_tilde},
            {"x21_trap", t.x21_trap},
            {"gamma_residual", t.gamma_residual},
            {"margin", t.margin}};
}

}  // namespace collective
