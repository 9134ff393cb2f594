#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "parallel.hpp"

namespace collective {

/// A resonance pole z = omega_tilde - i gamma together with its residue
/// factor N = 1 / eta'(z).
struct ComplexEnergy {
    cplx value;
    Sector sector = Sector::one_atom;
    int lattice_index = 0;
    cplx normalization{1.0, 0.0};
    double residual = 0.0;  // |eta(value)| at return
    bool estimate = false;  // weak-coupling estimate, not a certified root

    double omega_tilde() const { return value.real(); }
    double gamma() const { return -value.imag(); }
};

/// Largest |Im(z) * distance| allowed in a complex exponential.
inline constexpr double exponent_limit = 650.0;

/// e^{i z d}, refusing to overflow.
inline cplx expi(cplx z, double d) {
    if (std::abs(z.imag() * d) > exponent_limit)
        throw OverflowError("exponent |Im z * x21| = " + std::to_string(std::abs(z.imag() * d)) +
                            " exceeds " + std::to_string(exponent_limit));
    return std::exp(I * z * d);
}

namespace detail {

inline cplx rational_power(cplx z, const ModelParams& p, int power) {
    const cplx iwm{0.0, p.omegaM};
    if (std::abs(z - iwm) < 1e-10 * p.omegaM || std::abs(z + iwm) < 1e-10 * p.omegaM)
        throw InvalidArgument("form factor evaluated at its pole z = +-i omegaM");
    const cplx q = z / p.omegaM;
    const cplx r = 1.0 + q * q;
    cplx d = 1.0;
    for (int i = 0; i < power; ++i) d *= r;
    return d;
}

// Normalizes a signed zero so that real arguments are read as the limit
// from above (the + boundary value).
inline cplx from_above(cplx z) { return z.imag() == 0.0 ? cplx(z.real(), 0.0) : z; }

// Ray angle for the e^{i s k D} integral, kept away from arg z.
inline double ray_angle(cplx z, int s) {
    const double arg = std::arg(from_above(z));
    double best = pi / 4, dist = -1.0;
    for (double theta : {pi / 4, pi / 3, pi / 6, 3 * pi / 8, pi / 8}) {
        const double d = std::abs(arg - s * theta);
        if (d > dist) dist = d, best = theta;
    }
    return best;
}

}  // namespace detail

/// v(z)^2 = z / (1 + (z/omegaM)^2)^(2n), continued as a rational function.
inline cplx form_factor_sq(cplx z, const ModelParams& p) { return z / detail::rational_power(z, p, 2 * p.n_ff); }

/// u(z) = (1 + (z/omegaM)^2)^(-n) = v(z)/sqrt(z). Weight of the field
/// amplitude, where the 1/sqrt(2 omega_k) of the field operator cancels sqrt(k).
inline cplx field_weight(cplx z, const ModelParams& p) { return 1.0 / detail::rational_power(z, p, p.n_ff); }

enum class Tail { none, mapped };

/// Continued integral of f(k)/(z-k) over [0, cutoff] (plus [cutoff, inf)
/// with Tail::mapped). Upper half-plane: plain integral. Real axis: the
/// boundary value from above, PV - i pi f(z). Lower half-plane: plain
/// integral - 2 pi i f(z). f must be analytic near [0, inf) and at z.
template <class F>
cplx continued_halfline_integral(const F& f, cplx z, double cutoff, const quad::Tolerance& tol,
                                 Tail tail = Tail::none) {
    z = detail::from_above(z);
    if (z.imag() == 0.0 && z.real() < -1e-12)
        throw InvalidArgument("continued integral evaluated on the negative real axis");
    // With a tail appended the split point is free; keep z well inside it.
    if (tail == Tail::mapped) cutoff = std::max(cutoff, 2.0 * std::abs(z) + 1.0);
    const cplx fz = f(z);
    auto body = [&](double k) -> cplx { return (f(cplx(k, 0.0)) - fz) / (z - k); };
    std::vector<double> breaks{0.0, cutoff};
    if (z.real() > 0.0 && z.real() < cutoff) breaks.push_back(z.real());
    for (double b : {1.0, 10.0, 100.0})
        if (b < cutoff) breaks.push_back(b);
    cplx value = quad::integrate(body, breaks, tol, "continued half-line integral");
    if (fz != 0.0) value += fz * (std::log(z) - std::log(z - cutoff));
    if (tail == Tail::mapped) {
        auto g = [&](double k) -> cplx { return f(cplx(k, 0.0)) / (z - k); };
        value += quad::integrate_halfline(g, cutoff, cutoff, tol, {}, "half-line tail");
    }
    if (z.imag() < 0.0) value -= 2.0 * pi * I * fz;
    return value;
}

enum class Branch { plus, minus };

/// Continued integral of w(k) e^{i s k D}/(z-k) over [0, inf) for D > 0,
/// s = +-1, evaluated along a ray into the half-plane where the exponential
/// decays. `Branch::plus` continues from the upper half-plane, `minus` from
/// the lower. w must be analytic in the sector swept by the ray.
template <class W>
cplx continued_exp_integral(const W& w, cplx z, double D, int s, const quad::Tolerance& tol,
                            Branch branch = Branch::plus) {
    z = detail::from_above(z);
    const double theta = detail::ray_angle(z, s);
    const cplx dir = std::polar(1.0, s * theta);
    auto g = [&](double r) -> cplx {
        const cplx k = r * dir;
        return w(k) * std::exp(I * double(s) * k * D) * dir / (z - k);
    };
    const double decay = 1.0 / (D * std::sin(theta));
    const double nearest = (z * std::conj(dir)).real();
    std::vector<double> breaks{std::abs(z), 4.0 * decay};
    if (nearest > 0.0) breaks.push_back(nearest);
    cplx value = quad::integrate_halfline(g, 0.0, std::min(decay, std::max(1.0, std::abs(z))), tol, breaks,
                                          "ray integral");
    const double arg = std::arg(z);
    const bool below = arg < s * theta;
    if (branch == Branch::plus && below) value -= 2.0 * pi * I * w(z) * expi(z, s * D);
    if (branch == Branch::minus && !below) value += 2.0 * pi * I * w(z) * expi(z, s * D);
    return value;
}

/// + continuation of int_0^inf w(k) cos(k d)/(z-k) dk.
template <class W>
cplx continued_cos_integral(const W& w, cplx z, double d, const QuadratureSpec& q) {
    const double D = std::abs(d);
    const auto tol = q.tolerance();
    if (D == 0.0) return continued_halfline_integral(w, z, q.cutoff, tol, Tail::mapped);
    return 0.5 * (continued_exp_integral(w, z, D, +1, tol) + continued_exp_integral(w, z, D, -1, tol));
}

/// The level-shift integral int_0^inf 2 lambda^2 v^2 (1 + sigma cos k x21)/(z-k)^+ dk.
inline cplx self_energy(cplx z, Sector s, double x21, const ModelParams& p, const QuadratureSpec& q) {
    const auto v2 = [&](cplx k) { return form_factor_sq(k, p); };
    const double lam2 = p.lambda * p.lambda;
    cplx value = continued_cos_integral(v2, z, 0.0, q);
    if (s != Sector::one_atom) value += sigma(s) * continued_cos_integral(v2, z, x21, q);
    return 2.0 * lam2 * value;
}

/// Inverse Green's function eta^+_j(z), continued from the upper half-plane.
inline cplx eta_plus(cplx z, Sector s, double x21, const ModelParams& params, const QuadratureSpec& quad = {}) {
    const auto p = validate(params, s != Sector::one_atom);
    const auto q = resolve(quad, p);
    if (s != Sector::one_atom && std::abs(z.imag()) * x21 > exponent_limit)
        throw OverflowError("gamma * x21 exceeds the exponent limit");
    return z - p.omega1 - self_energy(z, s, x21, p, q);
}

/// eta^-_j, exposed only through Schwarz reflection of eta^+.
inline cplx eta_minus(cplx z, Sector s, double x21, const ModelParams& p, const QuadratureSpec& q = {}) {
    return std::conj(eta_plus(std::conj(z), s, x21, p, q));
}

/// f'(z) for analytic f by the Cauchy integral over a circle of radius r
/// (16 nodes, trapezoid rule).
template <class F>
cplx cauchy_derivative(const F& f, cplx z, double r) {
    constexpr int nodes = 16;
    cplx sum = 0.0;
    for (int m = 0; m < nodes; ++m) {
        const cplx e = std::polar(1.0, 2.0 * pi * (m + 0.5) / nodes);
        sum += f(z + r * e) / e;
    }
    return sum / (nodes * r);
}

/// Circle radius for derivatives of functions oscillating like e^{i z x21}.
inline double derivative_radius(double x21) { return 1e-3 / std::max(1.0, x21 / 10.0); }

/// d eta^+/dz.
inline cplx eta_prime(cplx z, Sector s, double x21, const ModelParams& p, const QuadratureSpec& q = {}) {
    const double r = derivative_radius(s == Sector::one_atom ? 0.0 : x21);
    return cauchy_derivative([&](cplx w) { return eta_plus(w, s, x21, p, q); }, z, r);
}

struct PoleOptions {
    double damping = 0.5;          // fixed-point step z <- z - damping * eta(z)
    double newton_switch = 1e-3;   // |eta| below which Newton takes over
    int max_iterations = 400;
    double certificate = 1e-10;    // accepted |eta| relative to max(1, |z|)
    double gamma_tolerance = 1e-9; // roots with gamma below -tol are rejected
};

/// Root of an analytic function near `seed`: damped fixed point
/// z <- z - damping * f(z), then Newton with a central-difference
/// derivative and steps capped at `step_cap`. Returns the root and |f| there.
template <class F>
std::pair<cplx, double> solve_root(const F& f, cplx seed, const PoleOptions& opt, double step_cap, const char* what) {
    if (!(seed.imag() <= 1e-12 * std::max(1.0, std::abs(seed))) || !std::isfinite(std::abs(seed)))
        throw InvalidArgument(std::string(what) + ": seed must lie in the closed lower half-plane");
    cplx z = seed;
    cplx e = f(z);
    for (int it = 0; std::abs(e) > opt.newton_switch && it < opt.max_iterations; ++it) {
        z -= opt.damping * e;
        e = f(z);
    }
    if (!(std::abs(e) <= opt.newton_switch))
        throw ConvergenceError(std::string(what) + ": fixed-point iteration did not converge");
    for (int k = 0; k < 60; ++k) {
        const double h = 1e-6 * std::max(1.0, std::abs(z));
        const cplx d = (f(z + h) - f(z - h)) / (2.0 * h);
        cplx step = e / d;
        if (std::abs(step) > step_cap) step *= step_cap / std::abs(step);
        z -= step;
        e = f(z);
        if (std::abs(step) < 1e-14 * std::max(1.0, std::abs(z))) break;
    }
    if (!(std::abs(e) < opt.certificate * std::max(1.0, std::abs(z))))
        throw ConvergenceError(std::string(what) + ": residual " + std::to_string(std::abs(e)) + " above certificate");
    if (-z.imag() < -opt.gamma_tolerance)
        throw ConvergenceError(std::string(what) + ": converged to a root with negative decay rate");
    return {z, std::abs(e)};
}

/// Root of eta^+_j near `seed`, with its residue factor.
inline ComplexEnergy find_pole(Sector s, double x21, cplx seed, const ModelParams& params,
                               const QuadratureSpec& quad = {}, const PoleOptions& opt = {}) {
    const auto p = validate(params, s != Sector::one_atom);
    const auto q = resolve(quad, p);
    auto eta = [&](cplx z) { return eta_plus(z, s, x21, p, q); };
    const double cap = s == Sector::one_atom ? 0.5 : std::min(0.5, 1.0 / x21);
    const auto [z, residual] = solve_root(eta, seed, opt, cap, "pole search");
    ComplexEnergy out;
    out.value = z;
    out.sector = s;
    out.residual = residual;
    out.normalization = 1.0 / eta_prime(z, s, x21, p, q);
    return out;
}

/// One-atom pole z_1 seeded at omega1.
inline ComplexEnergy one_atom_pole(const ModelParams& p, const QuadratureSpec& q = {}) {
    return find_pole(Sector::one_atom, 0.0, cplx(p.omega1, 0.0), p, q);
}

/// Pole-only weak-coupling solution z = z_1 - sigma 2 pi i lambda^2 v(z)^2 e^{i z x21},
/// iterated with damping from z_1. The one-atom pole replaces omega1 - i 2 pi
/// lambda^2 v^2 so that the level shift is carried along.
inline ComplexEnergy weak_coupling_estimate(Sector s, double x21, const ModelParams& params,
                                            const QuadratureSpec& q = {}) {
    const auto p = validate(params, s != Sector::one_atom);
    const auto z1 = one_atom_pole(p, q);
    const double sg = sigma(s);
    const double lam2 = p.lambda * p.lambda;
    auto delta = [&](cplx z) { return -sg * 2.0 * pi * I * lam2 * form_factor_sq(z, p) * expi(z, x21); };
    cplx z = z1.value;
    bool done = s == Sector::one_atom;
    for (int it = 0; it < 2000 && !done; ++it) {
        const cplx next = 0.5 * z + 0.5 * (z1.value + delta(z));
        if (!std::isfinite(std::abs(next))) break;
        done = std::abs(next - z) < 1e-14 * std::abs(z);
        z = next;
    }
    if (!done) throw ConvergenceError("weak-coupling fixed point diverged");
    ComplexEnergy out;
    out.value = z;
    out.sector = s;
    out.estimate = true;
    if (s != Sector::one_atom) {
        const double h = 1e-6;
        out.normalization = 1.0 / (1.0 - (delta(z + h) - delta(z - h)) / (2.0 * h));
    } else {
        out.normalization = z1.normalization;
    }
    return out;
}

/// Principal collective pole z_j: seeded by the weak-coupling estimate, with
/// omega1 as fallback seed.
inline ComplexEnergy principal_pole(Sector s, double x21, const ModelParams& p, const QuadratureSpec& q = {}) {
    if (s == Sector::one_atom) return one_atom_pole(p, q);
    std::optional<cplx> seed;
    try {
        seed = weak_coupling_estimate(s, x21, p, q).value;
        if (seed->imag() > 0.0) seed = cplx(seed->real(), 0.0);
    } catch (const Error&) {
    }
    if (seed) {
        try {
            return find_pole(s, x21, *seed, p, q);
        } catch (const ConvergenceError&) {
        }
    }
    return find_pole(s, x21, cplx(p.omega1, 0.0), p, q);
}

struct PoleScan {
    std::vector<ComplexEnergy> poles;  // sorted by Re z
    std::vector<int> gaps;             // lattice indices that failed or collapsed
    std::vector<std::string> warnings;
};

/// Lattice seed for index n around the principal pole zj.
inline cplx lattice_seed(cplx zj, Sector s, int n, double x21) {
    const double sg = sigma(s);
    if (n == 0) return zj;
    const double shift = sg * n > 0 ? 2.0 * n * pi / x21 : (2.0 * n + sg) * pi / x21;
    return zj + shift;
}

/// Principal pole and its lattice partners z_{j,n}, n in [n_lo, n_hi].
inline PoleScan pole_scan(Sector s, double x21, int n_lo, int n_hi, const ModelParams& params,
                          const QuadratureSpec& quad = {}) {
    const auto p = validate(params, true);
    const auto q = resolve(quad, p);
    if (s == Sector::one_atom) throw InvalidArgument("pole lattice requires a two-atom sector");
    if (n_lo > n_hi) std::swap(n_lo, n_hi);
    PoleScan out;
    const auto z1 = one_atom_pole(p, q);
    if (x21 > 1.0 / z1.gamma())
        out.warnings.push_back("x21 exceeds 1/gamma_1; lattice seeds may be inaccurate");
    const auto zj = principal_pole(s, x21, p, q);

    const double sg = sigma(s);
    const double lam2 = p.lambda * p.lambda;
    // Branch m of k = z_1 - sigma 2 pi i lambda^2 v(k)^2 e^{i k x21}, solved as
    // k = -i [Log(-(k - z_1) / (sigma 2 pi i lambda^2 v^2)) + 2 pi i m] / x21.
    auto refine = [&](cplx k) {
        auto arg_of = [&](cplx kk) { return -(kk - z1.value) / (sg * 2.0 * pi * I * lam2 * form_factor_sq(kk, p)); };
        const double m = std::round((k.real() * x21 - std::arg(arg_of(k))) / (2.0 * pi));
        for (int it = 0; it < 200; ++it) {
            const cplx next = -I * (std::log(arg_of(k)) + 2.0 * pi * I * m) / x21;
            const bool done = std::abs(next - k) < 1e-13;
            k = next;
            if (done) break;
        }
        return k;
    };

    std::vector<std::optional<ComplexEnergy>> found(n_hi - n_lo + 1);
    parallel_for(found.size(), [&](std::size_t i) {
        const int n = n_lo + int(i);
        if (n == 0) {
            found[i] = zj;
            return;
        }
        try {
            cplx seed = refine(lattice_seed(zj.value, s, n, x21));
            if (seed.imag() > 0.0) return;
            // The damped fixed point is attracted by the principal pole, so
            // lattice seeds go straight to Newton.
            PoleOptions newton;
            newton.newton_switch = std::numeric_limits<double>::infinity();
            auto e = find_pole(s, x21, seed, p, q, newton);
            e.lattice_index = n;
            found[i] = e;
        } catch (const Error&) {
        }
    });
    const double radius = 1e-6 * p.omega1;
    for (std::size_t i = 0; i < found.size(); ++i) {
        const int n = n_lo + int(i);
        bool duplicate = false;
        if (found[i])
            for (const auto& e : out.poles)
                if (std::abs(e.value - found[i]->value) < radius) duplicate = true;
        if (!found[i] || duplicate) {
            out.gaps.push_back(n);
            continue;
        }
        out.poles.push_back(*found[i]);
    }
    std::sort(out.poles.begin(), out.poles.end(),
              [](const auto& a, const auto& b) { return a.value.real() < b.value.real(); });
    return out;
}

/// -(1/pi) Im(1/eta^+(k)) = 2 lambda^2 v_k^2 (1 + sigma cos k x21) / |eta^+(k)|^2.
inline double continuum_weight(double k, Sector s, double x21, const ModelParams& p, const QuadratureSpec& q = {}) {
    if (!(k > 0.0)) throw InvalidArgument("continuum weight needs k > 0");
    const double f = 2.0 * p.lambda * p.lambda * form_factor_sq_real(k, p) *
                     (1.0 + sigma(s) * (s == Sector::one_atom ? 0.0 : std::cos(k * x21)));
    return f / std::norm(eta_plus(cplx(k, 0.0), s, x21, p, q));
}

/// Coupling-weighted field amplitude sum_k lambda V_k e^{ikx} <k|phi_j> / sqrt(N_j)
/// in the continuum limit.
inline cplx coupling_field_amplitude(cplx z, double x, Sector s, const ModelParams& p, const QuadratureSpec& quad = {}) {
    const auto q = resolve(quad, p);
    const auto v2 = [&](cplx k) { return form_factor_sq(k, p); };
    const double lam2 = p.lambda * p.lambda;
    if (s == Sector::one_atom) return 2.0 * lam2 * continued_cos_integral(v2, z, x - p.x1, q);
    return std::sqrt(2.0) * lam2 *
           (continued_cos_integral(v2, z, x - p.x1, q) + sigma(s) * continued_cos_integral(v2, z, x - p.x2, q));
}

/// omega1 plus the interaction of the atoms with the pole's own field; equals
/// the pole value when the pole equation holds.
inline cplx self_consistent_energy(const ComplexEnergy& pole, const ModelParams& p, const QuadratureSpec& q = {}) {
    const Sector s = pole.sector;
    if (s == Sector::one_atom) return p.omega1 + coupling_field_amplitude(pole.value, p.x1, s, p, q);
    return p.omega1 + (coupling_field_amplitude(pole.value, p.x1, s, p, q) +
                       sigma(s) * coupling_field_amplitude(pole.value, p.x2, s, p, q)) /
                          std::sqrt(2.0);
}

struct Region {
    double re_min = 1.3, re_max = 2.7, im_min = -0.1, im_max = 0.0;
};

struct ContourMap {
    static constexpr double overflow = -std::numeric_limits<double>::infinity();
    Region region;
    int nx = 0, ny = 0;
    std::vector<double> re, im;   // grid coordinates
    std::vector<double> values;   // row-major: values[iy * nx + ix]
    int overflow_cells = 0;

    double at(int ix, int iy) const { return values[std::size_t(iy) * nx + ix]; }
};

/// log(1/|eta^+_j(z)|) on a rectangular grid.
inline ContourMap contour_map(const Region& region, int nx, int ny, Sector s, double x21, const ModelParams& params,
                              const QuadratureSpec& quad = {}) {
    const auto p = validate(params, s != Sector::one_atom);
    const auto q = resolve(quad, p);
    if (nx < 2 || ny < 2) throw InvalidArgument("contour grid needs at least 2 x 2 points");
    if (!(region.re_max > region.re_min) || !(region.im_max > region.im_min))
        throw InvalidArgument("contour region is empty");
    ContourMap m;
    m.region = region;
    m.nx = nx;
    m.ny = ny;
    for (int i = 0; i < nx; ++i) m.re.push_back(region.re_min + (region.re_max - region.re_min) * i / (nx - 1));
    for (int i = 0; i < ny; ++i) m.im.push_back(region.im_min + (region.im_max - region.im_min) * i / (ny - 1));
    m.values.assign(std::size_t(nx) * ny, 0.0);
    std::vector<char> overflowed(m.values.size(), 0);
    parallel_for(m.values.size(), [&](std::size_t idx) {
        const cplx z(m.re[idx % nx], m.im[idx / nx]);
        try {
            m.values[idx] = -std::log(std::abs(eta_plus(z, s, x21, p, q)));
        } catch (const OverflowError&) {
            m.values[idx] = ContourMap::overflow;
            overflowed[idx] = 1;
        }
    });
    for (char c : overflowed) m.overflow_cells += c;
    return m;
}

}  // namespace collective
