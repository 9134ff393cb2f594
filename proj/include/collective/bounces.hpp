#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/complex128.hpp>

#include "greens.hpp"
#include "jet.hpp"

namespace collective {

using real128 = boost::multiprecision::float128;
using cplx128 = boost::multiprecision::complex128;

inline cplx128 to128(cplx z) { return cplx128(real128(z.real()), real128(z.imag())); }
inline cplx from128(const cplx128& z) { return cplx(double(z.real()), double(z.imag())); }

/// Delta(k) = -2 pi i lambda^2 v(k)^2 e^{i k x21}.
inline cplx delta_k(cplx k, double x21, const ModelParams& p) {
    return -2.0 * pi * I * p.lambda * p.lambda * form_factor_sq(k, p) * expi(k, x21);
}

/// Delta'(k) from the closed-form derivative of v^2 = k / R^{2n}, R = 1 + (k/omegaM)^2.
inline cplx delta_prime(cplx k, double x21, const ModelParams& p) {
    const cplx R = 1.0 + (k / p.omegaM) * (k / p.omegaM);
    const cplx dv2 = (1.0 - 4.0 * p.n_ff * k * k / (p.omegaM * p.omegaM * R)) / std::pow(R, 2 * p.n_ff);
    return -2.0 * pi * I * p.lambda * p.lambda * (dv2 + I * x21 * form_factor_sq(k, p)) * expi(k, x21);
}

/// eta^+_{s1}(k): the symmetric-sector inverse Green's function with the
/// e^{+ik'x21} part taken on the lower boundary value, so that
/// eta^+_s = eta^+_{s1} - Delta.
inline cplx eta_s1(cplx k, double x21, const ModelParams& params, const QuadratureSpec& quad = {}) {
    const auto p = validate(params, true);
    const auto q = resolve(quad, p);
    const auto v2 = [&](cplx kk) { return form_factor_sq(kk, p); };
    const double lam2 = p.lambda * p.lambda;
    const auto tol = q.tolerance();
    const cplx a = 2.0 * lam2 * continued_cos_integral(v2, k, 0.0, q);
    const cplx b = lam2 * continued_exp_integral(v2, k, x21, -1, tol, Branch::plus);
    const cplx c = lam2 * continued_exp_integral(v2, k, x21, +1, tol, Branch::minus);
    return k - p.omega1 - a - b - c;
}

/// The single lower-half-plane root z_{s1} of eta^+_{s1}.
struct Zs1 {
    ComplexEnergy pole;
    bool near_one_atom = false;  // |z_s1 - z_1| < lambda^2
};

inline Zs1 find_zs1(double x21, const ModelParams& params, const QuadratureSpec& quad = {}) {
    const auto p = validate(params, true);
    const auto q = resolve(quad, p);
    const auto z1 = one_atom_pole(p, q);
    auto f = [&](cplx k) { return eta_s1(k, x21, p, q); };
    const auto [z, residual] = solve_root(f, z1.value, PoleOptions{}, 0.5, "z_s1 search");
    Zs1 out;
    out.pole.value = z;
    out.pole.sector = Sector::symmetric;
    out.pole.residual = residual;
    out.pole.normalization = 1.0 / cauchy_derivative(f, z, derivative_radius(x21));
    out.near_one_atom = std::abs(z - z1.value) < p.lambda * p.lambda;
    return out;
}

/// Split of the symmetric sector around z_{s1} with the powers Delta^n
/// expanded as jets at z_{s1}, in quad precision.
struct BounceDecomposition {
    ModelParams params;
    double x21 = 0.0;
    Zs1 zs1;
    std::vector<Jet<cplx128>> delta_powers;  // Delta^n, n = 0..order
    double tolerance = 1e-6;                 // accepted resummation error

    std::size_t order() const { return delta_powers.empty() ? 0 : delta_powers.front().order(); }
};

namespace detail {

inline Jet<cplx128> delta_jet(const cplx128& center, std::size_t order, double x21, const ModelParams& p) {
    using J = Jet<cplx128>;
    const J k = J::variable(center, order);
    const real128 wm = p.omegaM;
    const J R = (k * k) * cplx128(1 / (wm * wm)) + cplx128(1);
    const J v2 = k / R.pow(unsigned(2 * p.n_ff));
    const J phase = collective::exp(k * cplx128(real128(0), real128(x21)),
                                    [](const cplx128& v) { return boost::multiprecision::exp(v); });
    const real128 lam = p.lambda;
    return v2 * phase * cplx128(real128(0), -2 * boost::math::constants::pi<real128>() * lam * lam);
}

// e^{-ikt} at the centre, as a jet.
inline Jet<cplx128> time_jet(const cplx128& center, std::size_t order, double t) {
    Jet<cplx128> e(center, order);
    const cplx128 a(real128(0), -real128(t));
    e[0] = boost::multiprecision::exp(a * center);
    for (std::size_t n = 1; n <= order; ++n) e[n] = e[n - 1] * a / cplx128(real128(double(n)));
    return e;
}

// [M/M] Pade approximant of sum c_n s^n evaluated at s = 1.
inline cplx128 pade_at_one(const std::vector<cplx128>& c, std::size_t M) {
    if (c.size() < 2 * M + 1) throw InvalidArgument("not enough series coefficients for the Pade order");
    if (M == 0) return c[0];
    // Denominator q_1..q_M: sum_j q_j c_{M+i-j} = -c_{M+i}, i = 1..M.
    std::vector<std::vector<cplx128>> A(M, std::vector<cplx128>(M + 1));
    for (std::size_t i = 0; i < M; ++i) {
        for (std::size_t j = 0; j < M; ++j) A[i][j] = c[M + i - j];
        A[i][M] = -c[M + i + 1];
    }
    for (std::size_t col = 0; col < M; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < M; ++r)
            if (abs(A[r][col]) > abs(A[piv][col])) piv = r;
        std::swap(A[col], A[piv]);
        if (A[col][col] == cplx128(0)) throw ConvergenceError("singular Pade system");
        for (std::size_t r = col + 1; r < M; ++r) {
            const cplx128 f = A[r][col] / A[col][col];
            for (std::size_t j = col; j <= M; ++j) A[r][j] -= f * A[col][j];
        }
    }
    std::vector<cplx128> q(M + 1);
    q[0] = cplx128(1);
    for (std::size_t i = M; i-- > 0;) {
        cplx128 s = A[i][M];
        for (std::size_t j = i + 1; j < M; ++j) s -= A[i][j] * q[j + 1];
        q[i + 1] = s / A[i][i];
    }
    cplx128 num(0), den(0);
    for (std::size_t i = 0; i <= M; ++i) {
        cplx128 p(0);
        for (std::size_t j = 0; j <= i; ++j) p += q[j] * c[i - j];
        num += p;
        den += q[i];
    }
    return num / den;
}

}  // namespace detail

/// Builds the decomposition with jets of the given order (>= 2 * max Pade order + 1).
inline BounceDecomposition decompose(double x21, const ModelParams& params, const QuadratureSpec& q = {},
                                     std::size_t order = 64) {
    BounceDecomposition d;
    d.params = validate(params, true);
    d.x21 = x21;
    d.zs1 = find_zs1(x21, d.params, q);
    const cplx128 c = to128(d.zs1.pole.value);
    const auto delta = detail::delta_jet(c, order, x21, d.params);
    d.delta_powers.push_back(Jet<cplx128>::constant(c, order, cplx128(1)));
    for (std::size_t n = 1; n <= order; ++n) d.delta_powers.push_back(d.delta_powers.back() * delta);
    return d;
}

/// All bounce terms f_0..f_{n_max}(t) in quad precision.
inline std::vector<cplx128> bounce_terms(std::size_t n_max, double t, const BounceDecomposition& d) {
    if (n_max > d.order()) throw InvalidArgument("jet order insufficient for requested bounce term");
    const auto e = detail::time_jet(d.delta_powers.front().center(), n_max, t);
    std::vector<cplx128> f(n_max + 1);
    for (std::size_t n = 0; n <= n_max; ++n) {
        cplx128 s(0);
        for (std::size_t m = 0; m <= n; ++m) s += d.delta_powers[n][m] * e[n - m];
        f[n] = s;
    }
    return f;
}

/// f_n(t) = (1/n!) d^n/dk^n [Delta(k)^n e^{-ikt}] at k = z_{s1}.
inline cplx bounce_term(std::size_t n, double t, const BounceDecomposition& d) {
    return from128(bounce_terms(n, t, d)[n]);
}

/// I_0(t) = sum_{n <= t/x21} f_n(t): bounces switched on at t = n x21.
inline cplx bounce_sum(double t, const BounceDecomposition& d) {
    if (t < 0.0) throw InvalidArgument("bounce sum needs t >= 0");
    const auto n_max = static_cast<std::size_t>(std::floor(t / d.x21));
    const auto f = bounce_terms(n_max, t, d);
    cplx128 s(0);
    for (const auto& v : f) s += v;
    return from128(s);
}

/// Collective pole from k = z_{s1} + Delta(k) and N_s = 1/(1 - Delta'(z_s)).
struct CollectivePoleFromBounces {
    cplx zs;
    cplx Ns;
};

inline CollectivePoleFromBounces bounce_pole(const BounceDecomposition& d) {
    const auto& p = d.params;
    const cplx zs1 = d.zs1.pole.value;
    auto f = [&](cplx k) { return k - zs1 - delta_k(k, d.x21, p); };
    PoleOptions opt;
    opt.certificate = 1e-13;
    const auto [zs, residual] = solve_root(f, zs1, opt, std::min(0.5, 1.0 / d.x21), "bounce pole search");
    (void)residual;
    return {zs, 1.0 / (1.0 - delta_prime(zs, d.x21, p))};
}

struct Resummation {
    double t = 0.0;
    cplx series;          // Pade-resummed sum_n f_n(t)
    cplx identity;        // N_s e^{-i z_s t}
    double discrepancy;   // |series - identity| / |identity|
    std::size_t pade_order = 0;
    double series_error;  // spread of the last accepted Pade approximants, relative
};

/// Sum of all bounce terms without the theta truncation, resummed by
/// diagonal Pade approximants in an auxiliary coupling s (coefficients
/// f_n s^n, evaluated at s = 1), against N_s e^{-i z_s t}.
inline Resummation resummed(double t, const BounceDecomposition& d) {
    if (t < 0.0) throw InvalidArgument("resummation needs t >= 0");
    const std::size_t m_max = (d.order() - 1) / 2;
    if (m_max < 4) throw InvalidArgument("jet order too small for resummation");
    const auto f = bounce_terms(2 * m_max + 1, t, d);
    // Accept the order where consecutive diagonal approximants agree best.
    std::vector<cplx128> values;
    for (std::size_t M = 0; M <= m_max; ++M) {
        try {
            values.push_back(detail::pade_at_one(f, M));
        } catch (const ConvergenceError&) {
            values.push_back(cplx128(std::numeric_limits<double>::quiet_NaN()));
        }
    }
    std::size_t best = 0;
    double best_spread = std::numeric_limits<double>::infinity();
    for (std::size_t M = 4; M <= m_max; ++M) {
        const double spread = double(abs(values[M] - values[M - 1]) / abs(values[M]));
        if (spread < best_spread) best_spread = spread, best = M;
    }
    Resummation r;
    r.t = t;
    r.pade_order = best;
    r.series = from128(values[best]);
    r.series_error = best_spread;
    const auto pole = bounce_pole(d);
    r.identity = pole.Ns * std::exp(-I * pole.zs * t);
    r.discrepancy = std::abs(r.series - r.identity) / std::abs(r.identity);
    if (!(best_spread <= d.tolerance))
        throw ConvergenceError("bounce resummation did not settle: spread " + std::to_string(best_spread));
    return r;
}

struct AmplitudeOptions {
    double tail_tolerance = 1e-7;  // bound on the weight left to non-oscillatory panels
    double abs_tol = 1e-10;
    int max_panels = 400000;
};

struct AmplitudeSeries {
    std::vector<double> t;
    std::vector<cplx> amplitude;
    double tail_bound = 0.0;  // weight beyond the oscillation-resolved range
    std::size_t panels = 0;
};

/// I(t) = int_0^inf dk w(k) e^{-ikt}, w = -(1/pi) Im(1/eta^+(k)), on a single
/// adaptive partition whose panels are no wider than pi/(4 t_max) below the
/// oscillation cutoff.
inline AmplitudeSeries amplitude_quadrature(const std::vector<double>& times, Sector s, double x21,
                                            const ModelParams& params, const QuadratureSpec& quad = {},
                                            const AmplitudeOptions& opt = {}) {
    const auto p = validate(params, s != Sector::one_atom);
    const auto q = resolve(quad, p);
    double t_max = 0.0;
    for (double t : times) {
        if (!(t >= 0.0)) throw InvalidArgument("amplitude times must be >= 0");
        t_max = std::max(t_max, t);
    }

    std::unordered_map<double, double> cache;
    auto w = [&](double k) -> double {
        if (!(k > 0.0)) return 0.0;
        auto it = cache.find(k);
        if (it != cache.end()) return it->second;
        const double v = continuum_weight(k, s, x21, p, q);
        cache.emplace(k, v);
        return v;
    };

    // Beyond k_osc the weight is below 4 lambda^2 v^2 / (k - omega1 - 1)^2.
    const double lam2 = p.lambda * p.lambda;
    auto bound = [&](double k) { return 4.0 * lam2 * form_factor_sq_real(k, p) / std::pow(k - p.omega1 - 1.0, 2); };
    double k_osc = p.omega1 + 4.0;
    while (quad::integrate_halfline(bound, k_osc, k_osc, {1e-16, 1e-8, 2000}) > opt.tail_tolerance && k_osc < q.cutoff)
        k_osc *= 1.25;
    k_osc = std::min(k_osc, q.cutoff);

    std::vector<double> breaks{0.0, k_osc, p.omega1};
    try {
        const auto zj = s == Sector::one_atom ? one_atom_pole(p, q) : principal_pole(s, x21, p, q);
        const double g = std::max(zj.gamma(), 1e-9);
        for (double m : {0.0, 1.0, 3.0, 10.0, 30.0}) {
            breaks.push_back(zj.omega_tilde() + m * g);
            breaks.push_back(zj.omega_tilde() - m * g);
        }
    } catch (const Error&) {
    }
    breaks.erase(std::remove_if(breaks.begin(), breaks.end(), [&](double b) { return b < 0.0 || b > k_osc; }),
                 breaks.end());
    const quad::Tolerance tol{opt.abs_tol, 1e-10, opt.max_panels};
    const double width = t_max > 0.0 ? pi / (4.0 * t_max) : std::numeric_limits<double>::infinity();
    auto inner = quad::adaptive(w, breaks, tol, width);
    auto outer = quad::adaptive(w, {k_osc, q.cutoff}, tol);
    if (!inner.converged || !outer.converged) throw ConvergenceError("amplitude quadrature budget exceeded");

    std::vector<double> nodes, weights, values;
    const auto& rule = quad::detail::gk21();
    for (const auto* panels : {&inner.panels, &outer.panels})
        for (const auto& pan : *panels) {
            const double c = 0.5 * (pan.a + pan.b), h = 0.5 * (pan.b - pan.a);
            for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                for (int sgn : {1, -1}) {
                    if (i == 0 && sgn < 0) continue;
                    const double k = sgn > 0 ? c + h * rule.nodes[i] : c - h * rule.nodes[i];
                    nodes.push_back(k);
                    weights.push_back(h * rule.kronrod[i]);
                    values.push_back(w(k));
                }
            }
        }

    AmplitudeSeries out;
    out.t = times;
    out.amplitude.resize(times.size());
    out.tail_bound = outer.value;
    out.panels = inner.panels.size() + outer.panels.size();
    parallel_for(times.size(), [&](std::size_t j) {
        const double t = times[j];
        cplx sum = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i)
            sum += weights[i] * values[i] * std::exp(cplx(0.0, -nodes[i] * t));
        out.amplitude[j] = sum;
    });
    return out;
}

inline cplx amplitude_quadrature(double t, Sector s, double x21, const ModelParams& p, const QuadratureSpec& q = {}) {
    return amplitude_quadrature(std::vector<double>{t}, s, x21, p, q).amplitude.front();
}

}  // namespace collective
