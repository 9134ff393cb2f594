#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <string_view>

#include <json.hpp>

#include "errors.hpp"
#include "quadrature.hpp"

namespace collective {

using cplx = std::complex<double>;
inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

/// Physical constants of the emitter-field system, in units c = hbar = 1.
struct ModelParams {
    double omega1 = 2.0;   // bare excited-level energy
    double lambda = 0.05;  // dimensionless coupling
    double omegaM = 5.0;   // form-factor cutoff
    int n_ff = 1;          // form-factor exponent
    double x1 = 0.0;
    double x2 = 1.0;

    double x21() const { return std::abs(x2 - x1); }
    bool operator==(const ModelParams&) const = default;
};

/// Exchange-symmetry channel of the one-excitation sector. `one_atom` is the
/// single-emitter problem, which shares all the machinery with sigma = 0.
enum class Sector { one_atom, symmetric, antisymmetric };

constexpr double sigma(Sector s) {
    switch (s) {
    case Sector::symmetric: return 1.0;
    case Sector::antisymmetric: return -1.0;
    default: return 0.0;
    }
}

constexpr std::string_view to_string(Sector s) {
    switch (s) {
    case Sector::symmetric: return "symmetric";
    case Sector::antisymmetric: return "antisymmetric";
    default: return "one-atom";
    }
}

/// Short tag used in CSV output ("s", "a", "1").
constexpr std::string_view tag(Sector s) {
    switch (s) {
    case Sector::symmetric: return "s";
    case Sector::antisymmetric: return "a";
    default: return "1";
    }
}

inline Sector sector_from_string(std::string_view name) {
    if (name == "s" || name == "symmetric") return Sector::symmetric;
    if (name == "a" || name == "antisymmetric") return Sector::antisymmetric;
    if (name == "1" || name == "one-atom" || name == "one_atom") return Sector::one_atom;
    throw InvalidArgument("unknown sector '" + std::string(name) + "'");
}

/// Checks every invariant of `params` and returns it unchanged. With
/// `two_atom` set the atoms must also be separated.
inline ModelParams validate(const ModelParams& params, bool two_atom = false, bool allow_free = false) {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(params.omega1) || !finite(params.lambda) || !finite(params.omegaM) ||
        !finite(params.x1) || !finite(params.x2))
        throw InvalidArgument("parameters must be finite");
    if (!(params.lambda > 0.0) && !(allow_free && params.lambda == 0.0)) throw InvalidArgument("coupling must be positive");
    if (!(params.omegaM > 0.0)) throw InvalidArgument("form-factor cutoff must be positive");
    if (!(params.omega1 > 0.0)) throw InvalidArgument("excited-level energy must be positive");
    if (params.n_ff < 1) throw InvalidArgument("form-factor exponent must be >= 1");
    if (two_atom && !(params.x21() > 0.0)) throw InvalidArgument("coincident atoms");
    return params;
}

inline ModelParams params_from_json(const nlohmann::json& j) {
    ModelParams p;
    p.omega1 = j.value("omega1", p.omega1);
    p.lambda = j.value("lambda", p.lambda);
    p.omegaM = j.value("omegaM", p.omegaM);
    p.n_ff = j.value("n_ff", p.n_ff);
    p.x1 = j.value("x1", p.x1);
    p.x2 = j.value("x2", p.x2);
    return p;
}

inline nlohmann::json to_json(const ModelParams& p) {
    return {{"omega1", p.omega1}, {"lambda", p.lambda}, {"omegaM", p.omegaM},
            {"n_ff", p.n_ff},     {"x1", p.x1},         {"x2", p.x2}};
}

/// v(w)^2 on the real axis, w >= 0.
inline double form_factor_sq_real(double w, const ModelParams& p) {
    const double r = 1.0 + (w / p.omegaM) * (w / p.omegaM);
    return w / std::pow(r, 2 * p.n_ff);
}

/// Integration settings for the level-shift integrals. A cutoff of 0 means
/// the default of 200 omegaM; see resolve().
struct QuadratureSpec {
    double cutoff = 0.0;
    double rel_tol = 1e-12;
    double abs_tol = 1e-13;
    int max_panels = 4000;

    quad::Tolerance tolerance() const { return {abs_tol, rel_tol, max_panels}; }
};

/// Fills in the default cutoff and checks it against the form-factor scale.
inline QuadratureSpec resolve(QuadratureSpec q, const ModelParams& p) {
    if (q.cutoff == 0.0) q.cutoff = 200.0 * p.omegaM;
    if (!(q.cutoff >= 50.0 * p.omegaM)) throw InvalidArgument("quadrature cutoff must be >= 50 omegaM");
    if (!(q.rel_tol > 0.0) || !(q.abs_tol > 0.0)) throw InvalidArgument("quadrature tolerances must be positive");
    if (q.max_panels < 16) throw InvalidArgument("quadrature panel budget too small");
    return q;
}

inline QuadratureSpec quad_from_json(const nlohmann::json& j) {
    QuadratureSpec q;
    q.cutoff = j.value("cutoff", q.cutoff);
    q.rel_tol = j.value("rel_tol", q.rel_tol);
    q.abs_tol = j.value("abs_tol", q.abs_tol);
    q.max_panels = j.value("max_panels", q.max_panels);
    return q;
}

inline nlohmann::json to_json(const QuadratureSpec& q) {
    return {{"cutoff", q.cutoff}, {"rel_tol", q.rel_tol}, {"abs_tol", q.abs_tol}, {"max_panels", q.max_panels}};
}

struct InstabilityMargin {
    double value = 0.0;  // omega1 - 2 int_0^inf lambda^2 v^2 / k
    bool marginal = false;
    bool unstable() const { return value > 0.0 && !marginal; }
};

/// Distance of omega1 from the threshold below which the excited level
/// turns into a bound state. Positive means the level decays.
inline InstabilityMargin instability_margin(const ModelParams& params, const QuadratureSpec& q = {}) {
    const auto p = validate(params);
    auto integrand = [&](double k) {
        const double r = 1.0 + (k / p.omegaM) * (k / p.omegaM);
        return 1.0 / std::pow(r, 2 * p.n_ff);
    };
    auto tol = q.tolerance();
    tol.abs_tol = std::min(tol.abs_tol, 1e-14 * p.omegaM);
    const double shift = 2.0 * p.lambda * p.lambda *
                         quad::integrate_halfline(integrand, 0.0, p.omegaM, tol, {}, "instability margin");
    InstabilityMargin m;
    m.value = p.omega1 - shift;
    m.marginal = std::abs(m.value) <= 1e-10 * std::max(1.0, p.omega1);
    return m;
}

}  // namespace collective
