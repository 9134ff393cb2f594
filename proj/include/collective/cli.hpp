#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bounces.hpp"
#include "dynamics.hpp"
#include "greens.hpp"
#include "io.hpp"
#include "sweep.hpp"
#include "waveguide.hpp"

namespace collective::cli {

using nlohmann::json;

enum ExitCode : int { ok = 0, config_error = 1, solver_failure = 2 };

/// Configuration used when a key is absent from the user's file.
inline json default_config() {
    return json::parse(R"({
  "model": {"omega1": 2.0, "lambda": 0.05, "omegaM": 5.0, "n_ff": 1, "x1": 0.0, "x2": 29.025},
  "quad": {"cutoff": 0.0, "rel_tol": 1e-12, "abs_tol": 1e-13, "max_panels": 4000},
  "lattice": {"L": 500.0, "n_modes": 2501, "cache": ""},
  "poles": {"sectors": ["s", "a"], "n_lo": -3, "n_hi": 3},
  "contour": {"sectors": ["s", "a"], "re_min": 1.3, "re_max": 2.7, "im_min": -0.1, "im_max": 0.0, "nx": 141, "ny": 51},
  "evolve": {"initial": ["s"], "times": {"start": 0.0, "stop": 145.0, "step": 0.25},
             "field_times": [], "field_x": {"start": -20.0, "stop": 50.0, "step": 0.25}},
  "sweep": {"grid": {"start": 5.0, "stop": 40.0, "step": 0.05}, "n_max": 5},
  "bounces": {"order": 64, "times": {"start": 0.0, "stop": 87.075, "step": 0.25}, "amplitude_times": []},
  "waveguide": {"D": 1.0, "W": 1.0, "m0": 1, "n0": 1, "l_max": 10, "g0": 0.05, "kc": 5.0,
                "traps": [{"n": 1, "sector": "s"}]}
})");
}

/// Resolved run configuration: defaults, then the user's file, then overrides.
struct RunConfig {
    json raw;
    ModelParams model;
    QuadratureSpec quad;

    double x21() const { return model.x21(); }
    const json& block(const std::string& name) const {
        if (!raw.contains(name) || !raw.at(name).is_object()) throw InvalidArgument("missing config block '" + name + "'");
        return raw.at(name);
    }
};

inline RunConfig resolve_config(const json& user, const std::vector<std::string>& overrides = {}) {
    if (!user.is_null() && !user.is_object()) throw InvalidArgument("config must be a JSON object");
    RunConfig c;
    c.raw = default_config();
    if (!user.is_null()) c.raw.merge_patch(user);
    for (const auto& o : overrides) io::apply_override(c.raw, o);
    c.model = params_from_json(c.raw.at("model"));
    c.quad = quad_from_json(c.raw.at("quad"));
    validate(c.model, false, true);
    resolve(c.quad, c.model);
    return c;
}

inline std::vector<Sector> sectors_from_json(const json& j) {
    std::vector<Sector> out;
    for (const auto& v : j) {
        const Sector s = sector_from_string(v.get<std::string>());
        if (s == Sector::one_atom) throw InvalidArgument("only the s and a sectors are supported here");
        out.push_back(s);
    }
    if (out.empty()) throw InvalidArgument("sector list is empty");
    return out;
}

inline void require_resonance(const ModelParams& p) {
    if (p.lambda == 0.0) throw InvalidArgument("free theory has no resonance poles");
    validate(p, true);
}

inline Region region_from_json(const json& j) {
    Region r;
    r.re_min = j.value("re_min", r.re_min);
    r.re_max = j.value("re_max", r.re_max);
    r.im_min = j.value("im_min", r.im_min);
    r.im_max = j.value("im_max", r.im_max);
    return r;
}

inline void write_contour(io::Artifacts& out, const RunConfig& c, const json& block) {
    const Region region = region_from_json(block);
    const int nx = block.value("nx", 141), ny = block.value("ny", 51);
    for (Sector s : sectors_from_json(block.value("sectors", json::array({"s", "a"})))) {
        const auto map = contour_map(region, nx, ny, s, c.x21(), c.model, c.quad);
        io::Table t({"re", "im", "log_inv_abs_eta"});
        for (int iy = 0; iy < map.ny; ++iy)
            for (int ix = 0; ix < map.nx; ++ix) t.row(map.re[ix], map.im[iy], map.at(ix, iy));
        out.csv("contour_" + std::string(tag(s)) + ".csv", t);
    }
}

/// Pole list for both sectors; a "contour" object inside the poles block adds maps.
inline std::vector<std::filesystem::path> cmd_poles(const RunConfig& c, const std::filesystem::path& dir) {
    require_resonance(c.model);
    const auto& b = c.block("poles");
    io::Artifacts out(dir, c.raw);
    io::Table t({"sector", "n", "re", "im", "gamma", "re_N", "im_N", "residual"});
    json report = {{"x21", c.x21()}, {"gaps", json::object()}, {"warnings", json::array()}};
    const auto z1 = one_atom_pole(c.model, c.quad);
    t.row(std::string("1"), 0, z1.value.real(), z1.value.imag(), z1.gamma(), z1.normalization.real(),
          z1.normalization.imag(), z1.residual);
    for (Sector s : sectors_from_json(b.value("sectors", json::array({"s", "a"})))) {
        const auto scan = pole_scan(s, c.x21(), b.value("n_lo", -3), b.value("n_hi", 3), c.model, c.quad);
        for (const auto& e : scan.poles)
            t.row(std::string(tag(s)), e.lattice_index, e.value.real(), e.value.imag(), e.gamma(),
                  e.normalization.real(), e.normalization.imag(), e.residual);
        report["gaps"][std::string(tag(s))] = scan.gaps;
        for (const auto& w : scan.warnings) report["warnings"].push_back(w);
    }
    out.csv("poles.csv", t);
    out.json("poles_report.json", report);
    if (b.contains("contour") && b.at("contour").is_object()) write_contour(out, c, b.at("contour"));
    return out.written();
}

inline std::vector<std::filesystem::path> cmd_contour(const RunConfig& c, const std::filesystem::path& dir) {
    require_resonance(c.model);
    io::Artifacts out(dir, c.raw);
    write_contour(out, c, c.block("contour"));
    return out.written();
}

inline ReducedModel diagonalized_lattice(const RunConfig& c, Sector s) {
    const auto& b = c.block("lattice");
    auto m = build_lattice(c.model, b.at("L").get<double>(), b.at("n_modes").get<int>(), s);
    const std::string cache = b.value("cache", "");
    if (cache.empty())
        diagonalize(m);
    else
        EigenCache(cache).diagonalize(m);
    return m;
}

/// Lattice P1(t) with the collective-pole overlay, and field profiles.
inline std::vector<std::filesystem::path> cmd_evolve(const RunConfig& c, const std::filesystem::path& dir) {
    const auto& b = c.block("evolve");
    const auto times = io::grid_from_json(b.at("times"), "evolve.times");
    std::vector<double> field_times;
    for (const auto& v : b.value("field_times", json::array())) field_times.push_back(v.get<double>());
    const auto xs = field_times.empty() ? std::vector<double>{} : io::grid_from_json(b.at("field_x"), "evolve.field_x");
    std::vector<Sector> sectors;
    for (const auto& v : b.at("initial")) {
        const auto label = initial_from_string(v.get<std::string>());
        if (label != InitialState::symmetric && label != InitialState::antisymmetric)
            throw InvalidArgument("evolve supports the initial states s and a");
        sectors.push_back(label == InitialState::symmetric ? Sector::symmetric : Sector::antisymmetric);
    }
    if (sectors.empty()) throw InvalidArgument("evolve.initial is empty");
    validate(c.model, true, true);

    io::Artifacts out(dir, c.raw);
    json report = {{"x21", c.x21()}, {"runs", json::array()}};
    for (Sector s : sectors) {
        const std::string name(tag(s));
        const auto lattice = diagonalized_lattice(c, s);
        const auto label = s == Sector::symmetric ? InitialState::symmetric : InitialState::antisymmetric;
        const auto p1 = survival_probability(lattice, label, times);
        std::optional<ComplexEnergy> pole;
        if (c.model.lambda > 0.0) pole = principal_pole(s, c.x21(), c.model, c.quad);
        io::Table t({"t", "P1", "P1_collective"});
        const auto overlay = pole ? collective_survival(*pole, times).values : std::vector<double>(times.size(), 0.5);
        for (std::size_t i = 0; i < times.size(); ++i) t.row(times[i], p1.values[i], overlay[i]);
        out.csv("evolve_" + name + ".csv", t);

        json run = {{"initial", name}, {"warnings", p1.warnings}};
        if (pole) run["pole"] = {{"re", pole->value.real()}, {"im", pole->value.imag()},
                                 {"re_N", pole->normalization.real()}, {"im_N", pole->normalization.imag()}};
        for (std::size_t i = 0; i < field_times.size(); ++i) {
            const double tf = field_times[i];
            const auto lat = field_intensity(lattice, label, xs, tf);
            io::Table f({"x", "P_lattice", "P_collective"});
            const auto col = pole ? collective_field(*pole, c.model, xs, tf, c.quad).intensity
                                  : std::vector<double>(xs.size(), 0.0);
            for (std::size_t k = 0; k < xs.size(); ++k) f.row(xs[k], lat.intensity[k], col[k]);
            out.csv("field_" + name + "_" + std::to_string(i) + ".csv", f);
        }
        report["runs"].push_back(run);
    }
    out.json("evolve_report.json", report);
    return out.written();
}

/// Principal poles over a separation grid, force indicator, zero-decay
/// predictions and the pair relation.
inline std::vector<std::filesystem::path> cmd_sweep(const RunConfig& c, const std::filesystem::path& dir) {
    require_resonance(c.model);
    const auto& b = c.block("sweep");
    const auto grid = io::grid_from_json(b.at("grid"), "sweep.grid");
    const auto sweep = sweep_poles(grid, c.model, c.quad);
    io::Artifacts out(dir, c.raw);

    std::map<double, double> fs, fa;
    json stable = json::object();
    for (Sector s : {Sector::symmetric, Sector::antisymmetric}) {
        try {
            const auto force = force_indicator(sweep.records, s);
            auto& target = s == Sector::symmetric ? fs : fa;
            for (std::size_t i = 0; i < force.t.size(); ++i) target[force.t[i]] = force.values[i];
            json pts = json::array();
            for (const auto& sp : stable_points(force)) pts.push_back({{"x21", sp.x21}, {"stable", sp.stable}});
            stable[std::string(tag(s))] = pts;
        } catch (const InvalidArgument&) {
            stable[std::string(tag(s))] = json::array();
        }
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto lookup = [&](const std::map<double, double>& m, double x) {
        const auto it = m.find(x);
        return it == m.end() ? nan : it->second;
    };
    io::Table t({"x21", "re_zs", "gamma_s", "re_za", "gamma_a", "F_s", "F_a", "flag_s", "flag_a"});
    for (const auto& r : sweep.records)
        t.row(r.x21, r.converged_s ? r.zs.omega_tilde() : nan, r.converged_s ? r.zs.gamma() : nan,
              r.converged_a ? r.za.omega_tilde() : nan, r.converged_a ? r.za.gamma() : nan, lookup(fs, r.x21),
              lookup(fa, r.x21), r.flag_s, r.flag_a);
    out.csv("sweep.csv", t);

    json zero = json::array();
    const int n_max = b.value("n_max", 5);
    const double lo = grid.front(), hi = grid.back();
    for (Sector s : {Sector::symmetric, Sector::antisymmetric}) {
        for (int n = s == Sector::symmetric ? 0 : 1; n <= n_max; ++n) {
            const auto z = zero_decay_solve(s, n, c.model, c.quad);
            if (z.x21_zero < lo || z.x21_zero > hi) continue;
            zero.push_back({{"sector", std::string(tag(s))}, {"n", z.n}, {"m", z.m}, {"omega_o", z.omega_o},
                            {"x21_zero", z.x21_zero}, {"residual", z.residual}, {"gamma_check", z.gamma_check}});
        }
    }
    out.json("zero_decay.json", zero);

    const auto pair = pair_relation_check(sweep.records, c.model, c.quad);
    const auto z1 = one_atom_pole(c.model, c.quad);
    out.json("sweep_report.json", {{"z1", {{"re", z1.value.real()}, {"im", z1.value.imag()}}},
                                   {"pair_relation", {{"max_deviation", pair.max_deviation},
                                                      {"at_x21", pair.at_x21},
                                                      {"points", pair.points}}},
                                   {"force_roots", stable},
                                   {"warnings", sweep.warnings}});
    return out.written();
}

/// Bounce decomposition: resummed series against the collective pole, the
/// causal partial sums, and optionally the exact amplitude by quadrature.
inline std::vector<std::filesystem::path> cmd_bounces(const RunConfig& c, const std::filesystem::path& dir) {
    require_resonance(c.model);
    const auto& b = c.block("bounces");
    const auto times = io::grid_from_json(b.at("times"), "bounces.times");
    const auto d = decompose(c.x21(), c.model, c.quad, b.value("order", std::size_t(64)));
    io::Artifacts out(dir, c.raw);

    io::Table r({"t", "re_series", "im_series", "re_identity", "im_identity", "discrepancy", "pade_order",
                 "series_error"});
    io::Table partial({"t", "re_sum", "im_sum", "n_terms"});
    double worst = 0.0, worst_t = 0.0;
    for (double t : times) {
        const auto res = resummed(t, d);
        r.row(t, res.series.real(), res.series.imag(), res.identity.real(), res.identity.imag(), res.discrepancy,
              res.pade_order, res.series_error);
        if (res.discrepancy >= worst) worst = res.discrepancy, worst_t = t;
        const cplx s = bounce_sum(t, d);
        partial.row(t, s.real(), s.imag(), static_cast<int>(std::floor(t / c.x21())) + 1);
    }
    out.csv("resummation.csv", r);
    out.csv("bounce_sum.csv", partial);

    const auto pole = bounce_pole(d);
    out.json("resummation.json", {{"x21", c.x21()},
                                  {"zs1", {{"re", d.zs1.pole.value.real()}, {"im", d.zs1.pole.value.imag()}}},
                                  {"zs", {{"re", pole.zs.real()}, {"im", pole.zs.imag()}}},
                                  {"Ns", {{"re", pole.Ns.real()}, {"im", pole.Ns.imag()}}},
                                  {"max_discrepancy", worst},
                                  {"at_t", worst_t},
                                  {"within_1e-6", worst <= 1e-6}});

    const auto& at = b.value("amplitude_times", json::array());
    if (!(at.is_array() && at.empty())) {
        const auto amp_times = io::grid_from_json(at, "bounces.amplitude_times");
        const auto amp = amplitude_quadrature(amp_times, Sector::symmetric, c.x21(), c.model, c.quad);
        io::Table a({"t", "re_I", "im_I", "half_abs2"});
        for (std::size_t i = 0; i < amp.t.size(); ++i)
            a.row(amp.t[i], amp.amplitude[i].real(), amp.amplitude[i].imag(), 0.5 * std::norm(amp.amplitude[i]));
        out.csv("amplitude.csv", a);
    }
    return out.written();
}

inline WaveguideParams waveguide_from_json(const json& j) {
    WaveguideParams wg;
    wg.D = j.value("D", wg.D);
    wg.W = j.value("W", wg.W);
    wg.m0 = j.value("m0", wg.m0);
    wg.n0 = j.value("n0", wg.n0);
    wg.l_max = j.value("l_max", wg.l_max);
    wg.g0 = j.value("g0", wg.g0);
    wg.kc = j.value("kc", wg.kc);
    return wg;
}

inline std::vector<std::filesystem::path> cmd_waveguide(const RunConfig& c, const std::filesystem::path& dir) {
    const auto& b = c.block("waveguide");
    const auto wg = waveguide_from_json(b);
    json traps = json::array();
    for (const auto& spec : b.at("traps")) {
        const Sector s = sector_from_string(spec.at("sector").get<std::string>());
        traps.push_back(to_json(solve_and_check_trap(wg, spec.at("n").get<int>(), s)));
    }
    if (traps.empty()) throw InvalidArgument("waveguide.traps is empty");
    io::Artifacts out(dir, c.raw);
    out.json("trap.json", traps.size() == 1 ? traps.front() : traps);
    return out.written();
}

inline std::vector<std::filesystem::path> run(const std::string& command, const RunConfig& c,
                                              const std::filesystem::path& dir) {
    if (command == "poles") return cmd_poles(c, dir);
    if (command == "contour") return cmd_contour(c, dir);
    if (command == "evolve") return cmd_evolve(c, dir);
    if (command == "sweep") return cmd_sweep(c, dir);
    if (command == "bounces") return cmd_bounces(c, dir);
    if (command == "waveguide") return cmd_waveguide(c, dir);
    throw InvalidArgument("unknown command '" + command + "'");
}

}  // namespace collective::cli
