#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "greens.hpp"
#include "parallel.hpp"

namespace collective {

/// Time-ordered samples of a real quantity.
struct TimeSeries {
    std::string label;
    std::vector<double> t;
    std::vector<double> values;
    std::vector<std::string> warnings;
};

/// Field intensity on a spatial grid at one time.
struct FieldProfile {
    double t = 0.0;
    std::vector<double> x;
    std::vector<double> intensity;
};

enum class InitialState { atom1, atom2, symmetric, antisymmetric };

inline InitialState initial_from_string(std::string_view s) {
    if (s == "s" || s == "symmetric") return InitialState::symmetric;
    if (s == "a" || s == "antisymmetric") return InitialState::antisymmetric;
    if (s == "1" || s == "atom1") return InitialState::atom1;
    if (s == "2" || s == "atom2") return InitialState::atom2;
    throw InvalidArgument("unknown initial state '" + std::string(s) + "'");
}

/// Periodic-box discretization of the two-atom Hamiltonian.
///
/// Scalar = cplx: full basis {|1>, |2>, |k_m>, m = -M..M}.
/// Scalar = double: one symmetry sector, basis {|j>, |k=0>, |u_m>, m = 1..M}
/// where |u_m> is the normalized combination of |k_m>, |-k_m> that couples
/// to |j>. Both keep enough bookkeeping to rebuild plane-wave amplitudes.
template <class Scalar>
struct LatticeModel {
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    static constexpr bool reduced = std::is_same_v<Scalar, double>;

    ModelParams params;
    double box_length = 0.0;
    int n_modes = 0;
    Sector sector = Sector::one_atom;  // reduced builds only
    int field_offset = 0;              // index of the first field state

    // Field state i (basis index field_offset + i) is the superposition
    // plus[i] |k[i]> + minus[i] |-k[i]>.
    std::vector<double> k;
    std::vector<cplx> plus, minus;

    Matrix hamiltonian;
    Eigen::VectorXd eigenvalues;
    Matrix eigenvectors;
    bool diagonalized = false;

    Eigen::Index dimension() const { return hamiltonian.rows(); }
};

using ReducedModel = LatticeModel<double>;
using FullModel = LatticeModel<cplx>;

inline constexpr double lattice_memory_budget = 4.0e9;  // bytes per matrix

namespace detail {

inline void check_lattice(const ModelParams& p, double L, int n_modes, std::size_t scalar_bytes) {
    if (n_modes < 1 || n_modes % 2 == 0) throw InvalidArgument("mode count must be a positive odd integer");
    if (!(L > 2.0 * p.x21())) throw InvalidArgument("box length must exceed 2 x21");
    const double dim = n_modes + 2.0;
    if (dim * dim * scalar_bytes * 2.0 > lattice_memory_budget)
        throw InvalidArgument("lattice exceeds the memory budget");
}

// lambda sqrt(2 pi / L) v(|k|)
inline double mode_coupling(double k, double L, const ModelParams& p) {
    return p.lambda * std::sqrt(2.0 * pi / L) * std::sqrt(form_factor_sq_real(std::abs(k), p));
}

}  // namespace detail

/// Full complex-Hermitian build, used as the reference for the reduced one.
inline FullModel build_full_lattice(const ModelParams& params, double L, int n_modes) {
    const auto p = validate(params, false, true);
    detail::check_lattice(p, L, n_modes, sizeof(cplx));
    const int M = n_modes / 2;
    FullModel m;
    m.params = p;
    m.box_length = L;
    m.n_modes = n_modes;
    m.field_offset = 2;
    m.hamiltonian = FullModel::Matrix::Zero(n_modes + 2, n_modes + 2);
    m.hamiltonian(0, 0) = m.hamiltonian(1, 1) = p.omega1;
    for (int i = 0; i < n_modes; ++i) {
        const double k = 2.0 * pi * (i - M) / L;
        const double g = detail::mode_coupling(k, L, p);
        m.k.push_back(k);
        m.plus.push_back(1.0);
        m.minus.push_back(0.0);
        const int r = i + 2;
        m.hamiltonian(r, r) = std::abs(k);
        m.hamiltonian(0, r) = g * std::exp(I * k * p.x1);
        m.hamiltonian(1, r) = g * std::exp(I * k * p.x2);
        m.hamiltonian(r, 0) = std::conj(m.hamiltonian(0, r));
        m.hamiltonian(r, 1) = std::conj(m.hamiltonian(1, r));
    }
    return m;
}

/// Sector-reduced real symmetric build (default).
inline ReducedModel build_lattice(const ModelParams& params, double L, int n_modes, Sector s) {
    const auto p = validate(params, true, true);
    if (s == Sector::one_atom) throw InvalidArgument("reduced lattice needs a symmetric or antisymmetric sector");
    detail::check_lattice(p, L, n_modes, sizeof(double));
    const int M = n_modes / 2;
    const double sg = sigma(s);
    ReducedModel m;
    m.params = p;
    m.box_length = L;
    m.n_modes = n_modes;
    m.sector = s;
    m.field_offset = 1;
    m.hamiltonian = ReducedModel::Matrix::Zero(M + 2, M + 2);
    m.hamiltonian(0, 0) = p.omega1;
    // k = 0 has zero coupling and zero energy.
    m.k.push_back(0.0);
    m.plus.push_back(1.0);
    m.minus.push_back(0.0);
    for (int j = 1; j <= M; ++j) {
        const double k = 2.0 * pi * j / L;
        const double g = detail::mode_coupling(k, L, p);
        // <k|H|j> = b_k, <-k|H|j> = b_{-k}
        const cplx bp = g * (std::exp(-I * k * p.x1) + sg * std::exp(-I * k * p.x2)) / std::sqrt(2.0);
        const cplx bm = g * (std::exp(I * k * p.x1) + sg * std::exp(I * k * p.x2)) / std::sqrt(2.0);
        const double r = std::sqrt(std::norm(bp) + std::norm(bm));
        m.k.push_back(k);
        if (r > 0.0) {
            m.plus.push_back(bp / r);
            m.minus.push_back(bm / r);
        } else {
            m.plus.push_back(1.0 / std::sqrt(2.0));
            m.minus.push_back(sg / std::sqrt(2.0));
        }
        m.hamiltonian(j + 1, j + 1) = k;
        m.hamiltonian(0, j + 1) = m.hamiltonian(j + 1, 0) = r;
    }
    return m;
}

/// Spectral decomposition: Householder reduction to real tridiagonal form
/// followed by implicit-shift QL/QR iterations (Eigen).
template <class Scalar>
LatticeModel<Scalar>& diagonalize(LatticeModel<Scalar>& m) {
    Eigen::SelfAdjointEigenSolver<typename LatticeModel<Scalar>::Matrix> solver(m.hamiltonian);
    if (solver.info() != Eigen::Success) throw ConvergenceError("eigensolver did not converge");
    m.eigenvalues = solver.eigenvalues();
    m.eigenvectors = solver.eigenvectors();
    m.diagonalized = true;
    return m;
}

/// Initial amplitudes in the model basis for a labelled state.
template <class Scalar>
Eigen::VectorXcd initial_state(const LatticeModel<Scalar>& m, InitialState label) {
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(m.dimension());
    if constexpr (LatticeModel<Scalar>::reduced) {
        const bool match = (label == InitialState::symmetric && m.sector == Sector::symmetric) ||
                           (label == InitialState::antisymmetric && m.sector == Sector::antisymmetric);
        if (!match) throw InvalidArgument("initial state not contained in the reduced sector");
        psi(0) = 1.0;
    } else {
        const double r = 1.0 / std::sqrt(2.0);
        switch (label) {
        case InitialState::atom1: psi(0) = 1.0; break;
        case InitialState::atom2: psi(1) = 1.0; break;
        case InitialState::symmetric: psi(0) = r, psi(1) = r; break;
        case InitialState::antisymmetric: psi(0) = r, psi(1) = -r; break;
        }
    }
    return psi;
}

/// Amplitudes of the state in the model basis at all requested times,
/// from one projection onto the eigenbasis.
template <class Scalar>
class Propagator {
public:
    Propagator(const LatticeModel<Scalar>& m, const Eigen::VectorXcd& initial) : model_(&m) {
        if (!m.diagonalized) throw InvalidArgument("model must be diagonalized before evolution");
        if (initial.size() != m.dimension()) throw InvalidArgument("initial state has the wrong dimension");
        coeffs_ = m.eigenvectors.adjoint().template cast<cplx>() * initial;
    }

    Eigen::VectorXcd state(double t) const {
        const auto& m = *model_;
        Eigen::VectorXcd phased(coeffs_.size());
        for (Eigen::Index n = 0; n < coeffs_.size(); ++n)
            phased(n) = coeffs_(n) * std::exp(-I * m.eigenvalues(n) * t);
        return m.eigenvectors.template cast<cplx>() * phased;
    }

    /// <row| e^{-iHt} |initial> for one basis row, O(dimension).
    cplx component(Eigen::Index row, double t) const {
        const auto& m = *model_;
        cplx sum = 0.0;
        for (Eigen::Index n = 0; n < coeffs_.size(); ++n)
            sum += cplx(m.eigenvectors(row, n)) * coeffs_(n) * std::exp(-I * m.eigenvalues(n) * t);
        return sum;
    }

private:
    const LatticeModel<Scalar>* model_;
    Eigen::VectorXcd coeffs_;
};

/// e^{-iHt} applied to `initial`.
template <class Scalar>
Eigen::VectorXcd evolve(const LatticeModel<Scalar>& m, const Eigen::VectorXcd& initial, double t) {
    if (t == 0.0) return initial;
    return Propagator<Scalar>(m, initial).state(t);
}

template <class Scalar>
Eigen::VectorXcd evolve(const LatticeModel<Scalar>& m, InitialState label, double t) {
    return evolve(m, initial_state(m, label), t);
}

/// Beyond t = L/2 the emitted field wraps around the periodic box.
inline double wrap_horizon(double L) { return 0.5 * L; }

/// P_1(t) = |<1| e^{-iHt} |initial>|^2.
template <class Scalar>
TimeSeries survival_probability(const LatticeModel<Scalar>& m, InitialState label, const std::vector<double>& times) {
    TimeSeries ts;
    ts.label = "P1";
    ts.t = times;
    ts.values.resize(times.size());
    const Propagator<Scalar> prop(m, initial_state(m, label));
    parallel_for(times.size(), [&](std::size_t i) {
        if constexpr (LatticeModel<Scalar>::reduced) {
            // <1| = (<s| + <a|)/sqrt2 and the sectors do not mix.
            ts.values[i] = 0.5 * std::norm(prop.component(0, times[i]));
        } else {
            ts.values[i] = std::norm(prop.component(0, times[i]));
        }
    });
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1])) throw InvalidArgument("time grid must be increasing");
    if (!times.empty() && times.back() >= wrap_horizon(m.box_length))
        ts.warnings.push_back("times beyond L/2 include field wrapped around the box");
    return ts;
}

/// |<psi(x)|state>|^2 with <psi(x)| = sum_{k != 0} (2|k|L)^{-1/2} e^{ikx} <k|.
template <class Scalar>
FieldProfile field_intensity(const LatticeModel<Scalar>& m, const Eigen::VectorXcd& state, const std::vector<double>& x,
                             double t = 0.0) {
    FieldProfile f;
    f.t = t;
    f.x = x;
    f.intensity.resize(x.size());
    const double L = m.box_length;
    parallel_for(x.size(), [&](std::size_t i) {
        cplx sum = 0.0;
        for (std::size_t s = 0; s < m.k.size(); ++s) {
            const double k = m.k[s];
            if (k == 0.0) continue;
            const cplx c = state(m.field_offset + Eigen::Index(s)) / std::sqrt(2.0 * std::abs(k) * L);
            sum += c * (m.plus[s] * std::exp(I * k * x[i]) + m.minus[s] * std::exp(-I * k * x[i]));
        }
        f.intensity[i] = std::norm(sum);
    });
    return f;
}

template <class Scalar>
FieldProfile field_intensity(const LatticeModel<Scalar>& m, InitialState label, const std::vector<double>& x, double t) {
    return field_intensity(m, evolve(m, label, t), x, t);
}

/// Collective-pole approximation (|N_j|^2 / 2) e^{-2 gamma_j t} of P_1(t).
inline TimeSeries collective_survival(const ComplexEnergy& pole, const std::vector<double>& times) {
    TimeSeries ts;
    ts.label = std::string("P1_z") + std::string(tag(pole.sector));
    ts.t = times;
    const double amp = 0.5 * std::norm(pole.normalization);
    for (double t : times) ts.values.push_back(amp * std::exp(-2.0 * pole.gamma() * t));
    return ts;
}

inline TimeSeries collective_survival(const ModelParams& params, Sector s, double x21, const std::vector<double>& times,
                                      const QuadratureSpec& q = {}) {
    ModelParams p = params;
    p.x2 = p.x1 + x21;
    return collective_survival(principal_pole(s, x21, p, q), times);
}

/// Pole-state field amplitude A(x) = <psi(x)|phi_j> / sqrt(N_j), from
/// continued integrals.
inline cplx collective_field_amplitude(const ComplexEnergy& pole, double x, const ModelParams& params,
                                       const QuadratureSpec& quad = {}) {
    const auto q = resolve(quad, params);
    const auto u = [&](cplx k) { return field_weight(k, params); };
    const double c = params.lambda / std::sqrt(2.0 * pi);
    if (pole.sector == Sector::one_atom) return std::sqrt(2.0) * c * continued_cos_integral(u, pole.value, x - params.x1, q);
    return c * (continued_cos_integral(u, pole.value, x - params.x1, q) +
                sigma(pole.sector) * continued_cos_integral(u, pole.value, x - params.x2, q));
}

/// P_zj(x, t) = |<psi(x)|phi_j> e^{-i z_j t} <phi~_j|j>|^2 = |N_j|^2 |A(x)|^2 e^{-2 gamma_j t}.
inline FieldProfile collective_field(const ComplexEnergy& pole, const ModelParams& params, const std::vector<double>& x,
                                     double t, const QuadratureSpec& q = {}) {
    FieldProfile f;
    f.t = t;
    f.x = x;
    f.intensity.resize(x.size());
    const double scale = std::norm(pole.normalization) * std::exp(-2.0 * pole.gamma() * t);
    parallel_for(x.size(), [&](std::size_t i) {
        f.intensity[i] = scale * std::norm(collective_field_amplitude(pole, x[i], params, q));
    });
    return f;
}

/// max |<u_i|u_j> - delta_ij| of the eigenbasis.
template <class Scalar>
double orthonormality_error(const LatticeModel<Scalar>& m) {
    const auto gram = (m.eigenvectors.adjoint() * m.eigenvectors).eval();
    return (gram - LatticeModel<Scalar>::Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

/// ||V diag(lambda) V^+ - H||_F / ||H||_F.
template <class Scalar>
double reconstruction_error(const LatticeModel<Scalar>& m) {
    const auto rebuilt = (m.eigenvectors * m.eigenvalues.asDiagonal() * m.eigenvectors.adjoint()).eval();
    return (rebuilt - m.hamiltonian).norm() / m.hamiltonian.norm();
}

/// |sum(lambda) - tr H| / ||H||_F.
template <class Scalar>
double trace_error(const LatticeModel<Scalar>& m) {
    return std::abs(m.eigenvalues.sum() - std::real(m.hamiltonian.trace())) / m.hamiltonian.norm();
}

/// Binary cache of reduced eigensystems keyed by a hash of the build inputs.
class EigenCache {
public:
    explicit EigenCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

    static std::uint64_t key(const ModelParams& p, double L, int n_modes, Sector s) {
        const std::string text = to_json(p).dump() + "|" + std::to_string(L) + "|" + std::to_string(n_modes) + "|" +
                                 std::string(tag(s)) + "|v1";
        std::uint64_t h = 1469598103934665603ull;  // FNV-1a
        for (unsigned char c : text) h = (h ^ c) * 1099511628211ull;
        return h;
    }

    std::filesystem::path path(const ReducedModel& m) const {
        char name[40];
        std::snprintf(name, sizeof name, "eig_%016llx.bin",
                      static_cast<unsigned long long>(key(m.params, m.box_length, m.n_modes, m.sector)));
        return dir_ / name;
    }

    /// Fills the eigensystem from the cache if present; returns whether it did.
    bool load(ReducedModel& m) const {
        std::ifstream in(path(m), std::ios::binary);
        if (!in) return false;
        std::int64_t n = 0;
        in.read(reinterpret_cast<char*>(&n), sizeof n);
        if (!in || n != m.dimension()) return false;
        Eigen::VectorXd values(n);
        ReducedModel::Matrix vectors(n, n);
        in.read(reinterpret_cast<char*>(values.data()), std::streamsize(sizeof(double) * n));
        in.read(reinterpret_cast<char*>(vectors.data()), std::streamsize(sizeof(double) * n * n));
        if (!in) return false;
        m.eigenvalues = std::move(values);
        m.eigenvectors = std::move(vectors);
        m.diagonalized = true;
        return true;
    }

    void store(const ReducedModel& m) const {
        if (!m.diagonalized) throw InvalidArgument("cannot cache an undiagonalized model");
        std::filesystem::create_directories(dir_);
        const auto final_path = path(m);
        const auto tmp = final_path.string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary);
            const std::int64_t n = m.dimension();
            out.write(reinterpret_cast<const char*>(&n), sizeof n);
            out.write(reinterpret_cast<const char*>(m.eigenvalues.data()), std::streamsize(sizeof(double) * n));
            out.write(reinterpret_cast<const char*>(m.eigenvectors.data()), std::streamsize(sizeof(double) * n * n));
            if (!out) throw Error("failed to write eigensystem cache " + tmp);
        }
        std::filesystem::rename(tmp, final_path);
    }

    /// Loads or computes (and stores) the eigensystem.
    ReducedModel& diagonalize(ReducedModel& m) const {
        if (!load(m)) {
            collective::diagonalize(m);
            store(m);
        }
        return m;
    }

private:
    std::filesystem::path dir_;
};

}  // namespace collective
