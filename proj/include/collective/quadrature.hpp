#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <queue>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "errors.hpp"

namespace collective::quad {

struct Tolerance {
    double abs_tol = 1e-13;
    double rel_tol = 1e-12;
    int max_panels = 4000;
};

template <class T>
struct Panel {
    double a = 0.0;
    double b = 0.0;
    T value{};
    double error = 0.0;
    double l1 = 0.0;
};

template <class T>
struct Result {
    T value{};
    double error = 0.0;
    bool converged = false;
    std::vector<Panel<T>> panels;
};

namespace detail {

struct Rule {
    // 21-point Kronrod rule on [-1, 1]: nodes[0] is the centre, the Gauss
    // nodes of the embedded 10-point rule sit at odd indices.
    std::vector<double> nodes;
    std::vector<double> kronrod;
    std::vector<double> gauss;
};

inline const Rule& gk21() {
    static const Rule rule = [] {
        using K = boost::math::quadrature::gauss_kronrod<double, 21>;
        using G = boost::math::quadrature::gauss<double, 10>;
        auto vec = [](const auto& a) { return std::vector<double>(a.begin(), a.end()); };
        return Rule{vec(K::abscissa()), vec(K::weights()), vec(G::weights())};
    }();
    return rule;
}

template <class F>
using value_t = std::decay_t<std::invoke_result_t<const F&, double>>;

}  // namespace detail

/// One Gauss-Kronrod 21 panel. The error estimate is |K21 - G10|, floored
/// at a few ulps of the absolute integral.
template <class F>
Panel<detail::value_t<F>> gk21(const F& f, double a, double b) {
    using T = detail::value_t<F>;
    const auto& r = detail::gk21();
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const T f0 = f(c);
    T k = f0 * r.kronrod[0];
    T g{};
    double l1 = std::abs(f0) * r.kronrod[0];
    for (std::size_t i = 1; i < r.nodes.size(); ++i) {
        const T fp = f(c + h * r.nodes[i]);
        const T fm = f(c - h * r.nodes[i]);
        k += (fp + fm) * r.kronrod[i];
        l1 += (std::abs(fp) + std::abs(fm)) * r.kronrod[i];
        if (i % 2 == 1) g += (fp + fm) * r.gauss[i / 2];
    }
    Panel<T> p{a, b, k * h, 0.0, l1 * std::abs(h)};
    p.error = std::max(std::abs((k - g) * h), 50.0 * std::numeric_limits<double>::epsilon() * p.l1);
    return p;
}

/// Globally adaptive integration over the partition given by `breaks`
/// (sorted, at least two entries). Panels wider than `max_width` are split
/// up front. Does not throw; check `converged`.
template <class F>
Result<detail::value_t<F>> adaptive(const F& f, std::vector<double> breaks, const Tolerance& tol,
                                    double max_width = std::numeric_limits<double>::infinity()) {
    using T = detail::value_t<F>;
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    if (breaks.size() < 2) return {T{}, 0.0, true, {}};

    auto worse = [](const Panel<T>& x, const Panel<T>& y) { return x.error < y.error; };
    std::priority_queue<Panel<T>, std::vector<Panel<T>>, decltype(worse)> queue(worse);
    std::vector<Panel<T>> done;  // panels that cannot be refined further
    T total{};
    double err = 0.0;
    int count = 0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const double a = breaks[i], b = breaks[i + 1];
        const int pieces = std::isfinite(max_width) ? std::max(1, int(std::ceil((b - a) / max_width))) : 1;
        for (int j = 0; j < pieces; ++j) {
            const double lo = a + (b - a) * j / pieces;
            const double hi = j + 1 == pieces ? b : a + (b - a) * (j + 1) / pieces;
            auto p = gk21(f, lo, hi);
            total += p.value;
            err += p.error;
            queue.push(p);
            ++count;
        }
    }

    auto target = [&] { return std::max(tol.abs_tol, tol.rel_tol * std::abs(total)); };
    while (err > target() && !queue.empty() && count < tol.max_panels) {
        auto p = queue.top();
        queue.pop();
        const double mid = 0.5 * (p.a + p.b);
        const double floor = 50.0 * std::numeric_limits<double>::epsilon() * p.l1;
        if (p.error <= floor || !(mid > p.a && mid < p.b) ||
            (p.b - p.a) < 1e-13 * std::max(1.0, std::abs(mid))) {
            done.push_back(p);
            continue;
        }
        auto left = gk21(f, p.a, mid);
        auto right = gk21(f, mid, p.b);
        total += left.value + right.value - p.value;
        err += left.error + right.error - p.error;
        queue.push(left);
        queue.push(right);
        ++count;
    }

    Result<T> out;
    out.converged = err <= target() || queue.empty();
    out.panels = std::move(done);
    out.panels.reserve(out.panels.size() + queue.size());
    while (!queue.empty()) {
        out.panels.push_back(queue.top());
        queue.pop();
    }
    std::sort(out.panels.begin(), out.panels.end(), [](const auto& x, const auto& y) { return x.a < y.a; });
    // Re-sum in order so the value does not carry the running-update drift.
    out.value = T{};
    out.error = 0.0;
    for (const auto& p : out.panels) {
        out.value += p.value;
        out.error += p.error;
    }
    return out;
}

template <class F>
detail::value_t<F> integrate(const F& f, std::vector<double> breaks, const Tolerance& tol,
                             const char* what = "integral") {
    auto r = adaptive(f, std::move(breaks), tol);
    if (!r.converged)
        throw ConvergenceError(std::string("quadrature did not converge: ") + what +
                               " (error estimate " + std::to_string(r.error) + ")");
    return r.value;
}

template <class F>
detail::value_t<F> integrate(const F& f, double a, double b, const Tolerance& tol,
                             const char* what = "integral") {
    return integrate(f, std::vector<double>{a, b}, tol, what);
}

/// Integral over [a, inf) through k = a + scale * s / (1 - s). `breaks` are
/// optional interior points in k.
template <class F>
detail::value_t<F> integrate_halfline(const F& f, double a, double scale, const Tolerance& tol,
                                      std::vector<double> breaks = {},
                                      const char* what = "half-line integral") {
    using T = detail::value_t<F>;
    auto g = [&](double s) -> T {
        const double u = 1.0 - s;
        const double k = a + scale * s / u;
        if (!std::isfinite(k)) return T{};
        return f(k) * (scale / (u * u));
    };
    std::vector<double> sb{0.0, 1.0};
    for (double k : breaks)
        if (k > a) sb.push_back((k - a) / (k - a + scale));
    return integrate(g, std::move(sb), tol, what);
}

}  // namespace collective::quad
