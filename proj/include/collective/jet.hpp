#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "errors.hpp"

namespace collective {

/// Truncated Taylor series sum_n c_n (k - center)^n, n = 0..order, with
/// exact truncated arithmetic. T is any complex-like field type.
template <class T>
class Jet {
public:
    Jet() = default;
    Jet(T center, std::size_t order) : center_(center), c_(order + 1, T(0)) {}

    /// The identity function k at `center`.
    static Jet variable(T center, std::size_t order) {
        Jet j(center, order);
        j.c_[0] = center;
        if (order >= 1) j.c_[1] = T(1);
        return j;
    }

    static Jet constant(T center, std::size_t order, T value) {
        Jet j(center, order);
        j.c_[0] = value;
        return j;
    }

    std::size_t order() const { return c_.size() - 1; }
    const T& center() const { return center_; }
    const T& operator[](std::size_t n) const { return c_.at(n); }
    T& operator[](std::size_t n) { return c_.at(n); }
    const std::vector<T>& coeffs() const { return c_; }

    /// f^(n)(center) = n! c_n.
    T derivative(std::size_t n) const {
        if (n > order()) throw InvalidArgument("jet order insufficient for requested derivative");
        T f(1);
        for (std::size_t i = 2; i <= n; ++i) f *= T(double(i));
        return f * c_[n];
    }

    Jet& operator+=(const Jet& o) {
        check(o);
        for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
        return *this;
    }
    Jet& operator-=(const Jet& o) {
        check(o);
        for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
        return *this;
    }
    Jet& operator*=(const T& s) {
        for (auto& v : c_) v *= s;
        return *this;
    }

    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator*(Jet a, const T& s) { return a *= s; }
    friend Jet operator*(const T& s, Jet a) { return a *= s; }
    friend Jet operator+(Jet a, const T& s) {
        a.c_[0] += s;
        return a;
    }
    friend Jet operator+(const T& s, Jet a) { return a + s; }

    /// Cauchy product truncated at the common order.
    friend Jet operator*(const Jet& a, const Jet& b) {
        a.check(b);
        Jet r(a.center_, a.order());
        for (std::size_t n = 0; n < r.c_.size(); ++n) {
            T s(0);
            for (std::size_t m = 0; m <= n; ++m) s += a.c_[m] * b.c_[n - m];
            r.c_[n] = s;
        }
        return r;
    }

    friend Jet operator/(const Jet& a, const Jet& b) {
        a.check(b);
        if (b.c_[0] == T(0)) throw InvalidArgument("jet division by a series with zero constant term");
        Jet r(a.center_, a.order());
        for (std::size_t n = 0; n < r.c_.size(); ++n) {
            T s = a.c_[n];
            for (std::size_t m = 0; m < n; ++m) s -= r.c_[m] * b.c_[n - m];
            r.c_[n] = s / b.c_[0];
        }
        return r;
    }

    /// Non-negative integer power by repeated squaring.
    Jet pow(unsigned p) const {
        Jet result = constant(center_, order(), T(1));
        Jet base = *this;
        while (p) {
            if (p & 1u) result = result * base;
            p >>= 1u;
            if (p) base = base * base;
        }
        return result;
    }

private:
    void check(const Jet& o) const {
        if (o.c_.size() != c_.size()) throw InvalidArgument("jet orders differ");
    }

    T center_{};
    std::vector<T> c_{T(0)};
};

/// exp of a jet: e' = a' e, solved coefficient by coefficient.
template <class T, class Exp>
Jet<T> exp(const Jet<T>& a, Exp&& scalar_exp) {
    Jet<T> e(a.center(), a.order());
    e[0] = scalar_exp(a[0]);
    for (std::size_t n = 1; n <= a.order(); ++n) {
        T s(0);
        for (std::size_t m = 1; m <= n; ++m) s += T(double(m)) * a[m] * e[n - m];
        e[n] = s / T(double(n));
    }
    return e;
}

template <class T>
Jet<T> exp(const Jet<T>& a) {
    using std::exp;
    return exp(a, [](const T& v) { return exp(v); });
}

}  // namespace collective
