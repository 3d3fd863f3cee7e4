#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace tem {

// Forward-mode dual number with a fixed-width tangent block. Seeding unit
// tangents in N directions and evaluating once yields a full Jacobian row
// block; nothing here allocates, so stage kernels can run in parallel.
template <int N>
struct Dual {
    double v{0.0};
    std::array<double, N> d{};

    Dual() = default;
    Dual(double value) : v(value) { d.fill(0.0); } // NOLINT(google-explicit-constructor)
    Dual(double value, int seed_index) : v(value)
    {
        d.fill(0.0);
        d[static_cast<std::size_t>(seed_index)] = 1.0;
    }

    Dual& operator+=(const Dual& o)
    {
        v += o.v;
        for (int i = 0; i < N; ++i) d[i] += o.d[i];
        return *this;
    }
    Dual& operator-=(const Dual& o)
    {
        v -= o.v;
        for (int i = 0; i < N; ++i) d[i] -= o.d[i];
        return *this;
    }
    Dual& operator*=(const Dual& o)
    {
        for (int i = 0; i < N; ++i) d[i] = d[i] * o.v + v * o.d[i];
        v *= o.v;
        return *this;
    }
    Dual& operator/=(const Dual& o)
    {
        const double inv = 1.0 / o.v;
        const double q = v * inv;
        for (int i = 0; i < N; ++i) d[i] = (d[i] - q * o.d[i]) * inv;
        v = q;
        return *this;
    }
};

template <int N> inline Dual<N> operator+(Dual<N> a, const Dual<N>& b) { return a += b; }
template <int N> inline Dual<N> operator-(Dual<N> a, const Dual<N>& b) { return a -= b; }
template <int N> inline Dual<N> operator*(Dual<N> a, const Dual<N>& b) { return a *= b; }
template <int N> inline Dual<N> operator/(Dual<N> a, const Dual<N>& b) { return a /= b; }

template <int N> inline Dual<N> operator+(Dual<N> a, double b) { a.v += b; return a; }
template <int N> inline Dual<N> operator+(double a, Dual<N> b) { b.v += a; return b; }
template <int N> inline Dual<N> operator-(Dual<N> a, double b) { a.v -= b; return a; }
template <int N> inline Dual<N> operator-(double a, Dual<N> b)
{
    b.v = a - b.v;
    for (int i = 0; i < N; ++i) b.d[i] = -b.d[i];
    return b;
}
template <int N> inline Dual<N> operator*(Dual<N> a, double b)
{
    a.v *= b;
    for (int i = 0; i < N; ++i) a.d[i] *= b;
    return a;
}
template <int N> inline Dual<N> operator*(double a, Dual<N> b) { return b * a; }
template <int N> inline Dual<N> operator/(Dual<N> a, double b) { return a * (1.0 / b); }
template <int N> inline Dual<N> operator/(double a, const Dual<N>& b)
{
    Dual<N> r;
    const double inv = 1.0 / b.v;
    r.v = a * inv;
    const double s = -r.v * inv;
    for (int i = 0; i < N; ++i) r.d[i] = s * b.d[i];
    return r;
}
template <int N> inline Dual<N> operator-(Dual<N> a)
{
    a.v = -a.v;
    for (int i = 0; i < N; ++i) a.d[i] = -a.d[i];
    return a;
}
template <int N> inline Dual<N> operator+(const Dual<N>& a) { return a; }

template <int N> inline bool operator<(const Dual<N>& a, const Dual<N>& b) { return a.v < b.v; }
template <int N> inline bool operator>(const Dual<N>& a, const Dual<N>& b) { return a.v > b.v; }
template <int N> inline bool operator<(const Dual<N>& a, double b) { return a.v < b; }
template <int N> inline bool operator>(const Dual<N>& a, double b) { return a.v > b; }
template <int N> inline bool operator<(double a, const Dual<N>& b) { return a < b.v; }
template <int N> inline bool operator>(double a, const Dual<N>& b) { return a > b.v; }
template <int N> inline bool operator<=(const Dual<N>& a, double b) { return a.v <= b; }
template <int N> inline bool operator>=(const Dual<N>& a, double b) { return a.v >= b; }

template <int N>
inline Dual<N> chain(const Dual<N>& x, double fv, double dfdx)
{
    Dual<N> r;
    r.v = fv;
    for (int i = 0; i < N; ++i) r.d[i] = dfdx * x.d[i];
    return r;
}

template <int N> inline Dual<N> exp(const Dual<N>& x)
{
    const double e = std::exp(x.v);
    return chain(x, e, e);
}
template <int N> inline Dual<N> log(const Dual<N>& x) { return chain(x, std::log(x.v), 1.0 / x.v); }
template <int N> inline Dual<N> sqrt(const Dual<N>& x)
{
    const double s = std::sqrt(x.v);
    return chain(x, s, 0.5 / s);
}
template <int N> inline Dual<N> pow(const Dual<N>& x, double p)
{
    const double f = std::pow(x.v, p);
    return chain(x, f, p * f / x.v);
}
template <int N> inline Dual<N> cbrt(const Dual<N>& x)
{
    const double f = std::cbrt(x.v);
    return chain(x, f, 1.0 / (3.0 * f * f));
}
template <int N> inline Dual<N> tanh(const Dual<N>& x)
{
    const double t = std::tanh(x.v);
    return chain(x, t, 1.0 - t * t);
}
// log(1 + exp(t)) with a linear tail to avoid overflow.
template <int N> inline Dual<N> softplus(const Dual<N>& x)
{
    if (x.v > 34.0) return x;
    if (x.v < -34.0) return chain(x, std::exp(x.v), std::exp(x.v));
    const double e = std::exp(x.v);
    return chain(x, std::log1p(e), e / (1.0 + e));
}
inline double softplus(double x)
{
    if (x > 34.0) return x;
    if (x < -34.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

template <int N> inline double value(const Dual<N>& x) { return x.v; }
inline double value(double x) { return x; }

template <int N> inline bool is_finite(const Dual<N>& x)
{
    if (!std::isfinite(x.v)) return false;
    for (int i = 0; i < N; ++i)
        if (!std::isfinite(x.d[i])) return false;
    return true;
}
inline bool is_finite(double x) { return std::isfinite(x); }

} // namespace tem
