#pragma once

// Fixed 2-dimensional vectors and matrices. Every descriptor map in the
// library acts on the pair (squared mean, mean of squares), so these small
// value types carry most of the arithmetic.

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>

namespace opengossip {

struct Vec2 {
    double x0 = 0.0;
    double x1 = 0.0;

    constexpr double operator[](int i) const { return i == 0 ? x0 : x1; }
    constexpr double& operator[](int i) { return i == 0 ? x0 : x1; }

    constexpr Vec2& operator+=(const Vec2& o) {
        x0 += o.x0;
        x1 += o.x1;
        return *this;
    }
    constexpr Vec2& operator-=(const Vec2& o) {
        x0 -= o.x0;
        x1 -= o.x1;
        return *this;
    }
    constexpr Vec2& operator*=(double s) {
        x0 *= s;
        x1 *= s;
        return *this;
    }

    friend constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
    friend constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
    friend constexpr Vec2 operator*(double s, Vec2 v) { return v *= s; }
    friend constexpr Vec2 operator*(Vec2 v, double s) { return v *= s; }
    friend constexpr bool operator==(const Vec2&, const Vec2&) = default;

    /// (-1, 1) . v, i.e. mean of squares minus squared mean.
    constexpr double spread() const { return x1 - x0; }
    double norm() const { return std::hypot(x0, x1); }
    double max_abs() const { return std::max(std::abs(x0), std::abs(x1)); }
};

/// Row-major 2x2 matrix.
struct Mat2 {
    std::array<std::array<double, 2>, 2> a{};

    static constexpr Mat2 identity() { return Mat2{{{{1.0, 0.0}, {0.0, 1.0}}}}; }
    static constexpr Mat2 diag(double d0, double d1) { return Mat2{{{{d0, 0.0}, {0.0, d1}}}}; }
    static constexpr Mat2 of(double a00, double a01, double a10, double a11) {
        return Mat2{{{{a00, a01}, {a10, a11}}}};
    }

    constexpr double operator()(int i, int j) const { return a[i][j]; }
    constexpr double& operator()(int i, int j) { return a[i][j]; }

    constexpr double trace() const { return a[0][0] + a[1][1]; }
    constexpr double det() const { return a[0][0] * a[1][1] - a[0][1] * a[1][0]; }

    constexpr Mat2& operator+=(const Mat2& o) {
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) a[i][j] += o.a[i][j];
        return *this;
    }
    constexpr Mat2& operator-=(const Mat2& o) {
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) a[i][j] -= o.a[i][j];
        return *this;
    }
    constexpr Mat2& operator*=(double s) {
        for (auto& row : a)
            for (auto& v : row) v *= s;
        return *this;
    }

    friend constexpr Mat2 operator+(Mat2 l, const Mat2& r) { return l += r; }
    friend constexpr Mat2 operator-(Mat2 l, const Mat2& r) { return l -= r; }
    friend constexpr Mat2 operator*(double s, Mat2 m) { return m *= s; }
    friend constexpr Mat2 operator*(const Mat2& l, const Mat2& r) {
        Mat2 out;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) out.a[i][j] = l.a[i][0] * r.a[0][j] + l.a[i][1] * r.a[1][j];
        return out;
    }
    friend constexpr Vec2 operator*(const Mat2& m, const Vec2& v) {
        return {m.a[0][0] * v.x0 + m.a[0][1] * v.x1, m.a[1][0] * v.x0 + m.a[1][1] * v.x1};
    }
    friend constexpr bool operator==(const Mat2&, const Mat2&) = default;

    /// Largest entrywise absolute difference.
    friend double max_abs_diff(const Mat2& l, const Mat2& r) {
        double m = 0.0;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) m = std::max(m, std::abs(l.a[i][j] - r.a[i][j]));
        return m;
    }

    constexpr bool nonnegative() const {
        return a[0][0] >= 0.0 && a[0][1] >= 0.0 && a[1][0] >= 0.0 && a[1][1] >= 0.0;
    }
};

/// Solves m * x = rhs by Cramer's rule; caller guarantees det != 0.
inline Vec2 solve(const Mat2& m, const Vec2& rhs) {
    const double d = m.det();
    return {(rhs.x0 * m(1, 1) - m(0, 1) * rhs.x1) / d, (m(0, 0) * rhs.x1 - m(1, 0) * rhs.x0) / d};
}

inline std::ostream& operator<<(std::ostream& os, const Vec2& v) {
    return os << "(" << v.x0 << ", " << v.x1 << ")";
}

inline std::ostream& operator<<(std::ostream& os, const Mat2& m) {
    return os << "[[" << m(0, 0) << ", " << m(0, 1) << "], [" << m(1, 0) << ", " << m(1, 1) << "]]";
}

}  // namespace opengossip
