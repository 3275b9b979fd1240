#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace qpm {

using Vec4 = std::array<double, 4>;

/// Dense 4x4 matrix, row-major. Small enough that everything is by value.
struct Mat4 {
    std::array<double, 16> a{};

    double& operator()(int r, int c) { return a[static_cast<std::size_t>(4 * r + c)]; }
    double operator()(int r, int c) const { return a[static_cast<std::size_t>(4 * r + c)]; }

    static Mat4 zero() { return Mat4{}; }

    static Mat4 identity() {
        Mat4 m;
        for (int i = 0; i < 4; ++i) m(i, i) = 1.0;
        return m;
    }

    static Mat4 diagonal(double d0, double d1, double d2, double d3) {
        Mat4 m;
        m(0, 0) = d0;
        m(1, 1) = d1;
        m(2, 2) = d2;
        m(3, 3) = d3;
        return m;
    }
};

inline Mat4 operator+(const Mat4& x, const Mat4& y) {
    Mat4 r;
    for (std::size_t k = 0; k < 16; ++k) r.a[k] = x.a[k] + y.a[k];
    return r;
}

inline Mat4 operator-(const Mat4& x, const Mat4& y) {
    Mat4 r;
    for (std::size_t k = 0; k < 16; ++k) r.a[k] = x.a[k] - y.a[k];
    return r;
}

inline Mat4 operator*(double s, const Mat4& x) {
    Mat4 r;
    for (std::size_t k = 0; k < 16; ++k) r.a[k] = s * x.a[k];
    return r;
}

inline Mat4 operator*(const Mat4& x, const Mat4& y) {
    Mat4 r;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            double s = 0.0;
            for (int k = 0; k < 4; ++k) s += x(i, k) * y(k, j);
            r(i, j) = s;
        }
    return r;
}

inline Vec4 operator*(const Mat4& m, const Vec4& v) {
    Vec4 r{};
    for (int i = 0; i < 4; ++i) {
        double s = 0.0;
        for (int j = 0; j < 4; ++j) s += m(i, j) * v[static_cast<std::size_t>(j)];
        r[static_cast<std::size_t>(i)] = s;
    }
    return r;
}

inline double trace(const Mat4& m) { return m(0, 0) + m(1, 1) + m(2, 2) + m(3, 3); }

inline double max_abs(const Mat4& m) {
    double mx = 0.0;
    for (double v : m.a) mx = std::max(mx, std::abs(v));
    return mx;
}

/// Row-sum norm.
inline double inf_norm(const Mat4& m) {
    double mx = 0.0;
    for (int i = 0; i < 4; ++i) {
        double s = 0.0;
        for (int j = 0; j < 4; ++j) s += std::abs(m(i, j));
        mx = std::max(mx, s);
    }
    return mx;
}

inline Mat4 transpose(const Mat4& m) {
    Mat4 r;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) r(i, j) = m(j, i);
    return r;
}

/// Cofactor expansion along 2x2 minors; exact arithmetic structure, no pivot noise.
inline double det(const Mat4& m) {
    const double s0 = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    const double s1 = m(0, 0) * m(1, 2) - m(0, 2) * m(1, 0);
    const double s2 = m(0, 0) * m(1, 3) - m(0, 3) * m(1, 0);
    const double s3 = m(0, 1) * m(1, 2) - m(0, 2) * m(1, 1);
    const double s4 = m(0, 1) * m(1, 3) - m(0, 3) * m(1, 1);
    const double s5 = m(0, 2) * m(1, 3) - m(0, 3) * m(1, 2);

    const double c5 = m(2, 2) * m(3, 3) - m(2, 3) * m(3, 2);
    const double c4 = m(2, 1) * m(3, 3) - m(2, 3) * m(3, 1);
    const double c3 = m(2, 1) * m(3, 2) - m(2, 2) * m(3, 1);
    const double c2 = m(2, 0) * m(3, 3) - m(2, 3) * m(3, 0);
    const double c1 = m(2, 0) * m(3, 2) - m(2, 2) * m(3, 0);
    const double c0 = m(2, 0) * m(3, 1) - m(2, 1) * m(3, 0);

    return s0 * c5 - s1 * c4 + s2 * c3 + s3 * c2 - s4 * c1 + s5 * c0;
}

/// Adjugate via 2x2 minors; inverse(m) = adjugate(m) / det(m). Used where the
/// determinant is known to be near 1, so the division is benign.
inline Mat4 adjugate(const Mat4& m) {
    const double s0 = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    const double s1 = m(0, 0) * m(1, 2) - m(0, 2) * m(1, 0);
    const double s2 = m(0, 0) * m(1, 3) - m(0, 3) * m(1, 0);
    const double s3 = m(0, 1) * m(1, 2) - m(0, 2) * m(1, 1);
    const double s4 = m(0, 1) * m(1, 3) - m(0, 3) * m(1, 1);
    const double s5 = m(0, 2) * m(1, 3) - m(0, 3) * m(1, 2);

    const double c5 = m(2, 2) * m(3, 3) - m(2, 3) * m(3, 2);
    const double c4 = m(2, 1) * m(3, 3) - m(2, 3) * m(3, 1);
    const double c3 = m(2, 1) * m(3, 2) - m(2, 2) * m(3, 1);
    const double c2 = m(2, 0) * m(3, 3) - m(2, 3) * m(3, 0);
    const double c1 = m(2, 0) * m(3, 2) - m(2, 2) * m(3, 0);
    const double c0 = m(2, 0) * m(3, 1) - m(2, 1) * m(3, 0);

    Mat4 r;
    r(0, 0) = m(1, 1) * c5 - m(1, 2) * c4 + m(1, 3) * c3;
    r(0, 1) = -m(0, 1) * c5 + m(0, 2) * c4 - m(0, 3) * c3;
    r(0, 2) = m(3, 1) * s5 - m(3, 2) * s4 + m(3, 3) * s3;
    r(0, 3) = -m(2, 1) * s5 + m(2, 2) * s4 - m(2, 3) * s3;
    r(1, 0) = -m(1, 0) * c5 + m(1, 2) * c2 - m(1, 3) * c1;
    r(1, 1) = m(0, 0) * c5 - m(0, 2) * c2 + m(0, 3) * c1;
    r(1, 2) = -m(3, 0) * s5 + m(3, 2) * s2 - m(3, 3) * s1;
    r(1, 3) = m(2, 0) * s5 - m(2, 2) * s2 + m(2, 3) * s1;
    r(2, 0) = m(1, 0) * c4 - m(1, 1) * c2 + m(1, 3) * c0;
    r(2, 1) = -m(0, 0) * c4 + m(0, 1) * c2 - m(0, 3) * c0;
    r(2, 2) = m(3, 0) * s4 - m(3, 1) * s2 + m(3, 3) * s0;
    r(2, 3) = -m(2, 0) * s4 + m(2, 1) * s2 - m(2, 3) * s0;
    r(3, 0) = -m(1, 0) * c3 + m(1, 1) * c1 - m(1, 2) * c0;
    r(3, 1) = m(0, 0) * c3 - m(0, 1) * c1 + m(0, 2) * c0;
    r(3, 2) = -m(3, 0) * s3 + m(3, 1) * s1 - m(3, 2) * s0;
    r(3, 3) = m(2, 0) * s3 - m(2, 1) * s1 + m(2, 2) * s0;
    return r;
}

/// Gauss-Jordan with partial pivoting. Throws on a numerically singular pivot.
inline Mat4 inverse(const Mat4& m) {
    Mat4 a = m;
    Mat4 inv = Mat4::identity();
    for (int col = 0; col < 4; ++col) {
        int piv = col;
        for (int r = col + 1; r < 4; ++r)
            if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
        if (!(std::abs(a(piv, col)) > 0.0) || !std::isfinite(a(piv, col)))
            throw std::domain_error("inverse: singular matrix");
        if (piv != col)
            for (int c = 0; c < 4; ++c) {
                std::swap(a(piv, c), a(col, c));
                std::swap(inv(piv, c), inv(col, c));
            }
        const double d = a(col, col);
        for (int c = 0; c < 4; ++c) {
            a(col, c) /= d;
            inv(col, c) /= d;
        }
        for (int r = 0; r < 4; ++r) {
            if (r == col) continue;
            const double f = a(r, col);
            if (f == 0.0) continue;
            for (int c = 0; c < 4; ++c) {
                a(r, c) -= f * a(col, c);
                inv(r, c) -= f * inv(col, c);
            }
        }
    }
    return inv;
}

}  // namespace qpm
