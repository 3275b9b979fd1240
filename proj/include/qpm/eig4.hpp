#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <vector>

#include "qpm/mat4.hpp"

namespace qpm {

using cplx = std::complex<double>;

/// Eigenvalue residual exceeded the certification bound even after the
/// multiple-root fallback; the matrix is too ill-conditioned to trust.
struct EigenFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Eigen4 {
    std::array<cplx, 4> values{};
    std::array<std::array<cplx, 4>, 4> vectors{};  // vectors[k] pairs with values[k], unit norm
    std::array<double, 4> residuals{};             // ||M v - lambda v||_2 per pair
};

namespace detail {

/// Monic characteristic polynomial lambda^4 + c[3] l^3 + c[2] l^2 + c[1] l + c[0]
/// by the Faddeev-LeVerrier recursion (exact in the matrix entries).
inline std::array<double, 4> char_poly(const Mat4& A) {
    std::array<double, 4> c{};
    Mat4 B = A;
    c[3] = -trace(B);
    B = A * (B + c[3] * Mat4::identity());
    c[2] = -trace(B) / 2.0;
    B = A * (B + c[2] * Mat4::identity());
    c[1] = -trace(B) / 3.0;
    B = A * (B + c[1] * Mat4::identity());
    c[0] = -trace(B) / 4.0;
    return c;
}

inline cplx poly_eval(const std::array<double, 4>& c, cplx x) {
    return (((x + c[3]) * x + c[2]) * x + c[1]) * x + c[0];
}

inline cplx poly_deriv(const std::array<double, 4>& c, cplx x) {
    return ((4.0 * x + 3.0 * c[3]) * x + 2.0 * c[2]) * x + c[1];
}

/// Francis double-shift QR on a real upper Hessenberg matrix (classic hqr).
/// n is tiny here so no balancing; exceptional shifts cover stagnation.
inline void hqr(std::vector<std::vector<double>>& a, int n, std::vector<double>& wr,
                std::vector<double>& wi) {
    auto sign = [](double x, double y) { return y >= 0.0 ? std::abs(x) : -std::abs(x); };
    double anorm = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::abs(a[i][j]);
    int nn = n - 1;
    double t = 0.0;
    while (nn >= 0) {
        int its = 0;
        int l;
        do {
            for (l = nn; l >= 1; --l) {
                double s = std::abs(a[l - 1][l - 1]) + std::abs(a[l][l]);
                if (s == 0.0) s = anorm;
                if (std::abs(a[l][l - 1]) + s == s) {
                    a[l][l - 1] = 0.0;
                    break;
                }
            }
            if (l < 0) l = 0;
            double x = a[nn][nn];
            if (l == nn) {
                wr[nn] = x + t;
                wi[nn] = 0.0;
                --nn;
            } else {
                double y = a[nn - 1][nn - 1];
                double w = a[nn][nn - 1] * a[nn - 1][nn];
                if (l == nn - 1) {
                    double p = 0.5 * (y - x);
                    double q = p * p + w;
                    double z = std::sqrt(std::abs(q));
                    x += t;
                    if (q >= 0.0) {
                        z = p + sign(z, p);
                        wr[nn - 1] = wr[nn] = x + z;
                        if (z != 0.0) wr[nn] = x - w / z;
                        wi[nn - 1] = wi[nn] = 0.0;
                    } else {
                        wr[nn - 1] = wr[nn] = x + p;
                        wi[nn - 1] = -(wi[nn] = z);
                    }
                    nn -= 2;
                } else {
                    if (its == 30) throw EigenFailure("QR iteration did not converge");
                    if (its == 10 || its == 20) {
                        t += x;
                        for (int i = 0; i <= nn; ++i) a[i][i] -= x;
                        double s = std::abs(a[nn][nn - 1]) + std::abs(a[nn - 1][nn - 2]);
                        y = x = 0.75 * s;
                        w = -0.4375 * s * s;
                    }
                    ++its;
                    double p = 0, q = 0, r = 0;
                    int m;
                    for (m = nn - 2; m >= l; --m) {
                        double z = a[m][m];
                        double rr = x - z;
                        double ss = y - z;
                        p = (rr * ss - w) / a[m + 1][m] + a[m][m + 1];
                        q = a[m + 1][m + 1] - z - rr - ss;
                        r = a[m + 2][m + 1];
                        double sc = std::abs(p) + std::abs(q) + std::abs(r);
                        p /= sc;
                        q /= sc;
                        r /= sc;
                        if (m == l) break;
                        double u = std::abs(a[m][m - 1]) * (std::abs(q) + std::abs(r));
                        double v = std::abs(p) * (std::abs(a[m - 1][m - 1]) + std::abs(z) +
                                                  std::abs(a[m + 1][m + 1]));
                        if (u + v == v) break;
                    }
                    for (int i = m + 2; i <= nn; ++i) {
                        a[i][i - 2] = 0.0;
                        if (i != m + 2) a[i][i - 3] = 0.0;
                    }
                    for (int k = m; k <= nn - 1; ++k) {
                        double x2 = 0.0;
                        if (k != m) {
                            p = a[k][k - 1];
                            q = a[k + 1][k - 1];
                            r = 0.0;
                            if (k != nn - 1) r = a[k + 2][k - 1];
                            x2 = std::abs(p) + std::abs(q) + std::abs(r);
                            if (x2 != 0.0) {
                                p /= x2;
                                q /= x2;
                                r /= x2;
                            }
                        }
                        double s = sign(std::sqrt(p * p + q * q + r * r), p);
                        if (s != 0.0) {
                            if (k == m) {
                                if (l != m) a[k][k - 1] = -a[k][k - 1];
                            } else {
                                a[k][k - 1] = -s * x2;
                            }
                            double pp = p + s;
                            double x3 = pp / s, y3 = q / s, z3 = r / s;
                            q /= pp;
                            r /= pp;
                            for (int j = k; j <= nn; ++j) {
                                double p2 = a[k][j] + q * a[k + 1][j];
                                if (k != nn - 1) {
                                    p2 += r * a[k + 2][j];
                                    a[k + 2][j] -= p2 * z3;
                                }
                                a[k + 1][j] -= p2 * y3;
                                a[k][j] -= p2 * x3;
                            }
                            int mmin = nn < k + 3 ? nn : k + 3;
                            for (int i = l; i <= mmin; ++i) {
                                double p2 = x3 * a[i][k] + y3 * a[i][k + 1];
                                if (k != nn - 1) {
                                    p2 += z3 * a[i][k + 2];
                                    a[i][k + 2] -= p2 * r;
                                }
                                a[i][k + 1] -= p2 * q;
                                a[i][k] -= p2;
                            }
                        }
                    }
                }
            }
        } while (l < nn - 1 && nn >= 0);
    }
}

/// Quartic roots via the top-row companion matrix. Conjugate pairing is exact
/// because the 2x2 deflation step emits +/- the same imaginary part.
inline std::array<cplx, 4> quartic_roots(const std::array<double, 4>& c) {
    std::vector<std::vector<double>> a(4, std::vector<double>(4, 0.0));
    a[0][0] = -c[3];
    a[0][1] = -c[2];
    a[0][2] = -c[1];
    a[0][3] = -c[0];
    a[1][0] = a[2][1] = a[3][2] = 1.0;
    std::vector<double> wr(4), wi(4);
    hqr(a, 4, wr, wi);
    std::array<cplx, 4> roots;
    for (int k = 0; k < 4; ++k) roots[static_cast<std::size_t>(k)] = {wr[static_cast<std::size_t>(k)], wi[static_cast<std::size_t>(k)]};
    return roots;
}

/// Newton refinement against the characteristic polynomial. Complex roots are
/// polished once per conjugate pair and mirrored so pairing stays exact.
inline void polish_roots(const std::array<double, 4>& c, std::array<cplx, 4>& roots) {
    auto polish_one = [&c](cplx z) {
        for (int it = 0; it < 4; ++it) {
            const cplx p = poly_eval(c, z);
            const cplx dp = poly_deriv(c, z);
            const double scale = std::max({1.0, std::abs(z)});
            if (std::abs(dp) < 1e-13 * scale * scale * scale) break;  // multiple root, leave it
            const cplx step = p / dp;
            if (!(std::abs(step) < 0.5 * std::max(1.0, std::abs(z)))) break;
            z -= step;
            if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(z))) break;
        }
        return z;
    };
    std::array<bool, 4> done{};
    for (std::size_t k = 0; k < 4; ++k) {
        if (done[k]) continue;
        if (roots[k].imag() == 0.0) {
            cplx z = polish_one(roots[k]);
            roots[k] = {z.real(), 0.0};  // real roots stay real
            done[k] = true;
        } else {
            roots[k] = polish_one(roots[k]);
            done[k] = true;
        }
    }
    // re-pair conjugates exactly: for each root with Im > 0 find its mirror
    for (std::size_t k = 0; k < 4; ++k) {
        if (roots[k].imag() <= 0.0) continue;
        std::size_t best = 4;
        double bd = 1e300;
        for (std::size_t j = 0; j < 4; ++j) {
            if (j == k || roots[j].imag() >= 0.0) continue;
            const double d = std::abs(roots[j] - std::conj(roots[k]));
            if (d < bd) {
                bd = d;
                best = j;
            }
        }
        if (best < 4) roots[best] = std::conj(roots[k]);
    }
}

/// Roots of a palindromic quartic l^4 + c3 l^3 + c2 l^2 + c3 l + 1 through
/// the substitution w = l + 1/l, which drops it to w^2 + c3 w + (c2 - 2) = 0.
/// Reciprocal partners come out exact by construction, and no coefficient of
/// the reduced quadratic mixes scales, so huge spectra (l, 1/l far apart)
/// stay accurate where the companion route loses them to cancellation.
inline std::array<cplx, 4> palindromic_roots(double c3, double c2) {
    const double disc = c3 * c3 - 4.0 * (c2 - 2.0);
    std::array<cplx, 2> w;
    if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        const double q = -0.5 * (c3 + (c3 >= 0.0 ? sq : -sq));
        if (q != 0.0) {
            w[0] = q;
            w[1] = (c2 - 2.0) / q;
        } else {
            w[0] = w[1] = -0.5 * c3;
        }
    } else {
        // complex pair: direct form is cancellation-free
        w[0] = cplx(-0.5 * c3, 0.5 * std::sqrt(-disc));
        w[1] = std::conj(w[0]);
    }

    auto unfold = [](const cplx& wv) -> std::array<cplx, 2> {
        if (wv.imag() == 0.0) {
            const double x = wv.real();
            if (std::abs(x) <= 2.0) {
                // unit-circle pair, exactly conjugate
                const double im = std::sqrt(std::max(0.0, 4.0 - x * x)) / 2.0;
                return {cplx(x / 2.0, im), cplx(x / 2.0, -im)};
            }
            const double sq = std::sqrt(x * x - 4.0);
            const double big = 0.5 * (x + (x >= 0.0 ? sq : -sq));
            return {cplx(big, 0.0), cplx(1.0 / big, 0.0)};
        }
        const cplx sq = std::sqrt(wv * wv - 4.0);
        const cplx a = 0.5 * (wv + sq), b = 0.5 * (wv - sq);
        const cplx big = std::abs(a) >= std::abs(b) ? a : b;
        return {big, 1.0 / big};
    };

    const auto p0 = unfold(w[0]);
    std::array<cplx, 4> roots;
    roots[0] = p0[0];
    roots[1] = p0[1];
    if (w[0].imag() == 0.0) {
        const auto p1 = unfold(w[1]);
        roots[2] = p1[0];
        roots[3] = p1[1];
    } else {
        // quartet: second pair is the exact conjugate of the first
        roots[2] = std::conj(p0[0]);
        roots[3] = std::conj(p0[1]);
    }
    return roots;
}

/// Best estimate of an m-fold root near z: an m-fold root of p is a simple
/// root of the (m-1)th derivative, where Newton converges quadratically.
inline cplx refine_multiple_root(const std::array<double, 4>& c, cplx z, int m) {
    if (m >= 4) return cplx(-c[3] / 4.0, 0.0);
    if (m == 3) {
        // p'' = 12 l^2 + 6 c3 l + 2 c2; pick the root nearest z
        const cplx disc = std::sqrt(cplx(36.0 * c[3] * c[3] - 96.0 * c[2]));
        const cplx r1 = (-6.0 * c[3] + disc) / 24.0;
        const cplx r2 = (-6.0 * c[3] - disc) / 24.0;
        return std::abs(z - r1) <= std::abs(z - r2) ? r1 : r2;
    }
    // m == 2: Newton on p' with p''
    for (int it = 0; it < 40; ++it) {
        const cplx dp = poly_deriv(c, z);
        const cplx ddp = (12.0 * z + 6.0 * c[3]) * z + 2.0 * c[2];
        if (std::abs(ddp) < 1e-300) break;
        const cplx step = dp / ddp;
        z -= step;
        if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    return z;
}

/// Null vector of (M - lambda I) via complex LU with partial pivoting. Row
/// operations preserve the null space, so we back-substitute on U directly.
inline std::array<cplx, 4> null_vector(const Mat4& M, cplx lambda) {
    std::array<std::array<cplx, 4>, 4> u;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) u[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = cplx(M(i, j)) - (i == j ? lambda : cplx(0.0));

    double scale = 0.0;
    for (auto& row : u)
        for (auto& v : row) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) return {cplx(1.0), 0.0, 0.0, 0.0};  // M = lambda I, anything works

    for (std::size_t col = 0; col < 4; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < 4; ++r)
            if (std::abs(u[r][col]) > std::abs(u[piv][col])) piv = r;
        if (piv != col) std::swap(u[piv], u[col]);
        if (std::abs(u[col][col]) < 1e-300) continue;  // structurally rank-deficient column
        for (std::size_t r = col + 1; r < 4; ++r) {
            const cplx f = u[r][col] / u[col][col];
            if (f == cplx(0.0)) continue;
            for (std::size_t cc = col; cc < 4; ++cc) u[r][cc] -= f * u[col][cc];
        }
    }

    std::size_t free_idx = 3;
    double smallest = std::abs(u[3][3]);
    for (std::size_t k = 0; k < 4; ++k)
        if (std::abs(u[k][k]) < smallest) {
            smallest = std::abs(u[k][k]);
            free_idx = k;
        }

    std::array<cplx, 4> v{};
    v[free_idx] = 1.0;
    for (std::size_t ii = free_idx; ii-- > 0;) {
        cplx s = 0.0;
        for (std::size_t j = ii + 1; j < 4; ++j) s += u[ii][j] * v[j];
        if (std::abs(u[ii][ii]) < 1e-14 * scale) {
            v[ii] = 0.0;  // second deficient pivot: stay inside the null space
        } else {
            v[ii] = -s / u[ii][ii];
        }
    }
    double nrm = 0.0;
    for (auto& x : v) nrm += std::norm(x);
    nrm = std::sqrt(nrm);
    for (auto& x : v) x /= nrm;
    return v;
}

inline double residual(const Mat4& M, cplx lambda, const std::array<cplx, 4>& v) {
    double s = 0.0;
    for (int i = 0; i < 4; ++i) {
        cplx r = -lambda * v[static_cast<std::size_t>(i)];
        for (int j = 0; j < 4; ++j) r += M(i, j) * v[static_cast<std::size_t>(j)];
        s += std::norm(r);
    }
    return std::sqrt(s);
}

}  // namespace detail

/// All four eigenvalues of a real 4x4 with certified residuals. Reciprocal
/// spectra take the palindromic reduction; everything else goes through the
/// companion matrix, with cluster merging as the multiple-root fallback.
inline Eigen4 eigen4(const Mat4& M, double residual_scale_bound = 1e-8) {
    const auto c = detail::char_poly(M);
    const double scale = std::max(1.0, inf_norm(M));
    const double bound = residual_scale_bound * scale;

    auto evaluate = [&M](const std::array<cplx, 4>& vals, Eigen4& out) {
        double worst = 0.0;
        out.values = vals;
        for (std::size_t k = 0; k < 4; ++k) {
            out.vectors[k] = detail::null_vector(M, vals[k]);
            out.residuals[k] = detail::residual(M, vals[k], out.vectors[k]);
            worst = std::max(worst, out.residuals[k]);
        }
        return worst;
    };

    double worst = std::numeric_limits<double>::infinity();

    // Structure gate for the reduction. The cofactor determinant carries
    // absolute rounding of order eps*|M|^4 and c[1] of order eps*|M|^3, so
    // past |M| ~ 1e3 neither can discriminate anything and the gate must not
    // consult them, or it rejects exactly the large reciprocal matrices the
    // companion route loses to cancellation. A false positive is harmless:
    // the residual certificate rejects wrong roots and control falls through.
    const double sym_slack = 1e-3 * std::max(1.0, std::abs(c[3])) + 1e-12 * scale * scale * scale;
    if ((scale > 1e3 || std::abs(det(M) - 1.0) <= 1e-3) && std::abs(c[1] - c[3]) <= sym_slack) {
        Eigen4 cand;
        const double w = evaluate(detail::palindromic_roots(c[3], c[2]), cand);
        if (w <= bound) return cand;
        worst = w;
    }

    auto roots = detail::quartic_roots(c);
    detail::polish_roots(c, roots);
    {
        Eigen4 cand;
        const double w = evaluate(roots, cand);
        if (w <= bound) return cand;
        worst = std::min(worst, w);
    }

    // progressively coarser merging of root clusters; an m-fold cluster is
    // re-centred through the (m-1)th derivative, where the root is simple
    for (double radius : {1e-12, 1e-10, 1e-8, 1e-6, 1e-4, 1e-3, 1e-2}) {
        std::array<int, 4> group{0, 1, 2, 3};
        for (bool changed = true; changed;) {
            changed = false;
            for (std::size_t i = 0; i < 4; ++i)
                for (std::size_t j = i + 1; j < 4; ++j) {
                    const double sep = std::abs(roots[i] - roots[j]);
                    const double rel = std::max({1.0, std::abs(roots[i]), std::abs(roots[j])});
                    if (sep <= radius * rel && group[i] != group[j]) {
                        const int g = std::min(group[i], group[j]);
                        group[i] = group[j] = g;
                        changed = true;
                    }
                }
        }

        std::array<cplx, 4> merged = roots;
        bool merged_any = false;
        for (int g = 0; g < 4; ++g) {
            cplx sum = 0.0;
            int cnt = 0;
            for (std::size_t k = 0; k < 4; ++k)
                if (group[k] == g) {
                    sum += roots[k];
                    ++cnt;
                }
            if (cnt < 2) continue;
            merged_any = true;
            cplx rep = detail::refine_multiple_root(c, sum / static_cast<double>(cnt), cnt);
            // a representative with negligible imaginary part is real
            if (std::abs(rep.imag()) <= radius * std::max(1.0, std::abs(rep))) rep = {rep.real(), 0.0};
            for (std::size_t k = 0; k < 4; ++k)
                if (group[k] == g) merged[k] = rep;
        }
        if (!merged_any) continue;

        Eigen4 candidate;
        const double w = evaluate(merged, candidate);
        if (w <= bound) return candidate;
        worst = std::min(worst, w);
    }

    throw EigenFailure("eigenvalue residual " + std::to_string(worst) + " exceeds bound " +
                       std::to_string(bound));
}

}  // namespace qpm
