#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qpm/system.hpp"

namespace qpm {

/// Truncation order would place a zero on the Hill diagonal (the infinite
/// determinant stops converging there), so construction refuses it.
struct TruncationTooDeep : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Sign and natural-log magnitude; dimensions in the hundreds overflow a
/// plain double product long before the roots of interest appear.
struct DeterminantValue {
    int sign = 0;  // -1, 0, +1
    double log_magnitude = -std::numeric_limits<double>::infinity();
};

/// Truncated harmonic-balance coefficient matrix. Rows and columns are
/// indexed by (side, n, m) with side 0 for the x-coefficients and 1 for the
/// y-coefficients, |n|, |m| <= N. Row (side, n, m) holds the diagonal
/// gamma_{nm} plus epsilon/2 couplings to the x-column (n, m -+ 2M) and the
/// y-column (n -+ 2M, m); couplings shift by 2M because the forcing
/// frequencies alpha, beta sit at harmonic 2M of the base frequency 1/(2M).
struct HillMatrix {
    int N = 0;
    int M = 0;
    double epsilon = 0.0;
    std::vector<double> diag;
    std::vector<std::array<int, 4>> neighbors;  // column indices, -1 when out of range

    int side_len() const { return 2 * N + 1; }
    int dim() const { return 2 * side_len() * side_len(); }

    int row_of(int side, int n, int m) const {
        return (side * side_len() + (n + N)) * side_len() + (m + N);
    }
};

inline HillMatrix build_hill(const SystemParams& params, int N, int M) {
    if (N < 1 || M < 1) throw std::invalid_argument("build_hill: N and M must be positive");
    if (N > 2 * M - 1)
        throw TruncationTooDeep("build_hill: N = " + std::to_string(N) +
                                " exceeds 2M - 1 = " + std::to_string(2 * M - 1));

    HillMatrix h;
    h.N = N;
    h.M = M;
    h.epsilon = params.epsilon;
    const int L = h.side_len();
    h.diag.resize(static_cast<std::size_t>(h.dim()));
    h.neighbors.assign(static_cast<std::size_t>(h.dim()), {-1, -1, -1, -1});

    const double denom = 2.0 * M;
    for (int side = 0; side < 2; ++side) {
        const double base = side == 0 ? params.alpha : params.beta;
        const double lambda_sq =
            params.variant == Variant::SquaredDiagonal ? base * base : base;
        for (int n = -N; n <= N; ++n)
            for (int m = -N; m <= N; ++m) {
                const int r = h.row_of(side, n, m);
                const double freq = (n * params.alpha + m * params.beta) / denom;
                h.diag[static_cast<std::size_t>(r)] = lambda_sq - freq * freq;
                if (params.epsilon == 0.0) continue;
                auto& nb = h.neighbors[static_cast<std::size_t>(r)];
                int w = 0;
                for (int shift : {-2 * M, 2 * M}) {
                    if (std::abs(m + shift) <= N) nb[w++] = h.row_of(0, n, m + shift);
                    if (std::abs(n + shift) <= N) nb[w++] = h.row_of(1, n + shift, m);
                }
            }
    }
    (void)L;
    return h;
}

namespace detail {

/// Connected components of the coupling graph; comp[r] is a component id.
inline int coupling_components(const HillMatrix& h, std::vector<int>& comp) {
    const int d = h.dim();
    std::vector<int> parent(static_cast<std::size_t>(d));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] =
                parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    };
    for (int r = 0; r < d; ++r)
        for (int c : h.neighbors[static_cast<std::size_t>(r)])
            if (c >= 0) {
                const int a = find(r), b = find(c);
                if (a != b) parent[static_cast<std::size_t>(a)] = b;
            }
    comp.assign(static_cast<std::size_t>(d), -1);
    int count = 0;
    for (int r = 0; r < d; ++r) {
        const int root = find(r);
        if (comp[static_cast<std::size_t>(root)] < 0) comp[static_cast<std::size_t>(root)] = count++;
        comp[static_cast<std::size_t>(r)] = comp[static_cast<std::size_t>(root)];
    }
    return count;
}

/// Dense LU with partial pivoting, accumulating det sign and log magnitude.
inline void lu_logdet(std::vector<double>& a, int k, int& sign, double& log_mag) {
    for (int col = 0; col < k; ++col) {
        int piv = col;
        double best = std::abs(a[static_cast<std::size_t>(col * k + col)]);
        for (int r = col + 1; r < k; ++r) {
            const double v = std::abs(a[static_cast<std::size_t>(r * k + col)]);
            if (v > best) {
                best = v;
                piv = r;
            }
        }
        if (best == 0.0) {
            sign = 0;
            log_mag = -std::numeric_limits<double>::infinity();
            return;
        }
        if (piv != col) {
            for (int c = 0; c < k; ++c)
                std::swap(a[static_cast<std::size_t>(piv * k + c)],
                          a[static_cast<std::size_t>(col * k + c)]);
            sign = -sign;
        }
        const double p = a[static_cast<std::size_t>(col * k + col)];
        if (p < 0.0) sign = -sign;
        log_mag += std::log(std::abs(p));
        for (int r = col + 1; r < k; ++r) {
            const double f = a[static_cast<std::size_t>(r * k + col)] / p;
            if (f == 0.0) continue;
            for (int c = col; c < k; ++c)
                a[static_cast<std::size_t>(r * k + c)] -= f * a[static_cast<std::size_t>(col * k + c)];
        }
    }
}

}  // namespace detail

/// Determinant as sign and log magnitude, evaluated blockwise over the
/// connected components of the coupling graph.
inline DeterminantValue determinant(const HillMatrix& h) {
    std::vector<int> comp;
    const int count = detail::coupling_components(h, comp);

    std::vector<std::vector<int>> members(static_cast<std::size_t>(count));
    for (int r = 0; r < h.dim(); ++r)
        members[static_cast<std::size_t>(comp[static_cast<std::size_t>(r)])].push_back(r);

    int sign = 1;
    double log_mag = 0.0;
    std::vector<int> where(static_cast<std::size_t>(h.dim()));
    std::vector<double> block;
    for (const auto& rows : members) {
        const int k = static_cast<int>(rows.size());
        if (k == 1) {
            const double v = h.diag[static_cast<std::size_t>(rows[0])];
            if (v == 0.0) return {0, -std::numeric_limits<double>::infinity()};
            if (v < 0.0) sign = -sign;
            log_mag += std::log(std::abs(v));
            continue;
        }
        for (int idx = 0; idx < k; ++idx) where[static_cast<std::size_t>(rows[static_cast<std::size_t>(idx)])] = idx;
        block.assign(static_cast<std::size_t>(k) * static_cast<std::size_t>(k), 0.0);
        for (int idx = 0; idx < k; ++idx) {
            const int r = rows[static_cast<std::size_t>(idx)];
            block[static_cast<std::size_t>(idx * k + idx)] = h.diag[static_cast<std::size_t>(r)];
            for (int c : h.neighbors[static_cast<std::size_t>(r)])
                if (c >= 0)
                    block[static_cast<std::size_t>(idx * k + where[static_cast<std::size_t>(c)])] +=
                        h.epsilon / 2.0;
        }
        detail::lu_logdet(block, k, sign, log_mag);
        if (sign == 0) return {0, -std::numeric_limits<double>::infinity()};
    }
    return {sign, log_mag};
}

/// Straight parameter-plane segment from (alpha0, beta0) to (alpha1, beta1),
/// sampled at steps+1 points of the scan parameter t in [0, 1].
struct ScanLine {
    double alpha0 = 0.0, beta0 = 0.0;
    double alpha1 = 1.0, beta1 = 1.0;
    int steps = 200;
};

/// Zeros of the truncated determinant along a scan line: sample signs, then
/// bisect each sign change down to root_tol in t. Exact zeros at sample
/// points are reported directly.
inline std::vector<std::pair<double, double>> trace_transition_curves(
    Variant variant, double epsilon, int N, int M, const ScanLine& scan, double root_tol = 1e-6) {
    if (scan.steps < 1) throw std::invalid_argument("trace_transition_curves: steps must be >= 1");
    if (!(root_tol > 0.0)) throw std::invalid_argument("trace_transition_curves: root_tol must be positive");

    auto at = [&](double t) {
        return SystemParams{scan.alpha0 + t * (scan.alpha1 - scan.alpha0),
                            scan.beta0 + t * (scan.beta1 - scan.beta0), epsilon, variant};
    };
    auto sign_at = [&](double t) { return determinant(build_hill(at(t), N, M)).sign; };

    std::vector<std::pair<double, double>> points;
    auto emit = [&](double t) {
        const SystemParams p = at(t);
        points.emplace_back(p.alpha, p.beta);
    };

    int prev = sign_at(0.0);
    if (prev == 0) emit(0.0);
    for (int k = 1; k <= scan.steps; ++k) {
        const double t1 = static_cast<double>(k) / scan.steps;
        const int cur = sign_at(t1);
        if (cur == 0) {
            emit(t1);
            prev = cur;
            continue;
        }
        if (prev != 0 && cur != prev) {
            double lo = static_cast<double>(k - 1) / scan.steps, hi = t1;
            int lo_sign = prev;
            while (hi - lo > root_tol) {
                const double mid = 0.5 * (lo + hi);
                const int s = sign_at(mid);
                if (s == 0) {
                    lo = hi = mid;
                    break;
                }
                if (s == lo_sign) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            emit(0.5 * (lo + hi));
        }
        prev = cur;
    }
    return points;
}

/// CSV for traced transition points: one row per crossing in scan order.
inline std::string transition_csv(const std::vector<std::pair<double, double>>& points) {
    std::string out = "curve_id,alpha,beta\n";
    char line[96];
    for (std::size_t k = 0; k < points.size(); ++k) {
        std::snprintf(line, sizeof line, "%zu,%.9g,%.9g\n", k, points[k].first,
                      points[k].second);
        out += line;
    }
    return out;
}

/// One resonance identity lambda_j^2 = (n . omega)^2 / 4, stored by the
/// eigenvalue index and the integer vector.
struct ResonanceCurve {
    int j = 0;
    std::vector<int> coeffs;
};

struct ResonanceCurveSet {
    std::vector<std::string> lambda_names;
    std::vector<std::string> omega_names;
    int K = 1;
    std::vector<ResonanceCurve> curves;
};

/// Enumerate all resonance identities with integer vectors of max-norm <= K.
/// n and -n describe the same curve, so vectors are canonicalized to the
/// representative whose first nonzero entry is positive.
inline ResonanceCurveSet resonance_curves(std::vector<std::string> lambda_names,
                                          std::vector<std::string> omega_names, int K) {
    if (lambda_names.empty() || omega_names.empty())
        throw std::invalid_argument("resonance_curves: need at least one eigenvalue and frequency");
    if (K < 1) throw std::invalid_argument("resonance_curves: K must be >= 1");

    const std::size_t dim = omega_names.size();
    std::vector<std::vector<int>> vectors;
    std::vector<int> n(dim, -K);
    for (;;) {
        const auto nz = std::find_if(n.begin(), n.end(), [](int v) { return v != 0; });
        if (nz == n.end() || *nz > 0) vectors.push_back(n);  // canonical representative
        std::size_t d = 0;
        while (d < dim && n[d] == K) n[d++] = -K;
        if (d == dim) break;
        ++n[d];
    }

    ResonanceCurveSet set;
    set.lambda_names = std::move(lambda_names);
    set.omega_names = std::move(omega_names);
    set.K = K;
    for (int j = 0; j < static_cast<int>(set.lambda_names.size()); ++j)
        for (const auto& vec : vectors) set.curves.push_back({j, vec});
    return set;
}

/// Numeric value of (n . omega)^2 / 4 for a concrete frequency vector: the
/// lambda_j^2 a resonance sits at.
inline double resonance_value(const ResonanceCurve& curve, const std::vector<double>& omega) {
    if (curve.coeffs.size() != omega.size())
        throw std::invalid_argument("resonance_value: dimension mismatch");
    double dot = 0.0;
    for (std::size_t k = 0; k < omega.size(); ++k) dot += curve.coeffs[k] * omega[k];
    return dot * dot / 4.0;
}

/// Human-readable identity, e.g. "alpha = (1*alpha + 2*beta)^2/4".
inline std::string identity_text(const ResonanceCurveSet& set, const ResonanceCurve& curve) {
    std::string rhs;
    for (std::size_t k = 0; k < curve.coeffs.size(); ++k) {
        const int c = curve.coeffs[k];
        if (k == 0) {
            rhs += std::to_string(c) + "*" + set.omega_names[k];
        } else if (c < 0) {
            rhs += " - " + std::to_string(-c) + "*" + set.omega_names[k];
        } else {
            rhs += " + " + std::to_string(c) + "*" + set.omega_names[k];
        }
    }
    return set.lambda_names[static_cast<std::size_t>(curve.j)] + " = (" + rhs + ")^2/4";
}

/// Exact reduced fraction for a resonance line slope alpha/beta.
struct Slope {
    long long num = 0;
    long long den = 1;

    friend bool operator<(const Slope& a, const Slope& b) {
        return a.num * b.den < b.num * a.den;
    }
    friend bool operator==(const Slope& a, const Slope& b) {
        return a.num == b.num && a.den == b.den;
    }
};

inline Slope make_slope(long long num, long long den) {
    const long long g = std::gcd(num, den);
    return {num / g, den / g};
}

/// Straight-line loci of the coupled system's resonance curves with squared
/// eigenvalues: alpha^2 = (n alpha + m beta)^2 / 4 folds to
/// alpha = +- m beta / (2 -+ n), and the beta equation mirrors it, except
/// the degenerate n (or m) = +-2 cases, which give the coordinate axes, not
/// lines through the quadrant. Zero and negative ratios are dropped for the
/// same reason. Slopes are exact fractions, deduplicated.
inline std::vector<Slope> resonance_lines_for_seq(int K) {
    if (K < 1) throw std::invalid_argument("resonance_lines_for_seq: K must be >= 1");
    std::set<Slope> slopes;
    auto add = [&](long long num, long long den) {
        if (num > 0 && den > 0) slopes.insert(make_slope(num, den));
    };
    for (int n = -K; n <= K; ++n)
        for (int m = -K; m <= K; ++m) {
            // alpha branch: (2 - n) alpha = m beta and (2 + n) alpha = -m beta
            if (n != 2) add(m, 2 - n);
            if (n != -2) add(-m, 2 + n);
            // beta branch: (2 - m) beta = n alpha and (2 + m) beta = -n alpha
            if (m != 2) add(2 - m, n);
            if (m != -2) add(2 + m, -n);
        }
    return {slopes.begin(), slopes.end()};
}

/// Slopes of the straight-line curves a ResonanceCurve describes when both
/// eigenvalues and frequencies are the coordinates themselves with squared
/// diagonal: lambda_0 = alpha, lambda_1 = beta. Non-line (degenerate) cases
/// yield nothing.
inline std::vector<Slope> seq_curve_slopes(const ResonanceCurve& curve) {
    // j = 0: alpha^2 = (n alpha + m beta)^2/4  =>  (2 -+ n) alpha = +- m beta
    // j = 1: beta^2  = (n alpha + m beta)^2/4  =>  (2 -+ m) beta = +- n alpha
    const int n = curve.coeffs.at(0);
    const int m = curve.coeffs.at(1);
    std::vector<Slope> out;
    auto add = [&](long long num, long long den) {
        if (num > 0 && den > 0) out.push_back(make_slope(num, den));
    };
    if (curve.j == 0) {
        if (n != 2) add(m, 2 - n);
        if (n != -2) add(-m, 2 + n);
    } else {
        if (m != 2) add(2 - m, n);
        if (m != -2) add(2 + m, -n);
    }
    return out;
}

/// Smallest axis-parallel distance from (alpha, beta) to the curve
/// lambda_j = (n alpha + m beta)^2 / 4 of the plain-diagonal system, where
/// lambda_0 = alpha and lambda_1 = beta. An upper bound on the true distance,
/// adequate for band-membership tests.
inline double plain_resonance_distance(const ResonanceCurve& curve, double alpha, double beta) {
    const double n = curve.coeffs.at(0);
    const double m = curve.coeffs.at(1);
    double best = std::numeric_limits<double>::infinity();

    // lambda is the coordinate the curve constrains, u its coefficient in the
    // dot product; v multiplies the free coordinate `other`
    const double target = curve.j == 0 ? alpha : beta;
    const double other = curve.j == 0 ? beta : alpha;
    const double u = curve.j == 0 ? n : m;
    const double v = curve.j == 0 ? m : n;

    // move along the constrained axis: solve x = (u x + v other)^2 / 4
    {
        const double a = u * u / 4.0;
        const double b = u * v * other / 2.0 - 1.0;
        const double c = v * v * other * other / 4.0;
        if (a == 0.0) {
            if (b != 0.0) best = std::min(best, std::abs(-c / b - target));
        } else {
            const double disc = b * b - 4.0 * a * c;
            if (disc >= 0.0) {
                const double sq = std::sqrt(disc);
                best = std::min(best, std::abs((-b + sq) / (2.0 * a) - target));
                best = std::min(best, std::abs((-b - sq) / (2.0 * a) - target));
            }
        }
    }

    // move along the free axis: solve target = (u target + v y)^2 / 4
    if (v != 0.0 && target >= 0.0) {
        const double rt = 2.0 * std::sqrt(target);
        best = std::min(best, std::abs((rt - u * target) / v - other));
        best = std::min(best, std::abs((-rt - u * target) / v - other));
    }
    return best;
}

}  // namespace qpm
