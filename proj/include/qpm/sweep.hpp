#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "qpm/floquet.hpp"
#include "qpm/pgm.hpp"
#include "qpm/system.hpp"

namespace qpm {

/// Inclusive index rectangle inside the grid, 1-based like RationalPoint.
struct CellRect {
    int i_lo = 1, i_hi = 1;
    int j_lo = 1, j_hi = 1;
};

struct SweepSpec {
    int n = 200;
    double epsilon = 0.1;
    double cutoff = 1.025;
    Variant variant = Variant::SquaredDiagonal;
    std::optional<CellRect> region;  // whole grid when absent
};

struct CellFailure {
    int i = 0, j = 0;
    std::string tag;
};

/// Max multiplier norms over the grid. Cells outside the region, and failed
/// cells, hold NaN; failed cells are additionally listed in `failures`.
struct StabilityChart {
    SweepSpec spec;
    std::vector<double> max_norms;  // n*n, cell (i,j) at (j-1)*n + (i-1)
    std::vector<CellFailure> failures;

    double norm_at(int i, int j) const {
        return max_norms[static_cast<std::size_t>(j - 1) * static_cast<std::size_t>(spec.n) +
                         static_cast<std::size_t>(i - 1)];
    }
};

namespace detail {

inline void validate(const SweepSpec& spec) {
    if (spec.n < 2) throw std::invalid_argument("SweepSpec: n must be at least 2");
    if (!(spec.epsilon >= 0.0)) throw std::invalid_argument("SweepSpec: epsilon must be >= 0");
    if (!(spec.cutoff > 0.0)) throw std::invalid_argument("SweepSpec: cutoff must be positive");
    if (spec.region) {
        const CellRect& r = *spec.region;
        if (r.i_lo < 1 || r.j_lo < 1 || r.i_hi > spec.n || r.j_hi > spec.n ||
            r.i_lo > r.i_hi || r.j_lo > r.j_hi)
            throw std::invalid_argument("SweepSpec: region must lie within [1, n]^2");
    }
}

}  // namespace detail

/// Evaluate the verdict on every cell of the region. Cells are independent;
/// a shared atomic cursor hands them out so long-period cells interleave with
/// fast ones, and every worker writes only its own slots, which makes the
/// result identical for any worker count.
inline StabilityChart run_sweep(const SweepSpec& spec, int workers = 0,
                                const IntegratorConfig& cfg = {}) {
    detail::validate(spec);
    const int n = spec.n;
    const CellRect region = spec.region.value_or(CellRect{1, n, 1, n});

    StabilityChart chart;
    chart.spec = spec;
    chart.max_norms.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n),
                           std::numeric_limits<double>::quiet_NaN());

    std::vector<std::pair<int, int>> cells;
    cells.reserve(static_cast<std::size_t>(region.i_hi - region.i_lo + 1) *
                  static_cast<std::size_t>(region.j_hi - region.j_lo + 1));
    for (int j = region.j_lo; j <= region.j_hi; ++j)
        for (int i = region.i_lo; i <= region.i_hi; ++i) cells.emplace_back(i, j);

    if (workers <= 0) {
        const unsigned hc = std::thread::hardware_concurrency();
        workers = hc > 0 ? static_cast<int>(hc) : 1;
    }
    workers = std::min<int>(workers, static_cast<int>(cells.size()));

    std::atomic<std::size_t> cursor{0};
    std::vector<std::vector<CellFailure>> failure_lists(static_cast<std::size_t>(workers));

    auto work = [&](int slot) {
        for (;;) {
            const std::size_t k = cursor.fetch_add(1);
            if (k >= cells.size()) return;
            const auto [i, j] = cells[k];
            double norm = std::numeric_limits<double>::quiet_NaN();
            try {
                const StabilityVerdict v =
                    verdict(RationalPoint{i, j, n}, spec.epsilon, spec.variant, spec.cutoff, cfg);
                norm = v.max_norm;
            } catch (const std::exception& e) {
                failure_lists[static_cast<std::size_t>(slot)].push_back({i, j, e.what()});
            }
            chart.max_norms[static_cast<std::size_t>(j - 1) * static_cast<std::size_t>(n) +
                            static_cast<std::size_t>(i - 1)] = norm;
        }
    };

    if (workers <= 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& th : pool) th.join();
    }

    for (auto& list : failure_lists)
        chart.failures.insert(chart.failures.end(), list.begin(), list.end());
    std::sort(chart.failures.begin(), chart.failures.end(),
              [](const CellFailure& a, const CellFailure& b) {
                  return a.j != b.j ? a.j < b.j : a.i < b.i;
              });
    return chart;
}

enum class RenderMode { Binary, Grayscale };

/// Chart to image: beta increases upward (image row 0 is j = n), alpha
/// rightward. Binary paints unstable white and stable black per the chart
/// cutoff; Grayscale maps log10 of the norm clamped to [1, 10] onto the full
/// byte range. Cells without a value (failures, outside the region) are
/// mid-gray in both modes.
inline Pgm render_chart(const StabilityChart& chart, RenderMode mode) {
    const int n = chart.spec.n;
    Pgm img;
    img.width = n;
    img.height = n;
    img.pixels.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0);
    for (int row = 0; row < n; ++row) {
        const int j = n - row;
        for (int col = 0; col < n; ++col) {
            const int i = col + 1;
            const double norm = chart.norm_at(i, j);
            unsigned char px = 128;
            if (!std::isnan(norm)) {
                if (mode == RenderMode::Binary) {
                    px = norm > chart.spec.cutoff ? 255 : 0;
                } else {
                    const double c = std::min(10.0, std::max(1.0, norm));
                    px = static_cast<unsigned char>(std::lround(255.0 * std::log10(c)));
                }
            }
            img.at(row, col) = px;
        }
    }
    return img;
}

/// One CSV row per region cell, j outer and i fastest, 9 significant digits.
/// stable is 1/0 for computed cells and -1 for failures (max_norm nan).
inline std::string export_csv(const StabilityChart& chart) {
    const int n = chart.spec.n;
    const CellRect region = chart.spec.region.value_or(CellRect{1, n, 1, n});
    std::string out = "i,j,alpha,beta,max_norm,stable\n";
    char line[160];
    for (int j = region.j_lo; j <= region.j_hi; ++j)
        for (int i = region.i_lo; i <= region.i_hi; ++i) {
            const double norm = chart.norm_at(i, j);
            const int stable = std::isnan(norm) ? -1 : (norm <= chart.spec.cutoff ? 1 : 0);
            std::snprintf(line, sizeof line, "%d,%d,%.9g,%.9g,%.9g,%d\n", i, j,
                          static_cast<double>(i) / n, static_cast<double>(j) / n, norm, stable);
            out += line;
        }
    return out;
}

}  // namespace qpm
