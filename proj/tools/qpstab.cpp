// qpstab: command-line front end for the qpm library. Subcommands cover
// single-point classification, grid sweeps, transition-curve tracing,
// resonance identities, and the slow-flow stability window. Every run that
// writes files also writes a <prefix>.manifest so it can be replayed later
// with `qpstab rerun`.
//
// Exit codes: 0 success, 2 usage error, 3 numerical or I/O failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "qpm/floquet.hpp"
#include "qpm/hill.hpp"
#include "qpm/manifest.hpp"
#include "qpm/pgm.hpp"
#include "qpm/slowflow.hpp"
#include "qpm/sweep.hpp"

namespace {

using namespace qpm;

constexpr const char* tool_version = "qpstab 0.1.0";

int dispatch(const std::vector<std::string>& args);

// ---------------------------------------------------------------- helpers

std::string format(const char* fmt, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, ap);
    va_end(ap);
    return buf;
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = text.find(sep, start);
        if (pos == std::string::npos) {
            parts.push_back(text.substr(start));
            return parts;
        }
        parts.push_back(text.substr(start, pos - start));
        start = pos + 1;
    }
}

long long to_integer(const std::string& text, const std::string& what) {
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(text, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument(what + ": '" + text + "' is not an integer");
    }
    if (used != text.size())
        throw std::invalid_argument(what + ": '" + text + "' is not an integer");
    return v;
}

double to_number(const std::string& text, const std::string& what) {
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument(what + ": '" + text + "' is not a number");
    }
    if (used != text.size())
        throw std::invalid_argument(what + ": '" + text + "' is not a number");
    return v;
}

// Frequencies arrive as exact fractions ("435/800", or a bare integer) so the
// common period can be computed with integer gcd arithmetic, free of any
// float round trip.
struct Fraction {
    long long num = 0;
    long long den = 1;

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

Fraction parse_fraction(const std::string& text, const std::string& what) {
    const std::size_t slash = text.find('/');
    Fraction f;
    if (slash == std::string::npos) {
        f.num = to_integer(text, what);
        f.den = 1;
    } else {
        f.num = to_integer(text.substr(0, slash), what);
        f.den = to_integer(text.substr(slash + 1), what);
    }
    if (f.num <= 0 || f.den <= 0)
        throw std::invalid_argument(what + ": need a positive rational like 435/800");
    const long long g = std::gcd(f.num, f.den);
    f.num /= g;
    f.den /= g;
    return f;
}

Variant parse_variant(const std::string& name) {
    if (name == "squared") return Variant::SquaredDiagonal;
    if (name == "plain") return Variant::PlainDiagonal;
    throw std::invalid_argument("variant must be 'squared' or 'plain', got '" + name + "'");
}

std::pair<double, double> parse_range(const std::string& text, const std::string& what) {
    const auto parts = split(text, ':');
    if (parts.size() != 2)
        throw std::invalid_argument(what + ": expected lo:hi, got '" + text + "'");
    const double lo = to_number(parts[0], what);
    const double hi = to_number(parts[1], what);
    if (!(lo < hi)) throw std::invalid_argument(what + ": need lo < hi");
    return {lo, hi};
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw std::runtime_error("cannot write " + path);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void emit_manifest(const std::string& prefix, const std::string& command,
                   const std::vector<std::string>& args, double duration,
                   std::vector<std::string> outputs) {
    RunManifest m;
    m.command = command;
    m.args = args;
    m.version = tool_version;
    m.duration_s = duration;
    m.outputs = std::move(outputs);
    write_manifest(prefix + ".manifest", m);
}

const char* configuration_name(MultiplierConfiguration c) {
    switch (c) {
        case MultiplierConfiguration::CentreCentre: return "centre-centre";
        case MultiplierConfiguration::SaddleCentre: return "saddle-centre";
        case MultiplierConfiguration::KreinQuartet: return "krein-quartet";
        case MultiplierConfiguration::RealSaddlePair: return "real-saddle-pair";
        case MultiplierConfiguration::Degenerate: return "degenerate";
    }
    return "degenerate";
}

IntegratorConfig make_config(double rel_tol, double abs_tol, bool monitor = false) {
    IntegratorConfig cfg;
    cfg.rel_tol = rel_tol;
    cfg.abs_tol = abs_tol;
    cfg.monitor_determinant = monitor;
    return cfg;
}

// ------------------------------------------------------------ subcommands

namespace cmd {

struct PointOpts {
    std::string alpha_text, beta_text;
    double epsilon = 0.1;
    double cutoff = 1.025;
    double rel_tol = 1e-10;
    double abs_tol = 1e-10;
    std::string out_prefix;
};

int point(const PointOpts& o, const std::vector<std::string>& full_args) {
    const auto t0 = std::chrono::steady_clock::now();
    const Fraction fa = parse_fraction(o.alpha_text, "point --alpha");
    const Fraction fb = parse_fraction(o.beta_text, "point --beta");
    if (!(o.epsilon >= 0.0)) throw std::invalid_argument("point: --eps must be >= 0");
    if (!(o.cutoff >= 1.0)) throw std::invalid_argument("point: --cutoff must be >= 1");

    const SystemParams params{fa.value(), fb.value(), o.epsilon, Variant::SquaredDiagonal};

    // T = 2 pi n / gcd(i, j) with alpha = i/n, beta = j/n on the common grid
    const long long n = std::lcm(fa.den, fb.den);
    const long long i = fa.num * (n / fa.den);
    const long long j = fb.num * (n / fb.den);
    const long long g = std::gcd(i, j);
    const long long rg = std::gcd(n, g);
    const long long pn = n / rg, pd = g / rg;
    const double period = 2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(g);

    std::ostringstream out;
    out << format("point: alpha = %lld/%lld, beta = %lld/%lld, eps = %g\n", fa.num, fa.den,
                  fb.num, fb.den, o.epsilon);
    if (pd == 1)
        out << format("period: 2 pi * %lld = %.12g\n", pn, period);
    else
        out << format("period: 2 pi * %lld/%lld = %.12g\n", pn, pd, period);

    bool stable = false;
    double max_norm = 0.0;
    try {
        const FundamentalMatrix phi =
            monodromy(params, period, make_config(o.rel_tol, o.abs_tol, true));
        const MultiplierSet ms = multipliers(phi);
        max_norm = ms.max_norm;
        stable = max_norm <= o.cutoff;
        out << format("steps: %zu accepted, %zu rejected\n", phi.diagnostics.accepted,
                      phi.diagnostics.rejected);
        out << format("det drift: %.3g\n", phi.diagnostics.max_det_drift);
        out << "multipliers:\n";
        for (std::size_t k = 0; k < 4; ++k) {
            const cplx v = ms.values[k];
            out << format("  l%zu = %+.9f %+.9fi   |l%zu| = %.9f   arg = %+.6f\n", k + 1,
                          v.real(), v.imag(), k + 1, std::abs(v), std::arg(v));
        }
        out << format("configuration: %s\n", configuration_name(classify(ms)));
        out << format("max |multiplier| = %.9f\n", max_norm);
    } catch (const OverflowSaturation& e) {
        // blow-up past the saturation norm is a definitive unstable verdict
        max_norm = OverflowSaturation::saturation_norm;
        stable = false;
        out << format("integration saturated: %s\n", e.what());
        out << format("max |multiplier| >= %.3g (saturated)\n", max_norm);
    }
    out << format("verdict: %s (cutoff %g)\n", stable ? "stable" : "unstable", o.cutoff);

    std::cout << out.str();
    if (!o.out_prefix.empty()) {
        write_file(o.out_prefix + ".txt", out.str());
        emit_manifest(o.out_prefix, "point", full_args, seconds_since(t0),
                      {o.out_prefix + ".txt"});
    }
    return 0;
}

struct SweepOpts {
    int n = 200;
    double epsilon = 0.1;
    double cutoff = 1.025;
    std::string variant = "squared";
    std::string region;
    int workers = 0;
    double rel_tol = 1e-10;
    double abs_tol = 1e-10;
    bool grayscale = false;
    bool allow_large = false;
    std::string out_prefix;
};

int sweep(const SweepOpts& o, const std::vector<std::string>& full_args) {
    const auto t0 = std::chrono::steady_clock::now();
    if (o.n > 400 && !o.allow_large)
        throw std::invalid_argument(
            "sweep: n > 400 is an overnight-scale job; pass --allow-large to confirm");

    SweepSpec spec;
    spec.n = o.n;
    spec.epsilon = o.epsilon;
    spec.cutoff = o.cutoff;
    spec.variant = parse_variant(o.variant);
    if (!o.region.empty()) {
        const auto parts = split(o.region, ':');
        if (parts.size() != 4)
            throw std::invalid_argument("sweep --region: expected i0:i1:j0:j1");
        CellRect r;
        r.i_lo = static_cast<int>(to_integer(parts[0], "sweep --region"));
        r.i_hi = static_cast<int>(to_integer(parts[1], "sweep --region"));
        r.j_lo = static_cast<int>(to_integer(parts[2], "sweep --region"));
        r.j_hi = static_cast<int>(to_integer(parts[3], "sweep --region"));
        spec.region = r;
    }

    const StabilityChart chart =
        run_sweep(spec, o.workers, make_config(o.rel_tol, o.abs_tol));

    const CellRect r = spec.region.value_or(CellRect{1, spec.n, 1, spec.n});
    const std::size_t cells = static_cast<std::size_t>(r.i_hi - r.i_lo + 1) *
                              static_cast<std::size_t>(r.j_hi - r.j_lo + 1);
    std::size_t stable = 0, unstable = 0;
    for (int ci = r.i_lo; ci <= r.i_hi; ++ci)
        for (int cj = r.j_lo; cj <= r.j_hi; ++cj) {
            const double norm = chart.norm_at(ci, cj);
            if (std::isnan(norm)) continue;
            (norm <= spec.cutoff ? stable : unstable) += 1;
        }

    const std::string pgm_path = o.out_prefix + ".pgm";
    const std::string csv_path = o.out_prefix + ".csv";
    write_file(pgm_path, encode_pgm(render_chart(
                             chart, o.grayscale ? RenderMode::Grayscale : RenderMode::Binary)));
    write_file(csv_path, export_csv(chart));
    emit_manifest(o.out_prefix, "sweep", full_args, seconds_since(t0), {pgm_path, csv_path});

    std::cout << format("sweep: n = %d, eps = %g, %zu cells\n", spec.n, spec.epsilon, cells)
              << format("stable %zu, unstable %zu, failed %zu\n", stable, unstable,
                        chart.failures.size())
              << "wrote " << pgm_path << ", " << csv_path << ", " << o.out_prefix
              << ".manifest\n";

    if (chart.failures.size() * 100 > cells) {
        std::cerr << format("sweep: %zu of %zu cells failed (over the 1%% budget)\n",
                            chart.failures.size(), cells);
        return 3;
    }
    return 0;
}

struct TransitionOpts {
    std::string variant = "squared";
    double epsilon = 0.1;
    std::optional<double> scan_beta;
    std::optional<double> scan_alpha;
    std::string alpha_range, beta_range;
    int n_harmonics = 5;
    int m_depth = 3;
    int steps = 200;
    double root_tol = 1e-6;
    std::string out_prefix;
};

int transition(const TransitionOpts& o, const std::vector<std::string>& full_args) {
    const auto t0 = std::chrono::steady_clock::now();
    if (o.scan_beta.has_value() == o.scan_alpha.has_value())
        throw std::invalid_argument(
            "transition: pass exactly one of --scan-beta (with --alpha-range) or "
            "--scan-alpha (with --beta-range)");

    ScanLine line;
    line.steps = o.steps;
    if (o.scan_beta) {
        if (o.alpha_range.empty())
            throw std::invalid_argument("transition: --scan-beta needs --alpha-range lo:hi");
        const auto [lo, hi] = parse_range(o.alpha_range, "transition --alpha-range");
        line.alpha0 = lo;
        line.alpha1 = hi;
        line.beta0 = line.beta1 = *o.scan_beta;
    } else {
        if (o.beta_range.empty())
            throw std::invalid_argument("transition: --scan-alpha needs --beta-range lo:hi");
        const auto [lo, hi] = parse_range(o.beta_range, "transition --beta-range");
        line.beta0 = lo;
        line.beta1 = hi;
        line.alpha0 = line.alpha1 = *o.scan_alpha;
    }

    const auto points = trace_transition_curves(parse_variant(o.variant), o.epsilon,
                                                o.n_harmonics, o.m_depth, line, o.root_tol);

    std::cout << format("transition: %zu sign changes along the scan line\n", points.size());
    for (std::size_t k = 0; k < points.size(); ++k)
        std::cout << format("  root %zu: alpha = %.9g, beta = %.9g\n", k + 1, points[k].first,
                            points[k].second);

    if (!o.out_prefix.empty()) {
        const std::string csv_path = o.out_prefix + ".csv";
        write_file(csv_path, transition_csv(points));
        emit_manifest(o.out_prefix, "transition", full_args, seconds_since(t0), {csv_path});
        std::cout << "wrote " << csv_path << ", " << o.out_prefix << ".manifest\n";
    }
    return 0;
}

struct ResonanceOpts {
    std::string system;
    int k = 2;
    std::string out_prefix;
};

int resonance(const ResonanceOpts& o, const std::vector<std::string>& full_args) {
    const auto t0 = std::chrono::steady_clock::now();

    ResonanceCurveSet set;
    bool with_slopes = false;
    if (o.system == "mathieu") {
        set = resonance_curves({"delta"}, {"1"}, o.k);
    } else if (o.system == "quasimathieu") {
        set = resonance_curves({"delta"}, {"1", "omega"}, o.k);
    } else if (o.system == "vareq") {
        set = resonance_curves({"alpha", "beta"}, {"alpha", "beta"}, o.k);
    } else if (o.system == "seq") {
        set = resonance_curves({"alpha^2", "beta^2"}, {"alpha", "beta"}, o.k);
        with_slopes = true;
    } else {
        throw std::invalid_argument(
            "resonance: --system must be mathieu, quasimathieu, vareq, or seq");
    }

    std::ostringstream out;
    out << format("resonance: system %s, %zu curves with |coefficients| <= %d\n",
                  o.system.c_str(), set.curves.size(), o.k);
    for (const auto& curve : set.curves) out << "  " << identity_text(set, curve) << "\n";
    if (with_slopes) {
        const auto slopes = resonance_lines_for_seq(o.k);
        out << format("curves reduce to %zu distinct lines beta = (p/q) alpha:\n",
                      slopes.size());
        for (const auto& s : slopes) out << format("  slope %lld/%lld\n", s.num, s.den);
    }

    std::cout << out.str();
    if (!o.out_prefix.empty()) {
        const std::string txt_path = o.out_prefix + ".txt";
        write_file(txt_path, out.str());
        emit_manifest(o.out_prefix, "resonance", full_args, seconds_since(t0), {txt_path});
    }
    return 0;
}

struct SlowflowOpts {
    std::string scan = "0.15:0.21:0.001";
    double refine_tol = 1e-5;
    double cutoff = mu_cutoff;
    double rel_tol = 1e-10;
    double abs_tol = 1e-10;
    int workers = 0;
    std::string out_prefix;
};

int slowflow(const SlowflowOpts& o, const std::vector<std::string>& full_args) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto parts = split(o.scan, ':');
    if (parts.size() != 3)
        throw std::invalid_argument("slowflow --scan: expected lo:hi:step");
    const double lo = to_number(parts[0], "slowflow --scan");
    const double hi = to_number(parts[1], "slowflow --scan");
    const double step = to_number(parts[2], "slowflow --scan");

    const MuScanResult r = scan_stability(
        slow_flow_model(), lo, hi, step, o.refine_tol, o.cutoff,
        make_config(o.rel_tol, o.abs_tol), static_cast<unsigned>(std::max(0, o.workers)));

    std::cout << format("slowflow: scanned mu in [%g, %g], step %g (%zu points)\n", lo, hi,
                        step, r.trace.size())
              << window_report(r);

    if (!o.out_prefix.empty()) {
        const std::string csv_path = o.out_prefix + ".csv";
        write_file(csv_path, mu_scan_csv(r));
        emit_manifest(o.out_prefix, "slowflow", full_args, seconds_since(t0), {csv_path});
        std::cout << "wrote " << csv_path << ", " << o.out_prefix << ".manifest\n";
    }
    return 0;
}

struct RerunOpts {
    std::string manifest_path;
};

int rerun(const RerunOpts& o) {
    const RunManifest m = read_manifest(o.manifest_path);
    if (m.args.empty()) throw std::invalid_argument("rerun: manifest lists no arguments");
    if (m.args.front() == "rerun")
        throw std::invalid_argument("rerun: refusing to replay a rerun manifest");
    std::string joined;
    for (const auto& a : m.args) {
        if (!joined.empty()) joined += ' ';
        joined += a;
    }
    std::cout << "rerun (" << m.version << ", recorded " << format("%.3f", m.duration_s)
              << " s): " << joined << "\n";
    return dispatch(m.args);
}

}  // namespace cmd

// -------------------------------------------------------------- dispatcher

int dispatch(const std::vector<std::string>& args) {
    CLI::App app{"stability toolbox for two-frequency parametrically forced oscillators"};
    app.set_version_flag("--version", tool_version);
    app.require_subcommand(1);

    int rc = 0;

    cmd::PointOpts po;
    CLI::App* point = app.add_subcommand("point", "classify one rational parameter point");
    point->add_option("--alpha", po.alpha_text, "alpha as num/denom")->required();
    point->add_option("--beta", po.beta_text, "beta as num/denom")->required();
    point->add_option("--eps", po.epsilon, "forcing amplitude")->capture_default_str();
    point->add_option("--cutoff", po.cutoff, "stability cutoff on max |multiplier|")
        ->capture_default_str();
    point->add_option("--rel-tol", po.rel_tol, "integrator relative tolerance")
        ->capture_default_str();
    point->add_option("--abs-tol", po.abs_tol, "integrator absolute tolerance")
        ->capture_default_str();
    point->add_option("--out-prefix", po.out_prefix, "also write <prefix>.txt and manifest");
    point->callback([&] { rc = cmd::point(po, args); });

    cmd::SweepOpts so;
    CLI::App* sweep = app.add_subcommand("sweep", "stability chart over the rational grid");
    sweep->add_option("--n", so.n, "grid density (alpha = i/n, beta = j/n)")
        ->capture_default_str();
    sweep->add_option("--eps", so.epsilon, "forcing amplitude")->capture_default_str();
    sweep->add_option("--cutoff", so.cutoff, "stability cutoff")->capture_default_str();
    sweep->add_option("--variant", so.variant, "diagonal variant: squared or plain")
        ->capture_default_str();
    sweep->add_option("--region", so.region, "cell rectangle i0:i1:j0:j1 (default: all)");
    sweep->add_option("--workers", so.workers, "worker threads, 0 = hardware")
        ->capture_default_str();
    sweep->add_option("--rel-tol", so.rel_tol, "integrator relative tolerance")
        ->capture_default_str();
    sweep->add_option("--abs-tol", so.abs_tol, "integrator absolute tolerance")
        ->capture_default_str();
    sweep->add_flag("--grayscale", so.grayscale, "render log-norm shades instead of binary");
    sweep->add_flag("--allow-large", so.allow_large, "permit n > 400");
    sweep->add_option("--out-prefix", so.out_prefix, "output prefix for .pgm/.csv/.manifest")
        ->required();
    sweep->callback([&] { rc = cmd::sweep(so, args); });

    cmd::TransitionOpts to;
    CLI::App* transition =
        app.add_subcommand("transition", "trace determinant zeros along a parameter line");
    transition->add_option("--variant", to.variant, "diagonal variant: squared or plain")
        ->capture_default_str();
    transition->add_option("--eps", to.epsilon, "forcing amplitude")->capture_default_str();
    transition->add_option("--scan-beta", to.scan_beta, "fix beta, scan alpha");
    transition->add_option("--scan-alpha", to.scan_alpha, "fix alpha, scan beta");
    transition->add_option("--alpha-range", to.alpha_range, "alpha window lo:hi");
    transition->add_option("--beta-range", to.beta_range, "beta window lo:hi");
    transition->add_option("--n-harmonics", to.n_harmonics, "truncation order N")
        ->capture_default_str();
    transition->add_option("--m-depth", to.m_depth, "rational depth M (alpha, beta in units of 1/2M)")
        ->capture_default_str();
    transition->add_option("--steps", to.steps, "scan samples")->capture_default_str();
    transition->add_option("--root-tol", to.root_tol, "bisection tolerance in scan parameter")
        ->capture_default_str();
    transition->add_option("--out-prefix", to.out_prefix, "write <prefix>.csv and manifest");
    transition->callback([&] { rc = cmd::transition(to, args); });

    cmd::ResonanceOpts ro;
    CLI::App* resonance =
        app.add_subcommand("resonance", "enumerate eps -> 0 resonance identities");
    resonance->add_option("--system", ro.system, "mathieu, quasimathieu, vareq, or seq")
        ->required();
    resonance->add_option("--k", ro.k, "max |integer coefficient|")->capture_default_str();
    resonance->add_option("--out-prefix", ro.out_prefix, "write <prefix>.txt and manifest");
    resonance->callback([&] { rc = cmd::resonance(ro, args); });

    cmd::SlowflowOpts fo;
    CLI::App* slowflow =
        app.add_subcommand("slowflow", "stable mu window of the slow-flow system");
    slowflow->add_option("--scan", fo.scan, "mu scan lo:hi:step")->capture_default_str();
    slowflow->add_option("--refine-tol", fo.refine_tol, "window endpoint tolerance")
        ->capture_default_str();
    slowflow->add_option("--cutoff", fo.cutoff, "stability cutoff on max |multiplier|")
        ->capture_default_str();
    slowflow->add_option("--rel-tol", fo.rel_tol, "integrator relative tolerance")
        ->capture_default_str();
    slowflow->add_option("--abs-tol", fo.abs_tol, "integrator absolute tolerance")
        ->capture_default_str();
    slowflow->add_option("--workers", fo.workers, "worker threads, 0 = hardware")
        ->capture_default_str();
    slowflow->add_option("--out-prefix", fo.out_prefix, "write <prefix>.csv and manifest");
    slowflow->callback([&] { rc = cmd::slowflow(fo, args); });

    cmd::RerunOpts xo;
    CLI::App* rerun = app.add_subcommand("rerun", "replay a recorded manifest");
    rerun->add_option("--manifest", xo.manifest_path, "path to a .manifest file")->required();
    rerun->callback([&] { rc = cmd::rerun(xo); });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // help and version succeed, anything else is usage
    }
    return rc;
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv + 1, argv + argc);
    try {
        return dispatch(args);
    } catch (const std::invalid_argument& e) {
        std::cerr << "qpstab: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "qpstab: " << e.what() << "\n";
        return 3;
    }
}
