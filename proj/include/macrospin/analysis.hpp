// analysis.hpp: stroboscopic scans, periodicity classification and basin maps
#pragma once

#include "classical.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace macrospin {

// n nearly uniform points on the unit sphere (golden-angle spiral)
inline std::vector<MacrospinState> fibonacci_sphere(int n) {
    if (n < 1) throw ValidationError("fibonacci_sphere: n must be >= 1");
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    std::vector<MacrospinState> pts;
    pts.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double z = 1.0 - (2.0 * i + 1.0) / n;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double ph = golden * i;
        pts.push_back({r * std::cos(ph), r * std::sin(ph), z});
    }
    return pts;
}

struct StroboscopicProtocol {
    double transient{200.0};  // periods discarded
    int samples{1000};        // stroboscopic samples kept (t = transient+1 ...)
};

// Stroboscopic states at t = transient + 1, ..., transient + samples
inline std::vector<MacrospinState> stroboscopic_orbit(const MacrospinState& m0, const ModelParams& p,
                                                      const IntegratorSpec& spec, const StroboscopicProtocol& proto = {}) {
    validate(p);
    if (proto.samples < 1) throw ValidationError("stroboscopic sample count must be >= 1");
    const long per = steps_per_period(spec);
    const long skip = steps_for(proto.transient, per, "transient");
    if (skip % per != 0) throw ValidationError("transient must be a whole number of periods");
    MacrospinState m = advance(m0, p, spec, 0, skip);
    std::vector<MacrospinState> out;
    out.reserve(static_cast<std::size_t>(proto.samples));
    long step = skip;
    for (int k = 0; k < proto.samples; ++k) {
        m = advance(m, p, spec, step, per);
        step += per;
        out.push_back(m);
    }
    return out;
}

inline std::vector<double> component(const std::vector<MacrospinState>& v, int axis) {
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& m : v) out.push_back(m[axis]);
    return out;
}

// Number of groups after merging sorted values closer than tol
inline int distinct_count(std::vector<double> v, double tol) {
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end());
    int groups = 1;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] - v[i - 1] > tol) ++groups;
    return groups;
}

enum class Regime { periodic, quasiperiodic, chaotic, marginal };

inline const char* to_string(Regime r) noexcept {
    switch (r) {
        case Regime::periodic: return "periodic";
        case Regime::quasiperiodic: return "quasiperiodic";
        case Regime::chaotic: return "chaotic";
        default: return "marginal";
    }
}

struct Periodicity {
    Regime regime{Regime::marginal};
    int period{0};             // cycle length for periodic / quasiperiodic
    double spread{0.0};        // largest intra-class spread for `period`
    double separation{0.0};    // smallest gap between classes for `period`
    double mle{0.0};

    std::string label() const {
        if (regime == Regime::periodic) return "periodic(" + std::to_string(period) + ")";
        if (regime == Regime::quasiperiodic) return "quasiperiodic(" + std::to_string(period) + ")";
        return to_string(regime);
    }
};

struct PeriodicityOptions {
    double tolerance{1e-4};      // intra-cluster spread for exact periodicity
    double mle_threshold{0.01};  // above this with no clustering: chaotic
    int max_period{64};
};

namespace detail {

// Phase classes i mod p: largest class spread and smallest gap between class ranges
inline std::pair<double, double> phase_class_stats(const std::vector<double>& v, int p) {
    std::vector<std::pair<double, double>> range(static_cast<std::size_t>(p),
                                                 {std::numeric_limits<double>::infinity(),
                                                  -std::numeric_limits<double>::infinity()});
    for (std::size_t i = 0; i < v.size(); ++i) {
        auto& r = range[i % static_cast<std::size_t>(p)];
        r.first = std::min(r.first, v[i]);
        r.second = std::max(r.second, v[i]);
    }
    double spread = 0.0;
    for (const auto& r : range) spread = std::max(spread, r.second - r.first);
    std::sort(range.begin(), range.end());
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < range.size(); ++i) gap = std::min(gap, range[i].first - range[i - 1].second);
    return {spread, gap};
}

}  // namespace detail

// periodic(p): samples i and i+p agree within tolerance (smallest such p). quasiperiodic(p): the
// p phase classes occupy disjoint, well separated bands but are not sharp. chaotic: positive MLE
// above threshold without such banding. Anything else is marginal.
inline Periodicity classify_periodicity(const std::vector<double>& v, double mle, const PeriodicityOptions& opt = {}) {
    if (v.size() < 100) throw ValidationError("classify_periodicity needs at least 100 samples");
    Periodicity out;
    out.mle = mle;
    const int pmax = std::min<int>(opt.max_period, static_cast<int>(v.size() / 4));
    for (int p = 1; p <= pmax; ++p) {
        double dev = 0.0;
        for (std::size_t i = 0; i + static_cast<std::size_t>(p) < v.size(); ++i)
            dev = std::max(dev, std::abs(v[i + static_cast<std::size_t>(p)] - v[i]));
        if (dev < opt.tolerance) {
            const auto [spread, gap] = detail::phase_class_stats(v, p);
            out.regime = Regime::periodic;
            out.period = p;
            out.spread = spread;
            out.separation = p == 1 ? 0.0 : gap;
            return out;
        }
    }
    if (mle <= opt.mle_threshold) {
        for (int p = 2; p <= std::min(pmax, 16); ++p) {
            const auto [spread, gap] = detail::phase_class_stats(v, p);
            if (gap > 0.0 && gap > spread) {
                out.regime = Regime::quasiperiodic;
                out.period = p;
                out.spread = spread;
                out.separation = gap;
                return out;
            }
        }
        return out;  // marginal
    }
    out.regime = Regime::chaotic;
    out.spread = *std::max_element(v.begin(), v.end()) - *std::min_element(v.begin(), v.end());
    return out;
}

struct InitialPolicy {
    enum class Kind { fixed, global } kind{Kind::fixed};
    SphericalAngle angle{std::numbers::pi / 2, 0.0};  // fixed policy
    int global_count{500};                             // global policy

    std::vector<MacrospinState> states() const {
        if (kind == Kind::fixed) return {angle_to_vector(angle)};
        return fibonacci_sphere(global_count);
    }
    std::string describe() const {
        if (kind == Kind::fixed)
            return "fixed(theta=" + format_double(angle.theta) + ";phi=" + format_double(angle.phi) + ")";
        return "global(" + std::to_string(global_count) + ")";
    }
};

struct BifurcationScan {
    std::string control;
    std::vector<double> values;
    InitialPolicy source;
    // samples[c][s] = stroboscopic m^x for control c and initial state s (empty if the run blew up)
    std::vector<std::vector<std::vector<double>>> samples;
    std::vector<std::string> failures;
};

// Returns a copy of base with the named control parameter set
inline ModelParams with_control(ModelParams p, const std::string& name, double v) {
    if (name == "kappa") p.kappa = v;
    else if (name == "gamma") p.gamma = v;
    else if (name == "jx") p.j[0] = v;
    else if (name == "jy") p.j[1] = v;
    else if (name == "jz") p.j[2] = v;
    else if (name == "omega") p.omega = v;
    else throw ValidationError("unknown control parameter '" + name + "'");
    return p;
}

inline BifurcationScan stroboscopic_scan(const std::string& control, const std::vector<double>& values,
                                         const ModelParams& base, const InitialPolicy& policy,
                                         const IntegratorSpec& spec = {}, const StroboscopicProtocol& proto = {},
                                         unsigned threads = 0) {
    if (values.empty()) throw ValidationError("control axis must be non-empty");
    const bool inc = std::is_sorted(values.begin(), values.end());
    const bool dec = std::is_sorted(values.rbegin(), values.rend());
    if (!inc && !dec) throw ValidationError("control axis must be monotone");
    validate(with_control(base, control, values.front()));
    steps_per_period(spec);
    const auto inits = policy.states();
    const std::size_t ns = inits.size();
    BifurcationScan scan{control, values, policy, {}, {}};
    scan.samples.assign(values.size(), std::vector<std::vector<double>>(ns));
    std::vector<std::string> fail(values.size() * ns);
    parallel_for(values.size() * ns, threads, [&](std::size_t idx) {
        const std::size_t c = idx / ns, s = idx % ns;
        const ModelParams p = with_control(base, control, values[c]);
        try {
            scan.samples[c][s] = component(stroboscopic_orbit(inits[s], p, spec, proto), 0);
        } catch (const NumericalError& e) {
            fail[idx] = control + "=" + format_double(values[c]) + " init=" + std::to_string(s) + ": " + e.what();
        }
    });
    for (auto& f : fail)
        if (!f.empty()) scan.failures.push_back(std::move(f));
    return scan;
}

inline void write_bifurcation_csv(std::ostream& os, const BifurcationScan& scan, const std::string& config_comment) {
    os << "# " << config_comment << " source=" << scan.source.describe() << '\n'
       << "control,initial_id,sample_index,mx\n";
    os.precision(12);
    for (std::size_t c = 0; c < scan.values.size(); ++c)
        for (std::size_t s = 0; s < scan.samples[c].size(); ++s)
            for (std::size_t k = 0; k < scan.samples[c][s].size(); ++k)
                os << scan.values[c] << ',' << s << ',' << k << ',' << scan.samples[c][s][k] << '\n';
}

// ---------------------------------------------------------------------------------------------
// Basins of attraction

struct Attractor {
    std::vector<MacrospinState> points;  // one stroboscopic cycle
    int period() const noexcept { return static_cast<int>(points.size()); }
};

struct BasinOptions {
    int seeds{48};                  // coarse seed set for attractor discovery
    double seed_periods{600.0};     // long run before reading off the cycle
    double match_tolerance{1e-3};   // max-norm distance to an attractor point
    double cluster_tolerance{1e-6}; // cycle detection on seed runs
    int max_period{32};
    int min_periods{20};            // cells are not matched before this time
    int max_periods{1200};          // cells still unmatched after this are unresolved
    int confirm{3};                 // consecutive matching periods required
    double theta_min{0.0}, theta_max{std::numbers::pi};  // window (defaults: whole sphere)
    double phi_min{0.0}, phi_max{2.0 * std::numbers::pi};
};

struct BasinMap {
    int n_theta{0}, n_phi{0};
    std::vector<double> theta, phi;  // cell corner coordinates
    std::vector<int> label;          // row-major [i_theta * n_phi + i_phi]; -1 = unresolved
    std::vector<Attractor> attractors;

    int at(int i, int j) const { return label[static_cast<std::size_t>(i) * n_phi + j]; }
    double unresolved_fraction() const {
        if (label.empty()) return 0.0;
        return static_cast<double>(std::count(label.begin(), label.end(), -1)) / static_cast<double>(label.size());
    }
    std::vector<int> labels_present() const {
        std::vector<int> out;
        for (int l : label)
            if (l >= 0 && std::find(out.begin(), out.end(), l) == out.end()) out.push_back(l);
        std::sort(out.begin(), out.end());
        return out;
    }
};

struct BasinFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

// Smallest p with |x_{k+p} - x_k| < tol over the tail; 0 if none
inline int cycle_length(const std::vector<MacrospinState>& orbit, double tol, int pmax) {
    for (int p = 1; p <= pmax; ++p) {
        bool ok = true;
        for (std::size_t i = 0; i + static_cast<std::size_t>(p) < orbit.size() && ok; ++i)
            ok = max_abs_diff(orbit[i], orbit[i + static_cast<std::size_t>(p)]) < tol;
        if (ok) return p;
    }
    return 0;
}

inline bool same_attractor(const Attractor& a, const Attractor& b, double tol) {
    if (a.period() != b.period()) return false;
    for (const auto& x : a.points) {
        bool hit = false;
        for (const auto& y : b.points) hit = hit || max_abs_diff(x, y) < tol;
        if (!hit) return false;
    }
    return true;
}

inline int match_attractor(const std::vector<Attractor>& atts, const MacrospinState& m, double tol) {
    for (std::size_t a = 0; a < atts.size(); ++a)
        for (const auto& x : atts[a].points)
            if (max_abs_diff(m, x) < tol) return static_cast<int>(a);
    return -1;
}

}  // namespace detail

// Periodic attractors reached from a coarse Fibonacci seed set, in order of discovery
inline std::vector<Attractor> detect_attractors(const ModelParams& p, const IntegratorSpec& spec, const BasinOptions& opt,
                                                unsigned threads = 0) {
    const auto seeds = fibonacci_sphere(opt.seeds);
    std::vector<std::optional<Attractor>> found(seeds.size());
    const int tail = 2 * opt.max_period + 2;
    parallel_for(seeds.size(), threads, [&](std::size_t s) {
        try {
            const auto orbit = stroboscopic_orbit(seeds[s], p, spec, {opt.seed_periods, tail});
            const int per = detail::cycle_length(orbit, opt.cluster_tolerance, opt.max_period);
            if (per > 0) found[s] = Attractor{{orbit.begin(), orbit.begin() + per}};
        } catch (const NumericalError&) {
        }
    });
    std::vector<Attractor> atts;
    for (const auto& f : found) {
        if (!f) continue;
        bool dup = false;
        for (const auto& a : atts) dup = dup || detail::same_attractor(a, *f, opt.match_tolerance);
        if (!dup) atts.push_back(*f);
    }
    return atts;
}

// Label of the attractor that captures m0, or -1 if none is matched within max_periods
inline int basin_label(const MacrospinState& m0, const ModelParams& p, const IntegratorSpec& spec,
                       const std::vector<Attractor>& atts, const BasinOptions& opt) {
    const long per = steps_per_period(spec);
    MacrospinState m = m0;
    int last = -2, streak = 0;
    try {
        for (int k = 1; k <= opt.max_periods; ++k) {
            m = advance(m, p, spec, static_cast<long>(k - 1) * per, per);
            if (k < opt.min_periods) continue;
            const int lab = detail::match_attractor(atts, m, opt.match_tolerance);
            if (lab >= 0 && lab == last) ++streak;
            else streak = lab >= 0 ? 1 : 0;
            last = lab;
            if (streak >= opt.confirm) return lab;
        }
    } catch (const NumericalError&) {
    }
    return -1;
}

// Grid cell (i, j) is represented by its corner (theta_i, phi_j) with theta_i = theta_min + i*dtheta
inline BasinMap basin_map(const ModelParams& p, int n_theta, int n_phi, const IntegratorSpec& spec = {},
                          const BasinOptions& opt = {}, unsigned threads = 0, bool enforce_resolution = true,
                          const std::vector<Attractor>* known = nullptr) {
    validate(p);
    if (n_theta < 2 || n_phi < 2) throw ValidationError("basin grid needs at least 2 cells per axis");
    if (enforce_resolution && (n_theta < 50 || n_phi < 100))
        throw ValidationError("basin resolution must be at least 50 x 100");
    steps_per_period(spec);
    BasinMap map;
    map.n_theta = n_theta;
    map.n_phi = n_phi;
    for (int i = 0; i < n_theta; ++i) map.theta.push_back(opt.theta_min + (opt.theta_max - opt.theta_min) * i / n_theta);
    for (int j = 0; j < n_phi; ++j) map.phi.push_back(opt.phi_min + (opt.phi_max - opt.phi_min) * j / n_phi);
    map.attractors = known ? *known : detect_attractors(p, spec, opt, threads);
    map.label.assign(static_cast<std::size_t>(n_theta) * n_phi, -1);
    if (map.attractors.empty()) throw BasinFailure("basin_map: no periodic attractor found from the seed set");
    parallel_for(map.label.size(), threads, [&](std::size_t idx) {
        const int i = static_cast<int>(idx / static_cast<std::size_t>(n_phi));
        const int j = static_cast<int>(idx % static_cast<std::size_t>(n_phi));
        map.label[idx] = basin_label(angle_to_vector({map.theta[static_cast<std::size_t>(i)], map.phi[static_cast<std::size_t>(j)]}),
                                     p, spec, map.attractors, opt);
    });
    if (map.unresolved_fraction() > 0.2)
        throw BasinFailure("basin_map: " + format_double(100.0 * map.unresolved_fraction()) +
                           "% of cells matched no attractor (limit 20%)");
    return map;
}

// Fraction of cells with at least one 4-neighbour of a different label (phi wraps)
inline double boundary_fraction(const BasinMap& m, bool wrap_phi = true) {
    std::size_t count = 0;
    for (int i = 0; i < m.n_theta; ++i)
        for (int j = 0; j < m.n_phi; ++j) {
            const int l = m.at(i, j);
            bool edge = false;
            const int di[4] = {-1, 1, 0, 0}, dj[4] = {0, 0, -1, 1};
            for (int d = 0; d < 4 && !edge; ++d) {
                int ii = i + di[d], jj = j + dj[d];
                if (ii < 0 || ii >= m.n_theta) continue;
                if (jj < 0 || jj >= m.n_phi) {
                    if (!wrap_phi) continue;
                    jj = (jj + m.n_phi) % m.n_phi;
                }
                edge = m.at(ii, jj) != l;
            }
            count += edge ? 1 : 0;
        }
    return static_cast<double>(count) / static_cast<double>(m.label.size());
}

inline void write_basin_csv(std::ostream& os, const BasinMap& m, const std::string& config_comment) {
    os << "# " << config_comment << " attractors=" << m.attractors.size() << '\n' << "theta,phi,label\n";
    os.precision(10);
    for (int i = 0; i < m.n_theta; ++i)
        for (int j = 0; j < m.n_phi; ++j)
            os << m.theta[static_cast<std::size_t>(i)] << ',' << m.phi[static_cast<std::size_t>(j)] << ',' << m.at(i, j) << '\n';
}

}  // namespace macrospin
