// lyapunov.hpp: Benettin/QR Lyapunov spectrum and (gamma, kappa) phase diagrams
#pragma once

#include "classical.hpp"
#include "parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace macrospin {

struct LyapunovOptions {
    double t_total{2000.0};        // periods, including the transient
    double renorm_interval{1.0};   // periods; must be a whole number of steps
    double transient{200.0};       // periods discarded before accumulating
};

struct LyapunovResult {
    std::array<double, 3> exponents{};  // descending, per period
    double t_total{0.0};
    double renorm_interval{0.0};
    std::vector<double> converged_series;  // running lambda_max after each post-transient renormalization
    double trace_average{0.0};             // <tr J> over the same window, per period
    MacrospinState final_state{};

    double max() const noexcept { return exponents[0]; }
};

namespace detail {

// Orbit point plus tangent frame, evolved jointly by the same RK scheme
struct TangentState {
    MacrospinState m;
    Eigen::Matrix3d Q;

    friend TangentState operator+(const TangentState& a, const TangentState& b) {
        return {a.m + b.m, a.Q + b.Q};
    }
    friend TangentState operator*(double s, const TangentState& a) { return {s * a.m, s * a.Q}; }
};

}  // namespace detail

inline LyapunovResult lyapunov_spectrum(const MacrospinState& m0, const ModelParams& p, const IntegratorSpec& spec = {},
                                        const LyapunovOptions& opt = {}) {
    validate(p);
    const long per = steps_per_period(spec);
    const long total = steps_for(opt.t_total, per, "t_total");
    const long skip = steps_for(opt.transient, per, "transient");
    const long ren = steps_for(opt.renorm_interval, per, "renorm_interval");
    if (ren < 1) throw ValidationError("renorm_interval must be at least one step");
    if (skip >= total) throw ValidationError("transient must be shorter than t_total");
    if (!m0.finite()) throw ValidationError("initial state must be finite");

    const double T = p.period();
    const double h = T / static_cast<double>(per);
    const auto& tab = tableau(spec.order);
    auto f = [&p](double t, const detail::TangentState& y) {
        return detail::TangentState{classical_rhs(t, y.m, p), classical_jacobian(t, y.m, p) * y.Q};
    };

    detail::TangentState y{m0, Eigen::Matrix3d::Identity()};
    std::array<double, 3> acc{0.0, 0.0, 0.0};
    double trace_acc = 0.0;
    LyapunovResult res;
    res.t_total = opt.t_total;
    res.renorm_interval = opt.renorm_interval;
    res.converged_series.reserve(static_cast<std::size_t>((total - skip) / ren + 1));

    for (long s = 0; s < total; ++s) {
        const MacrospinState before = y.m;
        y = rk_step(tab, f, static_cast<double>(s) * h, y, h);
        if (!y.m.finite() || !y.Q.allFinite())
            throw NumericalError("non-finite state in tangent flow", before, static_cast<double>(s) / per);
        const long done = s + 1;
        if (done > skip) trace_acc += 2.0 * p.kappa * 0.5 * (before.z + y.m.z);
        if (done % ren != 0 && done != total) continue;
        Eigen::HouseholderQR<Eigen::Matrix3d> qr(y.Q);
        Eigen::Matrix3d R = qr.matrixQR().triangularView<Eigen::Upper>();
        Eigen::Matrix3d Q = qr.householderQ();
        for (int c = 0; c < 3; ++c) {
            if (R(c, c) < 0.0) {
                R.row(c) *= -1.0;
                Q.col(c) *= -1.0;
            }
        }
        y.Q = Q;
        if (done <= skip) continue;
        for (int c = 0; c < 3; ++c) acc[c] += std::log(R(c, c));
        const double elapsed = static_cast<double>(done - skip) / per;
        res.converged_series.push_back(acc[0] / elapsed);
    }
    const double window = static_cast<double>(total - skip) / per;
    for (int c = 0; c < 3; ++c) res.exponents[c] = acc[c] / window;
    std::sort(res.exponents.begin(), res.exponents.end(), std::greater<>());
    res.trace_average = trace_acc / static_cast<double>(total - skip) * T;
    res.final_state = y.m;
    return res;
}

// Marginal band mirrors the reported "0.0000" rows
enum class StabilityClass { chaotic, marginal, stable };

inline StabilityClass classify_mle(double mle, double marginal_band = 1e-3) noexcept {
    if (std::abs(mle) < marginal_band) return StabilityClass::marginal;
    return mle > 0.0 ? StabilityClass::chaotic : StabilityClass::stable;
}

inline const char* to_string(StabilityClass c) noexcept {
    switch (c) {
        case StabilityClass::chaotic: return "chaotic";
        case StabilityClass::marginal: return "marginal";
        default: return "stable";
    }
}

struct MlePhaseDiagram {
    std::vector<double> gamma_axis;
    std::vector<double> kappa_axis;
    std::vector<std::vector<double>> mle;  // mle[i_gamma][i_kappa]
    MacrospinState initial_state{};
    std::vector<std::string> diagnostics;  // one entry per failed cell
};

inline std::vector<double> linspace(double lo, double hi, int n) {
    if (n < 1) throw ValidationError("axis resolution must be >= 1");
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
    return v;
}

inline MlePhaseDiagram mle_phase_diagram(const std::vector<double>& gamma_axis, const std::vector<double>& kappa_axis,
                                         const ModelParams& base, const MacrospinState& m0,
                                         const IntegratorSpec& spec = {}, const LyapunovOptions& opt = {},
                                         unsigned threads = 0) {
    if (gamma_axis.empty() || kappa_axis.empty()) throw ValidationError("phase diagram axes must be non-empty");
    validate(base);
    steps_per_period(spec);
    const std::size_t nk = kappa_axis.size();
    const std::size_t cells = gamma_axis.size() * nk;
    std::vector<double> flat(cells, std::numeric_limits<double>::quiet_NaN());
    std::vector<std::string> diag(cells);
    parallel_for(cells, threads, [&](std::size_t idx) {
        ModelParams p = base;
        p.gamma = gamma_axis[idx / nk];
        p.kappa = kappa_axis[idx % nk];
        try {
            flat[idx] = lyapunov_spectrum(m0, p, spec, opt).max();
        } catch (const std::exception& e) {
            diag[idx] = "gamma=" + format_double(p.gamma) + " kappa=" + format_double(p.kappa) + ": " + e.what();
        }
    });
    MlePhaseDiagram out{gamma_axis, kappa_axis, {}, m0, {}};
    out.mle.assign(gamma_axis.size(), std::vector<double>(nk));
    for (std::size_t idx = 0; idx < cells; ++idx) {
        out.mle[idx / nk][idx % nk] = flat[idx];
        if (!diag[idx].empty()) out.diagnostics.push_back(diag[idx]);
    }
    return out;
}

inline void write_phase_diagram_csv(std::ostream& os, const MlePhaseDiagram& d, const std::string& config_comment) {
    os << "# " << config_comment << '\n' << "gamma,kappa,mle\n";
    os.precision(10);
    for (std::size_t i = 0; i < d.gamma_axis.size(); ++i)
        for (std::size_t k = 0; k < d.kappa_axis.size(); ++k)
            os << d.gamma_axis[i] << ',' << d.kappa_axis[k] << ',' << d.mle[i][k] << '\n';
}

// Whitespace-separated matrix: first line kappa axis, then one row per gamma (gamma first)
inline void write_phase_diagram_grid(std::ostream& os, const MlePhaseDiagram& d, const std::string& config_comment) {
    os << "# " << config_comment << '\n' << "# rows: gamma; columns: kappa\n";
    os.precision(10);
    os << "nan";
    for (double k : d.kappa_axis) os << ' ' << k;
    os << '\n';
    for (std::size_t i = 0; i < d.gamma_axis.size(); ++i) {
        os << d.gamma_axis[i];
        for (double v : d.mle[i]) os << ' ' << v;
        os << '\n';
    }
}

}  // namespace macrospin
