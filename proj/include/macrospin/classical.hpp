// classical.hpp: mean-field equations of motion, Jacobian and trajectory integration
#pragma once

#include "integrator.hpp"
#include "model.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace macrospin {

// t is physical time (drive phase omega*t)
inline MacrospinState classical_rhs(double t, const MacrospinState& m, const ModelParams& p) noexcept {
    const double s = std::sin(p.omega * t);
    const double c = 1.0 - std::cos(p.omega * t);
    const double jx = p.j[0], jy = p.j[1], jz = p.j[2];
    const double g = p.gamma, k = p.kappa;
    return {g * c * m.z + 4.0 * (jy - jz) * m.y * m.z + k * m.x * m.z,
            -g * s * m.z + 4.0 * (jz - jx) * m.z * m.x + k * m.y * m.z,
            g * s * m.y - g * c * m.x + 4.0 * (jx - jy) * m.x * m.y - k * (m.x * m.x + m.y * m.y)};
}

inline Eigen::Matrix3d classical_jacobian(double t, const MacrospinState& m, const ModelParams& p) noexcept {
    const double s = std::sin(p.omega * t);
    const double c = 1.0 - std::cos(p.omega * t);
    const double a = 4.0 * (p.j[1] - p.j[2]);  // couples y,z in dx
    const double b = 4.0 * (p.j[2] - p.j[0]);  // couples z,x in dy
    const double d = 4.0 * (p.j[0] - p.j[1]);  // couples x,y in dz
    const double g = p.gamma, k = p.kappa;
    Eigen::Matrix3d J;
    J << k * m.z, a * m.z, g * c + a * m.y + k * m.x,
         b * m.z, k * m.z, -g * s + b * m.x + k * m.y,
         -g * c + d * m.y - 2.0 * k * m.x, g * s + d * m.x - 2.0 * k * m.y, 0.0;
    return J;
}

struct SamplingPolicy {
    bool stroboscopic_only{false};
    long stride{1};           // dense mode: keep every stride-th step (period boundaries always kept)
    double record_from{0.0};  // periods; earlier samples are dropped
};

struct IntegrationFailure {
    std::string message;
    double time{0.0};
    MacrospinState last_valid{};
};

struct Trajectory {
    std::vector<double> times;  // in driving periods
    std::vector<MacrospinState> states;
    std::vector<std::size_t> stroboscopic_indices;
    std::optional<IntegrationFailure> failure;

    bool ok() const noexcept { return !failure.has_value(); }
};

// Propagates m over `steps` RK steps starting at step index `step0`; throws NumericalError on blow-up
inline MacrospinState advance(MacrospinState m, const ModelParams& p, const IntegratorSpec& spec, long step0,
                              long steps) {
    const long per = steps_per_period(spec);
    const double T = p.period();
    const double h = T / static_cast<double>(per);
    const auto& tab = tableau(spec.order);
    auto f = [&p](double t, const MacrospinState& y) { return classical_rhs(t, y, p); };
    for (long s = 0; s < steps; ++s) {
        const double t = static_cast<double>(step0 + s) * h;
        MacrospinState next = rk_step(tab, f, t, m, h);
        if (!next.finite())
            throw NumericalError("non-finite classical state", m, static_cast<double>(step0 + s) / per);
        m = next;
    }
    return m;
}

inline Trajectory integrate(const MacrospinState& m0, const ModelParams& p, const IntegratorSpec& spec,
                            double t_end, const SamplingPolicy& record = {}) {
    validate(p);
    if (!(t_end > 0.0)) throw ValidationError("t_end must be > 0");
    if (record.stride < 1) throw ValidationError("sampling stride must be >= 1");
    if (!m0.finite()) throw ValidationError("initial state must be finite");
    const long per = steps_per_period(spec);
    const long total = steps_for(t_end, per, "t_end");
    const double h = p.period() / static_cast<double>(per);
    const auto& tab = tableau(spec.order);
    auto f = [&p](double t, const MacrospinState& y) { return classical_rhs(t, y, p); };

    Trajectory tr;
    auto keep = [&](long step, const MacrospinState& m) {
        const double tp = static_cast<double>(step) / per;
        if (tp < record.record_from - 1e-12) return;
        const bool strobo = step % per == 0;
        if (record.stroboscopic_only && !strobo) return;
        if (!strobo && step % record.stride != 0) return;
        if (strobo) tr.stroboscopic_indices.push_back(tr.times.size());
        tr.times.push_back(tp);
        tr.states.push_back(m);
    };

    MacrospinState m = m0;
    keep(0, m);
    for (long s = 0; s < total; ++s) {
        MacrospinState next = rk_step(tab, f, static_cast<double>(s) * h, m, h);
        if (!next.finite()) {
            tr.failure = IntegrationFailure{"non-finite classical state", static_cast<double>(s) / per, m};
            break;
        }
        m = next;
        keep(s + 1, m);
    }
    return tr;
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr, const std::string& config_comment) {
    os << "# " << config_comment << '\n' << "t,mx,my,mz,stroboscopic\n";
    os.precision(12);
    std::size_t next = 0;
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        const bool strobo = next < tr.stroboscopic_indices.size() && tr.stroboscopic_indices[next] == i;
        if (strobo) ++next;
        const auto& m = tr.states[i];
        os << tr.times[i] << ',' << m.x << ',' << m.y << ',' << m.z << ',' << (strobo ? 1 : 0) << '\n';
    }
}

}  // namespace macrospin
