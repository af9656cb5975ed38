// feigenbaum.hpp: period-doubling cascade location by Floquet continuation
#pragma once

#include "analysis.hpp"
#include "lyapunov.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <json.hpp>

#include <cmath>
#include <concepts>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace macrospin {

// One-parameter family of maps x -> F_r(x) acting on states of a fixed dimension.
// tangent_basis(x) spans the admissible perturbations (the sphere's tangent plane for the macrospin).
template <class S>
concept MapFamily = requires(const S& s, const Eigen::VectorXd& x, double r, long q) {
    { s.iterate(x, r, q) } -> std::convertible_to<Eigen::VectorXd>;
    { s.iterate_tangent(x, r, q) } -> std::convertible_to<std::pair<Eigen::VectorXd, Eigen::MatrixXd>>;
    { s.tangent_basis(x) } -> std::convertible_to<Eigen::MatrixXd>;
    { s.project(x) } -> std::convertible_to<Eigen::VectorXd>;
    { s.observable(x) } -> std::convertible_to<double>;
};

struct LogisticFamily {
    Eigen::VectorXd iterate(const Eigen::VectorXd& x, double r, long q) const {
        double v = x[0];
        for (long i = 0; i < q; ++i) v = r * v * (1.0 - v);
        return Eigen::VectorXd::Constant(1, v);
    }
    std::pair<Eigen::VectorXd, Eigen::MatrixXd> iterate_tangent(const Eigen::VectorXd& x, double r, long q) const {
        double v = x[0], d = 1.0;
        for (long i = 0; i < q; ++i) {
            d *= r * (1.0 - 2.0 * v);
            v = r * v * (1.0 - v);
        }
        return {Eigen::VectorXd::Constant(1, v), Eigen::MatrixXd::Constant(1, 1, d)};
    }
    Eigen::MatrixXd tangent_basis(const Eigen::VectorXd&) const { return Eigen::MatrixXd::Identity(1, 1); }
    Eigen::VectorXd project(const Eigen::VectorXd& x) const { return x; }
    double observable(const Eigen::VectorXd& x) const { return x[0]; }
};

// Stroboscopic (one-period) map of the classical flow with one parameter as control
struct StroboscopicFamily {
    ModelParams base;
    std::string control{"kappa"};
    IntegratorSpec spec{};

    static Eigen::VectorXd vec(const MacrospinState& m) { return Eigen::Vector3d(m.x, m.y, m.z); }
    static MacrospinState state(const Eigen::VectorXd& x) { return {x[0], x[1], x[2]}; }

    // the flow conserves |m|; renormalizing each period removes the integrator's slow radial drift,
    // which otherwise keeps a stable cycle from closing below ~1e-7 at strong drive
    Eigen::VectorXd iterate(const Eigen::VectorXd& x, double r, long q) const {
        const long per = steps_per_period(spec);
        const ModelParams p = with_control(base, control, r);
        MacrospinState m = state(x);
        for (long k = 0; k < q; ++k) {
            m = advance(m, p, spec, 0, per);
            m = (1.0 / m.norm()) * m;
        }
        return vec(m);
    }
    std::pair<Eigen::VectorXd, Eigen::MatrixXd> iterate_tangent(const Eigen::VectorXd& x, double r, long q) const {
        const ModelParams p = with_control(base, control, r);
        const long per = steps_per_period(spec);
        const double h = p.period() / static_cast<double>(per);
        const auto& tab = tableau(spec.order);
        auto f = [&p](double t, const detail::TangentState& y) {
            return detail::TangentState{classical_rhs(t, y.m, p), classical_jacobian(t, y.m, p) * y.Q};
        };
        detail::TangentState y{state(x), Eigen::Matrix3d::Identity()};
        for (long s = 0; s < q * per; ++s) {
            y = rk_step(tab, f, static_cast<double>(s % per) * h, y, h);
            if (!y.m.finite() || !y.Q.allFinite())
                throw NumericalError("non-finite state in monodromy", y.m, static_cast<double>(s) / per);
            if ((s + 1) % per == 0) {
                // derivative of the per-period renormalization in iterate()
                const double n = y.m.norm();
                y.m = (1.0 / n) * y.m;
                const Eigen::Vector3d u(y.m.x, y.m.y, y.m.z);
                y.Q = (Eigen::Matrix3d::Identity() - u * u.transpose()) * y.Q / n;
            }
        }
        return {vec(y.m), Eigen::MatrixXd(y.Q)};
    }
    Eigen::MatrixXd tangent_basis(const Eigen::VectorXd& x) const {
        const Eigen::Vector3d n = Eigen::Vector3d(x[0], x[1], x[2]).normalized();
        const Eigen::Vector3d u = n.unitOrthogonal();
        Eigen::MatrixXd b(3, 2);
        b.col(0) = u;
        b.col(1) = n.cross(u).normalized();
        return b;
    }
    Eigen::VectorXd project(const Eigen::VectorXd& x) const { return x.normalized(); }
    double observable(const Eigen::VectorXd& x) const { return x[0]; }
};

struct FeigenbaumOptions {
    int max_doublings{5};
    double resolution{1e-8};        // bisection width on the control parameter
    long transient{1000};           // map iterations before the base period is read off
    double classify_tolerance{1e-7};
    double first_step_fraction{0.025};  // continuation step for the first doubling, as a fraction of the bracket
    int steps_per_interval{12};     // continuation steps per expected doubling interval
    double seed_fraction{0.25};     // seed the doubled orbit this far into the expected next interval
    long seed_iterations{4000};     // map iterations used to settle onto the doubled orbit
    double newton_tolerance{1e-11};
    int newton_iterations{30};
};

struct FeigenbaumEstimate {
    int base_period{0};
    std::vector<double> bifurcation_points;  // kappa_n, increasing
    std::vector<int> periods;                // orbit period just below each point
    std::vector<double> multipliers_check;   // flip multiplier at each located point (close to -1)
    std::vector<double> ratios;              // (k_n - k_{n-1}) / (k_{n+1} - k_n)
    double delta_estimate{std::numeric_limits<double>::quiet_NaN()};
};

struct FeigenbaumFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

struct OrbitPoint {
    Eigen::VectorXd x;
    double flip{0.0};  // smallest real Floquet multiplier, or |mu| for a complex pair
    Eigen::VectorXd flip_direction;
};

// Newton on F^q(x) = x in the tangent basis; returns the converged point with its flip multiplier
template <MapFamily S>
std::optional<OrbitPoint> periodic_point(const S& sys, Eigen::VectorXd x, double r, long q,
                                         const FeigenbaumOptions& opt) {
    for (int it = 0; it < opt.newton_iterations; ++it) {
        auto [y, M] = sys.iterate_tangent(x, r, q);
        const Eigen::MatrixXd B = sys.tangent_basis(x);
        const Eigen::VectorXd res = B.transpose() * (y - x);
        const Eigen::MatrixXd A = B.transpose() * M * B;
        if (res.norm() < opt.newton_tolerance) {
            Eigen::EigenSolver<Eigen::MatrixXd> es(A);
            OrbitPoint out{x, std::numeric_limits<double>::infinity(), Eigen::VectorXd()};
            bool any_real = false;
            for (Eigen::Index k = 0; k < A.rows(); ++k) {
                const auto ev = es.eigenvalues()[k];
                if (std::abs(ev.imag()) > 1e-12) continue;
                any_real = true;
                if (ev.real() < out.flip) {
                    out.flip = ev.real();
                    out.flip_direction = B * es.eigenvectors().col(k).real();
                }
            }
            if (!any_real) {
                out.flip = std::abs(es.eigenvalues()[0]);
                out.flip_direction = Eigen::VectorXd::Zero(x.size());
            }
            return out;
        }
        const Eigen::VectorXd c =
            (A - Eigen::MatrixXd::Identity(A.rows(), A.cols())).colPivHouseholderQr().solve(-res);
        if (!c.allFinite()) return std::nullopt;
        x = sys.project(x + B * c);
    }
    return std::nullopt;
}

// True if x is not already periodic with period q/2 (guards against collapsing onto the parent orbit)
template <MapFamily S>
bool has_full_period(const S& sys, const Eigen::VectorXd& x, double r, long q) {
    if (q % 2 != 0) return true;
    return (sys.iterate(x, r, q / 2) - x).norm() > 1e-6;
}

}  // namespace detail

// Locates successive flip bifurcations kappa_n of the orbit reached from x0 at the bracket start.
// The base period is read off with classify_periodicity; each period-q orbit is then followed by
// Newton continuation and kappa_n is bisected on the crossing of its flip multiplier through -1.
template <MapFamily S>
FeigenbaumEstimate feigenbaum_cascade(const S& sys, double r_lo, double r_hi, const Eigen::VectorXd& x0,
                                      const FeigenbaumOptions& opt = {}) {
    if (!(r_hi > r_lo)) throw ValidationError("feigenbaum bracket must be increasing");
    if (opt.max_doublings < 3) throw ValidationError("max_doublings must be >= 3");
    if (!(opt.resolution > 0.0)) throw ValidationError("bisection resolution must be positive");

    FeigenbaumEstimate est;
    Eigen::VectorXd x = sys.iterate(sys.project(x0), r_lo, opt.transient);
    const int probe = 4 * 64 + 4;
    std::vector<double> obs;
    Eigen::VectorXd z = x;
    for (int k = 0; k < probe; ++k) {
        z = sys.iterate(z, r_lo, 1);
        obs.push_back(sys.observable(z));
    }
    const auto cls = classify_periodicity(obs, 0.0, {opt.classify_tolerance, 0.01, 64});
    if (cls.regime != Regime::periodic)
        throw FeigenbaumFailure("no stable periodic orbit at the bracket start (" + cls.label() + ")");
    est.base_period = cls.period;

    long q = cls.period;
    double r = r_lo;
    auto cur = detail::periodic_point(sys, x, r, q, opt);
    if (!cur) throw FeigenbaumFailure("Newton failed on the base orbit at the bracket start");
    double step = opt.first_step_fraction * (r_hi - r_lo);

    auto fail = [&](const std::string& why) {
        std::string msg = "feigenbaum: " + why + "; located " + std::to_string(est.bifurcation_points.size()) +
                          " doubling(s)";
        for (double k : est.bifurcation_points) msg += " " + format_double(k);
        if (est.bifurcation_points.size() < 3) throw FeigenbaumFailure(msg + " (need at least 3)");
        return msg;
    };

    bool stop = false;
    while (!stop && static_cast<int>(est.bifurcation_points.size()) < opt.max_doublings) {
        // continue the period-q orbit until its flip multiplier passes -1
        double a = r;
        detail::OrbitPoint pa = *cur;
        std::optional<detail::OrbitPoint> pb;
        double b = a;
        double h = step;
        while (true) {
            if (a >= r_hi) {
                fail("period-" + std::to_string(q) + " orbit survives to the bracket end");
                stop = true;
                break;
            }
            b = std::min(a + h, r_hi);
            auto trial = detail::periodic_point(sys, pa.x, b, q, opt);
            if (!trial || !detail::has_full_period(sys, trial->x, b, q)) {
                h *= 0.5;
                if (h < opt.resolution) {
                    fail("continuation of the period-" + std::to_string(q) + " orbit stalled near " + format_double(a));
                    stop = true;
                    break;
                }
                continue;
            }
            if (trial->flip < -1.0) {
                pb = trial;
                break;
            }
            a = b;
            pa = *trial;
        }
        if (stop) break;
        while (b - a > opt.resolution) {
            const double mid = 0.5 * (a + b);
            auto pm = detail::periodic_point(sys, pa.x, mid, q, opt);
            if (!pm) {
                fail("Newton failed during bisection near " + format_double(mid));
                stop = true;
                break;
            }
            if (pm->flip > -1.0) {
                a = mid;
                pa = *pm;
            } else {
                b = mid;
                pb = pm;
            }
        }
        if (stop) break;
        const double kc = 0.5 * (a + b);
        est.bifurcation_points.push_back(kc);
        est.periods.push_back(static_cast<int>(q));
        est.multipliers_check.push_back(pa.flip);
        if (static_cast<int>(est.bifurcation_points.size()) >= opt.max_doublings) break;

        // seed the doubled orbit beyond kc
        const std::size_t n = est.bifurcation_points.size();
        const double expected = n >= 2 ? (est.bifurcation_points[n - 1] - est.bifurcation_points[n - 2]) / 4.0
                                        : 4.0 * step;
        const double rs = kc + opt.seed_fraction * expected;
        if (rs >= r_hi) {
            fail("bracket ends before the next cascade stage");
            break;
        }
        Eigen::VectorXd xs = pb->x;
        if (pb->flip_direction.size() == xs.size() && pb->flip_direction.norm() > 0.0)
            xs = sys.project(xs + 1e-3 * pb->flip_direction.normalized());
        xs = sys.iterate(xs, rs, opt.seed_iterations);
        const long q2 = 2 * q;
        auto seeded = detail::periodic_point(sys, xs, rs, q2, opt);
        if (!seeded || !detail::has_full_period(sys, seeded->x, rs, q2)) {
            fail("could not settle onto the period-" + std::to_string(q2) + " orbit at " + format_double(rs));
            break;
        }
        std::vector<double> tail;
        Eigen::VectorXd w = seeded->x;
        const long nsamp = std::max<long>(100, 4 * q2 + 4);
        for (long k = 0; k < nsamp; ++k) {
            w = sys.iterate(w, rs, 1);
            tail.push_back(sys.observable(w));
        }
        const auto c2 = classify_periodicity(tail, 0.0, {opt.classify_tolerance, 0.01, static_cast<int>(q2)});
        if (c2.regime != Regime::periodic || c2.period != q2) {
            fail("orbit seeded at " + format_double(rs) + " is " + c2.label() + ", expected period " +
                 std::to_string(q2));
            break;
        }
        q = q2;
        r = rs;
        cur = seeded;
        step = expected / opt.steps_per_interval;
    }
    const auto& k = est.bifurcation_points;
    if (k.size() < 3) throw FeigenbaumFailure(fail("too few doublings"));
    for (std::size_t i = 1; i + 1 < k.size(); ++i) est.ratios.push_back((k[i] - k[i - 1]) / (k[i + 1] - k[i]));
    est.delta_estimate = est.ratios.back();
    return est;
}

// Macrospin cascade with kappa as control, started from the state m0
inline FeigenbaumEstimate feigenbaum_estimate(const ModelParams& base, double kappa_lo, double kappa_hi,
                                              const MacrospinState& m0, const IntegratorSpec& spec = {},
                                              FeigenbaumOptions opt = {}) {
    validate(with_control(base, "kappa", kappa_lo));
    validate(with_control(base, "kappa", kappa_hi));
    steps_per_period(spec);
    return feigenbaum_cascade(StroboscopicFamily{base, "kappa", spec}, kappa_lo, kappa_hi,
                              StroboscopicFamily::vec(m0), opt);
}

inline FeigenbaumEstimate logistic_feigenbaum(double r_lo, double r_hi, double x0 = 0.5, FeigenbaumOptions opt = {}) {
    if (!(r_lo > 0.0 && r_hi <= 4.0)) throw ValidationError("logistic bracket must lie in (0, 4]");
    return feigenbaum_cascade(LogisticFamily{}, r_lo, r_hi, Eigen::VectorXd::Constant(1, x0), opt);
}

inline nlohmann::json to_json(const FeigenbaumEstimate& e) {
    nlohmann::json j;
    j["base_period"] = e.base_period;
    j["points"] = e.bifurcation_points;
    j["periods"] = e.periods;
    j["flip_multipliers"] = e.multipliers_check;
    j["ratios"] = e.ratios;
    j["delta"] = e.delta_estimate;
    return j;
}

inline void write_feigenbaum_json(std::ostream& os, const FeigenbaumEstimate& e, const std::string& config_comment) {
    nlohmann::json j = to_json(e);
    j["config"] = config_comment;
    os << j.dump(2) << '\n';
}

}  // namespace macrospin
