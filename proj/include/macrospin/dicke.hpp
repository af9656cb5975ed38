// dicke.hpp: finite-N Lindblad dynamics in the maximal-spin Dicke basis
#pragma once

#include "classical.hpp"
#include "integrator.hpp"
#include "model.hpp"
#include "parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>

#include <cmath>
#include <complex>
#include <ostream>
#include <string>
#include <vector>

namespace macrospin {

using cplx = std::complex<double>;

// Row/column index a = M + N/2 in 0..N
struct DickeDensityMatrix {
    int n_spins{1};
    Eigen::MatrixXcd rho;

    int dim() const noexcept { return n_spins + 1; }
};

// f[a] = F_M for M = a - N/2: L|M> = F_M |M-1>, with S^mu = (1/N) sum_i sigma^mu_i
struct LadderCoefficients {
    int n_spins{1};
    std::vector<double> f;
};

inline LadderCoefficients ladder_coefficients(int n) {
    if (n < 1) throw ValidationError("ladder_coefficients: n must be >= 1");
    LadderCoefficients lc{n, std::vector<double>(static_cast<std::size_t>(n) + 1)};
    const double N = n;
    for (int a = 0; a <= n; ++a) {
        const double M = a - 0.5 * N;
        const double v = (0.5 + M / N) * (0.5 - M / N + 1.0 / N);
        lc.f[static_cast<std::size_t>(a)] = v > 0.0 ? std::sqrt(v) : 0.0;
    }
    lc.f[0] = 0.0;
    return lc;
}

// Coherent spin state with every spin along (theta, phi)
inline DickeDensityMatrix initial_product_state(int n, const SphericalAngle& ang) {
    if (n < 1) throw ValidationError("initial_product_state: n must be >= 1");
    validate(ang);
    const double c = std::cos(0.5 * ang.theta);
    const double s = std::sin(0.5 * ang.theta);
    Eigen::VectorXcd amp(n + 1);
    for (int a = 0; a <= n; ++a) {
        const int up = a, down = n - a;
        double mag = 0.0;
        if ((up == 0 || c != 0.0) && (down == 0 || s != 0.0)) {
            const double logc = up == 0 ? 0.0 : up * std::log(std::abs(c));
            const double logs = down == 0 ? 0.0 : down * std::log(std::abs(s));
            const double logbin = std::lgamma(n + 1.0) - std::lgamma(up + 1.0) - std::lgamma(down + 1.0);
            mag = std::exp(logc + logs + 0.5 * logbin);
            if (c < 0.0 && up % 2 == 1) mag = -mag;
        }
        amp[a] = mag * std::polar(1.0, ang.phi * down);
    }
    amp /= amp.norm();
    return {n, amp * amp.adjoint()};
}

namespace detail {

// Banded generator for the 1/N-scaled Hamiltonian plus dissipator, with a zero border of
// width 2 so the stencil needs no bounds checks. Storage is column-major (n+5)^2.
struct DickeKernel {
    int n{1};
    int ld{6};
    std::vector<double> f;     // f[a] for a in 0..n+1 (f[n+1] = 0)
    std::vector<double> d0;    // diagonal of H/N without the drive
    std::vector<double> u2;    // H/N(a, a+2)
    std::vector<double> diss;  // F_a^2
    ModelParams p;

    DickeKernel(const ModelParams& params, const LadderCoefficients& lc) : n(lc.n_spins), ld(lc.n_spins + 5), p(params) {
        const double N = n;
        f.assign(static_cast<std::size_t>(n) + 3, 0.0);
        for (int a = 0; a <= n; ++a) f[static_cast<std::size_t>(a)] = lc.f[static_cast<std::size_t>(a)];
        d0.assign(static_cast<std::size_t>(n) + 1, 0.0);
        u2.assign(static_cast<std::size_t>(n) + 1, 0.0);
        diss.assign(static_cast<std::size_t>(n) + 1, 0.0);
        const double jx = p.j[0], jy = p.j[1], jz = p.j[2];
        for (int a = 0; a <= n; ++a) {
            const auto A = static_cast<std::size_t>(a);
            const double sz = (2.0 * a - N) / N;
            // Jx Sx^2 + Jy Sy^2 = (Jx-Jy)(L^2 + R^2) + (Jx+Jy)(LR + RL)
            d0[A] = jz * sz * sz + (jx + jy) * (f[A] * f[A] + f[A + 1] * f[A + 1]);
            u2[A] = (jx - jy) * f[A + 1] * f[A + 2];
            diss[A] = f[A] * f[A];
        }
    }

    // out = d rho / dt on interior cells; rho, out are padded buffers. With `upper_only`
    // just a <= b is written; rho must then be valid on a <= b + 2.
    void apply(double t, const cplx* rho, cplx* out, bool upper_only = false) const {
        const double N = n;
        const double s = std::sin(p.omega * t), c = 1.0 - std::cos(p.omega * t);
        // coefficient arrays offset by 2 so that index a-2 .. a+2 needs no branches
        const std::size_t len = static_cast<std::size_t>(n) + 5;
        std::vector<cplx> up1(len, cplx{}), lo1(len, cplx{});  // H/N(a, a+1), H/N(a, a-1)
        std::vector<double> up2(len, 0.0), lo2(len, 0.0), dd(len, 0.0), fp(len, 0.0), ds(len, 0.0);
        for (int a = 0; a <= n; ++a) {
            const auto A = static_cast<std::size_t>(a);
            // H/N(a, a+1) = (Gamma/2) F_{a+1} (s + i c)
            up1[A + 2] = 0.5 * p.gamma * f[A + 1] * cplx(s, c);
            if (a >= 1) lo1[A + 2] = std::conj(0.5 * p.gamma * f[A] * cplx(s, c));
            up2[A + 2] = u2[A];
            if (a >= 2) lo2[A + 2] = u2[A - 2];
            dd[A + 2] = d0[A];
            fp[A + 2] = f[A + 1];
            ds[A + 2] = diss[A];
        }
        const double k2 = 2.0 * p.kappa, kap = p.kappa;
        for (int b = 0; b <= n; ++b) {
            const auto B = static_cast<std::size_t>(b) + 2;
            const cplx* col = rho + static_cast<std::ptrdiff_t>(b + 2) * ld + 2;
            const cplx* colm1 = col - ld;
            const cplx* colm2 = col - 2 * ld;
            const cplx* colp1 = col + ld;
            const cplx* colp2 = col + 2 * ld;
            cplx* o = out + static_cast<std::ptrdiff_t>(b + 2) * ld + 2;
            // right multiplication coefficients (rho H)(a,b) = sum_k rho(a, b+k) H(b+k, b)
            const cplx r_m1 = up1[B - 1];  // H(b-1, b)
            const cplx r_p1 = lo1[B + 1];  // H(b+1, b)
            const double r_m2 = up2[B - 2], r_p2 = lo2[B + 2], r_0 = dd[B];
            const double fb1 = fp[B], dsb = ds[B];
            const int amax = upper_only ? b : n;
            for (int a = 0; a <= amax; ++a) {
                const std::size_t A = static_cast<std::size_t>(a) + 2;
                const cplx x0 = col[a];
                const cplx hr = dd[A] * x0 + up1[A] * col[a + 1] + lo1[A] * col[a - 1] + up2[A] * col[a + 2] +
                                lo2[A] * col[a - 2];
                const cplx rh = r_0 * x0 + r_m1 * colm1[a] + r_p1 * colp1[a] + r_m2 * colm2[a] + r_p2 * colp2[a];
                const cplx comm = hr - rh;
                const cplx dis = (k2 * fp[A] * fb1) * colp1[a + 1] - (kap * (ds[A] + dsb)) * x0;
                // -i * comm
                o[a] = N * (cplx(comm.imag(), -comm.real()) + dis);
            }
        }
    }

    // Conjugate-fill the two sub-diagonals read by the stencil from the upper triangle
    void fill_band(cplx* v) const {
        for (int b = 0; b < n; ++b) {
            v[static_cast<std::ptrdiff_t>(b + 2) * ld + b + 3] = std::conj(v[static_cast<std::ptrdiff_t>(b + 3) * ld + b + 2]);
            if (b + 2 <= n)
                v[static_cast<std::ptrdiff_t>(b + 2) * ld + b + 4] = std::conj(v[static_cast<std::ptrdiff_t>(b + 4) * ld + b + 2]);
        }
    }
};

inline std::vector<cplx> pad(const Eigen::MatrixXcd& m) {
    const int n1 = static_cast<int>(m.rows());
    const int ld = n1 + 4;
    std::vector<cplx> buf(static_cast<std::size_t>(ld) * ld, cplx{});
    for (int b = 0; b < n1; ++b)
        for (int a = 0; a < n1; ++a) buf[static_cast<std::size_t>((b + 2) * ld + a + 2)] = m(a, b);
    return buf;
}

inline Eigen::MatrixXcd unpad(const std::vector<cplx>& buf, int n1) {
    const int ld = n1 + 4;
    Eigen::MatrixXcd m(n1, n1);
    for (int b = 0; b < n1; ++b)
        for (int a = 0; a < n1; ++a) m(a, b) = buf[static_cast<std::size_t>((b + 2) * ld + a + 2)];
    return m;
}

// Hermitian matrix from the upper triangle of a padded buffer
inline Eigen::MatrixXcd unpad_upper(const std::vector<cplx>& buf, int n1) {
    const int ld = n1 + 4;
    Eigen::MatrixXcd m(n1, n1);
    for (int b = 0; b < n1; ++b)
        for (int a = 0; a <= b; ++a) {
            const cplx v = buf[static_cast<std::size_t>((b + 2) * ld + a + 2)];
            m(a, b) = v;
            m(b, a) = std::conj(v);
        }
    return m;
}

}  // namespace detail

// d rho / dt at physical time t (already multiplied by N)
inline DickeDensityMatrix lindblad_rhs(double t, const DickeDensityMatrix& rho, const ModelParams& p,
                                       const LadderCoefficients& lc) {
    if (rho.rho.rows() != lc.n_spins + 1 || rho.rho.cols() != lc.n_spins + 1 || rho.n_spins != lc.n_spins)
        throw ValidationError("lindblad_rhs: dimension mismatch");
    detail::DickeKernel K(p, lc);
    auto in = detail::pad(rho.rho);
    std::vector<cplx> out(in.size(), cplx{});
    K.apply(t, in.data(), out.data());
    return {rho.n_spins, detail::unpad(out, rho.dim())};
}

inline MacrospinState expectation(const DickeDensityMatrix& r, const LadderCoefficients& lc) {
    const int n = r.n_spins;
    const double N = n;
    cplx sx{}, sy{};
    double sz = 0.0;
    for (int a = 0; a <= n; ++a) {
        sz += r.rho(a, a).real() * (2.0 * a - N) / N;
        if (a >= 1) {
            const double fa = lc.f[static_cast<std::size_t>(a)];
            // Tr(rho S) with S(a-1, a) = F_a for Sx, i F_a for Sy
            sx += fa * (r.rho(a, a - 1) + r.rho(a - 1, a));
            sy += fa * cplx(0.0, 1.0) * (r.rho(a, a - 1) - r.rho(a - 1, a));
        }
    }
    return {sx.real(), sy.real(), sz};
}

inline double purity(const DickeDensityMatrix& r) { return r.rho.squaredNorm(); }
inline double trace_error(const DickeDensityMatrix& r) { return std::abs(r.rho.trace() - cplx(1.0, 0.0)); }
inline double hermiticity_error(const DickeDensityMatrix& r) {
    return (r.rho - r.rho.adjoint()).cwiseAbs().maxCoeff();
}
inline double min_eigenvalue(const DickeDensityMatrix& r) {
    Eigen::MatrixXcd h = 0.5 * (r.rho + r.rho.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

struct QuantumObservables {
    double time{0.0};  // periods
    MacrospinState m{};
    double purity{1.0};
    double trace_err{0.0};
    double herm_err{0.0};
};

struct DensitySnapshot {
    double time{0.0};
    DickeDensityMatrix rho;
    double min_eigenvalue{0.0};
};

struct QuantumSampling {
    double interval{0.01};              // periods between observable samples
    std::vector<double> snapshot_times;  // periods
    bool full_matrix{false};  // advance every entry instead of assuming Hermiticity (verification runs)
};

struct QuantumRun {
    std::vector<QuantumObservables> samples;
    std::vector<DensitySnapshot> snapshots;
    double dt_used{0.0};
    bool dt_halved{false};
    double max_trace_err{0.0};
    double max_herm_err{0.0};
    double min_purity{1.0};
    double max_purity{1.0};
};

namespace detail {

struct QuantumAttempt {
    QuantumRun run;
    bool drifted{false};
};

inline QuantumAttempt evolve_once(const DickeDensityMatrix& rho0, const ModelParams& p, double dt, double t_end,
                                  const QuantumSampling& sampling, bool final_attempt) {
    const auto lc = ladder_coefficients(rho0.n_spins);
    const DickeKernel K(p, lc);
    const long per = steps_per_period({4, dt});
    const long total = steps_for(t_end, per, "t_end");
    const long stride = std::max(1L, steps_for(sampling.interval, per, "sampling interval"));
    std::vector<long> snap_steps;
    for (double ts : sampling.snapshot_times) snap_steps.push_back(steps_for(ts, per, "snapshot time"));
    const double h = p.period() / static_cast<double>(per);
    const int n1 = rho0.dim();

    std::vector<cplx> y = pad(rho0.rho);
    // rho stays Hermitian: only the upper triangle (plus the two sub-diagonals the stencil
    // reads) is advanced. Borders stay zero.
    std::vector<cplx> k(y.size(), cplx{}), acc(y.size(), cplx{}), tmp(y.size(), cplx{});
    const std::ptrdiff_t ldp = n1 + 4;
    const bool full = sampling.full_matrix;
    auto upper = [&](auto&& fn) {
        if (full) {
            for (std::size_t i = 0; i < y.size(); ++i) fn(i);
            return;
        }
        for (std::ptrdiff_t b = 0; b < n1; ++b) {
            const std::ptrdiff_t base = (b + 2) * ldp + 2;
            for (std::ptrdiff_t i = base; i <= base + b; ++i) fn(static_cast<std::size_t>(i));
        }
    };
    auto band = [&](std::vector<cplx>& v) {
        if (!full) K.fill_band(v.data());
    };
    auto current = [&] { return full ? unpad(y, n1) : unpad_upper(y, n1); };

    QuantumAttempt out;
    out.run.dt_used = dt;
    auto record = [&](long step) {
        DickeDensityMatrix cur{rho0.n_spins, current()};
        QuantumObservables o{static_cast<double>(step) / per, expectation(cur, lc), purity(cur), trace_error(cur),
                             hermiticity_error(cur)};
        if (!cur.rho.allFinite()) {
            if (final_attempt) throw NumericalError("non-finite density matrix entry", o.m, o.time);
            out.drifted = true;
            return;
        }
        auto& r = out.run;
        r.max_trace_err = std::max(r.max_trace_err, o.trace_err);
        r.max_herm_err = std::max(r.max_herm_err, o.herm_err);
        r.min_purity = std::min(r.min_purity, o.purity);
        r.max_purity = std::max(r.max_purity, o.purity);
        if (o.trace_err > 1e-6 || o.purity > 1.0 + 1e-6) {
            if (final_attempt) throw NumericalError("trace drift or purity overflow in quantum evolution", o.m, o.time);
        }
        if (o.trace_err > 1e-8 || o.purity > 1.0 + 1e-9) out.drifted = true;
        r.samples.push_back(o);
        for (long ss : snap_steps)
            if (ss == step) r.snapshots.push_back({o.time, cur, min_eigenvalue(cur)});
    };

    record(0);
    for (long s = 0; s < total; ++s) {
        const double t = static_cast<double>(s) * h;
        // classical RK4 with an accumulator
        K.apply(t, y.data(), k.data(), !full);
        upper([&](std::size_t i) { acc[i] = k[i]; tmp[i] = y[i] + 0.5 * h * k[i]; });
        band(tmp);
        K.apply(t + 0.5 * h, tmp.data(), k.data(), !full);
        upper([&](std::size_t i) { acc[i] += 2.0 * k[i]; tmp[i] = y[i] + 0.5 * h * k[i]; });
        band(tmp);
        K.apply(t + 0.5 * h, tmp.data(), k.data(), !full);
        upper([&](std::size_t i) { acc[i] += 2.0 * k[i]; tmp[i] = y[i] + h * k[i]; });
        band(tmp);
        K.apply(t + h, tmp.data(), k.data(), !full);
        upper([&](std::size_t i) { y[i] += (h / 6.0) * (acc[i] + k[i]); });
        band(y);
        const long done = s + 1;
        if (done % stride == 0 || done == total || done % per == 0) {
            const bool snap = std::find(snap_steps.begin(), snap_steps.end(), done) != snap_steps.end();
            if (done % stride == 0 || done == total || snap) {
                record(done);
            } else {
                // period checkpoint without sampling
                DickeDensityMatrix cur{rho0.n_spins, current()};
                const double te = trace_error(cur), pu = purity(cur);
                if (!std::isfinite(te) || !std::isfinite(pu) || te > 1e-6 || pu > 1.0 + 1e-6) {
                    if (final_attempt)
                        throw NumericalError("trace drift or purity overflow in quantum evolution",
                                             expectation(cur, lc), static_cast<double>(done) / per);
                    out.drifted = true;
                }
                if (te > 1e-8 || pu > 1.0 + 1e-9) out.drifted = true;
            }
        }
        if (out.drifted && !final_attempt) return out;
    }
    return out;
}

}  // namespace detail

// RK4 propagation; if trace or purity drifts at a checkpoint, the run restarts once with dt/2
inline QuantumRun evolve_quantum(const DickeDensityMatrix& rho0, const ModelParams& p, const IntegratorSpec& spec,
                                 double t_end, const QuantumSampling& sampling = {}) {
    validate(p);
    if (rho0.n_spins != p.n_spins) throw ValidationError("evolve_quantum: rho0 size does not match n_spins");
    if (rho0.rho.rows() != rho0.dim() || rho0.rho.cols() != rho0.dim())
        throw ValidationError("evolve_quantum: rho0 must be (N+1)x(N+1)");
    if (spec.order != 4) throw ValidationError("evolve_quantum: only RK4 is supported");
    if (!(t_end > 0.0)) throw ValidationError("t_end must be > 0");
    if (!(sampling.interval > 0.0)) throw ValidationError("sampling interval must be > 0");
    steps_per_period(spec);
    if (trace_error(rho0) > 1e-10) throw ValidationError("evolve_quantum: rho0 must have unit trace");
    if (hermiticity_error(rho0) > 1e-10) throw ValidationError("evolve_quantum: rho0 must be Hermitian");

    auto first = detail::evolve_once(rho0, p, spec.dt, t_end, sampling, false);
    if (!first.drifted) return std::move(first.run);
    auto second = detail::evolve_once(rho0, p, 0.5 * spec.dt, t_end, sampling, true);
    second.run.dt_halved = true;
    return std::move(second.run);
}

inline void write_observables_csv(std::ostream& os, const QuantumRun& run, const std::string& config_comment) {
    os << "# " << config_comment << '\n' << "t,mx,my,mz,purity,trace_err\n";
    os.precision(12);
    for (const auto& o : run.samples)
        os << o.time << ',' << o.m.x << ',' << o.m.y << ',' << o.m.z << ',' << o.purity << ',' << o.trace_err << '\n';
}

inline void write_snapshot_csv(std::ostream& os, const DensitySnapshot& s, const std::string& config_comment) {
    os << "# " << config_comment << " snapshot_t=" << s.time << '\n'
       << "two_m_over_n_row,two_m_over_n_col,abs_rho\n";
    os.precision(12);
    const int n = s.rho.n_spins;
    for (int a = 0; a <= n; ++a)
        for (int b = 0; b <= n; ++b)
            os << (2.0 * a - n) / n << ',' << (2.0 * b - n) / n << ',' << std::abs(s.rho.rho(a, b)) << '\n';
}

struct ErrorSeries {
    int n_spins{0};
    std::vector<double> times;
    std::vector<double> error;  // max_mu |m_quantum - m_classical|
};

// Sup-norm distance between quantum and classical polarization, sampled every `interval` periods
inline std::vector<ErrorSeries> quantum_classical_error(const ModelParams& p, const SphericalAngle& a,
                                                        const std::vector<int>& n_list, double t_end,
                                                        const IntegratorSpec& spec = {}, double interval = 0.1,
                                                        unsigned threads = 1) {
    if (n_list.empty()) throw ValidationError("n_list must be non-empty");
    for (std::size_t i = 1; i < n_list.size(); ++i)
        if (n_list[i] <= n_list[i - 1]) throw ValidationError("n_list must be strictly increasing");
    SamplingPolicy pol;
    pol.stride = std::max(1L, steps_for(interval, steps_per_period(spec), "sampling interval"));
    const Trajectory cl = integrate(angle_to_vector(a), p, spec, t_end, pol);
    if (!cl.ok()) throw NumericalError(cl.failure->message, cl.failure->last_valid, cl.failure->time);

    std::vector<ErrorSeries> out(n_list.size());
    parallel_for(n_list.size(), threads, [&](std::size_t i) {
        ModelParams q = p;
        q.n_spins = n_list[i];
        const auto run = evolve_quantum(initial_product_state(q.n_spins, a), q, spec, t_end, {interval, {}});
        ErrorSeries es{q.n_spins, {}, {}};
        // both series are sampled on the same step grid
        std::size_t j = 0;
        for (const auto& o : run.samples) {
            while (j < cl.times.size() && cl.times[j] < o.time - 1e-9) ++j;
            if (j == cl.times.size()) break;
            es.times.push_back(o.time);
            es.error.push_back(max_abs_diff(o.m, cl.states[j]));
        }
        out[i] = std::move(es);
    });
    return out;
}

}  // namespace macrospin
