// full_space.hpp: brute-force 2^N Lindblad propagation used as a cross-check of the Dicke reduction
#pragma once

#include "dicke.hpp"
#include "symmetry.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <cmath>
#include <complex>
#include <vector>

namespace macrospin {

struct FullSpaceSample {
    double time{0.0};  // periods
    MacrospinState m{};
    double leak{0.0};  // 1 - Tr(P_sym rho)
    double trace_err{0.0};
};

namespace detail {

using SpMat = Eigen::SparseMatrix<cplx>;

// Single-site operator `op` (2x2, basis {down, up}) on site i of n, embedded in the 2^n space
inline SpMat site_operator(int n, int i, const Eigen::Matrix2cd& op) {
    const int dim = 1 << n;
    const int bit = n - 1 - i;
    std::vector<Eigen::Triplet<cplx>> trip;
    for (int s = 0; s < dim; ++s) {
        const int v = (s >> bit) & 1;
        for (int w = 0; w < 2; ++w) {
            const cplx val = op(w, v);
            if (val == cplx{}) continue;
            const int t = (s & ~(1 << bit)) | (w << bit);
            trip.emplace_back(t, s, val);
        }
    }
    SpMat m(dim, dim);
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
}

struct FullSpaceOperators {
    int n{1};
    std::array<SpMat, 3> total;  // sum_i sigma^mu_i
    SpMat interaction;           // sum_mu (J_mu / N) sum_{i != j} sigma^mu_i sigma^mu_j
    SpMat jump, jump_dag, jump_dj;
    Eigen::MatrixXcd sym_projector;

    FullSpaceOperators(int n_spins, const ModelParams& p) : n(n_spins) {
        using namespace std::complex_literals;
        const int dim = 1 << n;
        Eigen::Matrix2cd sx, sy, sz, sm;
        // basis order {down = 0, up = 1}
        sx << 0, 1, 1, 0;
        sy << 0, 1i, -1i, 0;
        sz << -1, 0, 0, 1;
        sm << 0, 1, 0, 0;  // up -> down
        const std::array<Eigen::Matrix2cd, 3> paulis{sx, sy, sz};
        for (int mu = 0; mu < 3; ++mu) {
            total[mu] = SpMat(dim, dim);
            for (int i = 0; i < n; ++i) total[mu] += site_operator(n, i, paulis[mu]);
        }
        SpMat id(dim, dim);
        id.setIdentity();
        interaction = SpMat(dim, dim);
        for (int mu = 0; mu < 3; ++mu) {
            if (p.j[mu] == 0.0) continue;
            SpMat sq = total[mu] * total[mu];
            interaction += (p.j[mu] / n) * (sq - static_cast<double>(n) * id);
        }
        jump = SpMat(dim, dim);
        for (int i = 0; i < n; ++i) jump += site_operator(n, i, sm);
        jump_dag = jump.adjoint();
        jump_dj = jump_dag * jump;
        sym_projector = Eigen::MatrixXcd::Zero(dim, dim);
        for (int k = 0; k <= n; ++k) {
            Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dim);
            for (const auto& [idx, amp] : dicke_state_expansion(n, k)) v[idx] = amp;
            sym_projector += v * v.adjoint();
        }
    }
};

}  // namespace detail

// Product state with every spin along (theta, phi) in the 2^n computational basis
inline Eigen::VectorXcd full_space_product_state(int n, const SphericalAngle& a) {
    Eigen::Vector2cd single(std::polar(std::sin(0.5 * a.theta), a.phi), std::cos(0.5 * a.theta));  // {down, up}
    Eigen::VectorXcd psi(1);
    psi[0] = 1.0;
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXcd next(psi.size() * 2);
        for (Eigen::Index s = 0; s < psi.size(); ++s) {
            next[2 * s] = psi[s] * single[0];
            next[2 * s + 1] = psi[s] * single[1];
        }
        psi = next;
    }
    return psi;
}

// Full Lindblad evolution for n <= 8; dt must tile the period
inline std::vector<FullSpaceSample> full_space_oracle(int n, const ModelParams& p, const SphericalAngle& a,
                                                      double t_end, double dt = 1e-3, double interval = 0.1) {
    if (n < 1 || n > 8) throw ValidationError("full_space_oracle: n must be in [1, 8]");
    validate(p);
    validate(a);
    const detail::FullSpaceOperators ops(n, p);
    const long per = steps_per_period({4, dt});
    const long total = steps_for(t_end, per, "t_end");
    const long stride = std::max(1L, steps_for(interval, per, "sampling interval"));
    const double h = p.period() / static_cast<double>(per);
    const double N = n;

    // right products via rho H = (H rho^dagger)^dagger. Using (H rho)^dagger instead would assume exact
    // Hermiticity and lets the anti-Hermitian roundoff grow under the unbalanced 2 L rho L^dagger gain
    auto rhs = [&](double t, const Eigen::MatrixXcd& rho) -> Eigen::MatrixXcd {
        using namespace std::complex_literals;
        const double s = std::sin(p.omega * t), c = 1.0 - std::cos(p.omega * t);
        const Eigen::MatrixXcd rd = rho.adjoint();
        auto apply_h = [&](const Eigen::MatrixXcd& x) {
            Eigen::MatrixXcd y = ops.interaction * x;
            y.noalias() += (0.5 * p.gamma * s) * (ops.total[0] * x);
            y.noalias() += (0.5 * p.gamma * c) * (ops.total[1] * x);
            return y;
        };
        const Eigen::MatrixXcd Hr = apply_h(rho);
        const Eigen::MatrixXcd rH = apply_h(rd).adjoint();
        const Eigen::MatrixXcd Lr = ops.jump * rho;
        const Eigen::MatrixXcd LrLd = (ops.jump * Lr.adjoint()).adjoint();
        const Eigen::MatrixXcd DLr = ops.jump_dj * rho;
        const Eigen::MatrixXcd rD = (ops.jump_dj * rd).adjoint();
        return -1i * (Hr - rH) + (p.kappa / N) * (2.0 * LrLd - DLr - rD);
    };

    const Eigen::VectorXcd psi = full_space_product_state(n, a);
    Eigen::MatrixXcd rho = psi * psi.adjoint();
    std::vector<FullSpaceSample> out;
    auto record = [&](long step) {
        FullSpaceSample smp;
        smp.time = static_cast<double>(step) / per;
        smp.m = {(ops.total[0] * rho).trace().real() / N, (ops.total[1] * rho).trace().real() / N,
                 (ops.total[2] * rho).trace().real() / N};
        smp.leak = 1.0 - (ops.sym_projector * rho).trace().real();
        smp.trace_err = std::abs(rho.trace() - 1.0);
        out.push_back(smp);
    };
    record(0);
    for (long st = 0; st < total; ++st) {
        const double t = static_cast<double>(st) * h;
        const Eigen::MatrixXcd k1 = rhs(t, rho);
        const Eigen::MatrixXcd k2 = rhs(t + 0.5 * h, rho + 0.5 * h * k1);
        const Eigen::MatrixXcd k3 = rhs(t + 0.5 * h, rho + 0.5 * h * k2);
        const Eigen::MatrixXcd k4 = rhs(t + h, rho + h * k3);
        rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!rho.allFinite()) throw NumericalError("non-finite full-space density matrix");
        if ((st + 1) % stride == 0 || st + 1 == total) record(st + 1);
    }
    return out;
}

}  // namespace macrospin
