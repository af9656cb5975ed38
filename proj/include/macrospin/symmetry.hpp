// symmetry.hpp: single-particle glide symmetry and Schur-Weyl sector bookkeeping
#pragma once

#include "model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace macrospin {

// H_sp(t) = [[0, b], [b*, 0]] with b(t) = sum_n (r_n / i)(e^{i n w t} - e^{-i (n+1) w t})
struct SingleParticleModel {
    double gamma{0.0};
    double omega{two_pi};
    std::vector<double> r;  // r[0] = gamma/2 reproduces the driven single spin

    static SingleParticleModel standard(double gamma, double omega = two_pi, std::size_t truncation = 8) {
        SingleParticleModel m{gamma, omega, std::vector<double>(truncation, 0.0)};
        if (truncation == 0) throw ValidationError("family truncation must be >= 1");
        m.r[0] = 0.5 * gamma;
        return m;
    }
};

inline std::complex<double> sp_offdiag(double t, const SingleParticleModel& m) {
    using namespace std::complex_literals;
    std::complex<double> b{};
    for (std::size_t n = 0; n < m.r.size(); ++n) {
        if (m.r[n] == 0.0) continue;
        const double nn = static_cast<double>(n);
        b += (m.r[n] / 1i) * (std::exp(1i * nn * m.omega * t) - std::exp(-1i * (nn + 1.0) * m.omega * t));
    }
    return b;
}

inline Eigen::Matrix2cd sp_hamiltonian(double t, const SingleParticleModel& m) {
    const auto b = sp_offdiag(t, m);
    Eigen::Matrix2cd h;
    h << 0.0, b, std::conj(b), 0.0;
    return h;
}

inline Eigen::Matrix2cd glide_operator(double t, double omega) {
    using namespace std::complex_literals;
    Eigen::Matrix2cd g;
    g << 0.0, std::exp(-1i * omega * t), 1.0, 0.0;
    return g;
}

inline double commutator_norm(const Eigen::Matrix2cd& h, const Eigen::Matrix2cd& g) {
    return (h * g - g * h).norm();
}

inline double glide_commutator_norm(double t, const SingleParticleModel& m) {
    return commutator_norm(sp_hamiltonian(t, m), glide_operator(t, m.omega));
}

// Real antiperiodic function whose zeros are the gapless times: z(t) = b(t) e^{i w t / 2}
inline double glide_z(double t, const SingleParticleModel& m) {
    using namespace std::complex_literals;
    return (sp_offdiag(t, m) * std::exp(0.5i * m.omega * t)).real();
}

// A time in [0, T) where the instantaneous gap 2|b(t)| closes
inline double gapless_time(const SingleParticleModel& m, int samples = 10000) {
    const double T = two_pi / m.omega;
    auto z = [&m](double t) { return glide_z(t, m); };
    auto gap = [&m](double t) { return 2.0 * std::abs(sp_offdiag(t, m)); };
    if (gap(0.0) < 1e-10) return 0.0;
    double t0 = 0.0, z0 = z(0.0);
    for (int i = 1; i <= samples; ++i) {
        const double t1 = T * i / samples;
        const double z1 = z(t1);
        if (z0 == 0.0 || (z0 < 0.0) != (z1 < 0.0)) {
            if (z0 == 0.0) return t0;
            double lo = t0, hi = t1, zlo = z0;
            for (int it = 0; it < 200 && gap(0.5 * (lo + hi)) >= 1e-10; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double zm = z(mid);
                if ((zm < 0.0) == (zlo < 0.0)) {
                    lo = mid;
                    zlo = zm;
                } else {
                    hi = mid;
                }
            }
            double t = 0.5 * (lo + hi);
            if (t >= T) t -= T;  // antiperiodicity: a zero at T is a zero at 0
            return t;
        }
        t0 = t1;
        z0 = z1;
    }
    throw std::logic_error("gapless_time: no sign change found; z(t) is not antiperiodic");
}

struct YoungSector {
    int two_j{0};                 // 2J
    int row1{0}, row2{0};         // diagram (N/2 + J, N/2 - J)
    std::uint64_t su2_dim{0};     // 2J + 1
    std::uint64_t sym_group_dim{0};  // f^lambda

    double total_spin() const noexcept { return 0.5 * two_j; }
};

inline std::uint64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    unsigned __int128 r = 1;
    for (int i = 1; i <= k; ++i) r = r * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
    return static_cast<std::uint64_t>(r);
}

// Hook-length count for the two-row shape (a, b): f = C(a+b, b) (a - b + 1) / (a + 1)
inline std::uint64_t two_row_hook_dimension(int a, int b) {
    if (b < 0 || a < b) throw ValidationError("two-row diagram needs a >= b >= 0");
    const unsigned __int128 num = static_cast<unsigned __int128>(binomial(a + b, b)) * static_cast<unsigned>(a - b + 1);
    return static_cast<std::uint64_t>(num / static_cast<unsigned>(a + 1));
}

inline std::vector<YoungSector> schur_weyl_decomposition(int n) {
    if (n < 1) throw ValidationError("schur_weyl_decomposition: n must be >= 1");
    if (n > 62) throw ValidationError("schur_weyl_decomposition: n must be <= 62 for exact 64-bit totals");
    std::vector<YoungSector> out;
    for (int two_j = n; two_j >= 0; two_j -= 2) {
        const int row1 = (n + two_j) / 2, row2 = (n - two_j) / 2;
        out.push_back({two_j, row1, row2, static_cast<std::uint64_t>(two_j + 1), two_row_hook_dimension(row1, row2)});
    }
    return out;
}

inline std::uint64_t schur_weyl_total(const std::vector<YoungSector>& s) {
    std::uint64_t tot = 0;
    for (const auto& y : s) tot += y.su2_dim * y.sym_group_dim;
    return tot;
}

inline void write_schur_weyl_csv(std::ostream& os, const std::vector<YoungSector>& s, const std::string& config_comment) {
    os << "# " << config_comment << '\n' << "J,diagram_row1,diagram_row2,su2_dim,f,subtotal\n";
    for (const auto& y : s) {
        os << (y.two_j % 2 == 0 ? std::to_string(y.two_j / 2) : std::to_string(y.two_j) + "/2") << ',' << y.row1 << ','
           << y.row2 << ',' << y.su2_dim << ',' << y.sym_group_dim << ',' << y.su2_dim * y.sym_group_dim << '\n';
    }
}

// |D_k> over n qubits as {basis index -> amplitude}. Bit (n-1-i) of the index is site i; 1 = up.
inline std::map<std::uint32_t, double> dicke_state_expansion(int n, int k) {
    if (n < 1 || n > 8) throw ValidationError("dicke_state_expansion: n must be in [1, 8]");
    if (k < 0 || k > n) throw ValidationError("dicke_state_expansion: k must be in [0, n]");
    const double amp = 1.0 / std::sqrt(static_cast<double>(binomial(n, k)));
    std::map<std::uint32_t, double> out;
    for (std::uint32_t s = 0; s < (1u << n); ++s)
        if (__builtin_popcount(s) == k) out.emplace(s, amp);
    return out;
}

}  // namespace macrospin
