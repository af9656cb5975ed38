#include <macrospin/full_space.hpp>
#include <macrospin/symmetry.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <sstream>

using namespace macrospin;

namespace {

std::vector<double> eigen_sorted(const Eigen::Matrix2cd& h) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(h);
    return {es.eigenvalues()[0], es.eigenvalues()[1]};
}

// 2J -> multiplicity after coupling n spin-1/2 one at a time
std::map<int, std::uint64_t> coupled_multiplicities(int n) {
    std::map<int, std::uint64_t> m{{1, 1}};
    for (int k = 2; k <= n; ++k) {
        std::map<int, std::uint64_t> next;
        for (const auto& [tj, c] : m) {
            next[tj + 1] += c;
            if (tj > 0) next[tj - 1] += c;
        }
        m = next;
    }
    return m;
}

}  // namespace

TEST(SingleParticle, DefaultFamilyEigenvalues) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> t(-5.0, 5.0), g(0.1, 20.0);
    for (int i = 0; i < 1000; ++i) {
        const double gamma = g(rng), tt = t(rng);
        const auto m = SingleParticleModel::standard(gamma);
        const auto ev = eigen_sorted(sp_hamiltonian(tt, m));
        const double e = std::abs(gamma * std::sin(m.omega * tt / 2));
        EXPECT_NEAR(ev[0], -e, 1e-12);
        EXPECT_NEAR(ev[1], e, 1e-12);
    }
    const auto m = SingleParticleModel::standard(3.0);
    for (int k = 0; k < 4; ++k) EXPECT_LT(sp_hamiltonian(k * 1.0, m).norm(), 1e-12);
    EXPECT_EQ(sp_hamiltonian(0.37, SingleParticleModel::standard(0.0)).norm(), 0.0);
    EXPECT_THROW(SingleParticleModel::standard(1.0, two_pi, 0), ValidationError);
}

TEST(SingleParticle, GlideCommutesForFamily) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> t(0.0, 3.0), r(-2.0, 2.0);
    const auto def = SingleParticleModel::standard(8.427);
    SingleParticleModel gen{1.0, two_pi, {r(rng), r(rng), r(rng), r(rng), r(rng)}};
    for (int i = 0; i < 1000; ++i) {
        const double tt = t(rng);
        EXPECT_LT(glide_commutator_norm(tt, def), 1e-12);
        EXPECT_LT(glide_commutator_norm(tt, gen), 1e-12);
    }
}

TEST(SingleParticle, BrokenHamiltonianIsDetected) {
    const auto m = SingleParticleModel::standard(2.0);
    Eigen::Matrix2cd sz;
    sz << 1, 0, 0, -1;
    for (double eps : {1e-6, 1e-3, 0.5}) {
        for (double tt : {0.1, 0.77, 1.3}) {
            const double c = commutator_norm(sp_hamiltonian(tt, m) + eps * sz, glide_operator(tt, m.omega));
            EXPECT_GE(c, eps);
            EXPECT_NEAR(c, 2 * std::sqrt(2.0) * eps, 1e-9);
        }
    }
}

TEST(SingleParticle, GaplessTimes) {
    EXPECT_EQ(gapless_time(SingleParticleModel::standard(5.0)), 0.0);
    for (auto r : {std::vector<double>{1.0, 0.3}, std::vector<double>{0.0, 1.0}, std::vector<double>{0.4, -1.1, 0.7}}) {
        const SingleParticleModel m{1.0, two_pi, r};
        const double t = gapless_time(m);
        EXPECT_GE(t, 0.0);
        EXPECT_LT(t, 1.0);
        EXPECT_LT(2.0 * std::abs(sp_offdiag(t, m)), 1e-10);
        // dense scan: the minimum gap found on a fine grid is consistent with a true zero nearby
        double best = 1e300;
        for (int i = 0; i < 200000; ++i) best = std::min(best, 2.0 * std::abs(sp_offdiag(i / 200000.0, m)));
        EXPECT_LT(best, 1e-3);
    }
}

TEST(SchurWeyl, SixSpinsTable) {
    const auto s = schur_weyl_decomposition(6);
    ASSERT_EQ(s.size(), 4u);
    const std::uint64_t su2[] = {7, 5, 3, 1}, f[] = {1, 5, 9, 5};
    for (int i = 0; i < 4; ++i) {
        EXPECT_EQ(s[i].two_j, 6 - 2 * i);
        EXPECT_EQ(s[i].su2_dim, su2[i]);
        EXPECT_EQ(s[i].sym_group_dim, f[i]);
        EXPECT_GE(s[i].row1, s[i].row2);
    }
    EXPECT_EQ(s[0].su2_dim * s[0].sym_group_dim, 7u);
    EXPECT_EQ(s[1].su2_dim * s[1].sym_group_dim, 25u);
    EXPECT_EQ(s[2].su2_dim * s[2].sym_group_dim, 27u);
    EXPECT_EQ(s[3].su2_dim * s[3].sym_group_dim, 5u);
    EXPECT_EQ(schur_weyl_total(s), 64u);
}

TEST(SchurWeyl, SingleSpinAndTotals) {
    const auto one = schur_weyl_decomposition(1);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0].total_spin(), 0.5);
    EXPECT_EQ(one[0].su2_dim, 2u);
    EXPECT_EQ(one[0].sym_group_dim, 1u);
    for (int n = 1; n <= 62; ++n) EXPECT_EQ(schur_weyl_total(schur_weyl_decomposition(n)), std::uint64_t{1} << n) << n;
    EXPECT_THROW(schur_weyl_decomposition(0), ValidationError);
    EXPECT_THROW(schur_weyl_decomposition(63), ValidationError);
}

TEST(SchurWeyl, MultiplicitiesFromSpinCoupling) {
    for (int n = 1; n <= 30; ++n) {
        const auto coupled = coupled_multiplicities(n);
        const auto s = schur_weyl_decomposition(n);
        ASSERT_EQ(s.size(), coupled.size());
        for (const auto& y : s) EXPECT_EQ(y.sym_group_dim, coupled.at(y.two_j)) << n << " 2J=" << y.two_j;
    }
}

// eigenvalue J(J+1) of the total spin squared occurs (2J+1) f times in the 2^n space
TEST(SchurWeyl, TotalSpinSpectrum) {
    Eigen::Matrix2cd sx, sy, sz;
    sx << 0, 1, 1, 0;
    sy << 0, std::complex<double>(0, 1), std::complex<double>(0, -1), 0;
    sz << -1, 0, 0, 1;
    for (int n = 1; n <= 6; ++n) {
        const int dim = 1 << n;
        Eigen::MatrixXcd S2 = Eigen::MatrixXcd::Zero(dim, dim);
        for (const auto& pauli : {sx, sy, sz}) {
            Eigen::MatrixXcd tot = Eigen::MatrixXcd::Zero(dim, dim);
            for (int i = 0; i < n; ++i) tot += Eigen::MatrixXcd(detail::site_operator(n, i, pauli));
            S2 += 0.25 * tot * tot;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(S2, Eigen::EigenvaluesOnly);
        std::map<int, std::uint64_t> count;
        for (int k = 0; k < dim; ++k) {
            const double lam = es.eigenvalues()[k];
            const int two_j = static_cast<int>(std::lround(std::sqrt(1.0 + 4.0 * lam) - 1.0));
            ++count[two_j];
        }
        for (const auto& y : schur_weyl_decomposition(n)) EXPECT_EQ(count[y.two_j], y.su2_dim * y.sym_group_dim);
    }
}

TEST(SchurWeyl, Csv) {
    std::ostringstream os;
    write_schur_weyl_csv(os, schur_weyl_decomposition(3), "n=3");
    EXPECT_EQ(os.str(), "# n=3\nJ,diagram_row1,diagram_row2,su2_dim,f,subtotal\n3/2,3,0,4,1,4\n1/2,2,1,2,2,4\n");
}

TEST(DickeStates, ExpansionOrthonormalAndSymmetric) {
    const auto d0 = dicke_state_expansion(6, 0);
    ASSERT_EQ(d0.size(), 1u);
    EXPECT_EQ(d0.begin()->first, 0u);
    EXPECT_EQ(d0.begin()->second, 1.0);
    const auto d1 = dicke_state_expansion(6, 1);
    ASSERT_EQ(d1.size(), 6u);
    for (const auto& [idx, a] : d1) {
        EXPECT_EQ(__builtin_popcount(idx), 1);
        EXPECT_NEAR(a, 1.0 / std::sqrt(6.0), 1e-15);
    }
    for (int n = 1; n <= 8; ++n) {
        for (int k = 0; k <= n; ++k) {
            const auto a = dicke_state_expansion(n, k);
            double norm = 0.0;
            for (const auto& [idx, v] : a) norm += v * v;
            EXPECT_NEAR(norm, 1.0, 1e-14);
            // invariance under the transposition of sites 0 and 1
            if (n >= 2) {
                for (const auto& [idx, v] : a) {
                    const std::uint32_t b0 = (idx >> (n - 1)) & 1u, b1 = (idx >> (n - 2)) & 1u;
                    std::uint32_t sw = idx & ~((1u << (n - 1)) | (1u << (n - 2)));
                    sw |= (b1 << (n - 1)) | (b0 << (n - 2));
                    ASSERT_TRUE(a.count(sw));
                    EXPECT_EQ(a.at(sw), v);
                }
            }
            if (k + 1 <= n) {
                for (const auto& [idx, v] : dicke_state_expansion(n, k + 1)) EXPECT_FALSE(a.count(idx));
            }
        }
    }
    EXPECT_THROW(dicke_state_expansion(9, 1), ValidationError);
    EXPECT_THROW(dicke_state_expansion(4, 5), ValidationError);
}
