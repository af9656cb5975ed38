#include <macrospin/full_space.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace macrospin;
using namespace std::complex_literals;

namespace {

ModelParams params(double gamma, double kappa, std::array<double, 3> j, int n) {
    ModelParams p;
    p.gamma = gamma;
    p.kappa = kappa;
    p.j = j;
    p.n_spins = n;
    return p;
}

Eigen::MatrixXcd random_hermitian(int d, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::MatrixXcd a(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a(i, j) = {g(rng), g(rng)};
    return 0.5 * (a + a.adjoint());
}

// columns are the Dicke states |k up> in the 2^n basis
Eigen::MatrixXcd dicke_basis(int n) {
    Eigen::MatrixXcd B = Eigen::MatrixXcd::Zero(1 << n, n + 1);
    for (int k = 0; k <= n; ++k)
        for (const auto& [idx, amp] : dicke_state_expansion(n, k)) B(idx, k) = amp;
    return B;
}

}  // namespace

TEST(Ladder, ClosedFormValues) {
    for (int n : {1, 2, 5, 30, 101}) {
        const auto lc = ladder_coefficients(n);
        ASSERT_EQ(lc.f.size(), static_cast<std::size_t>(n) + 1);
        EXPECT_NEAR(lc.f[static_cast<std::size_t>(n)], std::sqrt(1.0 / n), 1e-15);
        EXPECT_EQ(lc.f[0], 0.0);
        for (double v : lc.f) EXPECT_GE(v, 0.0);
    }
    EXPECT_NEAR(ladder_coefficients(2).f[1], std::sqrt(0.5), 1e-15);
    EXPECT_THROW(ladder_coefficients(0), ValidationError);
}

// <k-1| (1/N) sum_i sigma^-_i |k> from explicit Pauli products
TEST(Ladder, MatchesCollectiveLoweringOperator) {
    Eigen::Matrix2cd sm;
    sm << 0, 1, 0, 0;
    for (int n = 1; n <= 6; ++n) {
        Eigen::MatrixXcd L = Eigen::MatrixXcd::Zero(1 << n, 1 << n);
        for (int i = 0; i < n; ++i) L += Eigen::MatrixXcd(detail::site_operator(n, i, sm));
        L /= n;
        const auto B = dicke_basis(n);
        const Eigen::MatrixXcd Ld = B.adjoint() * L * B;
        const auto lc = ladder_coefficients(n);
        for (int a = 1; a <= n; ++a) EXPECT_NEAR(std::abs(Ld(a - 1, a) - lc.f[a]), 0.0, 1e-14) << n << "," << a;
        EXPECT_LT((B * B.adjoint() * L * B - L * B).norm(), 1e-13);
    }
}

TEST(InitialState, PolesAndEquator) {
    const auto up = initial_product_state(7, {0.0, 0.0});
    EXPECT_NEAR(std::abs(up.rho(7, 7) - 1.0), 0.0, 1e-15);
    EXPECT_NEAR(up.rho.cwiseAbs().sum(), 1.0, 1e-15);
    const auto down = initial_product_state(7, {std::numbers::pi, 0.0});
    EXPECT_NEAR(std::abs(down.rho(0, 0) - 1.0), 0.0, 1e-15);
    EXPECT_NEAR(down.rho.cwiseAbs().sum(), 1.0, 1e-15);
    const auto eq = initial_product_state(1, {std::numbers::pi / 2, 0.0});
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) EXPECT_NEAR(std::abs(eq.rho(i, j) - 0.5), 0.0, 1e-15);
}

TEST(InitialState, PolarizationTraceAndPurity) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> th(0.0, std::numbers::pi), ph(0.0, 2 * std::numbers::pi);
    for (int i = 0; i < 20; ++i) {
        const SphericalAngle a{th(rng), ph(rng)};
        for (int n : {1, 4, 37, 200}) {
            const auto r = initial_product_state(n, a);
            EXPECT_LT(trace_error(r), 1e-12);
            EXPECT_NEAR(purity(r), 1.0, 1e-12);
            EXPECT_LT(max_abs_diff(expectation(r, ladder_coefficients(n)), angle_to_vector(a)), 1e-12);
        }
    }
}

TEST(InitialState, AgreesWithProductStateProjection) {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> th(0.0, std::numbers::pi), ph(0.0, 2 * std::numbers::pi);
    for (int n = 1; n <= 6; ++n) {
        const SphericalAngle a{th(rng), ph(rng)};
        const Eigen::VectorXcd psi = full_space_product_state(n, a);
        const Eigen::VectorXcd c = dicke_basis(n).adjoint() * psi;
        EXPECT_NEAR(c.norm(), 1.0, 1e-13);
        EXPECT_LT((c * c.adjoint() - initial_product_state(n, a).rho).cwiseAbs().maxCoeff(), 1e-13);
    }
}

TEST(LindbladRhs, NullGeneratorVanishes) {
    std::mt19937_64 rng(1);
    const auto lc = ladder_coefficients(9);
    const DickeDensityMatrix r{9, random_hermitian(10, rng)};
    EXPECT_EQ(lindblad_rhs(0.3, r, params(0, 0, {0, 0, 0}, 9), lc).rho.cwiseAbs().maxCoeff(), 0.0);
}

TEST(LindbladRhs, HermiticityAndTrace) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-3.0, 3.0), t(0.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        const int n = 1 + i % 12;
        const auto lc = ladder_coefficients(n);
        const auto p = params(std::abs(u(rng)), std::abs(u(rng)), {u(rng), u(rng), u(rng)}, n);
        Eigen::MatrixXcd h = random_hermitian(n + 1, rng);
        h /= h.trace().real();
        const double tt = t(rng);
        const auto d = lindblad_rhs(tt, {n, h}, p, lc);
        EXPECT_LT(hermiticity_error(d), 1e-12);
        EXPECT_LT(std::abs(d.rho.trace()), 1e-12 * std::max(1.0, h.cwiseAbs().maxCoeff()));
        // general (non-Hermitian) input: rhs(rho)^H == rhs(rho^H)
        Eigen::MatrixXcd g = h + 1i * random_hermitian(n + 1, rng);
        const auto dg = lindblad_rhs(tt, {n, g}, p, lc).rho;
        const Eigen::MatrixXcd gh = g.adjoint();
        EXPECT_LT((dg.adjoint() - lindblad_rhs(tt, {n, gh}, p, lc).rho).cwiseAbs().maxCoeff(), 1e-12);
    }
}

// N times the Dicke-space projection of the full-space generator
TEST(LindbladRhs, MatchesFullSpaceGenerator) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    Eigen::Matrix2cd sx, sy, sz, sm;
    sx << 0, 1, 1, 0;
    sy << 0, 1i, -1i, 0;
    sz << -1, 0, 0, 1;
    sm << 0, 1, 0, 0;
    for (int n = 1; n <= 5; ++n) {
        const int dim = 1 << n;
        const auto p = params(std::abs(u(rng)) * 4, std::abs(u(rng)), {u(rng), u(rng), u(rng)}, n);
        std::array<Eigen::MatrixXcd, 3> S;
        Eigen::MatrixXcd L = Eigen::MatrixXcd::Zero(dim, dim);
        for (int mu = 0; mu < 3; ++mu) S[mu] = Eigen::MatrixXcd::Zero(dim, dim);
        for (int i = 0; i < n; ++i) {
            S[0] += Eigen::MatrixXcd(detail::site_operator(n, i, sx));
            S[1] += Eigen::MatrixXcd(detail::site_operator(n, i, sy));
            S[2] += Eigen::MatrixXcd(detail::site_operator(n, i, sz));
            L += Eigen::MatrixXcd(detail::site_operator(n, i, sm));
        }
        const double t = 0.21, w = p.omega * t;
        Eigen::MatrixXcd H = 0.5 * p.gamma * (std::sin(w) * S[0] + (1 - std::cos(w)) * S[1]);
        for (int mu = 0; mu < 3; ++mu)
            H += p.j[mu] / n * (S[mu] * S[mu] - n * Eigen::MatrixXcd::Identity(dim, dim));
        const auto B = dicke_basis(n);
        Eigen::MatrixXcd rd = random_hermitian(n + 1, rng);
        rd /= rd.trace().real();
        const Eigen::MatrixXcd rho = B * rd * B.adjoint();
        const Eigen::MatrixXcd LdL = L.adjoint() * L;
        const Eigen::MatrixXcd full =
            -1i * (H * rho - rho * H) + (p.kappa / n) * (2.0 * L * rho * L.adjoint() - LdL * rho - rho * LdL);
        const Eigen::MatrixXcd ref = B.adjoint() * full * B;
        const auto got = lindblad_rhs(t, {n, rd}, p, ladder_coefficients(n)).rho;
        EXPECT_LT((got - ref).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, ref.cwiseAbs().maxCoeff())) << "n=" << n;
    }
}

TEST(LindbladRhs, DimensionMismatch) {
    EXPECT_THROW(lindblad_rhs(0, initial_product_state(3, {1, 0}), params(1, 1, {0, 1, 0}, 3), ladder_coefficients(4)),
                 ValidationError);
}

TEST(EvolveQuantum, NullGeneratorKeepsObservables) {
    const auto rho0 = initial_product_state(12, {1.1, 0.4});
    const auto run = evolve_quantum(rho0, params(0, 0, {0, 0, 0}, 12), {4, 1e-2}, 5.0, {0.1, {}});
    ASSERT_EQ(run.samples.size(), 51u);
    for (const auto& o : run.samples) {
        EXPECT_LT(max_abs_diff(o.m, run.samples.front().m), 1e-10);
        EXPECT_NEAR(o.purity, 1.0, 1e-10);
    }
}

TEST(EvolveQuantum, UpperTriangleMatchesFullMatrix) {
    const auto p = params(3.306, 0.7, {0.2, 1.0, -0.4}, 25);
    const auto rho0 = initial_product_state(25, {0.9, 2.0});
    QuantumSampling fast{0.5, {3.0}}, full{0.5, {3.0}, true};
    const auto a = evolve_quantum(rho0, p, {4, 1e-3}, 3.0, fast);
    const auto b = evolve_quantum(rho0, p, {4, 1e-3}, 3.0, full);
    ASSERT_EQ(a.samples.size(), b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        EXPECT_LT(max_abs_diff(a.samples[i].m, b.samples[i].m), 1e-12);
        EXPECT_NEAR(a.samples[i].purity, b.samples[i].purity, 1e-12);
    }
    ASSERT_EQ(b.snapshots.size(), 1u);
    EXPECT_LT((a.snapshots[0].rho.rho - b.snapshots[0].rho.rho).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT(b.max_herm_err, 1e-12);
}

TEST(EvolveQuantum, InvariantsOverLongRun) {
    const int n = 20;
    const auto run = evolve_quantum(initial_product_state(n, {std::numbers::pi / 2, 0}), params(3.306, 0.02, {0, 1, 0}, n),
                                    {4, 1e-3}, 1000.0, {1.0, {}});
    EXPECT_FALSE(run.dt_halved);
    EXPECT_LT(run.max_trace_err, 1e-8);
    EXPECT_GE(run.min_purity, 1.0 / (n + 1) - 1e-9);
    EXPECT_LE(run.max_purity, 1.0 + 1e-9);
    for (const auto& o : run.samples) EXPECT_LE(o.m.norm(), 1.0 + 1e-9);
}

TEST(EvolveQuantum, StrongDissipationReachesSouthPole) {
    const int n = 100;
    const auto run = evolve_quantum(initial_product_state(n, {std::numbers::pi / 2, 0}), params(0.078, 3.0, {0, 1, 0}, n),
                                    {4, 1e-3}, 15.0, {0.1, {}});
    for (const auto& o : run.samples) {
        if (o.time >= 10.0 - 1e-9) {
            EXPECT_LT(std::abs(o.m.z + 1.0), 0.05) << o.time;
        }
    }
}

TEST(EvolveQuantum, StepHalvedOnInstability) {
    // 2 N Gamma dt sits outside the RK4 stability interval at dt, inside at dt/2
    const int n = 20;
    const auto run = evolve_quantum(initial_product_state(n, {1.0, 0.0}), params(100.0, 0.5, {0, 1, 0}, n), {4, 1e-3},
                                    1.0, {0.01, {}});
    EXPECT_TRUE(run.dt_halved);
    EXPECT_DOUBLE_EQ(run.dt_used, 5e-4);
    EXPECT_LT(run.max_trace_err, 1e-8);
}

TEST(EvolveQuantum, RejectsBadInput) {
    const auto p = params(1, 1, {0, 1, 0}, 4);
    const auto r = initial_product_state(4, {1, 0});
    EXPECT_THROW(evolve_quantum(initial_product_state(5, {1, 0}), p, {}, 1.0), ValidationError);
    EXPECT_THROW(evolve_quantum(r, p, {2, 1e-3}, 1.0), ValidationError);
    EXPECT_THROW(evolve_quantum(r, p, {4, 1e-3}, -1.0), ValidationError);
    EXPECT_THROW(evolve_quantum({4, 2.0 * r.rho}, p, {4, 1e-3}, 1.0), ValidationError);
}

TEST(FullSpace, SmallSystemsAgreeWithDicke) {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-1.5, 1.5), th(0.0, std::numbers::pi), ph(0.0, 2 * std::numbers::pi);
    for (int n = 1; n <= 4; ++n) {
        const auto p = params(std::abs(u(rng)) * 4, std::abs(u(rng)), {u(rng), u(rng), u(rng)}, n);
        const SphericalAngle a{th(rng), ph(rng)};
        const auto oracle = full_space_oracle(n, p, a, 3.0, 1e-2, 0.5);
        const auto run = evolve_quantum(initial_product_state(n, a), p, {4, 1e-2}, 3.0, {0.5, {}});
        ASSERT_EQ(oracle.size(), run.samples.size());
        for (std::size_t i = 0; i < oracle.size(); ++i) {
            EXPECT_LT(max_abs_diff(oracle[i].m, run.samples[i].m), 1e-10) << "n=" << n << " t=" << oracle[i].time;
            EXPECT_LT(std::abs(oracle[i].leak), 1e-12);
        }
    }
    EXPECT_THROW(full_space_oracle(9, params(1, 1, {0, 1, 0}, 9), {1, 0}, 1.0), ValidationError);
}

// roundoff outside the Hermitian subspace must not grow over long runs
TEST(FullSpaceOracle, LeakStaysAtRoundoff) {
    const auto out = full_space_oracle(6, params(0.39, 1.13, {0.4, -0.6, 0.2}, 6), {2.1, 0.7}, 20.0, 1e-2, 1.0);
    for (const auto& s : out) {
        EXPECT_LT(std::abs(s.leak), 1e-13) << s.time;
        EXPECT_LT(s.trace_err, 1e-13) << s.time;
    }
}

TEST(QuantumClassicalError, StartsAtZeroAndValidates) {
    const auto es = quantum_classical_error(params(3.306, 5.0, {0, 1, 0}, 1), {std::numbers::pi / 2, 0}, {10, 20}, 1.0,
                                            {4, 1e-3}, 0.1, 2);
    ASSERT_EQ(es.size(), 2u);
    EXPECT_EQ(es[1].n_spins, 20);
    EXPECT_EQ(es[0].times.size(), 11u);
    EXPECT_LT(es[0].error[0], 1e-12);
    EXPECT_THROW(quantum_classical_error(params(1, 1, {0, 1, 0}, 1), {1, 0}, {20, 10}, 1.0), ValidationError);
}

TEST(Exports, ObservablesAndSnapshot) {
    QuantumRun run;
    run.samples.push_back({0.5, {0.1, 0.2, 0.3}, 0.9, 1e-12, 0.0});
    std::ostringstream os;
    write_observables_csv(os, run, "n=2");
    EXPECT_EQ(os.str(), "# n=2\nt,mx,my,mz,purity,trace_err\n0.5,0.1,0.2,0.3,0.9,1e-12\n");
    DensitySnapshot s{2.0, initial_product_state(2, {0, 0}), 0.0};
    std::ostringstream ss;
    write_snapshot_csv(ss, s, "n=2");
    const std::string txt = ss.str();
    EXPECT_EQ(txt.substr(0, txt.find('\n', txt.find('\n') + 1) + 1),
              "# n=2 snapshot_t=2\ntwo_m_over_n_row,two_m_over_n_col,abs_rho\n");
    EXPECT_NE(txt.find("\n1,1,1\n"), std::string::npos);
    EXPECT_NE(txt.find("\n-1,-1,0\n"), std::string::npos);
}
