#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include <Eigen/Dense>

#include "rrhinf/lmi.hpp"

using namespace rrhinf;

namespace {

Eigen::MatrixXd random_spd(std::mt19937& rng, int n, double shift = 0.1) {
    std::normal_distribution<double> nd;
    Eigen::MatrixXd M(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            M(r, c) = nd(rng);
    return M * M.transpose() + shift * Eigen::MatrixXd::Identity(n, n);
}

Eigen::MatrixXd random_dense(std::mt19937& rng, int r, int c) {
    std::normal_distribution<double> nd;
    Eigen::MatrixXd M(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
            M(i, j) = nd(rng);
    return M;
}

// G with [[R, G], [G', R]] PSD: G = R^{1/2} Q R^{1/2} with a contraction Q.
Eigen::MatrixXd feasible_G(std::mt19937& rng, const Eigen::MatrixXd& R) {
    const int n = static_cast<int>(R.rows());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(R);
    const Eigen::MatrixXd Rh = es.operatorSqrt();
    Eigen::MatrixXd Q = random_dense(rng, n, n);
    const double nrm = Q.operatorNorm();
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Q *= u(rng) / std::max(nrm, 1e-12);
    return Rh * Q * Rh;
}

}  // namespace

TEST_CASE("successive-difference map has the expected bidiagonal pattern") {
    const Eigen::MatrixXd T = build_T(2, 1);
    Eigen::MatrixXd expect(3, 4);
    expect << 1, -1, 0, 0, 0, 1, -1, 0, 0, 0, 1, -1;
    CHECK((T - expect).norm() == 0.0);

    const Eigen::MatrixXd T2 = build_T(1, 2);
    CHECK(T2.rows() == 4);
    CHECK(T2.cols() == 6);
    CHECK(T2(0, 0) == 1.0);
    CHECK(T2(0, 2) == -1.0);
    CHECK(T2(1, 3) == -1.0);
    CHECK_THROWS_AS(build_T(0, 1), LmiError);
}

TEST_CASE("Psi places R on the diagonal and the symmetric part of G elsewhere") {
    std::mt19937 rng(7);
    const Eigen::MatrixXd R = random_spd(rng, 2);
    const Eigen::MatrixXd G = random_dense(rng, 2, 2);
    const Eigen::MatrixXd Psi = build_Psi(R, G, 2);
    REQUIRE(Psi.rows() == 6);
    const Eigen::MatrixXd Gs = 0.5 * (G + G.transpose());
    CHECK((Psi.block(0, 0, 2, 2) - R).norm() == 0.0);
    CHECK((Psi.block(2, 2, 2, 2) - R).norm() == 0.0);
    CHECK((Psi.block(0, 4, 2, 2) - Gs).norm() == 0.0);
    CHECK((Psi - Psi.transpose()).norm() == 0.0);
}

TEST_CASE("reciprocal-gap bound holds on 1000 random feasible instances") {
    std::mt19937 rng(42);
    std::uniform_int_distribution<int> dn(1, 4), dp(1, 4);
    std::uniform_real_distribution<double> ugap(0.05, 1.0);
    int trials = 0;
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const int n = dn(rng);
        const int p = dp(rng);
        const Eigen::MatrixXd R = random_spd(rng, n);
        const Eigen::MatrixXd G = feasible_G(rng, R);
        // the bound needs the Park condition; assert the generator delivered it
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> park(park_constraint_value(R, G));
        REQUIRE(park.eigenvalues().minCoeff() >= -1e-10);

        std::vector<Eigen::VectorXd> deltas;
        std::vector<double> gaps;
        for (int v = 0; v <= p; ++v) {
            deltas.push_back(random_dense(rng, n, 1));
            gaps.push_back(ugap(rng));
        }
        const Eigen::MatrixXd Psi = build_Psi(R, G, p);
        const double lhs = reciprocal_gap_lhs(R, deltas, gaps);
        const double rhs = reciprocal_gap_rhs(Psi, deltas);
        worst = std::max(worst, rhs - lhs);
        CHECK(lhs >= rhs - 1e-10);
        ++trials;
    }
    CHECK(trials == 1000);
    INFO("worst rhs - lhs margin: " << worst);
}

TEST_CASE("reciprocal-gap bound input validation") {
    const Eigen::MatrixXd R = Eigen::MatrixXd::Identity(2, 2);
    std::vector<Eigen::VectorXd> d{Eigen::VectorXd::Ones(2), Eigen::VectorXd::Ones(2)};
    CHECK_THROWS_AS(reciprocal_gap_lhs(R, d, {0.5}), LmiError);
    CHECK_THROWS_AS(reciprocal_gap_lhs(R, d, {0.5, -0.1}), LmiError);
}

TEST_CASE("discounted difference form and diagonal shifts") {
    std::mt19937 rng(3);
    const int n = 2, p = 2;
    const Eigen::MatrixXd R = random_spd(rng, n);
    const Eigen::MatrixXd G = feasible_G(rng, R);
    const double alpha = 0.1, tau = 0.2;
    const Eigen::MatrixXd PsiBar = build_Psi_bar(R, G, p, alpha, tau);
    const Eigen::MatrixXd T = build_T(p, n);
    const Eigen::MatrixXd direct =
        std::exp(-2 * alpha * tau) * T.transpose() * build_Psi(R, G, p) * T;
    CHECK((PsiBar - 0.5 * (direct + direct.transpose())).norm() < 1e-14);

    const Eigen::MatrixXd Yhat = random_spd(rng, n);
    const Eigen::MatrixXd S = random_spd(rng, n);
    const Eigen::MatrixXd Pt = build_Psi_tilde(PsiBar, Yhat, S, alpha, tau, p);
    CHECK((Pt.topLeftCorner(n, n) - (PsiBar.topLeftCorner(n, n) - 2 * alpha * Yhat - S))
              .norm() < 1e-14);
    CHECK((Pt.bottomRightCorner(n, n) -
           (PsiBar.bottomRightCorner(n, n) + std::exp(-2 * alpha * tau) * S))
              .norm() == 0.0);
    CHECK((Pt.block(0, n, n, p * n) - PsiBar.block(0, n, n, p * n)).norm() == 0.0);
}

TEST_CASE("neighbour coupling blocks") {
    std::mt19937 rng(5);
    const int n = 2;
    std::vector<NeighbourVars> nb(2);
    for (auto& v : nb) {
        v.Yhat = random_spd(rng, n);
        v.W = random_spd(rng, n);
        v.pi = 0.1;
    }
    const PhiBar Phi = build_Phi_bar(nb, n);
    CHECK((Phi.m11.block(0, 0, n, n) - (0.1 * nb[0].Yhat + kWirtingerCoeff * nb[0].W))
              .norm() == 0.0);
    CHECK((Phi.m22.block(n, n, n, n) - kWirtingerCoeff * nb[1].W).norm() == 0.0);
    CHECK(Phi.m11.block(0, n, n, n).isZero());
    CHECK((Phi.m12 + Phi.m22).norm() == 0.0);
    CHECK_THROWS_AS(build_Phi_bar({}, n), LmiError);
}

TEST_CASE("layout offsets") {
    const LmiLayout l = LmiLayout::make(3, 2, 2);
    CHECK(l.off_a == 0);
    CHECK(l.off_b == 3);
    CHECK(l.off_c == 6);
    CHECK(l.off_d == 12);
    CHECK(l.off_e == 15);
    CHECK(l.off_f == 21);
    CHECK(l.off_g == 27);
    CHECK(l.total == 29);
    const LmiLayout l0 = LmiLayout::make(3, 0, 2);
    CHECK(l0.off_g == 6);
    CHECK(l0.total == 8);
    CHECK(l0.off_c == -1);
}

TEST_CASE("gain substitution maps the two matrix forms onto each other") {
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> dn(1, 3), dp(0, 3), dm(1, 2), dr(1, 3), dq(0, 2);
    std::uniform_real_distribution<double> ueps(0.01, 1.0), uebar(0.0, 1.0);
    for (int t = 0; t < 50; ++t) {
        NodeContext ctx;
        const int n = dn(rng);
        const int m_y = dm(rng);
        const int m_xi = dm(rng) + 1;
        const int r = dr(rng);
        ctx.p = dp(rng);
        ctx.q = dq(rng);
        ctx.A = random_dense(rng, n, n);
        ctx.C = random_dense(rng, m_y, n);
        ctx.H = random_dense(rng, r, n);
        ctx.B = random_dense(rng, n, m_xi);
        ctx.D = random_dense(rng, m_y, m_xi);
        ctx.tau = 0.1 * ctx.p;
        ctx.alpha = 0.1;
        ctx.sum_tau_out_sq = 0.04 * ctx.q;

        SynthesisNodeVars sv;
        sv.Yhat = random_spd(rng, n);
        sv.W = random_spd(rng, n);
        sv.X = random_dense(rng, n, n) + 3.0 * Eigen::MatrixXd::Identity(n, n);
        sv.U = random_dense(rng, n, m_y);
        sv.eps = ueps(rng);
        sv.epsbar = uebar(rng);
        sv.theta = ueps(rng);
        if (ctx.p > 0) {
            sv.S = random_spd(rng, n);
            sv.R = random_spd(rng, n);
            sv.G = feasible_G(rng, sv.R);
            sv.F = random_dense(rng, n, r);
            for (int a = 0; a < ctx.p; ++a) {
                NeighbourVars nb;
                nb.Yhat = random_spd(rng, n);
                nb.W = random_spd(rng, n);
                nb.pi = 0.1;
                sv.neighbours.push_back(nb);
            }
        }

        AnalysisVars av;
        av.Yhat = sv.Yhat;
        av.S = sv.S;
        av.R = sv.R;
        av.G = sv.G;
        av.W = sv.W;
        av.X = sv.X;
        av.Z = sv.eps * sv.X;
        av.Q = sv.epsbar * sv.X;
        av.gamma_sq = 1.0 / sv.theta;
        av.neighbours = sv.neighbours;
        const Eigen::PartialPivLU<Eigen::MatrixXd> Xt(sv.X.transpose());
        av.L = Xt.solve(sv.U);
        if (ctx.p > 0)
            av.K = Xt.solve(sv.F);

        const Eigen::MatrixXd Xi_s = build_Xi_synthesis(ctx, sv);
        const Eigen::MatrixXd Xi_a = build_Xi_analysis(ctx, av);
        const double rel = (Xi_s - Xi_a).norm() / std::max(Xi_s.norm(), 1e-300);
        CHECK(rel < 1e-12);
    }
}
