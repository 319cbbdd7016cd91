#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "rrhinf/model.hpp"

namespace rrhinf {

struct LmiError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Coefficient of the held-sample mismatch weight (pi^2/4, circle constant);
// distinct from the per-node dissipation scalars pi_i.
inline constexpr double kWirtingerCoeff = 2.46740110027233965471;  // pi^2/4

// Block coordinates of eta_i = [de_i; e_i; E_i; e_i(t-tau_i); E_{i,t}; E_{i,s}; xi_i]
// with sizes [n, n, p*n, n, p*n, p*n, m_xi]. For p = 0 the sample blocks are
// absent and eta reduces to [de_i; e_i; xi_i].
struct LmiLayout {
    int n = 0, p = 0, m_xi = 0;
    int off_a = 0, off_b = 0, off_c = 0, off_d = 0, off_e = 0, off_f = 0, off_g = 0;
    int total = 0;

    static LmiLayout make(int n, int p, int m_xi);
};

// Successive-difference map: delta = T * [e; E; e(t-tau)], bidiagonal
// +/-1 pattern Kronecker I_n; (p+1)n x (p+2)n.
Eigen::MatrixXd build_T(int p, int n);

// (p+1)x(p+1) block matrix with R on the diagonal and (G+G')/2 elsewhere.
Eigen::MatrixXd build_Psi(const Eigen::MatrixXd& R, const Eigen::MatrixXd& G, int p);

// Reciprocal-gap bound (extended Jensen / Park): both sides, used as a
// property-test oracle. deltas has p+1 pieces, gaps are the interval
// lengths (t-t_k, inter-sample gaps, tail), summing to tau.
double reciprocal_gap_lhs(const Eigen::MatrixXd& R, const std::vector<Eigen::VectorXd>& deltas,
                  const std::vector<double>& gaps);
double reciprocal_gap_rhs(const Eigen::MatrixXd& Psi, const std::vector<Eigen::VectorXd>& deltas);

// exp(-2 alpha tau) T' Psi T, the discounted difference form.
Eigen::MatrixXd build_Psi_bar(const Eigen::MatrixXd& R, const Eigen::MatrixXd& G, int p,
                              double alpha, double tau);

// Psi_bar with the (1,1) block shifted by -2 alpha Yhat - S and the (3,3)
// block by +exp(-2 alpha tau) S; partition sizes [n, p*n, n].
Eigen::MatrixXd build_Psi_tilde(const Eigen::MatrixXd& PsiBar, const Eigen::MatrixXd& Yhat,
                                const Eigen::MatrixXd& S, double alpha, double tau, int p);

// Park constraint carrier [[R, G], [G', R]], required PSD.
Eigen::MatrixXd park_constraint_value(const Eigen::MatrixXd& R, const Eigen::MatrixXd& G);

// Neighbour data entering Phi_bar (values of the neighbour's variables).
struct NeighbourVars {
    Eigen::MatrixXd Yhat;
    Eigen::MatrixXd W;
    double pi = 0.0;
};

struct PhiBar {
    Eigen::MatrixXd m11, m12, m22;  // each p*n x p*n, m12 = m21 = -m22
};

PhiBar build_Phi_bar(const std::vector<NeighbourVars>& neighbours, int n);

// Everything about node i that is fixed problem data for the LMI blocks.
struct NodeContext {
    Eigen::MatrixXd A, C, H;  // plant, measurement, consensus output map
    Eigen::MatrixXd B, D;     // stacked [B2 0], [D2 D2bar]
    int p = 0, q = 0;
    double tau = 0.0;
    double sum_tau_out_sq = 0.0;  // sum of tau_j^2 over j with i in V_j
    double alpha = 0.0;

    int n() const { return static_cast<int>(A.rows()); }
    int m_xi() const { return static_cast<int>(B.cols()); }
    LmiLayout layout() const { return LmiLayout::make(n(), p, m_xi()); }
};

NodeContext make_node_context(const Problem& pb, int i);  // i is 1-based

// Analysis-form variable values (analysis route).
struct AnalysisVars {
    Eigen::MatrixXd Yhat, S, R, G, W;  // S, R, G empty when p = 0
    Eigen::MatrixXd X, Z, Q;
    Eigen::MatrixXd K, L;
    double gamma_sq = 0.0;
    std::vector<NeighbourVars> neighbours;  // ascending V_i order
};

// Synthesis-form variable values (synthesis route; theta = 1/gamma^2).
struct SynthesisNodeVars {
    Eigen::MatrixXd Yhat, S, R, G, W;
    Eigen::MatrixXd X, F, U;  // F empty when p = 0
    double eps = 0.0, epsbar = 0.0, theta = 0.0;
    std::vector<NeighbourVars> neighbours;
};

Eigen::MatrixXd build_Xi_analysis(const NodeContext& ctx, const AnalysisVars& v);
Eigen::MatrixXd build_Xi_synthesis(const NodeContext& ctx, const SynthesisNodeVars& v);

}  // namespace rrhinf
