#include "rrhinf/lmi.hpp"

#include <cmath>

namespace rrhinf {

namespace {

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& M) {
    return 0.5 * (M + M.transpose());
}

}  // namespace

LmiLayout LmiLayout::make(int n, int p, int m_xi) {
    LmiLayout l;
    l.n = n;
    l.p = p;
    l.m_xi = m_xi;
    l.off_a = 0;
    l.off_b = n;
    if (p > 0) {
        l.off_c = 2 * n;
        l.off_d = 2 * n + p * n;
        l.off_e = 3 * n + p * n;
        l.off_f = 3 * n + 2 * p * n;
        l.off_g = 3 * n + 3 * p * n;
    } else {
        l.off_c = l.off_d = l.off_e = l.off_f = -1;
        l.off_g = 2 * n;
    }
    l.total = l.off_g + m_xi;
    return l;
}

Eigen::MatrixXd build_T(int p, int n) {
    if (p < 1 || n < 1)
        throw LmiError("build_T requires p >= 1, n >= 1");
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero((p + 1) * n, (p + 2) * n);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    for (int r = 0; r <= p; ++r) {
        T.block(r * n, r * n, n, n) = I;
        T.block(r * n, (r + 1) * n, n, n) = -I;
    }
    return T;
}

Eigen::MatrixXd build_Psi(const Eigen::MatrixXd& R, const Eigen::MatrixXd& G, int p) {
    if (p < 1)
        throw LmiError("build_Psi requires p >= 1");
    const int n = static_cast<int>(R.rows());
    const Eigen::MatrixXd Gs = 0.5 * (G + G.transpose());
    Eigen::MatrixXd Psi((p + 1) * n, (p + 1) * n);
    for (int r = 0; r <= p; ++r)
        for (int c = 0; c <= p; ++c)
            Psi.block(r * n, c * n, n, n) = (r == c) ? R : Gs;
    return Psi;
}

double reciprocal_gap_lhs(const Eigen::MatrixXd& R, const std::vector<Eigen::VectorXd>& deltas,
                  const std::vector<double>& gaps) {
    if (deltas.size() != gaps.size())
        throw LmiError("reciprocal_gap_lhs: one gap per delta piece required");
    double tau = 0.0;
    for (double g : gaps) {
        if (!(g > 0.0))
            throw LmiError("reciprocal_gap_lhs: gaps must be positive");
        tau += g;
    }
    double sum = 0.0;
    for (size_t v = 0; v < deltas.size(); ++v)
        sum += deltas[v].dot(R * deltas[v]) / gaps[v];
    return tau * sum;
}

double reciprocal_gap_rhs(const Eigen::MatrixXd& Psi, const std::vector<Eigen::VectorXd>& deltas) {
    Eigen::Index total = 0;
    for (const auto& d : deltas)
        total += d.size();
    Eigen::VectorXd stacked(total);
    Eigen::Index at = 0;
    for (const auto& d : deltas) {
        stacked.segment(at, d.size()) = d;
        at += d.size();
    }
    return stacked.dot(Psi * stacked);
}

Eigen::MatrixXd build_Psi_bar(const Eigen::MatrixXd& R, const Eigen::MatrixXd& G, int p,
                              double alpha, double tau) {
    const Eigen::MatrixXd T = build_T(p, static_cast<int>(R.rows()));
    const Eigen::MatrixXd Psi = build_Psi(R, G, p);
    return symmetrized(std::exp(-2.0 * alpha * tau) * (T.transpose() * Psi * T));
}

Eigen::MatrixXd build_Psi_tilde(const Eigen::MatrixXd& PsiBar, const Eigen::MatrixXd& Yhat,
                                const Eigen::MatrixXd& S, double alpha, double tau, int p) {
    const int n = static_cast<int>(Yhat.rows());
    if (PsiBar.rows() != (p + 2) * n)
        throw LmiError("build_Psi_tilde: partition mismatch");
    Eigen::MatrixXd Pt = PsiBar;
    Pt.topLeftCorner(n, n) -= 2.0 * alpha * Yhat + S;
    Pt.bottomRightCorner(n, n) += std::exp(-2.0 * alpha * tau) * S;
    return Pt;
}

Eigen::MatrixXd park_constraint_value(const Eigen::MatrixXd& R, const Eigen::MatrixXd& G) {
    const int n = static_cast<int>(R.rows());
    Eigen::MatrixXd M(2 * n, 2 * n);
    M.topLeftCorner(n, n) = R;
    M.topRightCorner(n, n) = G;
    M.bottomLeftCorner(n, n) = G.transpose();
    M.bottomRightCorner(n, n) = R;
    return M;
}

PhiBar build_Phi_bar(const std::vector<NeighbourVars>& neighbours, int n) {
    if (neighbours.empty())
        throw LmiError("build_Phi_bar: empty neighbourhood");
    const int p = static_cast<int>(neighbours.size());
    PhiBar out;
    out.m11 = Eigen::MatrixXd::Zero(p * n, p * n);
    out.m22 = Eigen::MatrixXd::Zero(p * n, p * n);
    for (int a = 0; a < p; ++a) {
        const auto& nb = neighbours[static_cast<size_t>(a)];
        out.m11.block(a * n, a * n, n, n) = nb.pi * nb.Yhat + kWirtingerCoeff * nb.W;
        out.m22.block(a * n, a * n, n, n) = kWirtingerCoeff * nb.W;
    }
    out.m12 = -out.m22;
    return out;
}

NodeContext make_node_context(const Problem& pb, int i) {
    NodeContext ctx;
    const auto& s = pb.sensors[static_cast<size_t>(i - 1)];
    ctx.A = pb.plant.A;
    ctx.C = s.C;
    ctx.H = s.H;
    ctx.B = s.stacked_B(pb.plant);
    ctx.D = s.stacked_D();
    ctx.p = pb.graph.in_degree(i);
    ctx.q = pb.graph.out_degree(i);
    ctx.tau = pb.schedule.node_delays[static_cast<size_t>(i - 1)];
    ctx.alpha = pb.options.alpha[static_cast<size_t>(i - 1)];
    ctx.sum_tau_out_sq = 0.0;
    for (int j = 1; j <= pb.graph.node_count(); ++j)
        if (pb.graph.has_edge(i, j))
            ctx.sum_tau_out_sq +=
                pb.schedule.node_delays[static_cast<size_t>(j - 1)] *
                pb.schedule.node_delays[static_cast<size_t>(j - 1)];
    return ctx;
}

namespace {

// Shared frame for the two Xi assemblers: fills the blocks common to the
// analysis and synthesis forms, given the already-substituted ingredients.
struct XiIngredients {
    // effective matrices entering each printed block
    Eigen::MatrixXd aa_free;   // -Z - Z'  resp. -eps X - eps X'
    Eigen::MatrixXd ab;        // Yhat - X + (closed-loop term)
    Eigen::MatrixXd ac_unit;   // -(Z' K H)  resp. -eps F H   (one block, tiled over c)
    Eigen::MatrixXd af_unit;   // -Q + Z'KH  resp. -epsbar X + eps F H
    Eigen::MatrixXd ag;
    Eigen::MatrixXd bb_cl;     // X'(A-LC) + (A-LC)'X resp. X'A - UC + A'X - C'U'
    Eigen::MatrixXd bc_unit;   // -(X' K H)  resp. -F H
    Eigen::MatrixXd bf_unit;   // X'KH + (A-LC)'Q  resp. FH + epsbar (A'X - C'U')
    Eigen::MatrixXd bg;
    Eigen::MatrixXd cf_unit;   // -(H'K'Q)  resp. -epsbar H'F'
    Eigen::MatrixXd ff_unit;   // Q'KH + H'K'Q resp. epsbar (FH + H'F')
    Eigen::MatrixXd fg_unit;   // Q'(B-LD)  resp. epsbar (X'B - UD)
    double theta = 0.0;        // 1/gamma^2
};

Eigen::MatrixXd assemble_Xi(const NodeContext& ctx, const Eigen::MatrixXd& Yhat,
                            const Eigen::MatrixXd& S, const Eigen::MatrixXd& R,
                            const Eigen::MatrixXd& G, const Eigen::MatrixXd& W,
                            const std::vector<NeighbourVars>& neighbours,
                            const XiIngredients& in) {
    const int n = ctx.n();
    const int p = ctx.p;
    const int m = ctx.m_xi();
    const LmiLayout l = ctx.layout();
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(l.total, l.total);

    M.block(l.off_a, l.off_a, n, n) = in.aa_free + ctx.sum_tau_out_sq * W;
    M.block(l.off_a, l.off_b, n, n) = in.ab;
    M.block(l.off_a, l.off_g, n, m) = in.ag;
    M.block(l.off_b, l.off_g, n, m) = in.bg;
    M.block(l.off_g, l.off_g, m, m) = -Eigen::MatrixXd::Identity(m, m);

    if (p == 0) {
        // reduced form: no sample history, V_i has no integral terms
        M.block(l.off_b, l.off_b, n, n) =
            in.theta * ctx.q * Eigen::MatrixXd::Identity(n, n) + 2.0 * ctx.alpha * Yhat +
            in.bb_cl;
    } else {
        M.block(l.off_a, l.off_a, n, n) += ctx.tau * ctx.tau * R;
        const Eigen::MatrixXd PsiBar = build_Psi_bar(R, G, p, ctx.alpha, ctx.tau);
        const Eigen::MatrixXd Pt = build_Psi_tilde(PsiBar, Yhat, S, ctx.alpha, ctx.tau, p);
        const auto Pt11 = Pt.block(0, 0, n, n);
        const auto Pt12 = Pt.block(0, n, n, p * n);
        const auto Pt13 = Pt.block(0, n + p * n, n, n);
        const auto Pt22 = Pt.block(n, n, p * n, p * n);
        const auto Pt23 = Pt.block(n, n + p * n, p * n, n);
        const auto Pt33 = Pt.block(n + p * n, n + p * n, n, n);

        const PhiBar Phi = build_Phi_bar(neighbours, n);

        M.block(l.off_a, l.off_c, n, p * n) = in.ac_unit.replicate(1, p);
        M.block(l.off_a, l.off_f, n, p * n) = in.af_unit.replicate(1, p);

        M.block(l.off_b, l.off_b, n, n) =
            in.theta * (p + ctx.q) * Eigen::MatrixXd::Identity(n, n) - Pt11 + in.bb_cl;
        M.block(l.off_b, l.off_c, n, p * n) = -Pt12 + in.bc_unit.replicate(1, p);
        M.block(l.off_b, l.off_d, n, n) = -Pt13;
        M.block(l.off_b, l.off_e, n, p * n) =
            -in.theta * Eigen::MatrixXd::Identity(n, n).replicate(1, p);
        M.block(l.off_b, l.off_f, n, p * n) = in.bf_unit.replicate(1, p);

        M.block(l.off_c, l.off_c, p * n, p * n) = -Pt22;
        M.block(l.off_c, l.off_d, p * n, n) = -Pt23;
        M.block(l.off_c, l.off_f, p * n, p * n) = in.cf_unit.replicate(p, p);

        M.block(l.off_d, l.off_d, n, n) = -Pt33;

        M.block(l.off_e, l.off_e, p * n, p * n) = -Phi.m11;
        M.block(l.off_e, l.off_f, p * n, p * n) = -Phi.m12;

        M.block(l.off_f, l.off_f, p * n, p * n) = in.ff_unit.replicate(p, p) - Phi.m22;
        M.block(l.off_f, l.off_g, p * n, m) = in.fg_unit.replicate(p, 1);
    }

    // mirror the upper block triangle, then enforce bitwise symmetry
    for (int r = 0; r < l.total; ++r)
        for (int c = 0; c < r; ++c)
            M(r, c) = M(c, r);
    return symmetrized(M);
}

}  // namespace

Eigen::MatrixXd build_Xi_analysis(const NodeContext& ctx, const AnalysisVars& v) {
    const int n = ctx.n();
    if (static_cast<int>(v.neighbours.size()) != ctx.p)
        throw DimensionMismatch("build_Xi_analysis: neighbour values mismatch p_i");
    const Eigen::MatrixXd Acl = ctx.A - v.L * ctx.C;
    const Eigen::MatrixXd Bcl = ctx.B - v.L * ctx.D;
    XiIngredients in;
    in.theta = 1.0 / v.gamma_sq;
    in.aa_free = -v.Z - v.Z.transpose();
    in.ab = v.Yhat - v.X + v.Z.transpose() * Acl;
    in.ag = v.Z.transpose() * Bcl;
    in.bb_cl = v.X.transpose() * Acl + Acl.transpose() * v.X;
    in.bg = v.X.transpose() * Bcl;
    if (ctx.p > 0) {
        const Eigen::MatrixXd KH = v.K * ctx.H;
        in.ac_unit = -(v.Z.transpose() * KH);
        in.af_unit = -v.Q + v.Z.transpose() * KH;
        in.bc_unit = -(v.X.transpose() * KH);
        in.bf_unit = v.X.transpose() * KH + Acl.transpose() * v.Q;
        in.cf_unit = -(KH.transpose() * v.Q);
        in.ff_unit = v.Q.transpose() * KH + KH.transpose() * v.Q;
        in.fg_unit = v.Q.transpose() * Bcl;
    } else {
        (void)n;
    }
    return assemble_Xi(ctx, v.Yhat, v.S, v.R, v.G, v.W, v.neighbours, in);
}

Eigen::MatrixXd build_Xi_synthesis(const NodeContext& ctx, const SynthesisNodeVars& v) {
    if (static_cast<int>(v.neighbours.size()) != ctx.p)
        throw DimensionMismatch("build_Xi_synthesis: neighbour values mismatch p_i");
    const Eigen::MatrixXd XtA_UC = v.X.transpose() * ctx.A - v.U * ctx.C;
    const Eigen::MatrixXd XtB_UD = v.X.transpose() * ctx.B - v.U * ctx.D;
    XiIngredients in;
    in.theta = v.theta;
    in.aa_free = -v.eps * v.X - v.eps * v.X.transpose();
    in.ab = v.Yhat - v.X + v.eps * XtA_UC;
    in.ag = v.eps * XtB_UD;
    in.bb_cl = XtA_UC + XtA_UC.transpose();
    in.bg = XtB_UD;
    if (ctx.p > 0) {
        const Eigen::MatrixXd FH = v.F * ctx.H;
        in.ac_unit = -v.eps * FH;
        in.af_unit = -v.epsbar * v.X + v.eps * FH;
        in.bc_unit = -FH;
        in.bf_unit = FH + v.epsbar * XtA_UC.transpose();
        in.cf_unit = -v.epsbar * FH.transpose();
        in.ff_unit = v.epsbar * (FH + FH.transpose());
        in.fg_unit = v.epsbar * XtB_UD;
    }
    return assemble_Xi(ctx, v.Yhat, v.S, v.R, v.G, v.W, v.neighbours, in);
}

}  // namespace rrhinf
