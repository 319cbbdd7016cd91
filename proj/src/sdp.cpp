#include "rrhinf/sdp.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace rrhinf {

int VariableSpace::add_matrix(const std::string& name, int rows, int cols, bool symmetric) {
    if (rows < 1 || cols < 1 || (symmetric && rows != cols))
        throw SdpError("bad variable shape for " + name);
    Var v;
    v.name = name;
    v.rows = rows;
    v.cols = cols;
    v.symmetric = symmetric;
    v.offset = dim_;
    v.length = symmetric ? rows * (rows + 1) / 2 : rows * cols;
    dim_ += v.length;
    vars_.push_back(std::move(v));
    return static_cast<int>(vars_.size()) - 1;
}

Eigen::MatrixXd VariableSpace::value(int id, const Eigen::VectorXd& z) const {
    const Var& v = vars_[static_cast<size_t>(id)];
    Eigen::MatrixXd M(v.rows, v.cols);
    int at = v.offset;
    if (v.symmetric) {
        for (int c = 0; c < v.cols; ++c)
            for (int r = c; r < v.rows; ++r) {
                M(r, c) = z(at);
                M(c, r) = z(at);
                ++at;
            }
    } else {
        for (int c = 0; c < v.cols; ++c)
            for (int r = 0; r < v.rows; ++r)
                M(r, c) = z(at++);
    }
    return M;
}

void VariableSpace::set_value(int id, const Eigen::MatrixXd& M, Eigen::VectorXd& z) const {
    const Var& v = vars_[static_cast<size_t>(id)];
    if (M.rows() != v.rows || M.cols() != v.cols)
        throw SdpError("set_value shape mismatch for " + v.name);
    int at = v.offset;
    if (v.symmetric) {
        for (int c = 0; c < v.cols; ++c)
            for (int r = c; r < v.rows; ++r)
                z(at++) = M(r, c);
    } else {
        for (int c = 0; c < v.cols; ++c)
            for (int r = 0; r < v.rows; ++r)
                z(at++) = M(r, c);
    }
}

Eigen::MatrixXd PsdBlock::at(const Eigen::VectorXd& z) const {
    Eigen::MatrixXd A = F0;
    for (const auto& [k, Fk] : coeffs)
        A += z(k) * Fk;
    return A;
}

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::infeasible: return "infeasible";
        default: return "numerical-failure";
    }
}

ConicProgram scalarize(const VariableSpace& vars,
                       const std::vector<MatrixExpression>& constraints,
                       const Eigen::VectorXd& objective, const SolverOptions& options) {
    const int m = vars.dim();
    if (objective.size() != m)
        throw SdpError("objective length does not match variable space");
    ConicProgram prog;
    prog.num_vars = m;
    prog.objective = objective;
    prog.options = options;

    std::mt19937 rng(20240613);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Eigen::VectorXd probe(m);
    for (int k = 0; k < m; ++k)
        probe(k) = unif(rng);

    Eigen::VectorXd z = Eigen::VectorXd::Zero(m);
    for (const auto& expr : constraints) {
        PsdBlock blk;
        blk.F0 = expr.eval(z);
        blk.dim = static_cast<int>(blk.F0.rows());
        if (blk.dim != expr.dim)
            throw SdpError("expression dimension mismatch");
        Eigen::MatrixXd probed = blk.F0;
        for (int k = 0; k < m; ++k) {
            z(k) = 1.0;
            Eigen::MatrixXd Fk = expr.eval(z) - blk.F0;
            z(k) = 0.0;
            if (Fk.norm() > 0.0) {
                probed += probe(k) * Fk;
                blk.coeffs.emplace_back(k, std::move(Fk));
            }
        }
        // affinity / round-trip check against the reconstructed map
        const Eigen::MatrixXd direct = expr.eval(probe);
        const double scale = std::max(1.0, direct.norm());
        if ((direct - probed).norm() > 1e-14 * scale * static_cast<double>(m))
            throw NonAffineExpression("constraint expression is not affine in the variables");
        prog.blocks.push_back(std::move(blk));
    }
    return prog;
}

namespace {

struct BarrierEval {
    double phi = 0.0;
    bool in_domain = false;
    std::vector<Eigen::LLT<Eigen::MatrixXd>> llts;
};

BarrierEval eval_barrier(const ConicProgram& prog, const Eigen::VectorXd& z) {
    BarrierEval out;
    out.llts.reserve(prog.blocks.size());
    for (const auto& blk : prog.blocks) {
        Eigen::LLT<Eigen::MatrixXd> llt(blk.at(z));
        if (llt.info() != Eigen::Success)
            return out;
        double logdet = 0.0;
        const auto& L = llt.matrixLLT();
        for (int i = 0; i < blk.dim; ++i) {
            if (!(L(i, i) > 0.0))
                return out;
            logdet += std::log(L(i, i));
        }
        out.phi -= 2.0 * logdet;
        out.llts.push_back(std::move(llt));
    }
    out.in_domain = true;
    return out;
}

void barrier_grad_hess(const ConicProgram& prog, const Eigen::VectorXd& z,
                       Eigen::VectorXd& grad, Eigen::MatrixXd& hess) {
    const int m = prog.num_vars;
    grad.setZero(m);
    hess.setZero(m, m);
    std::vector<Eigen::MatrixXd> V;
    for (const auto& blk : prog.blocks) {
        Eigen::LLT<Eigen::MatrixXd> llt(blk.at(z));
        if (llt.info() != Eigen::Success)
            throw NumericalFailure("barrier evaluated outside the cone");
        const auto L = llt.matrixL();
        const int nk = static_cast<int>(blk.coeffs.size());
        V.resize(static_cast<size_t>(nk));
        for (int a = 0; a < nk; ++a) {
            const Eigen::MatrixXd M1 = L.solve(blk.coeffs[static_cast<size_t>(a)].second);
            V[static_cast<size_t>(a)] = L.solve(M1.transpose());
        }
        for (int a = 0; a < nk; ++a) {
            const int ka = blk.coeffs[static_cast<size_t>(a)].first;
            grad(ka) -= V[static_cast<size_t>(a)].trace();
            for (int b = a; b < nk; ++b) {
                const int kb = blk.coeffs[static_cast<size_t>(b)].first;
                const double hab =
                    V[static_cast<size_t>(a)].cwiseProduct(V[static_cast<size_t>(b)]).sum();
                hess(ka, kb) += hab;
                if (ka != kb)
                    hess(kb, ka) += hab;
            }
        }
    }
}

// Minimize t * (c_lin . z) + phi(z) by damped Newton from a strictly
// feasible z. Returns the number of Newton steps; z is updated in place.
// Path following only needs an approximately centered point before each
// barrier update, so the stop test is on the Newton decrement lambda^2;
// lambda_sq_tol = 1e-4 keeps the centering error well below the gap bound.
// early_stop, when set, ends the centering as soon as it returns true.
int newton_center(const ConicProgram& prog, const Eigen::VectorXd& c_lin, double t,
                  Eigen::VectorXd& z, int max_steps, double lambda_sq_tol = 1e-4,
                  const std::function<bool(const Eigen::VectorXd&)>& early_stop = nullptr) {
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
    int steps = 0;
    for (; steps < max_steps; ++steps) {
        if (early_stop && early_stop(z))
            break;
        barrier_grad_hess(prog, z, grad, hess);
        grad += t * c_lin;

        Eigen::VectorXd d;
        double reg = 0.0;
        for (int attempt = 0; attempt < 4; ++attempt) {
            Eigen::MatrixXd H = hess;
            if (reg > 0.0)
                H.diagonal().array() += reg;
            Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
            d = ldlt.solve(-grad);
            if (ldlt.info() == Eigen::Success && d.allFinite())
                break;
            reg = (reg == 0.0) ? 1e-12 * std::max(1.0, hess.trace() / hess.rows()) : reg * 1e4;
        }
        if (!d.allFinite())
            throw NumericalFailure("Newton system solve failed");

        const double decrement_sq = -grad.dot(d);
        if (decrement_sq <= lambda_sq_tol)
            break;

        const double f0 = t * c_lin.dot(z) + eval_barrier(prog, z).phi;
        double step = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 60; ++ls) {
            const Eigen::VectorXd zn = z + step * d;
            const BarrierEval be = eval_barrier(prog, zn);
            if (be.in_domain &&
                t * c_lin.dot(zn) + be.phi <= f0 - 0.25 * step * decrement_sq) {
                z = zn;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved)
            break;  // no further progress at floating-point resolution
    }
    return steps;
}

}  // namespace

SolveReport solve(const ConicProgram& program) {
    const auto t_start = std::chrono::steady_clock::now();
    const int m = program.num_vars;
    SolveReport rep;
    rep.z = Eigen::VectorXd::Zero(m);

    // normalize variable columns so coefficient matrices are unit order
    ConicProgram prog = program;
    Eigen::VectorXd colscale = Eigen::VectorXd::Ones(m);
    for (const auto& blk : prog.blocks)
        for (const auto& [k, Fk] : blk.coeffs)
            colscale(k) = std::max(colscale(k), Fk.norm());
    for (auto& blk : prog.blocks)
        for (auto& [k, Fk] : blk.coeffs)
            Fk /= colscale(k);
    Eigen::VectorXd c = prog.objective.cwiseQuotient(colscale);

    double total_dim = 0.0;
    for (const auto& blk : prog.blocks)
        total_dim += blk.dim;
    if (prog.blocks.empty())
        throw SdpError("program has no constraints");

    const int step_budget = std::max(50, prog.options.max_iterations) * 10;
    int steps_used = 0;

    auto finish = [&](SolveStatus st, const Eigen::VectorXd& z_scaled, double gap) {
        rep.status = st;
        rep.z = z_scaled.cwiseQuotient(colscale);
        rep.objective = program.objective.dot(rep.z);
        rep.gap = gap;
        rep.iterations = steps_used;
        rep.block_min_eig.clear();
        for (const auto& blk : program.blocks) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(blk.at(rep.z),
                                                              Eigen::EigenvaluesOnly);
            rep.block_min_eig.push_back(es.eigenvalues().minCoeff());
        }
        rep.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t_start)
                          .count();
        return rep;
    };

    // ---- phase 1: find a strictly feasible point (slack s on every block)
    Eigen::VectorXd z = Eigen::VectorXd::Zero(m);
    {
        double worst = 0.0;
        for (const auto& blk : prog.blocks) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(blk.F0, Eigen::EigenvaluesOnly);
            worst = std::max(worst, -es.eigenvalues().minCoeff());
        }
        if (worst > 0.0 || !eval_barrier(prog, z).in_domain) {
            ConicProgram aux = prog;
            aux.num_vars = m + 1;
            for (auto& blk : aux.blocks)
                blk.coeffs.emplace_back(m, Eigen::MatrixXd::Identity(blk.dim, blk.dim));
            Eigen::VectorXd cs = Eigen::VectorXd::Zero(m + 1);
            cs(m) = 1.0;  // minimize slack
            Eigen::VectorXd zs = Eigen::VectorXd::Zero(m + 1);
            zs(m) = worst + 1.0;
            const double feas_target = -1e-6 * (1.0 + worst);
            auto feasible_enough = [&](const Eigen::VectorXd& p) { return p(m) < feas_target; };

            double t = 1.0;
            bool found = false;
            while (steps_used < step_budget) {
                steps_used += newton_center(aux, cs, t, zs, step_budget - steps_used, 1e-4,
                                            feasible_enough);
                if (zs(m) < 0.0) {
                    found = true;
                    break;
                }
                const double gap = (total_dim + static_cast<double>(aux.blocks.size())) / t;
                if (gap < 1e-9 * (1.0 + std::abs(zs(m))))
                    break;
                t *= prog.options.barrier_mu;
            }
            if (!found) {
                if (steps_used >= step_budget)
                    return finish(SolveStatus::numerical_failure, z, 0.0);
                return finish(SolveStatus::infeasible, z, 0.0);
            }
            z = zs.head(m);
        }
    }

    // ---- phase 2: maximize the objective along the central path
    if (c.norm() == 0.0)
        return finish(SolveStatus::optimal, z, 0.0);

    const Eigen::VectorXd c_lin = -c;  // minimize -c.z
    double t = std::max(1.0, total_dim / std::max(1.0, std::abs(c.dot(z))));
    double gap = total_dim / t;
    while (steps_used < step_budget) {
        steps_used += newton_center(prog, c_lin, t, z, step_budget - steps_used);
        gap = total_dim / t;
        if (gap < prog.options.rel_gap_tol * std::max(1.0, std::abs(c.dot(z))))
            return finish(SolveStatus::optimal, z, gap);
        t *= prog.options.barrier_mu;
    }
    return finish(SolveStatus::numerical_failure, z, gap);
}

void dump_sparse_triplets(const ConicProgram& program, std::ostream& os) {
    os.precision(17);
    os << "# block row col var coeff (var -1 = constant term)\n";
    for (size_t b = 0; b < program.blocks.size(); ++b) {
        const auto& blk = program.blocks[b];
        for (int r = 0; r < blk.dim; ++r)
            for (int cc = r; cc < blk.dim; ++cc)
                if (blk.F0(r, cc) != 0.0)
                    os << b << ' ' << r << ' ' << cc << " -1 " << blk.F0(r, cc) << '\n';
        for (const auto& [k, Fk] : blk.coeffs)
            for (int r = 0; r < blk.dim; ++r)
                for (int cc = r; cc < blk.dim; ++cc)
                    if (Fk(r, cc) != 0.0)
                        os << b << ' ' << r << ' ' << cc << ' ' << k << ' ' << Fk(r, cc)
                           << '\n';
    }
}

}  // namespace rrhinf
