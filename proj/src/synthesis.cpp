#include "rrhinf/synthesis.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <future>
#include <limits>
#include <thread>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

namespace rrhinf {

using nlohmann::json;

unsigned thread_cap() {
    if (const char* env = std::getenv("RRHINF_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1)
            return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

SynthesisProgram build_synthesis_program(const Problem& pb) {
    pb.options.validate(pb.graph);
    const int N = pb.N();
    const int n = pb.n();

    SynthesisProgram sp;
    sp.delta_lmi = pb.lmi_margin();
    sp.var_Yhat.assign(N, -1);
    sp.var_S.assign(N, -1);
    sp.var_R.assign(N, -1);
    sp.var_W.assign(N, -1);
    sp.var_G.assign(N, -1);
    sp.var_X.assign(N, -1);
    sp.var_F.assign(N, -1);
    sp.var_U.assign(N, -1);

    const bool sym = pb.options.symmetric_multipliers;
    for (int i = 1; i <= N; ++i) {
        const auto& s = pb.sensors[static_cast<size_t>(i - 1)];
        const int p = pb.graph.in_degree(i);
        const std::string tag = std::to_string(i);
        sp.var_Yhat[i - 1] = sp.space.add_matrix("Yhat_" + tag, n, n, true);
        sp.var_W[i - 1] = sp.space.add_matrix("W_" + tag, n, n, true);
        sp.var_X[i - 1] = sp.space.add_matrix("X_" + tag, n, n, sym);
        sp.var_U[i - 1] = sp.space.add_matrix("U_" + tag, n, s.m_y(), false);
        if (p > 0) {
            sp.var_S[i - 1] = sp.space.add_matrix("S_" + tag, n, n, true);
            sp.var_R[i - 1] = sp.space.add_matrix("R_" + tag, n, n, true);
            sp.var_G[i - 1] = sp.space.add_matrix("G_" + tag, n, n, sym);
            sp.var_F[i - 1] = sp.space.add_matrix("F_" + tag, n, s.r(), sym && s.r() == n);
        }
    }
    if (pb.options.minimize_gamma())
        sp.var_theta = sp.space.add_scalar("theta");

    const double theta_fixed =
        pb.options.minimize_gamma()
            ? 0.0
            : 1.0 / (pb.options.gamma_fixed * pb.options.gamma_fixed);

    // copies captured by the constraint closures
    const VariableSpace space = sp.space;
    const double delta_lmi = sp.delta_lmi;

    for (int i = 1; i <= N; ++i) {
        const NodeContext ctx = make_node_context(pb, i);
        const LmiLayout layout = ctx.layout();
        const auto& neigh = pb.graph.neighbourhood(i);

        struct NodeIds {
            int Yhat, S, R, W, G, X, F, U;
        };
        NodeIds ids{sp.var_Yhat[i - 1], sp.var_S[i - 1], sp.var_R[i - 1], sp.var_W[i - 1],
                    sp.var_G[i - 1],    sp.var_X[i - 1], sp.var_F[i - 1], sp.var_U[i - 1]};
        std::vector<std::pair<int, int>> neigh_ids;  // (Yhat_j, W_j)
        std::vector<double> neigh_pi;
        for (int j : neigh) {
            neigh_ids.emplace_back(sp.var_Yhat[j - 1], sp.var_W[j - 1]);
            neigh_pi.push_back(pb.options.pi[static_cast<size_t>(j - 1)]);
        }
        const double eps = pb.options.eps[static_cast<size_t>(i - 1)];
        const double epsbar = pb.options.epsbar[static_cast<size_t>(i - 1)];
        const int theta_id = sp.var_theta;

        MatrixExpression expr;
        expr.dim = layout.total;
        expr.eval = [ctx, ids, neigh_ids, neigh_pi, eps, epsbar, theta_id, theta_fixed,
                     space, delta_lmi, layout](const Eigen::VectorXd& z) {
            SynthesisNodeVars v;
            v.Yhat = space.value(ids.Yhat, z);
            v.W = space.value(ids.W, z);
            v.X = space.value(ids.X, z);
            v.U = space.value(ids.U, z);
            if (ctx.p > 0) {
                v.S = space.value(ids.S, z);
                v.R = space.value(ids.R, z);
                v.G = space.value(ids.G, z);
                v.F = space.value(ids.F, z);
            }
            v.eps = eps;
            v.epsbar = epsbar;
            v.theta = theta_id >= 0 ? space.scalar_value(theta_id, z) : theta_fixed;
            for (size_t a = 0; a < neigh_ids.size(); ++a)
                v.neighbours.push_back(NeighbourVars{space.value(neigh_ids[a].first, z),
                                                     space.value(neigh_ids[a].second, z),
                                                     neigh_pi[a]});
            Eigen::MatrixXd Xi = build_Xi_synthesis(ctx, v);
            return Eigen::MatrixXd(-Xi - delta_lmi * Eigen::MatrixXd::Identity(layout.total,
                                                                               layout.total));
        };
        sp.constraints.push_back(std::move(expr));

        // Yhat_i strictly positive; S_i, W_i in the cone; Park on (R_i, G_i)
        auto value_expr = [space](int id, double shift, int d) {
            MatrixExpression e;
            e.dim = d;
            e.eval = [space, id, shift, d](const Eigen::VectorXd& z) {
                return Eigen::MatrixXd(space.value(id, z) -
                                       shift * Eigen::MatrixXd::Identity(d, d));
            };
            return e;
        };
        sp.constraints.push_back(value_expr(ids.Yhat, delta_lmi, n));
        sp.constraints.push_back(value_expr(ids.W, 0.0, n));
        if (ctx.p > 0) {
            sp.constraints.push_back(value_expr(ids.S, 0.0, n));
            MatrixExpression park;
            park.dim = 2 * n;
            const int idR = ids.R, idG = ids.G;
            park.eval = [space, idR, idG](const Eigen::VectorXd& z) {
                return park_constraint_value(space.value(idR, z), space.value(idG, z));
            };
            sp.constraints.push_back(std::move(park));
        }
    }

    if (sp.var_theta >= 0) {
        MatrixExpression pos;
        pos.dim = 1;
        const int tid = sp.var_theta;
        pos.eval = [space, tid](const Eigen::VectorXd& z) {
            Eigen::MatrixXd m(1, 1);
            m(0, 0) = space.scalar_value(tid, z);
            return m;
        };
        sp.constraints.push_back(std::move(pos));
    }

    sp.objective = Eigen::VectorXd::Zero(sp.space.dim());
    if (sp.var_theta >= 0)
        sp.objective(sp.space.slice_offset(sp.var_theta)) = 1.0;
    return sp;
}

namespace {

Eigen::MatrixXd solve_through_Xt(const Eigen::MatrixXd& X, const Eigen::MatrixXd& rhs,
                                 const std::string& what) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(X);
    const auto& sv = svd.singularValues();
    if (!(sv(sv.size() - 1) > 0.0) || sv(0) / sv(sv.size() - 1) > 1e10)
        throw SingularMultiplier("multiplier X is numerically singular recovering " + what);
    return X.transpose().partialPivLu().solve(rhs);
}

}  // namespace

SynthesisSolution synthesize(const Problem& pb) {
    SynthesisProgram sp = build_synthesis_program(pb);
    SolverOptions sopts;
    ConicProgram prog = scalarize(sp.space, sp.constraints, sp.objective, sopts);
    SolveReport rep = solve(prog);
    if (rep.status == SolveStatus::infeasible)
        throw InfeasibleProgram("synthesis LMIs are infeasible for this configuration");
    if (rep.status == SolveStatus::numerical_failure)
        throw NumericalFailure("SDP solver did not converge");

    const int N = pb.N();
    const int n = pb.n();
    SynthesisSolution sol;
    sol.report = rep;
    sol.options = pb.options;
    sol.delta = pb.schedule.period;
    sol.delta_lmi = sp.delta_lmi;
    sol.theta = pb.options.minimize_gamma()
                    ? sp.space.scalar_value(sp.var_theta, rep.z)
                    : 1.0 / (pb.options.gamma_fixed * pb.options.gamma_fixed);
    if (!(sol.theta > 0.0))
        throw NumericalFailure("optimal theta is not positive; gamma^2 unbounded");
    sol.gains.gamma_sq = 1.0 / sol.theta;

    sol.vars.resize(static_cast<size_t>(N));
    sol.gains.K.resize(static_cast<size_t>(N));
    sol.gains.L.resize(static_cast<size_t>(N));
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i <= N; ++i) {
        NodeVariables& v = sol.vars[static_cast<size_t>(i - 1)];
        v.Yhat = sp.space.value(sp.var_Yhat[i - 1], rep.z);
        v.W = sp.space.value(sp.var_W[i - 1], rep.z);
        v.X = sp.space.value(sp.var_X[i - 1], rep.z);
        v.U = sp.space.value(sp.var_U[i - 1], rep.z);
        const int p = pb.graph.in_degree(i);
        if (p > 0) {
            v.S = sp.space.value(sp.var_S[i - 1], rep.z);
            v.R = sp.space.value(sp.var_R[i - 1], rep.z);
            v.G = sp.space.value(sp.var_G[i - 1], rep.z);
            v.F = sp.space.value(sp.var_F[i - 1], rep.z);
            sol.gains.K[static_cast<size_t>(i - 1)] =
                solve_through_Xt(v.X, v.F, "K_" + std::to_string(i));
        } else {
            sol.gains.K[static_cast<size_t>(i - 1)] =
                Eigen::MatrixXd::Zero(n, pb.sensors[static_cast<size_t>(i - 1)].r());
        }
        sol.gains.L[static_cast<size_t>(i - 1)] =
            solve_through_Xt(v.X, v.U, "L_" + std::to_string(i));

        const double alpha = pb.options.alpha[static_cast<size_t>(i - 1)];
        const double tau = pb.schedule.node_delays[static_cast<size_t>(i - 1)];
        P += v.Yhat;
        if (p > 0 && tau > 0.0)
            P += v.S * ((1.0 - std::exp(-2.0 * alpha * tau)) / (2.0 * alpha));
    }
    sol.gains.P = P / static_cast<double>(N);
    return sol;
}

AnalysisReport verify_analysis(const Problem& pb, const SynthesisSolution& sol) {
    AnalysisReport out;
    out.pass = true;
    for (int i = 1; i <= pb.N(); ++i) {
        const NodeContext ctx = make_node_context(pb, i);
        const NodeVariables& v = sol.vars[static_cast<size_t>(i - 1)];
        AnalysisVars av;
        av.Yhat = v.Yhat;
        av.S = v.S;
        av.R = v.R;
        av.G = v.G;
        av.W = v.W;
        av.X = v.X;
        av.Z = sol.options.eps[static_cast<size_t>(i - 1)] * v.X;
        av.Q = sol.options.epsbar[static_cast<size_t>(i - 1)] * v.X;
        av.K = sol.gains.K[static_cast<size_t>(i - 1)];
        av.L = sol.gains.L[static_cast<size_t>(i - 1)];
        av.gamma_sq = sol.gains.gamma_sq;
        for (int j : pb.graph.neighbourhood(i))
            av.neighbours.push_back(
                NeighbourVars{sol.vars[static_cast<size_t>(j - 1)].Yhat,
                              sol.vars[static_cast<size_t>(j - 1)].W,
                              sol.options.pi[static_cast<size_t>(j - 1)]});
        const Eigen::MatrixXd Xi = build_Xi_analysis(ctx, av);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Xi, Eigen::EigenvaluesOnly);
        out.lambda_max.push_back(es.eigenvalues().maxCoeff());
        if (ctx.p > 0) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ep(
                park_constraint_value(v.R, v.G), Eigen::EigenvaluesOnly);
            out.park_min_eig.push_back(ep.eigenvalues().minCoeff());
        } else {
            out.park_min_eig.push_back(std::numeric_limits<double>::infinity());
        }
        if (!(out.lambda_max.back() < 0.0) || out.park_min_eig.back() < -1e-8)
            out.pass = false;
    }
    return out;
}

std::vector<SweepRow> sweep_delta(const Problem& pb, const std::vector<double>& deltas,
                                  const std::vector<double>& epss) {
    if (deltas.empty() || epss.empty())
        throw ConfigError("sweep requires non-empty delta and eps lists");

    struct Point {
        double delta, eps;
    };
    std::vector<Point> grid;
    for (double d : deltas)
        for (double e : epss)
            grid.push_back({d, e});

    std::vector<SweepRow> rows(grid.size());
    auto run_point = [&pb](const Point& pt) {
        SweepRow row;
        row.delta = pt.delta;
        row.eps = pt.eps;
        row.gamma_sq = std::numeric_limits<double>::quiet_NaN();
        const auto t0 = std::chrono::steady_clock::now();
        try {
            Problem local = pb;
            local.schedule = make_schedule(local.graph, pt.delta);
            std::fill(local.options.eps.begin(), local.options.eps.end(), pt.eps);
            SynthesisSolution sol = synthesize(local);
            row.status = "optimal";
            row.gamma_sq = sol.gains.gamma_sq;
        } catch (const InfeasibleProgram&) {
            row.status = "infeasible";
        } catch (const NumericalFailure&) {
            row.status = "numerical-failure";
        } catch (const std::exception& e) {
            row.status = std::string("error: ") + e.what();
        }
        row.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
        return row;
    };

    const unsigned workers = std::min<unsigned>(thread_cap(), static_cast<unsigned>(grid.size()));
    if (workers <= 1) {
        for (size_t g = 0; g < grid.size(); ++g)
            rows[g] = run_point(grid[g]);
        return rows;
    }
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&]() {
            for (size_t g = next.fetch_add(1); g < grid.size(); g = next.fetch_add(1))
                rows[g] = run_point(grid[g]);
        });
    for (auto& th : pool)
        th.join();
    return rows;
}

namespace {

json optional_matrix(const Eigen::MatrixXd& m) {
    return m.size() ? matrix_to_json(m) : json(nullptr);
}

Eigen::MatrixXd matrix_or_empty(const json& j, const std::string& what) {
    if (j.is_null())
        return {};
    return matrix_from_json(j, what);
}

}  // namespace

void save_gains(const std::string& path, const Problem& pb, const SynthesisSolution& sol) {
    json g;
    g["format"] = "rrhinf-gains";
    g["version"] = 1;
    g["n"] = pb.n();
    g["nodes_count"] = pb.N();
    g["delta"] = sol.delta;
    g["theta"] = sol.theta;
    g["gamma_sq"] = sol.gains.gamma_sq;
    g["P"] = matrix_to_json(sol.gains.P);
    g["options"]["alpha"] = sol.options.alpha;
    g["options"]["pi"] = sol.options.pi;
    g["options"]["eps"] = sol.options.eps;
    g["options"]["epsbar"] = sol.options.epsbar;
    g["options"]["delta_lmi_used"] = sol.delta_lmi;
    g["solver"]["status"] = to_string(sol.report.status);
    g["solver"]["gap"] = sol.report.gap;
    g["solver"]["iterations"] = sol.report.iterations;
    g["solver"]["wall_ms"] = sol.report.wall_ms;
    g["solver"]["block_min_eig"] = sol.report.block_min_eig;
    g["nodes"] = json::array();
    for (int i = 0; i < pb.N(); ++i) {
        const auto& v = sol.vars[static_cast<size_t>(i)];
        json nj;
        nj["K"] = matrix_to_json(sol.gains.K[static_cast<size_t>(i)]);
        nj["L"] = matrix_to_json(sol.gains.L[static_cast<size_t>(i)]);
        nj["Yhat"] = matrix_to_json(v.Yhat);
        nj["W"] = matrix_to_json(v.W);
        nj["X"] = matrix_to_json(v.X);
        nj["U"] = matrix_to_json(v.U);
        nj["S"] = optional_matrix(v.S);
        nj["R"] = optional_matrix(v.R);
        nj["G"] = optional_matrix(v.G);
        nj["F"] = optional_matrix(v.F);
        g["nodes"].push_back(nj);
    }
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot write gains file: " + path);
    out << g.dump(2) << '\n';
}

SynthesisSolution load_gains(const std::string& path, const Problem& pb) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open gains file: " + path);
    json g;
    try {
        in >> g;
    } catch (const json::parse_error& e) {
        throw ConfigError("gains parse error: " + std::string(e.what()));
    }
    if (g.value("format", "") != "rrhinf-gains")
        throw ConfigError("not a gains file: " + path);
    if (g.value("n", -1) != pb.n() || g.value("nodes_count", -1) != pb.N())
        throw DimensionMismatch("gains file does not match problem dimensions");

    SynthesisSolution sol;
    sol.delta = g.at("delta").get<double>();
    sol.theta = g.at("theta").get<double>();
    sol.gains.gamma_sq = g.at("gamma_sq").get<double>();
    sol.gains.P = matrix_from_json(g.at("P"), "P");
    sol.options = pb.options;
    sol.options.alpha = g.at("options").at("alpha").get<std::vector<double>>();
    sol.options.pi = g.at("options").at("pi").get<std::vector<double>>();
    sol.options.eps = g.at("options").at("eps").get<std::vector<double>>();
    sol.options.epsbar = g.at("options").at("epsbar").get<std::vector<double>>();
    sol.delta_lmi = g.at("options").value("delta_lmi_used", 0.0);
    for (int i = 0; i < pb.N(); ++i) {
        const auto& nj = g.at("nodes").at(static_cast<size_t>(i));
        NodeVariables v;
        v.Yhat = matrix_from_json(nj.at("Yhat"), "Yhat");
        v.W = matrix_from_json(nj.at("W"), "W");
        v.X = matrix_from_json(nj.at("X"), "X");
        v.U = matrix_from_json(nj.at("U"), "U");
        v.S = matrix_or_empty(nj.at("S"), "S");
        v.R = matrix_or_empty(nj.at("R"), "R");
        v.G = matrix_or_empty(nj.at("G"), "G");
        v.F = matrix_or_empty(nj.at("F"), "F");
        sol.vars.push_back(std::move(v));
        Eigen::MatrixXd K = matrix_from_json(nj.at("K"), "K");
        Eigen::MatrixXd L = matrix_from_json(nj.at("L"), "L");
        const auto& s = pb.sensors[static_cast<size_t>(i)];
        if (K.rows() != pb.n() || K.cols() != s.r() || L.rows() != pb.n() ||
            L.cols() != s.m_y())
            throw DimensionMismatch("gain dimensions do not match problem");
        sol.gains.K.push_back(std::move(K));
        sol.gains.L.push_back(std::move(L));
    }
    if (sol.gains.P.rows() != pb.n() || sol.gains.P.cols() != pb.n())
        throw DimensionMismatch("P dimensions do not match problem");
    return sol;
}

}  // namespace rrhinf
