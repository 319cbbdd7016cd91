#include "rrhinf/sim.hpp"

#include <cmath>
#include <ostream>
#include <random>

#include "rrhinf/graph.hpp"

namespace rrhinf {

double DisturbanceSignal::operator()(double t) const {
    if (t < 0.0)
        return 0.0;
    switch (kind) {
        case Kind::zero:
            return 0.0;
        case Kind::pulse:
            return (t >= t_on && t < t_off) ? amplitude : 0.0;
        case Kind::decaying_sine:
            return amplitude * std::exp(-decay * t) * std::sin(omega * t);
        case Kind::random_piecewise: {
            const long seg = static_cast<long>(std::floor(t / piece));
            std::mt19937 rng(seed * 2654435761u + static_cast<unsigned>(seg) * 97u + 1u);
            std::uniform_real_distribution<double> unif(-1.0, 1.0);
            return amplitude * unif(rng) * std::exp(-decay * seg * piece);
        }
    }
    return 0.0;
}

DisturbanceSignal DisturbanceSignal::zero() {
    return {};
}

DisturbanceSignal DisturbanceSignal::pulse(double amplitude, double t_on, double t_off) {
    DisturbanceSignal s;
    s.kind = Kind::pulse;
    s.amplitude = amplitude;
    s.t_on = t_on;
    s.t_off = t_off;
    return s;
}

DisturbanceSignal DisturbanceSignal::decaying_sine(double amplitude, double omega,
                                                   double decay) {
    DisturbanceSignal s;
    s.kind = Kind::decaying_sine;
    s.amplitude = amplitude;
    s.omega = omega;
    s.decay = decay;
    if (!(decay > 0.0))
        throw SimError("decaying sine needs a positive decay rate for finite L2 norm");
    return s;
}

DisturbanceSignal DisturbanceSignal::random_piecewise(unsigned seed, double amplitude,
                                                      double decay, double piece) {
    DisturbanceSignal s;
    s.kind = Kind::random_piecewise;
    s.seed = seed;
    s.amplitude = amplitude;
    s.decay = decay;
    s.piece = piece;
    if (!(piece > 0.0) || !(decay > 0.0))
        throw SimError("random piecewise signal needs positive piece length and decay");
    return s;
}

Eigen::VectorXd Disturbance::w_at(double t) const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(w.size()));
    for (size_t c = 0; c < w.size(); ++c)
        out(static_cast<Eigen::Index>(c)) = w[c](t);
    return out;
}

Eigen::VectorXd Disturbance::v_at(int i, double t) const {
    const auto& ch = v[static_cast<size_t>(i - 1)];
    Eigen::VectorXd out(static_cast<Eigen::Index>(ch.size()));
    for (size_t c = 0; c < ch.size(); ++c)
        out(static_cast<Eigen::Index>(c)) = ch[c](t);
    return out;
}

Disturbance Disturbance::none(const Problem& pb) {
    Disturbance d;
    d.w.assign(static_cast<size_t>(pb.plant.m_w()), DisturbanceSignal::zero());
    for (const auto& s : pb.sensors)
        d.v.emplace_back(static_cast<size_t>(s.m_v()), DisturbanceSignal::zero());
    return d;
}

Trajectory simulate(const Problem& pb, const GainSet& gains, const Disturbance& dist,
                    const Eigen::VectorXd& x0, double T, double h) {
    const int n = pb.n();
    const int N = pb.N();
    const double delta = pb.schedule.period;
    if (!(h > 0.0))
        throw SimError("step must be positive");
    const double ratio = delta / h;
    const int m = static_cast<int>(std::lround(ratio));
    if (m < 1 || std::abs(ratio - m) > 1e-9 * std::max(1.0, ratio))
        throw SimError("step h must divide the sampling period");
    const double periods = T / delta;
    const long num_periods = std::lround(periods);
    if (num_periods < 1 || std::abs(periods - static_cast<double>(num_periods)) > 1e-9 * periods)
        throw SimError("horizon T must be a multiple of the sampling period");
    if (static_cast<int>(dist.w.size()) != pb.plant.m_w() ||
        dist.v.size() != pb.sensors.size())
        throw DimensionMismatch("disturbance channels do not match the problem");
    if (x0.size() != n)
        throw DimensionMismatch("x0 dimension mismatch");

    const long K = num_periods * m;  // fine grid steps
    Trajectory tr;
    tr.h = h;
    tr.delta = delta;
    tr.steps_per_period = m;
    tr.num_steps = K;
    tr.x0 = x0;
    tr.times.resize(static_cast<size_t>(K + 1));
    tr.x.resize(n, K + 1);
    tr.xhat.assign(static_cast<size_t>(N), Eigen::MatrixXd(n, K + 1));
    tr.e.assign(static_cast<size_t>(N), Eigen::MatrixXd(n, K + 1));
    tr.edot.assign(static_cast<size_t>(N), Eigen::MatrixXd(n, K + 1));
    tr.w_samples.resize(pb.plant.m_w(), K + 1);
    for (const auto& s : pb.sensors)
        tr.v_samples.emplace_back(s.m_v(), K + 1);
    for (auto [j, i] : pb.graph.edges()) {
        tr.edge_list.emplace_back(j, i);
        tr.buffer_values.emplace_back(Eigen::MatrixXd::Zero(n, K + 1));
        tr.buffer_sample_times.emplace_back(static_cast<size_t>(num_periods),
                                            -std::numeric_limits<double>::infinity());
    }

    // packed state [x; xhat_1; ...; xhat_N]
    Eigen::VectorXd state = Eigen::VectorXd::Zero(n * (N + 1));
    state.head(n) = x0;

    // held buffers, one per directed edge, zero prehistory
    std::vector<Eigen::VectorXd> buf(tr.edge_list.size(), Eigen::VectorXd::Zero(n));
    auto edge_index = [&](int j, int i) {
        for (size_t eidx = 0; eidx < tr.edge_list.size(); ++eidx)
            if (tr.edge_list[eidx].first == j && tr.edge_list[eidx].second == i)
                return eidx;
        throw SimError("edge lookup failed");
    };

    // coupling input per node: K_i H_i sum of held buffers
    std::vector<Eigen::MatrixXd> KH(static_cast<size_t>(N));
    for (int i = 1; i <= N; ++i)
        KH[static_cast<size_t>(i - 1)] =
            gains.K[static_cast<size_t>(i - 1)] * pb.sensors[static_cast<size_t>(i - 1)].H;

    auto deriv = [&](double t, const Eigen::VectorXd& s) {
        Eigen::VectorXd ds(s.size());
        const Eigen::VectorXd w = dist.w_at(t);
        const auto x = s.head(n);
        ds.head(n) = pb.plant.A * x + pb.plant.B2 * w;
        for (int i = 1; i <= N; ++i) {
            const auto& sen = pb.sensors[static_cast<size_t>(i - 1)];
            const auto xh = s.segment(i * n, n);
            const Eigen::VectorXd y =
                sen.C * x + sen.D2 * w + sen.D2bar * dist.v_at(i, t);
            Eigen::VectorXd dxh = pb.plant.A * xh +
                                  gains.L[static_cast<size_t>(i - 1)] * (y - sen.C * xh);
            if (pb.graph.in_degree(i) > 0) {
                Eigen::VectorXd coupled = Eigen::VectorXd::Zero(n);
                for (int j : pb.graph.neighbourhood(i))
                    coupled += buf[edge_index(j, i)];
                dxh += KH[static_cast<size_t>(i - 1)] * coupled;
            }
            ds.segment(i * n, n) = dxh;
        }
        return ds;
    };

    for (long g = 0; g <= K; ++g) {
        const double t = static_cast<double>(g) * h;
        tr.times[static_cast<size_t>(g)] = t;

        if (g % m == 0 && g < K + 1) {
            const long k = g / m;
            if (k < num_periods) {  // poll at t_k for the interval [t_k, t_{k+1})
                for (int i = 1; i <= N; ++i) {
                    const auto perm = permuted_neighbourhood(pb.graph, i, k);
                    if (perm.empty())
                        continue;
                    const int j = perm.front();
                    const size_t eidx = edge_index(j, i);
                    buf[eidx] = state.segment(j * n, n) - state.segment(i * n, n);
                    tr.buffer_sample_times[eidx][static_cast<size_t>(k)] = t;
                    tr.events.push_back(BufferEvent{k, t, i, j});
                }
                // edges not polled at t_k keep their sample time
                for (size_t eidx = 0; eidx < tr.edge_list.size(); ++eidx)
                    if (k > 0 && tr.buffer_sample_times[eidx][static_cast<size_t>(k)] ==
                                     -std::numeric_limits<double>::infinity())
                        tr.buffer_sample_times[eidx][static_cast<size_t>(k)] =
                            tr.buffer_sample_times[eidx][static_cast<size_t>(k - 1)];
            }
        }

        tr.x.col(g) = state.head(n);
        tr.w_samples.col(g) = dist.w_at(t);
        for (int i = 1; i <= N; ++i) {
            tr.xhat[static_cast<size_t>(i - 1)].col(g) = state.segment(i * n, n);
            tr.e[static_cast<size_t>(i - 1)].col(g) =
                state.head(n) - state.segment(i * n, n);
            tr.v_samples[static_cast<size_t>(i - 1)].col(g) = dist.v_at(i, t);
        }
        for (size_t eidx = 0; eidx < tr.edge_list.size(); ++eidx)
            tr.buffer_values[eidx].col(g) = buf[eidx];

        const Eigen::VectorXd ds = deriv(t, state);
        for (int i = 1; i <= N; ++i)
            tr.edot[static_cast<size_t>(i - 1)].col(g) =
                ds.head(n) - ds.segment(i * n, n);

        if (g < K) {
            const Eigen::VectorXd k1 = ds;
            const Eigen::VectorXd k2 = deriv(t + 0.5 * h, state + 0.5 * h * k1);
            const Eigen::VectorXd k3 = deriv(t + 0.5 * h, state + 0.5 * h * k2);
            const Eigen::VectorXd k4 = deriv(t + h, state + h * k3);
            state += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
    }
    return tr;
}

namespace {

double trapezoid(const std::vector<double>& f, double h) {
    double sum = 0.0;
    for (size_t g = 0; g + 1 < f.size(); ++g)
        sum += 0.5 * (f[g] + f[g + 1]);
    return sum * h;
}

}  // namespace

CostPair disagreement_cost(const Trajectory& traj, const ObserverGraph& graph) {
    const long K = traj.num_steps;
    const int N = graph.node_count();
    std::vector<double> direct(static_cast<size_t>(K + 1), 0.0);
    std::vector<double> quadratic(static_cast<size_t>(K + 1), 0.0);
    for (long g = 0; g <= K; ++g) {
        double s5 = 0.0, s6 = 0.0;
        for (int i = 1; i <= N; ++i) {
            const auto ei = traj.e[static_cast<size_t>(i - 1)].col(g);
            const auto& Vi = graph.neighbourhood(i);
            Eigen::VectorXd esum = Eigen::VectorXd::Zero(ei.size());
            for (int j : Vi) {
                s5 += (traj.xhat[static_cast<size_t>(j - 1)].col(g) -
                       traj.xhat[static_cast<size_t>(i - 1)].col(g))
                          .squaredNorm();
                esum += traj.e[static_cast<size_t>(j - 1)].col(g);
            }
            s6 += (graph.in_degree(i) + graph.out_degree(i)) * ei.squaredNorm() -
                  2.0 * ei.dot(esum);
        }
        direct[static_cast<size_t>(g)] = s5 / N;
        quadratic[static_cast<size_t>(g)] = s6 / N;
    }
    return CostPair{trapezoid(direct, traj.h), trapezoid(quadratic, traj.h)};
}

double disagreement_gain(const Trajectory& traj, const Eigen::VectorXd& x0,
                         const Eigen::MatrixXd& P, const Disturbance& dist) {
    (void)dist;
    const long K = traj.num_steps;
    const int N = static_cast<int>(traj.xhat.size());
    double xi_energy = 0.0;  // sum_i ||xi_i||_2^2 on [0, T]
    {
        std::vector<double> f(static_cast<size_t>(K + 1), 0.0);
        for (long g = 0; g <= K; ++g) {
            const double w2 = traj.w_samples.col(g).squaredNorm();
            double s = N * w2;
            for (int i = 0; i < N; ++i)
                s += traj.v_samples[static_cast<size_t>(i)].col(g).squaredNorm();
            f[static_cast<size_t>(g)] = s;
        }
        xi_energy = trapezoid(f, traj.h);
    }
    const double denom = x0.dot(P * x0) + xi_energy / N;
    if (!(denom > 1e-300))
        throw SimError("zero denominator: x0 = 0 and no disturbance energy");

    // direct-form J; the graph is recoverable from the stored edge list
    double Jnum = 0.0;
    {
        std::vector<double> f(static_cast<size_t>(K + 1), 0.0);
        for (long g = 0; g <= K; ++g) {
            double s = 0.0;
            for (auto [j, i] : traj.edge_list)
                s += (traj.xhat[static_cast<size_t>(j - 1)].col(g) -
                      traj.xhat[static_cast<size_t>(i - 1)].col(g))
                         .squaredNorm();
            f[static_cast<size_t>(g)] = s / N;
        }
        Jnum = trapezoid(f, traj.h);
    }
    return Jnum / denom;
}

double lk_functional(const Trajectory& traj, int i, long g, const Eigen::MatrixXd& Yhat,
                     const Eigen::MatrixXd& S, const Eigen::MatrixXd& R, double alpha,
                     double tau) {
    const auto& e = traj.e[static_cast<size_t>(i - 1)];
    const auto& edot = traj.edot[static_cast<size_t>(i - 1)];
    if (g < 0 || g > traj.num_steps)
        throw SimError("lk_functional: grid index outside trajectory");
    double V = e.col(g).dot(Yhat * e.col(g));
    if (tau <= 0.0 || S.size() == 0)
        return V;

    const long L = std::lround(tau / traj.h);
    const double h = traj.h;
    auto e_at = [&](long gg) -> Eigen::VectorXd {
        return gg >= 0 ? Eigen::VectorXd(e.col(gg)) : traj.x0;
    };
    auto edot_at = [&](long gg) -> Eigen::VectorXd {
        return gg >= 0 ? Eigen::VectorXd(edot.col(gg))
                       : Eigen::VectorXd(Eigen::VectorXd::Zero(e.rows()));
    };

    std::vector<double> f1(static_cast<size_t>(L + 1)), f2(static_cast<size_t>(L + 1));
    for (long a = 0; a <= L; ++a) {
        const long gg = g - L + a;                // s = t - tau + a*h
        const double ts = -static_cast<double>(L - a) * h;  // s - t
        const double wgt = std::exp(2.0 * alpha * ts);
        const Eigen::VectorXd es = e_at(gg);
        const Eigen::VectorXd ds = edot_at(gg);
        f1[static_cast<size_t>(a)] = wgt * es.dot(S * es);
        f2[static_cast<size_t>(a)] = wgt * (tau + ts) * ds.dot(R * ds);
    }
    return V + trapezoid(f1, h) + tau * trapezoid(f2, h);
}

DissipationResult dissipation_check(const Trajectory& traj, const Problem& pb,
                                    const SynthesisSolution& sol) {
    const int N = pb.N();
    const long K = traj.num_steps;
    const double h = traj.h;

    // storage functions on the whole grid
    std::vector<std::vector<double>> V(static_cast<size_t>(N),
                                       std::vector<double>(static_cast<size_t>(K + 1)));
    for (int i = 1; i <= N; ++i) {
        const auto& v = sol.vars[static_cast<size_t>(i - 1)];
        const double alpha = sol.options.alpha[static_cast<size_t>(i - 1)];
        const double tau = pb.schedule.node_delays[static_cast<size_t>(i - 1)];
        for (long g = 0; g <= K; ++g)
            V[static_cast<size_t>(i - 1)][static_cast<size_t>(g)] =
                lk_functional(traj, i, g, v.Yhat, v.S, v.R, alpha, tau);
    }

    // M matrix: M_ii = -2 alpha_i, M_ij = pi_j for j in V_i
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(N, N);
    for (int i = 1; i <= N; ++i) {
        M(i - 1, i - 1) = -2.0 * sol.options.alpha[static_cast<size_t>(i - 1)];
        for (int j : pb.graph.neighbourhood(i))
            M(i - 1, j - 1) = sol.options.pi[static_cast<size_t>(j - 1)];
    }

    std::vector<double> mv(static_cast<size_t>(K + 1));
    for (long g = 0; g <= K; ++g) {
        Eigen::VectorXd Vg(N);
        for (int i = 0; i < N; ++i)
            Vg(i) = V[static_cast<size_t>(i)][static_cast<size_t>(g)];
        mv[static_cast<size_t>(g)] = (M * Vg).sum();
    }
    const double int_MV = trapezoid(mv, h);

    std::vector<double> disagree(static_cast<size_t>(K + 1), 0.0);
    for (long g = 0; g <= K; ++g) {
        double s = 0.0;
        for (int i = 1; i <= N; ++i)
            for (int j : pb.graph.neighbourhood(i))
                s += (traj.e[static_cast<size_t>(i - 1)].col(g) -
                      traj.e[static_cast<size_t>(j - 1)].col(g))
                         .squaredNorm();
        disagree[static_cast<size_t>(g)] = s;
    }
    const double int_disagree = trapezoid(disagree, h);

    std::vector<double> xi(static_cast<size_t>(K + 1), 0.0);
    for (long g = 0; g <= K; ++g) {
        double s = N * traj.w_samples.col(g).squaredNorm();
        for (int i = 0; i < N; ++i)
            s += traj.v_samples[static_cast<size_t>(i)].col(g).squaredNorm();
        xi[static_cast<size_t>(g)] = s;
    }

    DissipationResult out;
    out.xi_energy = trapezoid(xi, h);
    double sumV0 = 0.0, sumVT = 0.0;
    for (int i = 0; i < N; ++i) {
        sumV0 += V[static_cast<size_t>(i)].front();
        sumVT += V[static_cast<size_t>(i)].back();
    }
    out.storage_initial = sumV0;
    out.storage_final = sumVT;
    out.residual = (sumVT - sumV0) - int_MV + int_disagree / sol.gains.gamma_sq -
                   out.xi_energy;
    out.pass = out.residual <= 1e-4 * std::max(out.xi_energy, 1e-12);
    return out;
}

std::vector<WirtingerEntry> wirtinger_check(const Trajectory& traj, const Problem& pb,
                                            const SynthesisSolution& sol) {
    std::vector<WirtingerEntry> out;
    const int m = traj.steps_per_period;
    const long num_periods = traj.num_steps / m;
    const double h = traj.h;

    for (int i = 1; i <= pb.N(); ++i) {
        const double tau_i = pb.schedule.node_delays[static_cast<size_t>(i - 1)];
        for (int j : pb.graph.neighbourhood(i)) {
            const auto& Wj = sol.vars[static_cast<size_t>(j - 1)].W;
            const auto& ej = traj.e[static_cast<size_t>(j - 1)];
            const auto& dej = traj.edot[static_cast<size_t>(j - 1)];
            double total = 0.0;
            // integrate per sampling interval: the held sample jumps at t_k
            for (long k = 0; k < num_periods; ++k) {
                const int nu = sample_slot(pb.graph, i, j, k);
                const long ks = k - nu + 1;
                const Eigen::VectorXd held =
                    ks >= 0 ? Eigen::VectorXd(ej.col(ks * m)) : traj.x0;
                std::vector<double> f(static_cast<size_t>(m + 1));
                for (int a = 0; a <= m; ++a) {
                    const long g = k * m + a;
                    const Eigen::VectorXd diff = ej.col(g) - held;
                    f[static_cast<size_t>(a)] =
                        tau_i * tau_i * dej.col(g).dot(Wj * dej.col(g)) -
                        kWirtingerCoeff * diff.dot(Wj * diff);
                }
                total += trapezoid(f, h);
            }
            out.push_back(WirtingerEntry{i, j, total});
        }
    }
    return out;
}

void export_trajectory_csv(const Trajectory& traj, std::ostream& os) {
    const int n = static_cast<int>(traj.x.rows());
    const int N = static_cast<int>(traj.xhat.size());
    os << "t";
    for (int c = 0; c < n; ++c)
        os << ",x" << c + 1;
    for (int i = 1; i <= N; ++i)
        for (int c = 0; c < n; ++c)
            os << ",xhat" << i << "_" << c + 1;
    for (int i = 1; i <= N; ++i)
        for (int c = 0; c < n; ++c)
            os << ",e" << i << "_" << c + 1;
    for (size_t eidx = 0; eidx < traj.edge_list.size(); ++eidx)
        for (int c = 0; c < n; ++c)
            os << ",buf" << traj.edge_list[eidx].first << "to"
               << traj.edge_list[eidx].second << "_" << c + 1;
    os << "\n";
    char buf[64];
    auto emit = [&](double v) {
        std::snprintf(buf, sizeof buf, ",%.17g", v);
        os << buf;
    };
    for (long g = 0; g <= traj.num_steps; ++g) {
        std::snprintf(buf, sizeof buf, "%.17g", traj.time_at(g));
        os << buf;
        for (int c = 0; c < n; ++c)
            emit(traj.x(c, g));
        for (int i = 0; i < N; ++i)
            for (int c = 0; c < n; ++c)
                emit(traj.xhat[static_cast<size_t>(i)](c, g));
        for (int i = 0; i < N; ++i)
            for (int c = 0; c < n; ++c)
                emit(traj.e[static_cast<size_t>(i)](c, g));
        for (const auto& bv : traj.buffer_values)
            for (int c = 0; c < n; ++c)
                emit(bv(c, g));
        os << "\n";
    }
}

void export_events_csv(const Trajectory& traj, std::ostream& os) {
    os << "k,t_k,node,polled\n";
    char buf[64];
    for (const auto& ev : traj.events) {
        std::snprintf(buf, sizeof buf, "%ld,%.17g,%d,%d", ev.k, ev.t, ev.node, ev.polled);
        os << buf << "\n";
    }
}

}  // namespace rrhinf
