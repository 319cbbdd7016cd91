#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rrhinf/model.hpp"
#include "rrhinf/synthesis.hpp"

namespace rrhinf {

struct SimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Scalar disturbance channel with finite L2 norm, evaluable at any t >= 0.
struct DisturbanceSignal {
    enum class Kind { zero, pulse, decaying_sine, random_piecewise };
    Kind kind = Kind::zero;
    double amplitude = 0.0;
    double t_on = 0.0, t_off = 0.0;  // pulse support [t_on, t_off)
    double omega = 0.0, decay = 0.0;
    double piece = 0.0;  // piecewise-constant segment length
    unsigned seed = 0;

    double operator()(double t) const;

    static DisturbanceSignal zero();
    static DisturbanceSignal pulse(double amplitude, double t_on, double t_off);
    static DisturbanceSignal decaying_sine(double amplitude, double omega, double decay);
    static DisturbanceSignal random_piecewise(unsigned seed, double amplitude, double decay,
                                              double piece);
};

// Full disturbance vector: plant channels w plus per-node measurement
// channels v_i; xi_i = [w; v_i].
struct Disturbance {
    std::vector<DisturbanceSignal> w;
    std::vector<std::vector<DisturbanceSignal>> v;

    Eigen::VectorXd w_at(double t) const;
    Eigen::VectorXd v_at(int i, double t) const;  // i is 1-based

    static Disturbance none(const Problem& pb);
};

struct BufferEvent {
    long k = 0;
    double t = 0.0;
    int node = 0;    // polling node i
    int polled = 0;  // neighbour j taken at t_k
};

struct Trajectory {
    double h = 0.0, delta = 0.0;
    int steps_per_period = 0;
    long num_steps = 0;  // grid has num_steps + 1 points
    Eigen::VectorXd x0;

    std::vector<double> times;
    Eigen::MatrixXd x;                   // n x (num_steps+1)
    std::vector<Eigen::MatrixXd> xhat;   // per node
    std::vector<Eigen::MatrixXd> e;      // e_i = x - xhat_i
    std::vector<Eigen::MatrixXd> edot;   // right-hand-side values, not differences

    std::vector<std::pair<int, int>> edge_list;          // (j, i), 1-based
    std::vector<Eigen::MatrixXd> buffer_values;          // per edge, held difference
    std::vector<std::vector<double>> buffer_sample_times;  // per edge, per period index
    std::vector<BufferEvent> events;

    Eigen::MatrixXd w_samples;
    std::vector<Eigen::MatrixXd> v_samples;

    double time_at(long g) const { return times[static_cast<size_t>(g)]; }
    long grid_index_of_period(long k) const { return k * steps_per_period; }
};

// Hybrid run: continuous plant/observer dynamics integrated with classical
// fixed-step RK4, Round-Robin buffer overwrites exactly at t_k = k*delta.
Trajectory simulate(const Problem& pb, const GainSet& gains, const Disturbance& dist,
                    const Eigen::VectorXd& x0, double T, double h);

struct CostPair {
    double direct = 0.0;     // estimate-difference form
    double quadratic = 0.0;  // (p_i+q_i)||e_i||^2 - 2 e_i' sum e_j form
};

CostPair disagreement_cost(const Trajectory& traj, const ObserverGraph& graph);

double disagreement_gain(const Trajectory& traj, const Eigen::VectorXd& x0,
                         const Eigen::MatrixXd& P, const Disturbance& dist);

// Lyapunov-Krasovskii storage of node i at grid index g, with the
// prehistory e_i(s) = x0, de_i(s) = 0 for s <= 0.
double lk_functional(const Trajectory& traj, int i, long g, const Eigen::MatrixXd& Yhat,
                     const Eigen::MatrixXd& S, const Eigen::MatrixXd& R, double alpha,
                     double tau);

struct DissipationResult {
    double residual = 0.0;    // negative = inequality satisfied
    double xi_energy = 0.0;   // sum_i int ||xi_i||^2
    double storage_initial = 0.0;
    double storage_final = 0.0;
    bool pass = false;        // residual <= 1e-4 * max(xi_energy, 1e-12)
};

DissipationResult dissipation_check(const Trajectory& traj, const Problem& pb,
                                    const SynthesisSolution& sol);

struct WirtingerEntry {
    int node = 0, neighbour = 0;  // (i, j in V_i)
    double total = 0.0;           // integral, expected >= 0 up to quadrature
};

std::vector<WirtingerEntry> wirtinger_check(const Trajectory& traj, const Problem& pb,
                                            const SynthesisSolution& sol);

void export_trajectory_csv(const Trajectory& traj, std::ostream& os);
void export_events_csv(const Trajectory& traj, std::ostream& os);

}  // namespace rrhinf
