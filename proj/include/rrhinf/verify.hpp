#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rrhinf/sim.hpp"
#include "rrhinf/synthesis.hpp"

namespace rrhinf {

// One certification run: a disturbance pattern and/or an initial condition.
struct BatteryEntry {
    std::string label;
    Disturbance dist;
    Eigen::VectorXd x0;
};

// Fixed-seed battery: pulses at varying times (including near sampling
// instants), decaying sines at three frequencies, seeded random piecewise
// signals with decay. Signal timing is aligned to the fine grid, so pass the
// same steps_per_period value used for the simulation runs.
std::vector<BatteryEntry> make_battery(const Problem& pb, int steps_per_period);

// Nonzero initial conditions paired with zero disturbance.
std::vector<BatteryEntry> make_x0_entries(const Problem& pb);

struct RunCheck {
    std::string label;
    double gain_ratio = 0.0;
    bool gain_pass = false;
    double dissipation_residual = 0.0;
    double xi_energy = 0.0;
    bool dissipation_pass = false;
    double wirtinger_min = 0.0;  // worst per-edge total
    bool wirtinger_pass = false;
    double wall_ms = 0.0;
};

struct CertificationReport {
    double gamma_sq = 0.0;
    AnalysisReport analysis;
    std::vector<RunCheck> runs;
    double max_gain_ratio = 0.0;
    double decay_metric = 0.0;  // max_i ||e_i(T)|| / ||x0||
    bool decay_pass = false;
    double horizon = 0.0;
    double step = 0.0;
    bool all_pass = false;
};

// Runs the full battery plus the zero-disturbance decay run. Deterministic
// given the battery seeds; entries execute in parallel under thread_cap().
CertificationReport certify(const Problem& pb, const SynthesisSolution& sol,
                            double horizon = 50.0, int steps_per_period = 50);

// Human-readable table (4 significant digits).
void print_report(const CertificationReport& rep, std::ostream& os);

// Machine-readable form (17 significant digits via JSON doubles).
std::string report_to_json(const CertificationReport& rep);

}  // namespace rrhinf
