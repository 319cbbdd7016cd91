#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "rrhinf/graph.hpp"

namespace rrhinf {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DimensionMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// dx/dt = A x + B2 w
struct PlantModel {
    Eigen::MatrixXd A;
    Eigen::MatrixXd B2;

    int n() const { return static_cast<int>(A.rows()); }
    int m_w() const { return static_cast<int>(B2.cols()); }
};

// y_i = C_i x + D2_i w + D2bar_i v_i, consensus output map H_i.
struct SensorModel {
    Eigen::MatrixXd C;
    Eigen::MatrixXd D2;
    Eigen::MatrixXd D2bar;
    Eigen::MatrixXd H;

    int m_y() const { return static_cast<int>(C.rows()); }
    int m_v() const { return static_cast<int>(D2bar.cols()); }
    int m_xi() const { return static_cast<int>(D2.cols()) + m_v(); }
    int r() const { return static_cast<int>(H.rows()); }

    // B = [B2 0], D_i = [D2_i D2bar_i]
    Eigen::MatrixXd stacked_B(const PlantModel& plant) const;
    Eigen::MatrixXd stacked_D() const;
};

struct SynthesisOptions {
    std::vector<double> alpha;   // alpha_i > 0
    std::vector<double> pi;      // 0 <= pi_i < 2 alpha_i / q_i when q_i > 0
    std::vector<double> eps;     // eps_i > 0
    std::vector<double> epsbar;  // epsbar_i >= 0
    double delta_lmi = 0.0;      // strictness margin; 0 -> scaled default
    double gamma_fixed = 0.0;    // 0 -> minimize gamma^2, else feasibility at this gamma
    // Restrict the square multiplier variables X_i, G_i, F_i to symmetric
    // form. The unrestricted program is scale-degenerate (the certificate P
    // blows up along a near-feasible ray) and yields looser-looking gamma^2
    // than the reference results; the symmetric restriction regularizes the
    // program and reproduces them. Soundness is unaffected either way.
    bool symmetric_multipliers = true;

    bool minimize_gamma() const { return gamma_fixed == 0.0; }
    void validate(const ObserverGraph& g) const;
};

struct GainSet {
    std::vector<Eigen::MatrixXd> K;  // n x r_i
    std::vector<Eigen::MatrixXd> L;  // n x m_{y,i}
    Eigen::MatrixXd P;               // certificate weight, symmetric > 0
    double gamma_sq = 0.0;
};

struct Problem {
    PlantModel plant;
    std::vector<SensorModel> sensors;
    ObserverGraph graph;
    RoundRobinSchedule schedule;
    SynthesisOptions options;

    int n() const { return plant.n(); }
    int N() const { return graph.node_count(); }

    // default strictness margin scaled by the problem data
    double lmi_margin() const;
};

Problem load_problem(const nlohmann::json& cfg);
Problem load_problem_file(const std::string& path);
nlohmann::json serialize(const Problem& pb);

struct DetectabilityEntry {
    bool detectable = false;
    bool observable = false;
};

// PBH rank test at the eigenvalues of A (unstable ones for detectability).
std::vector<DetectabilityEntry> detectability_report(const PlantModel& plant,
                                                     const std::vector<SensorModel>& sensors);

// json <-> Eigen helpers shared by the config and gains formats
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const std::string& what);
nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);

}  // namespace rrhinf
