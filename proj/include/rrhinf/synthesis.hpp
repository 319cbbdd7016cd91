#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "rrhinf/lmi.hpp"
#include "rrhinf/model.hpp"
#include "rrhinf/sdp.hpp"

namespace rrhinf {

struct SingularMultiplier : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raw per-node decision variable values at the solver optimum.
struct NodeVariables {
    Eigen::MatrixXd Yhat, S, R, W, G, X, F, U;  // S, R, G, F empty when p_i = 0
};

struct SynthesisSolution {
    GainSet gains;
    SolveReport report;
    std::vector<NodeVariables> vars;
    double theta = 0.0;  // 1/gamma^2
    double delta_lmi = 0.0;
    SynthesisOptions options;
    double delta = 0.0;  // sampling period used
};

// Variable layout + constraint set of the joint synthesis program. Exposed so the
// solver path can be cross-checked constraint by constraint.
struct SynthesisProgram {
    VariableSpace space;
    std::vector<MatrixExpression> constraints;
    Eigen::VectorXd objective;
    std::vector<int> var_Yhat, var_S, var_R, var_W, var_G, var_X, var_F, var_U;  // -1 if absent
    int var_theta = -1;
    double delta_lmi = 0.0;
};

SynthesisProgram build_synthesis_program(const Problem& pb);

// End-to-end synthesis pipeline: assemble, solve, recover K_i, L_i and the
// certificate weight P. Throws InfeasibleProgram / NumericalFailure /
// SingularMultiplier on the corresponding solver outcomes.
SynthesisSolution synthesize(const Problem& pb);

struct AnalysisReport {
    std::vector<double> lambda_max;    // per node, analysis matrix Xi_i
    std::vector<double> park_min_eig;  // per node with p_i > 0, else +inf placeholder
    bool pass = false;
};

// Rebuild the analysis matrices at Z = eps X, Q = epsbar X with the
// recovered gains and report their spectra.
AnalysisReport verify_analysis(const Problem& pb, const SynthesisSolution& sol);

struct SweepRow {
    double delta = 0.0;
    double eps = 0.0;
    std::string status;
    double gamma_sq = 0.0;
    double wall_ms = 0.0;
};

// One synthesize call per (delta, eps) grid point; failures are recorded
// per point, the sweep itself never throws on solver outcomes.
std::vector<SweepRow> sweep_delta(const Problem& pb, const std::vector<double>& deltas,
                                  const std::vector<double>& epss);

void save_gains(const std::string& path, const Problem& pb, const SynthesisSolution& sol);
SynthesisSolution load_gains(const std::string& path, const Problem& pb);

// RRHINF_THREADS (default: hardware concurrency) caps worker parallelism.
unsigned thread_cap();

}  // namespace rrhinf
