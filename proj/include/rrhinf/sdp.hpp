#pragma once

#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace rrhinf {

struct SdpError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NonAffineExpression : SdpError {
    using SdpError::SdpError;
};
struct InfeasibleProgram : SdpError {
    using SdpError::SdpError;
};
struct NumericalFailure : SdpError {
    using SdpError::SdpError;
};

// Registry of named matrix decision variables backed by one scalar decision
// vector. Symmetric variables occupy their lower triangle only.
class VariableSpace {
public:
    int add_matrix(const std::string& name, int rows, int cols, bool symmetric);
    int add_scalar(const std::string& name) { return add_matrix(name, 1, 1, true); }

    int count() const { return static_cast<int>(vars_.size()); }
    int dim() const { return dim_; }
    const std::string& name(int id) const { return vars_[static_cast<size_t>(id)].name; }
    int slice_offset(int id) const { return vars_[static_cast<size_t>(id)].offset; }
    int slice_length(int id) const { return vars_[static_cast<size_t>(id)].length; }

    Eigen::MatrixXd value(int id, const Eigen::VectorXd& z) const;
    double scalar_value(int id, const Eigen::VectorXd& z) const { return value(id, z)(0, 0); }
    void set_value(int id, const Eigen::MatrixXd& M, Eigen::VectorXd& z) const;

private:
    struct Var {
        std::string name;
        int rows, cols;
        bool symmetric;
        int offset, length;
    };
    std::vector<Var> vars_;
    int dim_ = 0;
};

// Symmetric matrix-valued expression of the decision vector; affine by
// contract (checked during scalarization).
struct MatrixExpression {
    int dim = 0;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> eval;
};

// A(z) = F0 + sum_k z_k Fk over one PSD cone.
struct PsdBlock {
    int dim = 0;
    Eigen::MatrixXd F0;
    std::vector<std::pair<int, Eigen::MatrixXd>> coeffs;  // (scalar index, coefficient)

    Eigen::MatrixXd at(const Eigen::VectorXd& z) const;
};

struct SolverOptions {
    double rel_gap_tol = 1e-8;
    int max_iterations = 200;
    double barrier_mu = 10.0;
    bool verbose = false;
};

struct ConicProgram {
    int num_vars = 0;
    Eigen::VectorXd objective;  // maximize objective . z (may be zero: feasibility)
    std::vector<PsdBlock> blocks;
    SolverOptions options;
};

enum class SolveStatus { optimal, infeasible, numerical_failure };

std::string to_string(SolveStatus s);

struct SolveReport {
    SolveStatus status = SolveStatus::numerical_failure;
    Eigen::VectorXd z;          // decision vector at termination
    double objective = 0.0;     // achieved objective value
    double gap = 0.0;           // barrier duality-gap bound at termination
    std::vector<double> block_min_eig;  // lambda_min of each PSD block at z
    int iterations = 0;
    double wall_ms = 0.0;
};

// Build the scalarized program: expressions are sampled at unit vectors and
// the extracted affine map is verified against a random point to 1e-14.
ConicProgram scalarize(const VariableSpace& vars,
                       const std::vector<MatrixExpression>& constraints,
                       const Eigen::VectorXd& objective,
                       const SolverOptions& options = {});

// Interior-point (log-det barrier path following) solve of
//   maximize objective . z   s.t.  every block PSD.
SolveReport solve(const ConicProgram& program);

// Sparse-triplet text dump (block id, row, col, var index, coefficient;
// var index -1 for the constant term) for cross-checking in external tools.
void dump_sparse_triplets(const ConicProgram& program, std::ostream& os);

}  // namespace rrhinf
