#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>

#include <Eigen/Dense>

#include "rrhinf/sdp.hpp"

using namespace rrhinf;

TEST_CASE("variable space packs symmetric matrices by lower triangle") {
    VariableSpace vs;
    const int a = vs.add_matrix("A", 2, 2, true);
    const int b = vs.add_matrix("B", 2, 3, false);
    const int c = vs.add_scalar("c");
    CHECK(vs.count() == 3);
    CHECK(vs.dim() == 3 + 6 + 1);
    CHECK(vs.slice_length(a) == 3);
    CHECK(vs.slice_length(b) == 6);
    CHECK(vs.slice_length(c) == 1);
    CHECK(vs.name(b) == "B");

    Eigen::VectorXd z = Eigen::VectorXd::Zero(vs.dim());
    Eigen::MatrixXd As(2, 2);
    As << 1, 2, 2, 5;
    vs.set_value(a, As, z);
    Eigen::MatrixXd Bv(2, 3);
    Bv << 1, 2, 3, 4, 5, 6;
    vs.set_value(b, Bv, z);
    vs.set_value(c, Eigen::MatrixXd::Constant(1, 1, -7.0), z);
    CHECK((vs.value(a, z) - As).norm() == 0.0);
    CHECK((vs.value(b, z) - Bv).norm() == 0.0);
    CHECK(vs.scalar_value(c, z) == -7.0);
    // symmetric read-back is symmetric by construction
    CHECK((vs.value(a, z) - vs.value(a, z).transpose()).norm() == 0.0);
}

TEST_CASE("scalarization extracts affine coefficients and rejects nonlinearity") {
    VariableSpace vs;
    const int y = vs.add_matrix("Y", 2, 2, true);
    const int t = vs.add_scalar("t");

    MatrixExpression affine;
    affine.dim = 2;
    affine.eval = [&, y, t](const Eigen::VectorXd& z) {
        return Eigen::MatrixXd(vs.value(y, z) * 2.0 +
                               vs.scalar_value(t, z) * Eigen::MatrixXd::Identity(2, 2) +
                               Eigen::MatrixXd::Ones(2, 2));
    };
    Eigen::VectorXd obj = Eigen::VectorXd::Zero(vs.dim());
    const ConicProgram prog = scalarize(vs, {affine}, obj);
    REQUIRE(prog.blocks.size() == 1);
    CHECK((prog.blocks[0].F0 - Eigen::MatrixXd::Ones(2, 2)).norm() == 0.0);
    // evaluating the scalarized block reproduces the expression
    Eigen::VectorXd z = Eigen::VectorXd::Random(vs.dim());
    CHECK((prog.blocks[0].at(z) - affine.eval(z)).norm() < 1e-12);

    MatrixExpression quad;
    quad.dim = 1;
    quad.eval = [&, t](const Eigen::VectorXd& z) {
        const double v = vs.scalar_value(t, z);
        return Eigen::MatrixXd::Constant(1, 1, v * v);
    };
    CHECK_THROWS_AS(scalarize(vs, {quad}, obj), NonAffineExpression);
}

TEST_CASE("maximize a bounded scalar") {
    VariableSpace vs;
    const int t = vs.add_scalar("t");
    MatrixExpression upper{1, [&, t](const Eigen::VectorXd& z) {
                               return Eigen::MatrixXd::Constant(
                                   1, 1, 1.0 - vs.scalar_value(t, z));
                           }};
    MatrixExpression lower{1, [&, t](const Eigen::VectorXd& z) {
                               return Eigen::MatrixXd::Constant(1, 1,
                                                                vs.scalar_value(t, z));
                           }};
    Eigen::VectorXd obj = Eigen::VectorXd::Zero(vs.dim());
    obj(vs.slice_offset(t)) = 1.0;
    const SolveReport rep = solve(scalarize(vs, {upper, lower}, obj));
    CHECK(rep.status == SolveStatus::optimal);
    CHECK(rep.objective == doctest::Approx(1.0).epsilon(1e-5));
    for (double e : rep.block_min_eig)
        CHECK(e >= -1e-9);
}

TEST_CASE("largest off-diagonal entry of a PSD matrix with unit diagonal") {
    VariableSpace vs;
    const int t = vs.add_scalar("t");
    MatrixExpression corr{2, [&, t](const Eigen::VectorXd& z) {
                              Eigen::MatrixXd M(2, 2);
                              const double v = vs.scalar_value(t, z);
                              M << 1.0, v, v, 1.0;
                              return M;
                          }};
    Eigen::VectorXd obj = Eigen::VectorXd::Zero(vs.dim());
    obj(vs.slice_offset(t)) = 1.0;
    const SolveReport rep = solve(scalarize(vs, {corr}, obj));
    CHECK(rep.status == SolveStatus::optimal);
    CHECK(rep.objective == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("small trace-constrained matrix program") {
    // maximize <I, Y> s.t. Y psd, 2I - Y psd  ->  optimum trace = 4 at Y = 2I
    VariableSpace vs;
    const int y = vs.add_matrix("Y", 2, 2, true);
    MatrixExpression psd{2, [&, y](const Eigen::VectorXd& z) { return vs.value(y, z); }};
    MatrixExpression cap{2, [&, y](const Eigen::VectorXd& z) {
                             return Eigen::MatrixXd(
                                 2.0 * Eigen::MatrixXd::Identity(2, 2) - vs.value(y, z));
                         }};
    Eigen::VectorXd obj = Eigen::VectorXd::Zero(vs.dim());
    // trace = sum of the two diagonal packed entries
    Eigen::VectorXd probe = Eigen::VectorXd::Zero(vs.dim());
    vs.set_value(y, Eigen::MatrixXd::Identity(2, 2), probe);
    obj = probe;  // <I, Y> in packed coordinates
    const SolveReport rep = solve(scalarize(vs, {psd, cap}, obj));
    CHECK(rep.status == SolveStatus::optimal);
    CHECK((vs.value(y, rep.z) - 2.0 * Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-3);
}

TEST_CASE("infeasible program is reported as such") {
    VariableSpace vs;
    const int t = vs.add_scalar("t");
    MatrixExpression pos{1, [&, t](const Eigen::VectorXd& z) {
                             return Eigen::MatrixXd::Constant(1, 1,
                                                              vs.scalar_value(t, z));
                         }};
    MatrixExpression neg{1, [&, t](const Eigen::VectorXd& z) {
                             return Eigen::MatrixXd::Constant(
                                 1, 1, -1.0 - vs.scalar_value(t, z));
                         }};
    Eigen::VectorXd obj = Eigen::VectorXd::Zero(vs.dim());
    const SolveReport rep = solve(scalarize(vs, {pos, neg}, obj));
    CHECK(rep.status == SolveStatus::infeasible);
}

TEST_CASE("pure feasibility with zero objective") {
    VariableSpace vs;
    const int y = vs.add_matrix("Y", 3, 3, true);
    MatrixExpression lo{3, [&, y](const Eigen::VectorXd& z) {
                            return Eigen::MatrixXd(vs.value(y, z) -
                                                   Eigen::MatrixXd::Identity(3, 3));
                        }};
    MatrixExpression hi{3, [&, y](const Eigen::VectorXd& z) {
                            return Eigen::MatrixXd(5.0 * Eigen::MatrixXd::Identity(3, 3) -
                                                   vs.value(y, z));
                        }};
    const SolveReport rep = solve(scalarize(vs, {lo, hi}, Eigen::VectorXd::Zero(vs.dim())));
    CHECK(rep.status == SolveStatus::optimal);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(vs.value(y, rep.z));
    CHECK(es.eigenvalues().minCoeff() >= 1.0 - 1e-6);
    CHECK(es.eigenvalues().maxCoeff() <= 5.0 + 1e-6);
}

TEST_CASE("triplet dump lists every nonzero coefficient") {
    VariableSpace vs;
    const int t = vs.add_scalar("t");
    MatrixExpression expr{1, [&, t](const Eigen::VectorXd& z) {
                              return Eigen::MatrixXd::Constant(
                                  1, 1, 2.0 - 3.0 * vs.scalar_value(t, z));
                          }};
    const ConicProgram prog = scalarize(vs, {expr}, Eigen::VectorXd::Zero(vs.dim()));
    std::ostringstream os;
    dump_sparse_triplets(prog, os);
    const std::string s = os.str();
    CHECK(s.find("-3") != std::string::npos);
    CHECK(s.find("2") != std::string::npos);
}
