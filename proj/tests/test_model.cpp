#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <nlohmann/json.hpp>

#include "rrhinf/model.hpp"

using namespace rrhinf;
using nlohmann::json;

namespace {

const char* kConfigPath = RRHINF_SOURCE_DIR "/configs/chua.json";

}  // namespace

TEST_CASE("example config loads with expected dimensions and defaults") {
    const Problem pb = load_problem_file(kConfigPath);
    CHECK(pb.n() == 3);
    CHECK(pb.N() == 3);
    CHECK(pb.plant.m_w() == 1);
    CHECK(pb.plant.A(2, 1) == doctest::Approx(-14.87));
    CHECK(pb.plant.B2.rows() == 3);
    REQUIRE(pb.sensors.size() == 3);
    for (const auto& s : pb.sensors) {
        CHECK(s.m_y() == 1);
        CHECK(s.m_v() == 1);
        CHECK(s.m_xi() == 2);
        CHECK(s.D2bar(0, 0) == doctest::Approx(0.025));
        CHECK((s.H - Eigen::MatrixXd::Identity(3, 3)).norm() == 0.0);  // default H
        CHECK(s.D2.isZero());
    }
    CHECK(pb.schedule.period == doctest::Approx(0.1));
    // pi defaults to 2*alpha/(1+q), all out-degrees are 1 here
    for (double pi : pb.options.pi)
        CHECK(pi == doctest::Approx(0.1));
    for (double a : pb.options.alpha)
        CHECK(a == doctest::Approx(0.1));
    for (double e : pb.options.epsbar)
        CHECK(e == 0.0);
    CHECK(pb.options.minimize_gamma());
    CHECK(pb.options.symmetric_multipliers);  // regularized program by default
}

TEST_CASE("stacked input and feedthrough matrices") {
    const Problem pb = load_problem_file(kConfigPath);
    const auto& s = pb.sensors[0];
    const Eigen::MatrixXd B = s.stacked_B(pb.plant);
    REQUIRE(B.rows() == 3);
    REQUIRE(B.cols() == 2);
    CHECK((B.col(0) - pb.plant.B2.col(0)).norm() == 0.0);
    CHECK(B.col(1).isZero());
    const Eigen::MatrixXd D = s.stacked_D();
    REQUIRE(D.rows() == 1);
    REQUIRE(D.cols() == 2);
    CHECK(D(0, 0) == 0.0);
    CHECK(D(0, 1) == doctest::Approx(0.025));
}

TEST_CASE("serialize round-trips through load_problem") {
    Problem pb = load_problem_file(kConfigPath);
    pb.options.symmetric_multipliers = false;  // non-default must survive
    const Problem pb2 = load_problem(serialize(pb));
    CHECK_FALSE(pb2.options.symmetric_multipliers);
    pb.options.symmetric_multipliers = true;
    CHECK((pb.plant.A - pb2.plant.A).norm() == 0.0);
    CHECK((pb.plant.B2 - pb2.plant.B2).norm() == 0.0);
    CHECK(pb2.graph.edges() == pb.graph.edges());
    CHECK(pb2.schedule.period == pb.schedule.period);
    for (size_t i = 0; i < pb.sensors.size(); ++i)
        CHECK((pb.sensors[i].C - pb2.sensors[i].C).norm() == 0.0);
    CHECK(pb2.options.pi == pb.options.pi);
}

TEST_CASE("config validation errors") {
    json cfg;
    CHECK_THROWS_AS(load_problem(cfg), ConfigError);
    CHECK_THROWS_AS(load_problem_file("/nonexistent/nowhere.json"), ConfigError);

    cfg["plant"]["A"] = {{1.0, 0.0}, {0.0, 1.0}};
    cfg["plant"]["B2"] = {{1.0}, {0.0}};
    cfg["graph"]["nodes"] = 2;
    cfg["graph"]["edges"] = {{1, 2}, {2, 1}};
    cfg["schedule"]["delta"] = 0.1;
    cfg["sensors"] = json::array({json{{"C", {1.0, 0.0}}}, json{{"C", {0.0, 1.0}}}});
    CHECK_NOTHROW(load_problem(cfg));

    json bad = cfg;
    bad["sensors"][0]["C"] = {1.0, 0.0, 0.0};  // wrong width
    CHECK_THROWS_AS(load_problem(bad), DimensionMismatch);

    bad = cfg;
    bad["plant"]["A"] = json::array({json::array({1.0, 2.0}), json::array({3.0})});
    CHECK_THROWS_AS(load_problem(bad), ConfigError);  // ragged rows

    bad = cfg;
    bad["synthesis"]["alpha"] = -1.0;
    CHECK_THROWS_AS(load_problem(bad), ConfigError);

    bad = cfg;
    bad["synthesis"]["pi"] = {10.0, 10.0};  // violates pi < 2 alpha / q
    CHECK_THROWS_AS(load_problem(bad), ConfigError);
}

TEST_CASE("PBH detectability report on the example sensors") {
    const Problem pb = load_problem_file(kConfigPath);
    const auto rep = detectability_report(pb.plant, pb.sensors);
    REQUIRE(rep.size() == 3);
    // sensor 1 blinds the unstable complex pair: neither observable nor detectable
    CHECK_FALSE(rep[0].observable);
    CHECK_FALSE(rep[0].detectable);
    // sensor 2 blinds only the stable real mode: unobservable yet detectable
    CHECK_FALSE(rep[1].observable);
    CHECK(rep[1].detectable);
    CHECK(rep[2].detectable);
    CHECK(rep[2].observable);
}

TEST_CASE("PBH report on a trivially observable pair") {
    PlantModel plant;
    plant.A = Eigen::MatrixXd::Zero(2, 2);
    plant.A(0, 1) = 1.0;
    plant.B2 = Eigen::MatrixXd::Ones(2, 1);
    SensorModel s;
    s.C = Eigen::MatrixXd::Identity(2, 2);
    s.D2 = Eigen::MatrixXd::Zero(2, 1);
    s.D2bar = Eigen::MatrixXd::Identity(2, 2);
    s.H = Eigen::MatrixXd::Identity(2, 2);
    const auto rep = detectability_report(plant, {s});
    CHECK(rep[0].observable);
    CHECK(rep[0].detectable);
}
