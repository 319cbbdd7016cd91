#include "rrhinf/model.hpp"

#include <cmath>
#include <fstream>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

namespace rrhinf {

using nlohmann::json;

Eigen::MatrixXd SensorModel::stacked_B(const PlantModel& plant) const {
    Eigen::MatrixXd B(plant.n(), plant.m_w() + m_v());
    B << plant.B2, Eigen::MatrixXd::Zero(plant.n(), m_v());
    return B;
}

Eigen::MatrixXd SensorModel::stacked_D() const {
    Eigen::MatrixXd D(m_y(), static_cast<int>(D2.cols()) + m_v());
    D << D2, D2bar;
    return D;
}

void SynthesisOptions::validate(const ObserverGraph& g) const {
    const size_t N = static_cast<size_t>(g.node_count());
    if (alpha.size() != N || pi.size() != N || eps.size() != N || epsbar.size() != N)
        throw ConfigError("per-node option lists must have one entry per node");
    for (size_t i = 0; i < N; ++i) {
        if (!(alpha[i] > 0.0))
            throw ConfigError("alpha must be positive");
        if (!(eps[i] > 0.0))
            throw ConfigError("eps must be positive");
        if (epsbar[i] < 0.0)
            throw ConfigError("epsbar must be nonnegative");
        const int q = g.out_degree(static_cast<int>(i) + 1);
        if (pi[i] < 0.0 || (q > 0 && !(pi[i] < 2.0 * alpha[i] / q)))
            throw ConfigError("pi_i must satisfy 0 <= pi_i < 2*alpha_i/q_i");
    }
    if (delta_lmi < 0.0)
        throw ConfigError("delta_lmi must be nonnegative");
    if (gamma_fixed < 0.0)
        throw ConfigError("gamma must be positive when fixed");
}

double Problem::lmi_margin() const {
    if (options.delta_lmi > 0.0)
        return options.delta_lmi;
    return 1e-7 * std::max(1.0, plant.A.norm());
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& what) {
    if (j.is_number()) {
        Eigen::MatrixXd m(1, 1);
        m(0, 0) = j.get<double>();
        return m;
    }
    if (!j.is_array() || j.empty())
        throw ConfigError(what + ": expected a number or a nested array");
    // allow a flat array as a single row
    if (j[0].is_number()) {
        Eigen::MatrixXd m(1, static_cast<int>(j.size()));
        for (int c = 0; c < m.cols(); ++c)
            m(0, c) = j[static_cast<size_t>(c)].get<double>();
        return m;
    }
    const int rows = static_cast<int>(j.size());
    const int cols = static_cast<int>(j[0].size());
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<size_t>(r)];
        if (!row.is_array() || static_cast<int>(row.size()) != cols)
            throw ConfigError(what + ": ragged matrix rows");
        for (int c = 0; c < cols; ++c)
            m(r, c) = row[static_cast<size_t>(c)].get<double>();
    }
    return m;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols(); ++c)
            row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

namespace {

std::vector<double> per_node(const json& j, const std::string& key, int N,
                             double fallback, bool required = false) {
    if (!j.contains(key)) {
        if (required)
            throw ConfigError("synthesis." + key + " is required");
        return std::vector<double>(static_cast<size_t>(N), fallback);
    }
    const auto& v = j.at(key);
    if (v.is_number())
        return std::vector<double>(static_cast<size_t>(N), v.get<double>());
    if (v.is_array() && static_cast<int>(v.size()) == N)
        return v.get<std::vector<double>>();
    throw ConfigError("synthesis." + key + ": expected scalar or array of length N");
}

}  // namespace

Problem load_problem(const json& cfg) {
    if (!cfg.contains("plant") || !cfg.contains("sensors") || !cfg.contains("graph") ||
        !cfg.contains("schedule"))
        throw ConfigError("config must contain plant, sensors, graph and schedule sections");

    PlantModel plant;
    plant.A = matrix_from_json(cfg.at("plant").at("A"), "plant.A");
    plant.B2 = matrix_from_json(cfg.at("plant").at("B2"), "plant.B2");
    const int n = plant.n();
    if (plant.A.cols() != n)
        throw DimensionMismatch("plant.A must be square");
    if (plant.B2.rows() == 1 && n > 1 && plant.B2.cols() == n)
        plant.B2.transposeInPlace();  // accept a flat row for a column vector
    if (plant.B2.rows() != n)
        throw DimensionMismatch("plant.B2 must have n rows");

    const auto& gj = cfg.at("graph");
    std::vector<std::pair<int, int>> edges;
    for (const auto& e : gj.at("edges"))
        edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    ObserverGraph graph(gj.at("nodes").get<int>(), edges);
    const int N = graph.node_count();

    std::vector<SensorModel> sensors;
    if (static_cast<int>(cfg.at("sensors").size()) != N)
        throw DimensionMismatch("need one sensor entry per node");
    for (const auto& sj : cfg.at("sensors")) {
        SensorModel s;
        s.C = matrix_from_json(sj.at("C"), "sensors.C");
        if (s.C.cols() != n)
            throw DimensionMismatch("sensor C must have n columns");
        s.D2 = sj.contains("D2") ? matrix_from_json(sj.at("D2"), "sensors.D2")
                                 : Eigen::MatrixXd::Zero(s.m_y(), plant.m_w());
        if (s.D2.rows() == 1 && s.D2.cols() == 1 && (s.m_y() != 1 || plant.m_w() != 1))
            s.D2 = Eigen::MatrixXd::Constant(s.m_y(), plant.m_w(), s.D2(0, 0));
        if (s.D2.rows() != s.m_y() || s.D2.cols() != plant.m_w())
            throw DimensionMismatch("sensor D2 must be m_y x m_w");
        s.D2bar = sj.contains("D2bar") ? matrix_from_json(sj.at("D2bar"), "sensors.D2bar")
                                       : Eigen::MatrixXd::Zero(s.m_y(), 1);
        if (s.D2bar.rows() != s.m_y())
            throw DimensionMismatch("sensor D2bar must have m_y rows");
        s.H = sj.contains("H") ? matrix_from_json(sj.at("H"), "sensors.H")
                               : Eigen::MatrixXd::Identity(n, n);
        if (s.H.cols() != n)
            throw DimensionMismatch("sensor H must have n columns");
        sensors.push_back(std::move(s));
    }

    const auto& sched = cfg.at("schedule");
    RoundRobinSchedule schedule = make_schedule(graph, sched.at("delta").get<double>());

    SynthesisOptions opts;
    const json synth = cfg.contains("synthesis") ? cfg.at("synthesis") : json::object();
    opts.alpha = per_node(synth, "alpha", N, 0.1);
    opts.eps = per_node(synth, "eps", N, 0.1);
    opts.epsbar = per_node(synth, "epsbar", N, 0.0);
    if (synth.contains("pi")) {
        opts.pi = per_node(synth, "pi", N, 0.0);
    } else {
        opts.pi.resize(static_cast<size_t>(N));
        for (int i = 0; i < N; ++i)
            opts.pi[static_cast<size_t>(i)] =
                2.0 * opts.alpha[static_cast<size_t>(i)] / (1.0 + graph.out_degree(i + 1));
    }
    opts.delta_lmi = synth.value("delta_lmi", 0.0);
    opts.gamma_fixed = synth.value("gamma", 0.0);
    opts.symmetric_multipliers = synth.value("symmetric_multipliers", true);
    opts.validate(graph);

    return Problem{std::move(plant), std::move(sensors), std::move(graph),
                   std::move(schedule), std::move(opts)};
}

Problem load_problem_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file: " + path);
    json cfg;
    try {
        in >> cfg;
    } catch (const json::parse_error& e) {
        throw ConfigError("config parse error: " + std::string(e.what()));
    }
    return load_problem(cfg);
}

json serialize(const Problem& pb) {
    json cfg;
    cfg["plant"]["A"] = matrix_to_json(pb.plant.A);
    cfg["plant"]["B2"] = matrix_to_json(pb.plant.B2);
    cfg["sensors"] = json::array();
    for (const auto& s : pb.sensors) {
        json sj;
        sj["C"] = matrix_to_json(s.C);
        sj["D2"] = matrix_to_json(s.D2);
        sj["D2bar"] = matrix_to_json(s.D2bar);
        sj["H"] = matrix_to_json(s.H);
        cfg["sensors"].push_back(sj);
    }
    cfg["graph"]["nodes"] = pb.graph.node_count();
    cfg["graph"]["edges"] = json::array();
    for (auto [j, i] : pb.graph.edges())
        cfg["graph"]["edges"].push_back({j, i});
    cfg["schedule"]["delta"] = pb.schedule.period;
    cfg["synthesis"]["alpha"] = pb.options.alpha;
    cfg["synthesis"]["pi"] = pb.options.pi;
    cfg["synthesis"]["eps"] = pb.options.eps;
    cfg["synthesis"]["epsbar"] = pb.options.epsbar;
    if (pb.options.delta_lmi > 0.0)
        cfg["synthesis"]["delta_lmi"] = pb.options.delta_lmi;
    if (!pb.options.symmetric_multipliers)
        cfg["synthesis"]["symmetric_multipliers"] = false;
    if (pb.options.gamma_fixed > 0.0)
        cfg["synthesis"]["gamma"] = pb.options.gamma_fixed;
    return cfg;
}

namespace {

// numerical rank of [A - lambda I; C] with relative singular value cutoff
bool pbh_full_rank(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C,
                   std::complex<double> lambda) {
    const int n = static_cast<int>(A.rows());
    Eigen::MatrixXcd M(n + C.rows(), n);
    M.topRows(n) = A.cast<std::complex<double>>() -
                   lambda * Eigen::MatrixXcd::Identity(n, n);
    M.bottomRows(C.rows()) = C.cast<std::complex<double>>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
    const auto& sv = svd.singularValues();
    // loose cutoff: sensor rows are often printed to few significant digits,
    // which turns exact rank deficiencies into ~1e-5 residuals
    const double tol = 1e-5 * sv(0);
    return sv(sv.size() - 1) > tol;
}

}  // namespace

std::vector<DetectabilityEntry> detectability_report(const PlantModel& plant,
                                                     const std::vector<SensorModel>& sensors) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(plant.A);
    std::vector<DetectabilityEntry> out;
    for (const auto& s : sensors) {
        DetectabilityEntry e{true, true};
        for (int k = 0; k < plant.n(); ++k) {
            const std::complex<double> lam = es.eigenvalues()(k);
            const bool ok = pbh_full_rank(plant.A, s.C, lam);
            if (!ok) {
                e.observable = false;
                if (lam.real() >= 0.0)
                    e.detectable = false;
            }
        }
        out.push_back(e);
    }
    return out;
}

}  // namespace rrhinf
