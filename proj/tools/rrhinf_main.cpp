// Command-line front end: synth | sweep | simulate | certify.
// Exit codes: 0 ok, 2 infeasible, 3 numerical failure, 4 bad config/input.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "rrhinf/sim.hpp"
#include "rrhinf/synthesis.hpp"
#include "rrhinf/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitConfig = 4;

std::string fmt(double v, int sig) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", sig, v);
    return buf;
}

rrhinf::Problem load_with_overrides(const std::string& config_path, double delta,
                                    double eps, double gamma) {
    rrhinf::Problem pb = rrhinf::load_problem_file(config_path);
    if (delta > 0.0)
        pb.schedule = rrhinf::make_schedule(pb.graph, delta);
    if (eps > 0.0)
        for (auto& e : pb.options.eps)
            e = eps;
    if (gamma > 0.0)
        pb.options.gamma_fixed = gamma;
    return pb;
}

std::vector<double> parse_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ','))
        out.push_back(std::stod(tok));
    return out;
}

rrhinf::Disturbance parse_disturbance(const rrhinf::Problem& pb, const std::string& s) {
    rrhinf::Disturbance d = rrhinf::Disturbance::none(pb);
    const auto colon = s.find(':');
    const std::string kind = s.substr(0, colon);
    std::vector<double> a;
    if (colon != std::string::npos)
        a = parse_list(s.substr(colon + 1));
    auto need = [&](size_t k) {
        if (a.size() != k)
            throw rrhinf::ConfigError("disturbance '" + kind + "' expects " +
                                      std::to_string(k) + " parameters");
    };
    if (kind == "zero") {
        need(0);
    } else if (kind == "pulse") {
        need(3);
        d.w[0] = rrhinf::DisturbanceSignal::pulse(a[0], a[1], a[2]);
    } else if (kind == "sine") {
        need(3);
        d.w[0] = rrhinf::DisturbanceSignal::decaying_sine(a[0], a[1], a[2]);
    } else if (kind == "rand") {
        need(4);
        d.w[0] = rrhinf::DisturbanceSignal::random_piecewise(
            static_cast<unsigned>(a[0]), a[1], a[2], a[3]);
    } else {
        throw rrhinf::ConfigError("unknown disturbance kind '" + kind + "'");
    }
    return d;
}

int run_synth(const std::string& config, double delta, double eps, double gamma,
              const std::string& out_path) {
    rrhinf::Problem pb = load_with_overrides(config, delta, eps, gamma);
    rrhinf::SynthesisSolution sol = rrhinf::synthesize(pb);
    std::cout << "status: " << rrhinf::to_string(sol.report.status) << "\n"
              << "gamma^2 = " << fmt(sol.gains.gamma_sq, 4)
              << " (machine: " << fmt(sol.gains.gamma_sq, 17) << ")\n"
              << "solver iterations: " << sol.report.iterations
              << ", gap: " << fmt(sol.report.gap, 4) << "\n";
    if (!out_path.empty()) {
        rrhinf::save_gains(out_path, pb, sol);
        std::cout << "gains written to " << out_path << "\n";
    }
    return kExitOk;
}

int run_sweep(const std::string& config, const std::string& deltas_csv,
              const std::string& eps_csv, const std::string& out_path) {
    rrhinf::Problem pb = rrhinf::load_problem_file(config);
    const std::vector<double> deltas = parse_list(deltas_csv);
    const std::vector<double> epss =
        eps_csv.empty() ? pb.options.eps : parse_list(eps_csv);
    const auto rows = rrhinf::sweep_delta(pb, deltas, epss);

    std::ostringstream csv;
    csv << "delta,eps,status,gamma_sq,wall_ms\r\n";
    for (const auto& r : rows)
        csv << fmt(r.delta, 17) << ',' << fmt(r.eps, 17) << ',' << r.status << ','
            << fmt(r.gamma_sq, 17) << ',' << fmt(r.wall_ms, 17) << "\r\n";
    if (!out_path.empty()) {
        std::ofstream f(out_path, std::ios::binary);
        f << csv.str();
        std::cout << "sweep written to " << out_path << "\n";
    } else {
        std::cout << csv.str();
    }
    return kExitOk;
}

int run_simulate(const std::string& config, const std::string& gains_path,
                 const std::string& dist_spec, const std::string& x0_csv, double T,
                 double h, const std::string& out_path,
                 const std::string& events_path) {
    rrhinf::Problem pb = rrhinf::load_problem_file(config);
    rrhinf::SynthesisSolution sol = rrhinf::load_gains(gains_path, pb);
    if (h <= 0.0)
        h = pb.schedule.period / 50.0;

    Eigen::VectorXd x0 = Eigen::VectorXd::Ones(pb.n());
    if (!x0_csv.empty()) {
        const auto vals = parse_list(x0_csv);
        if (static_cast<int>(vals.size()) != pb.n())
            throw rrhinf::ConfigError("--x0 needs " + std::to_string(pb.n()) +
                                      " components");
        for (int c = 0; c < pb.n(); ++c)
            x0(c) = vals[static_cast<size_t>(c)];
    }
    const rrhinf::Disturbance dist = parse_disturbance(pb, dist_spec);
    rrhinf::Trajectory tr;
    try {
        tr = rrhinf::simulate(pb, sol.gains, dist, x0, T, h);
    } catch (const rrhinf::SimError& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitConfig;
    }

    const auto cost = rrhinf::disagreement_cost(tr, pb.graph);
    double decay = 0.0;
    for (const auto& e : tr.e)
        decay = std::max(decay, e.col(tr.num_steps).norm());
    decay /= std::max(x0.norm(), 1e-300);
    std::cout << "J (estimate-difference form) = " << fmt(cost.direct, 4)
              << " (machine: " << fmt(cost.direct, 17) << ")\n"
              << "J (quadratic form)           = " << fmt(cost.quadratic, 4) << "\n";
    bool have_input = x0.norm() > 0.0;
    for (const auto& sig : dist.w)
        have_input = have_input || sig.kind != rrhinf::DisturbanceSignal::Kind::zero;
    if (have_input) {
        const double ratio = rrhinf::disagreement_gain(tr, x0, sol.gains.P, dist);
        std::cout << "gain ratio = " << fmt(ratio, 4)
                  << " (machine: " << fmt(ratio, 17)
                  << "), certified bound gamma^2 = " << fmt(sol.gains.gamma_sq, 4)
                  << "\n";
    }
    std::cout << "decay metric max_i ||e_i(T)||/||x0|| = " << fmt(decay, 4) << "\n";

    if (!out_path.empty()) {
        std::ofstream f(out_path, std::ios::binary);
        rrhinf::export_trajectory_csv(tr, f);
        std::cout << "trajectory written to " << out_path << "\n";
    }
    if (!events_path.empty()) {
        std::ofstream f(events_path, std::ios::binary);
        rrhinf::export_events_csv(tr, f);
        std::cout << "events written to " << events_path << "\n";
    }
    return kExitOk;
}

int run_certify(const std::string& config, const std::string& gains_path, double T,
                int steps, const std::string& json_path) {
    rrhinf::Problem pb = rrhinf::load_problem_file(config);
    rrhinf::SynthesisSolution sol = rrhinf::load_gains(gains_path, pb);
    const rrhinf::CertificationReport rep = rrhinf::certify(pb, sol, T, steps);
    rrhinf::print_report(rep, std::cout);
    if (!json_path.empty()) {
        std::ofstream f(json_path, std::ios::binary);
        f << rrhinf::report_to_json(rep) << "\n";
        std::cout << "report written to " << json_path << "\n";
    }
    return rep.all_pass ? kExitOk : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributed sampled-data observer synthesis and simulation"};
    app.require_subcommand(1);

    std::string config, gains, out, events, json_out;
    std::string deltas_csv, eps_csv, dist_spec = "zero", x0_csv;
    double delta = 0.0, eps = 0.0, gamma = 0.0, T = 50.0, h = 0.0;
    int steps = 50;

    auto* synth = app.add_subcommand("synth", "solve the gain-design program");
    synth->add_option("config", config)->required();
    synth->add_option("--delta", delta, "override sampling period");
    synth->add_option("--eps", eps, "override all eps_i");
    synth->add_option("--gamma", gamma, "feasibility at fixed gamma instead of minimizing");
    synth->add_option("-o,--out", out, "gains file to write");

    auto* sweep = app.add_subcommand("sweep", "gamma^2 over a (delta, eps) grid");
    sweep->add_option("config", config)->required();
    sweep->add_option("--deltas", deltas_csv, "comma-separated periods")->required();
    sweep->add_option("--eps", eps_csv, "comma-separated eps values");
    sweep->add_option("-o,--out", out, "CSV file to write (default stdout)");

    auto* sim = app.add_subcommand("simulate", "run one trajectory");
    sim->add_option("config", config)->required();
    sim->add_option("gains", gains)->required();
    sim->add_option("--disturbance", dist_spec,
                    "zero | pulse:amp,on,off | sine:amp,omega,decay | rand:seed,amp,decay,piece");
    sim->add_option("--x0", x0_csv, "initial plant state (comma-separated)");
    sim->add_option("--T", T, "horizon");
    sim->add_option("--step", h, "integrator step (default delta/50)");
    sim->add_option("-o,--out", out, "trajectory CSV");
    sim->add_option("--events", events, "buffer event CSV");

    auto* cert = app.add_subcommand("certify", "battery of simulation-based checks");
    cert->add_option("config", config)->required();
    cert->add_option("gains", gains)->required();
    cert->add_option("--T", T, "horizon per run");
    cert->add_option("--steps", steps, "integrator steps per sampling period");
    cert->add_option("--json", json_out, "machine-readable report path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (synth->parsed())
            return run_synth(config, delta, eps, gamma, out);
        if (sweep->parsed())
            return run_sweep(config, deltas_csv, eps_csv, out);
        if (sim->parsed())
            return run_simulate(config, gains, dist_spec, x0_csv, T, h, out, events);
        if (cert->parsed())
            return run_certify(config, gains, T, steps, json_out);
    } catch (const rrhinf::InfeasibleProgram& ex) {
        std::cerr << "infeasible: " << ex.what() << "\n";
        return kExitInfeasible;
    } catch (const rrhinf::NumericalFailure& ex) {
        std::cerr << "numerical failure: " << ex.what() << "\n";
        return kExitNumerical;
    } catch (const rrhinf::SingularMultiplier& ex) {
        std::cerr << "numerical failure: " << ex.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
