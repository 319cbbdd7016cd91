#include "rrhinf/verify.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

namespace rrhinf {

namespace {

Disturbance single_w(const Problem& pb, const DisturbanceSignal& sig, size_t channel = 0) {
    Disturbance d = Disturbance::none(pb);
    d.w[channel % d.w.size()] = sig;
    return d;
}

Disturbance single_v(const Problem& pb, const DisturbanceSignal& sig, int node) {
    Disturbance d = Disturbance::none(pb);
    auto& ch = d.v[static_cast<size_t>((node - 1) % pb.N())];
    if (!ch.empty())
        ch[0] = sig;
    return d;
}

}  // namespace

std::vector<BatteryEntry> make_battery(const Problem& pb, int steps_per_period) {
    const double delta = pb.schedule.period;
    const double h = delta / steps_per_period;
    const int n = pb.n();
    std::vector<BatteryEntry> out;
    auto add = [&](std::string label, Disturbance d) {
        out.push_back(BatteryEntry{std::move(label), std::move(d),
                                   Eigen::VectorXd::Zero(n)});
    };

    // pulses on the plant channel; edges on the fine grid, some a single fine
    // step away from a sampling instant
    add("pulse-w-early", single_w(pb, DisturbanceSignal::pulse(1.0, 0.0, 10 * delta)));
    add("pulse-w-mid", single_w(pb, DisturbanceSignal::pulse(-1.0, 5 * delta, 25 * delta)));
    add("pulse-w-late", single_w(pb, DisturbanceSignal::pulse(2.0, 30 * delta, 36 * delta)));
    add("pulse-w-at-sample+h",
        single_w(pb, DisturbanceSignal::pulse(1.0, 10 * delta + h, 14 * delta + h)));
    add("pulse-w-at-sample-h",
        single_w(pb, DisturbanceSignal::pulse(1.5, 20 * delta - h, 24 * delta - h)));
    add("pulse-w-offgrid-phase",
        single_w(pb, DisturbanceSignal::pulse(-0.7, 13 * delta + 25 * h, 17 * delta + 25 * h)));
    add("pulse-v1", single_v(pb, DisturbanceSignal::pulse(1.0, 2 * delta, 12 * delta), 1));
    add("pulse-v2", single_v(pb, DisturbanceSignal::pulse(-2.0, 8 * delta + h, 16 * delta + h), 2));

    // decaying sines at three frequencies, on w and on measurement channels
    add("sine-w-slow", single_w(pb, DisturbanceSignal::decaying_sine(1.0, 0.5, 0.05)));
    add("sine-w-mid", single_w(pb, DisturbanceSignal::decaying_sine(1.0, 3.0, 0.1)));
    add("sine-w-fast", single_w(pb, DisturbanceSignal::decaying_sine(1.0, 12.0, 0.2)));
    add("sine-w-mid-large", single_w(pb, DisturbanceSignal::decaying_sine(3.0, 3.0, 0.05)));
    add("sine-v1-slow", single_v(pb, DisturbanceSignal::decaying_sine(1.0, 0.5, 0.05), 1));
    add("sine-v3-fast", single_v(pb, DisturbanceSignal::decaying_sine(2.0, 12.0, 0.1), 3));

    // seeded random piecewise-constant with decay; piece length grid-aligned
    add("rand-w-1", single_w(pb, DisturbanceSignal::random_piecewise(1, 1.0, 0.1, 5 * delta)));
    add("rand-w-2", single_w(pb, DisturbanceSignal::random_piecewise(2, 1.0, 0.2, 10 * delta)));
    add("rand-w-3", single_w(pb, DisturbanceSignal::random_piecewise(3, 2.0, 0.1, 5 * delta)));
    add("rand-v2-4", single_v(pb, DisturbanceSignal::random_piecewise(4, 1.0, 0.1, 5 * delta), 2));
    {  // mixed: w plus every measurement channel driven at once
        Disturbance d = single_w(pb, DisturbanceSignal::random_piecewise(5, 0.5, 0.1, 5 * delta));
        for (int i = 1; i <= pb.N(); ++i) {
            auto& ch = d.v[static_cast<size_t>(i - 1)];
            if (!ch.empty())
                ch[0] = DisturbanceSignal::random_piecewise(10u + static_cast<unsigned>(i),
                                                            0.5, 0.1, 5 * delta);
        }
        add("rand-mixed", std::move(d));
    }
    add("sine+pulse", [&] {
        Disturbance d = single_w(pb, DisturbanceSignal::decaying_sine(1.0, 3.0, 0.1));
        if (!d.v[0].empty())
            d.v[0][0] = DisturbanceSignal::pulse(1.0, 4 * delta, 14 * delta);
        return d;
    }());

    return out;
}

std::vector<BatteryEntry> make_x0_entries(const Problem& pb) {
    const int n = pb.n();
    std::vector<Eigen::VectorXd> seeds;
    seeds.push_back(Eigen::VectorXd::Ones(n));
    seeds.push_back(-2.0 * Eigen::VectorXd::Ones(n));
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    v(0) = 1.0;
    seeds.push_back(v);
    v = Eigen::VectorXd::Zero(n);
    v(n - 1) = -3.0;
    seeds.push_back(v);
    v.resize(n);
    for (int c = 0; c < n; ++c)
        v(c) = (c % 2 == 0) ? 1.0 : -1.0;
    seeds.push_back(0.5 * v);

    std::vector<BatteryEntry> out;
    for (size_t s = 0; s < seeds.size(); ++s)
        out.push_back(BatteryEntry{"x0-" + std::to_string(s + 1), Disturbance::none(pb),
                                   seeds[s]});
    return out;
}

CertificationReport certify(const Problem& pb, const SynthesisSolution& sol,
                            double horizon, int steps_per_period) {
    CertificationReport rep;
    rep.gamma_sq = sol.gains.gamma_sq;
    rep.horizon = horizon;
    rep.step = pb.schedule.period / steps_per_period;
    rep.analysis = verify_analysis(pb, sol);

    std::vector<BatteryEntry> entries = make_battery(pb, steps_per_period);
    for (auto& e : make_x0_entries(pb))
        entries.push_back(std::move(e));

    rep.runs.resize(entries.size());
    const double gain_limit = sol.gains.gamma_sq * 1.01;

    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const size_t idx = next.fetch_add(1);
            if (idx >= entries.size())
                return;
            const auto& entry = entries[idx];
            const auto t0 = std::chrono::steady_clock::now();
            Trajectory tr = simulate(pb, sol.gains, entry.dist, entry.x0, horizon, rep.step);
            RunCheck rc;
            rc.label = entry.label;
            rc.gain_ratio =
                disagreement_gain(tr, entry.x0, sol.gains.P, entry.dist);
            rc.gain_pass = rc.gain_ratio <= gain_limit;
            const DissipationResult dr = dissipation_check(tr, pb, sol);
            rc.dissipation_residual = dr.residual;
            rc.xi_energy = dr.xi_energy;
            rc.dissipation_pass = dr.pass;
            rc.wirtinger_min = std::numeric_limits<double>::infinity();
            for (const auto& we : wirtinger_check(tr, pb, sol))
                rc.wirtinger_min = std::min(rc.wirtinger_min, we.total);
            if (!std::isfinite(rc.wirtinger_min))
                rc.wirtinger_min = 0.0;  // graph without edges
            rc.wirtinger_pass = rc.wirtinger_min >= -1e-6;
            rc.wall_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
            rep.runs[idx] = std::move(rc);
        }
    };
    const unsigned workers =
        std::max(1u, std::min(thread_cap(), static_cast<unsigned>(entries.size())));
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();

    rep.max_gain_ratio = 0.0;
    for (const auto& rc : rep.runs)
        rep.max_gain_ratio = std::max(rep.max_gain_ratio, rc.gain_ratio);

    // zero-disturbance decay from x0 = 1
    {
        const Eigen::VectorXd x0 = Eigen::VectorXd::Ones(pb.n());
        Trajectory tr =
            simulate(pb, sol.gains, Disturbance::none(pb), x0, horizon, rep.step);
        double worst = 0.0;
        for (const auto& e : tr.e)
            worst = std::max(worst, e.col(tr.num_steps).norm());
        rep.decay_metric = worst / x0.norm();
        rep.decay_pass = rep.decay_metric <= 1e-3;
    }

    rep.all_pass = rep.analysis.pass && rep.decay_pass;
    for (const auto& rc : rep.runs)
        rep.all_pass = rep.all_pass && rc.gain_pass && rc.dissipation_pass &&
                       rc.wirtinger_pass;
    return rep;
}

void print_report(const CertificationReport& rep, std::ostream& os) {
    char buf[256];
    auto line = [&](const char* fmt, auto... args) {
        std::snprintf(buf, sizeof buf, fmt, args...);
        os << buf << "\n";
    };
    os << "certification report (T=" << rep.horizon << ", h=" << rep.step << ")\n";
    line("  gamma^2 = %.4g", rep.gamma_sq);
    os << "  analysis-matrix spectra: "
       << (rep.analysis.pass ? "PASS" : "FAIL") << " (lambda_max:";
    for (double lm : rep.analysis.lambda_max)
        line("    %.4g", lm);
    os << "  )\n";
    os << "  run                         gain      dissip.res  wirt.min    status\n";
    for (const auto& rc : rep.runs) {
        const bool ok = rc.gain_pass && rc.dissipation_pass && rc.wirtinger_pass;
        line("  %-26s  %-9.4g %-11.4g %-11.4g %s", rc.label.c_str(), rc.gain_ratio,
             rc.dissipation_residual, rc.wirtinger_min, ok ? "PASS" : "FAIL");
    }
    line("  max empirical gain ratio = %.4g (bound %.4g)", rep.max_gain_ratio,
         rep.gamma_sq);
    line("  zero-disturbance decay metric = %.4g (%s)", rep.decay_metric,
         rep.decay_pass ? "PASS" : "FAIL");
    os << "  note: a finite battery only lower-bounds the worst-case gain;\n"
          "  the certificate bound covers all initial states and L2 inputs.\n";
    os << "overall: " << (rep.all_pass ? "PASS" : "FAIL") << "\n";
}

std::string report_to_json(const CertificationReport& rep) {
    nlohmann::json j;
    j["gamma_sq"] = rep.gamma_sq;
    j["horizon"] = rep.horizon;
    j["step"] = rep.step;
    j["analysis"] = {{"pass", rep.analysis.pass},
                     {"lambda_max", rep.analysis.lambda_max},
                     {"park_min_eig", rep.analysis.park_min_eig}};
    j["runs"] = nlohmann::json::array();
    for (const auto& rc : rep.runs)
        j["runs"].push_back({{"label", rc.label},
                             {"gain_ratio", rc.gain_ratio},
                             {"gain_pass", rc.gain_pass},
                             {"dissipation_residual", rc.dissipation_residual},
                             {"xi_energy", rc.xi_energy},
                             {"dissipation_pass", rc.dissipation_pass},
                             {"wirtinger_min", rc.wirtinger_min},
                             {"wirtinger_pass", rc.wirtinger_pass},
                             {"wall_ms", rc.wall_ms}});
    j["max_gain_ratio"] = rep.max_gain_ratio;
    j["decay_metric"] = rep.decay_metric;
    j["decay_pass"] = rep.decay_pass;
    j["all_pass"] = rep.all_pass;
    j["note"] =
        "a finite battery only lower-bounds the worst-case disagreement gain";
    return j.dump(2);
}

}  // namespace rrhinf
