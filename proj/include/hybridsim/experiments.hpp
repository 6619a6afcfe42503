#pragma once

// End-to-end runs: presets, run directories with CSV series and a plot
// script, the readout demo, and headless verification suites.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hybridsim/evolution.hpp"
#include "hybridsim/jordan_wigner.hpp"
#include "hybridsim/observables.hpp"
#include "hybridsim/readout.hpp"
#include "hybridsim/trotter.hpp"
#include "json.hpp"

namespace hybridsim {

namespace fs = std::filesystem;

struct RunConfig {
    std::string preset;
    ModelParams params;
    int continuous_cutoff = 8;  // uniform cutoff of the continuous reference
    int samples_per_step = 4;   // continuous grid points per Trotter step
    double leakage_threshold = 1e-3;

    void validate() const {
        params.validate();
        if (continuous_cutoff < 0) throw ValidationError("continuous_cutoff must be >= 0");
        if (samples_per_step < 1) throw ValidationError("samples_per_step must be >= 1");
        if (!(leakage_threshold > 0.0)) throw ValidationError("leakage_threshold must be > 0");
    }

    [[nodiscard]] std::string canonical() const {
        std::ostringstream os;
        os << "preset=" << preset << '\n'
           << to_config_string(params) << std::setprecision(17) << "continuous_cutoff=" << continuous_cutoff << '\n'
           << "samples_per_step=" << samples_per_step << '\n'
           << "leakage_threshold=" << leakage_threshold << '\n';
        return os.str();
    }
};

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string config_hash(const RunConfig& c) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << fnv1a(c.canonical());
    return os.str();
}

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"n2_q0", "n4_qm1_g2", "n4_qm1_g0"};
    return names;
}

inline RunConfig preset_config(const std::string& name) {
    RunConfig c;
    c.preset = name;
    auto& p = c.params;
    p.lattice_spacing = 1.0;
    p.fermion_mass = 1.0;
    if (name == "n2_q0") {
        p.n_sites = 2;
        p.boson_mass = 1.5;
        p.coupling = 4.0;
        p.charge_sector = 0;
        p.cutoffs = {15, 15};
        p.trotter_dt = 0.5;
        p.trotter_steps = 12;
        c.continuous_cutoff = 15;
    } else if (name == "n4_qm1_g2" || name == "n4_qm1_g0") {
        p.n_sites = 4;
        p.boson_mass = 1.0;
        p.coupling = name == "n4_qm1_g2" ? 2.0 : 0.0;
        p.charge_sector = -1;
        p.cutoffs.assign(4, 15);
        p.trotter_dt = 1.0;
        p.trotter_steps = 5;
        c.continuous_cutoff = 8;
    } else {
        throw ValidationError("unknown preset '" + name + "'");
    }
    c.validate();
    return c;
}

/// Model keys go through the config parser; the rest are run keys.
inline void apply_override(RunConfig& c, const std::string& key, const std::string& value) {
    if (key == "continuous_cutoff") c.continuous_cutoff = detail::parse_int(key, value);
    else if (key == "samples_per_step") c.samples_per_step = detail::parse_int(key, value);
    else if (key == "leakage_threshold") c.leakage_threshold = detail::parse_double(key, value);
    else {
        ConfigBuilder b(c.params);
        b.set(key, value);
        c.params = b.finish();
    }
    c.validate();
}

/// Trotter plans for a configuration: N=2/Q=0 and N=4/Q=-1 use the
/// hand-ordered plans, anything else the generic one.
inline std::vector<TrotterPlan> config_plans(const ModelParams& p) {
    if (p.n_sites == 2 && p.charge_sector == 0) return {plan_n2(p)};
    if (p.n_sites == 4 && p.charge_sector == -1) {
        auto pp = plan_n4(p);
        return {std::move(pp.main), std::move(pp.mode2)};
    }
    auto plan = plan_generic(detail::reduced_hamiltonian(p), p.trotter_dt, p.trotter_steps);
    plan.name = "generic";
    return {plan};
}

// ---------------------------------------------------------------------------
// preset runs

struct SeriesSet {
    std::vector<double> times;
    ProbabilityTable spin;
    std::map<int, ProbabilityTable> modes;
    std::vector<std::vector<double>> mean_occupation;  // per time, per mode
    std::vector<std::vector<double>> leakage;          // per time, per mode
    std::vector<double> energy;
};

struct RunReport {
    fs::path dir;
    std::string hash;
    RunConfig config;
    SeriesSet trotter, continuous;
    std::vector<std::string> files;
    std::vector<std::string> warnings;
    double max_trotter_deviation = 0.0;  // vs continuous at the step times
    nlohmann::json summary;
};

namespace detail {

inline void write_file(const fs::path& path, const std::string& content, std::vector<std::string>& files) {
    std::ofstream os(path);
    if (!os) throw ValidationError("cannot write " + path.string());
    os << content;
    if (!os) throw NumericalError("write failed: " + path.string());
    files.push_back(path.filename().string());
}

inline std::string table_csv(const ProbabilityTable& t, const std::string& prefix) {
    std::vector<std::string> cols;
    for (const auto& l : t.labels) cols.push_back(prefix + l);
    std::ostringstream os;
    write_series_csv(os, cols, t.times, t.rows);
    return os.str();
}

inline std::string per_mode_csv(const std::vector<double>& times, const std::vector<std::vector<double>>& rows,
                                int n_modes, const std::string& prefix) {
    std::vector<std::string> cols;
    for (int m = 0; m < n_modes; ++m) cols.push_back(prefix + std::to_string(m));
    std::ostringstream os;
    write_series_csv(os, cols, times, rows);
    return os.str();
}

inline SeriesSet trotter_series(const RunConfig& cfg, std::vector<std::string>& warnings, std::vector<Circuit>& circuits,
                                std::vector<std::string>& names) {
    const auto& p = cfg.params;
    SeriesSet out;
    const int nm = p.n_sites;
    std::vector<TrotterRun> runs;
    std::vector<TrotterPlan> plans = config_plans(p);
    for (const auto& plan : plans) {
        runs.push_back(run_trotter(plan, vacuum_state(plan_layout(plan, p.cutoffs)), {}, cfg.leakage_threshold));
        for (const auto& w : runs.back().warnings) warnings.push_back(plan.name + ": " + w);
        circuits.push_back(plan_circuit(plan));
        names.push_back(plan.name);
    }
    out.times = runs.front().times;
    const std::size_t nt = out.times.size();
    out.mean_occupation.assign(nt, std::vector<double>(static_cast<std::size_t>(nm), 0.0));
    out.leakage = out.mean_occupation;
    out.energy.assign(nt, 0.0);
    for (std::size_t r = 0; r < runs.size(); ++r) {
        const auto& plan = plans[r];
        const auto& run = runs[r];
        if (plan.n_qubits > 0) out.spin = probability_series(run.snapshots, run.times, Target::spin(plan.n_qubits));
        const SparseMatrix h = realize_matrix(plan.hamiltonian(), run.snapshots.front().layout());
        for (int m : plan.modes) out.modes[m] = probability_series(run.snapshots, run.times, Target::of_mode(m));
        for (std::size_t k = 0; k < nt; ++k) {
            const auto& s = run.snapshots[k];
            const auto& labels = s.layout().mode_labels();
            for (std::size_t j = 0; j < labels.size(); ++j) {
                out.mean_occupation[k][static_cast<std::size_t>(labels[j])] = mean_occupation(s, labels[j]);
                out.leakage[k][static_cast<std::size_t>(labels[j])] = run.leakage[k][j];
            }
            out.energy[k] += energy_expectation(h, s);
        }
    }
    return out;
}

inline SeriesSet continuous_series(const RunConfig& cfg) {
    const auto& p = cfg.params;
    const OperatorSum reduced = reduced_hamiltonian(p);
    const Layout l(reduced.n_qubits(), std::vector<int>(static_cast<std::size_t>(p.n_sites), cfg.continuous_cutoff));
    SeriesSet out;
    const int n = p.trotter_steps * cfg.samples_per_step;
    for (int k = 0; k <= n; ++k) out.times.push_back(p.trotter_dt * k / cfg.samples_per_step);
    const SparseMatrix h = realize_matrix(reduced, l);
    const auto states = exact_series(h, vacuum_state(l), out.times);
    out.spin = probability_series(states, out.times, Target::spin());
    for (int m = 0; m < p.n_sites; ++m) out.modes[m] = probability_series(states, out.times, Target::of_mode(m));
    for (const auto& s : states) {
        std::vector<double> occ;
        for (int m = 0; m < p.n_sites; ++m) occ.push_back(mean_occupation(s, m));
        out.mean_occupation.push_back(std::move(occ));
        out.leakage.push_back(leakage(s));
        out.energy.push_back(energy_expectation(h, s));
    }
    return out;
}

inline std::string plot_script(const RunConfig& cfg) {
    std::ostringstream os;
    os << R"(#!/usr/bin/env python3
# Renders the run's CSV series: spin probabilities, Fock distributions per mode,
# mean occupations. Markers: Trotter steps. Lines: continuous evolution.
import csv, os, sys
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
N_MODES = )"
       << cfg.params.n_sites << R"(
MAX_LEVEL = 8

def load(name):
    path = os.path.join(HERE, name)
    if not os.path.exists(path):
        return None, {}
    with open(path) as f:
        rows = list(csv.reader(f))
    head, body = rows[0], rows[1:]
    cols = {h: [float(r[i]) for r in body] for i, h in enumerate(head)}
    return cols["t"], cols

fig, axes = plt.subplots(2 + N_MODES // 2, 2, figsize=(10, 3 * (2 + N_MODES // 2)), squeeze=False)
ax = axes[0][0]
tt, tr = load("trotter_spin.csv")
tc, co = load("continuous_spin.csv")
for k in [c for c in co if c != "t"]:
    line, = ax.plot(tc, co[k], label=k)
    if k in tr:
        ax.plot(tt, tr[k], "o", color=line.get_color())
ax.set_title("spin probabilities")
ax.set_xlabel("t")
ax.legend(fontsize=7)

ax = axes[0][1]
tt, tr = load("trotter_mean_occupation.csv")
tc, co = load("continuous_mean_occupation.csv")
for m in range(N_MODES):
    key = "N%d" % m
    line, = ax.plot(tc, co[key], label="<N_%d>" % m)
    ax.plot(tt, tr[key], "o", color=line.get_color())
ax.set_title("mean occupation")
ax.set_xlabel("t")
ax.legend(fontsize=7)

for m in range(N_MODES):
    ax = axes[1 + m // 2][m % 2]
    tt, tr = load("trotter_mode%d.csv" % m)
    tc, co = load("continuous_mode%d.csv" % m)
    for n in range(MAX_LEVEL + 1):
        key = "P%d" % n
        if key not in co:
            break
        line, = ax.plot(tc, co[key], label="N=%d" % n)
        if key in tr:
            ax.plot(tt, tr[key], "o", ms=3, color=line.get_color())
    ax.set_title("mode %d" % m)
    ax.set_xlabel("t")
    ax.legend(fontsize=6, ncol=3)

for extra in axes[-1][(N_MODES % 2):] if N_MODES % 2 else []:
    extra.axis("off")
fig.tight_layout()
out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(HERE, "figure.png")
fig.savefig(out, dpi=120)
print(out)
)";
    return os.str();
}

}  // namespace detail

/// Runs the Trotter circuits and the continuous reference for `cfg` and writes
/// everything into out_dir/<preset>-<hash>/.
inline RunReport run_preset(const RunConfig& cfg, const fs::path& out_dir) {
    cfg.validate();
    RunReport rep;
    rep.config = cfg;
    rep.hash = config_hash(cfg);
    rep.dir = out_dir / (cfg.preset + "-" + rep.hash);
    fs::create_directories(rep.dir);

    std::vector<Circuit> circuits;
    std::vector<std::string> circuit_names, warnings;
    // the two evolutions are independent
    auto cont = std::async(std::launch::async, [&cfg] { return detail::continuous_series(cfg); });
    rep.trotter = detail::trotter_series(cfg, warnings, circuits, circuit_names);
    rep.continuous = cont.get();
    rep.warnings = warnings;

    const int nm = cfg.params.n_sites;
    auto& files = rep.files;
    detail::write_file(rep.dir / "config.txt", cfg.canonical(), files);
    for (std::size_t i = 0; i < circuits.size(); ++i) {
        std::ostringstream c, meta;
        write_circuit(c, circuits[i]);
        for (std::size_t g = 0; g < circuits[i].ops.size(); ++g)
            meta << nlohmann::json{{"index", g}, {"step", circuits[i].ops[g].step}, {"label", circuits[i].ops[g].label}}.dump()
                 << '\n';
        detail::write_file(rep.dir / ("circuit_" + circuit_names[i] + ".txt"), c.str(), files);
        detail::write_file(rep.dir / ("circuit_" + circuit_names[i] + ".meta.jsonl"), meta.str(), files);
    }
    for (const auto& [tag, set] : {std::pair<std::string, const SeriesSet*>{"trotter", &rep.trotter},
                                   std::pair<std::string, const SeriesSet*>{"continuous", &rep.continuous}}) {
        detail::write_file(rep.dir / (tag + "_spin.csv"), detail::table_csv(set->spin, "P_"), files);
        for (const auto& [m, t] : set->modes)
            detail::write_file(rep.dir / (tag + "_mode" + std::to_string(m) + ".csv"), detail::table_csv(t, "P"), files);
        detail::write_file(rep.dir / (tag + "_mean_occupation.csv"),
                           detail::per_mode_csv(set->times, set->mean_occupation, nm, "N"), files);
        detail::write_file(rep.dir / (tag + "_leakage.csv"), detail::per_mode_csv(set->times, set->leakage, nm, "top_m"), files);
    }
    {
        std::vector<std::vector<double>> rows;
        const double e0 = rep.trotter.energy.front();
        for (std::size_t k = 0; k < rep.trotter.times.size(); ++k) rows.push_back({rep.trotter.energy[k], rep.trotter.energy[k] - e0});
        std::ostringstream os;
        write_series_csv(os, {"energy", "drift"}, rep.trotter.times, rows);
        detail::write_file(rep.dir / "energy_drift.csv", os.str(), files);
    }

    // Trotter vs continuous on the shared grid points (same cutoff only for modes)
    double dev_spin = 0.0;
    for (std::size_t k = 0; k < rep.trotter.times.size(); ++k) {
        const std::size_t kc = k * static_cast<std::size_t>(cfg.samples_per_step);
        for (std::size_t j = 0; j < rep.trotter.spin.rows[k].size(); ++j)
            dev_spin = std::max(dev_spin, std::abs(rep.trotter.spin.rows[k][j] - rep.continuous.spin.rows[kc][j]));
    }
    rep.max_trotter_deviation = dev_spin;

    double cont_leak = 0.0;
    for (const auto& row : rep.continuous.leakage)
        for (double x : row) cont_leak = std::max(cont_leak, x);
    if (cont_leak > cfg.leakage_threshold) {
        std::ostringstream os;
        os << "continuous reference: top-level population " << cont_leak << " exceeds " << cfg.leakage_threshold;
        rep.warnings.push_back(os.str());
    }

    auto& s = rep.summary;
    s["preset"] = cfg.preset;
    s["hash"] = rep.hash;
    s["steps"] = cfg.params.trotter_steps;
    s["dt"] = cfg.params.trotter_dt;
    s["continuous_cutoff"] = cfg.continuous_cutoff;
    s["trotter_cutoffs"] = cfg.params.cutoffs;
    s["max_spin_deviation_trotter_vs_continuous"] = dev_spin;
    s["continuous_max_top_level_population"] = cont_leak;
    s["final_mean_occupation_trotter"] = rep.trotter.mean_occupation.back();
    s["final_mean_occupation_continuous"] = rep.continuous.mean_occupation.back();
    s["energy_drift_max"] = [&] {
        double d = 0;
        for (double e : rep.trotter.energy) d = std::max(d, std::abs(e - rep.trotter.energy.front()));
        return d;
    }();
    std::vector<nlohmann::json> cj;
    for (std::size_t i = 0; i < circuits.size(); ++i) {
        const auto compressed = compress(circuits[i], true, Measurement::spin());
        cj.push_back({{"name", circuit_names[i]},
                      {"gates", circuits[i].ops.size()},
                      {"cnots", circuits[i].count(GateKind::CNOT)},
                      {"cnots_per_step_compressed", cnots_per_step(compressed, cfg.params.trotter_steps)}});
    }
    s["circuits"] = cj;
    s["warnings"] = rep.warnings;
    detail::write_file(rep.dir / "plot.py", detail::plot_script(cfg), files);
    fs::permissions(rep.dir / "plot.py", fs::perms::owner_exec | fs::perms::group_exec | fs::perms::others_exec,
                    fs::perm_options::add);
    s["files"] = files;
    detail::write_file(rep.dir / "summary.json", s.dump(2) + "\n", files);
    return rep;
}

// ---------------------------------------------------------------------------
// readout demo

struct ReadoutDemoOptions {
    int mode = 2;
    int step = 3;
    int shots = 1000;
    std::uint64_t seed = 1;
    int resamples = 200;
    int n_max = 0;  // 0: chosen from the simulated distribution
    SidebandModel model{};
    FitOptions fit{};
};

struct ReadoutDemoReport {
    fs::path dir;
    std::vector<double> truth;  // P_n of the simulated state, n = 0..cutoff
    SidebandModel model;
    ReadoutDataset data;
    FitResult fit;
    BootstrapResult boot;
    int within = 0;  // components with |fit - truth| <= 2 sigma
    double max_error = 0.0;
};

/// Mode-m Fock distribution after `step` Trotter steps of the configuration.
inline std::vector<double> simulated_mode_distribution(const RunConfig& cfg, int mode, int step) {
    for (const auto& plan : config_plans(cfg.params)) {
        if (std::find(plan.modes.begin(), plan.modes.end(), mode) == plan.modes.end()) continue;
        if (step < 0 || step > plan.steps) throw ValidationError("readout demo: step out of range");
        const auto run = run_trotter(plan, vacuum_state(plan_layout(plan, cfg.params.cutoffs)), {step}, cfg.leakage_threshold);
        return mode_marginal(run.snapshots.front(), mode);
    }
    throw ValidationError("readout demo: no mode " + std::to_string(mode) + " in this configuration");
}

inline ReadoutDemoReport run_readout_demo(const RunConfig& cfg, const ReadoutDemoOptions& o, const fs::path& out_dir) {
    cfg.validate();
    ReadoutDemoReport rep;
    rep.truth = simulated_mode_distribution(cfg, o.mode, o.step);
    rep.model = o.model;
    rep.model.n_max = o.n_max > 0 ? o.n_max : choose_n_max(rep.truth);
    rep.model.validate();
    const auto times = default_probe_times(rep.model);
    rep.data = sample_shots(synthesize_signal(rep.truth, rep.model, times), times, o.shots, o.seed);
    rep.fit = fit_populations(rep.data, rep.model, o.fit);
    rep.boot = bootstrap(rep.data, rep.model, o.resamples, o.seed ^ 0x9e3779b97f4a7c15ull, o.fit);

    std::ostringstream cmp;
    cmp << "n,P_true,P_fit,sigma,p16,p84,within_2sigma\n" << std::setprecision(12);
    for (int n = 0; n <= rep.model.n_max; ++n) {
        const auto k = static_cast<std::size_t>(n);
        const double t = k < rep.truth.size() ? rep.truth[k] : 0.0;
        const double err = std::abs(rep.fit.populations[k] - t);
        const bool in = err <= 2.0 * rep.boot.stddev[k] + 1e-9;
        rep.within += in;
        rep.max_error = std::max(rep.max_error, err);
        cmp << n << ',' << t << ',' << rep.fit.populations[k] << ',' << rep.boot.stddev[k] << ',' << rep.boot.p16[k] << ','
            << rep.boot.p84[k] << ',' << (in ? 1 : 0) << '\n';
    }

    rep.dir = out_dir / (cfg.preset + "-" + config_hash(cfg)) /
              ("readout-m" + std::to_string(o.mode) + "-k" + std::to_string(o.step) + "-s" + std::to_string(o.seed));
    fs::create_directories(rep.dir);
    std::vector<std::string> files;
    std::ostringstream ds, fit;
    write_dataset_csv(ds, rep.data);
    write_fit_csv(fit, rep.fit, &rep.boot);
    detail::write_file(rep.dir / "readout_dataset.csv", ds.str(), files);
    detail::write_file(rep.dir / "readout_fit.csv", fit.str(), files);
    detail::write_file(rep.dir / "readout_comparison.csv", cmp.str(), files);
    nlohmann::json j{{"preset", cfg.preset},     {"mode", o.mode},
                     {"step", o.step},           {"time", o.step * cfg.params.trotter_dt},
                     {"shots", o.shots},         {"seed", o.seed},
                     {"resamples", o.resamples}, {"n_max", rep.model.n_max},
                     {"omega1", rep.model.omega1}, {"gamma1", rep.model.gamma1},
                     {"residual_norm", rep.fit.residual_norm}, {"condition", rep.fit.condition},
                     {"within_2sigma", rep.within}, {"max_abs_error", rep.max_error},
                     {"bootstrap_diagnostics", rep.boot.diagnostics}};
    detail::write_file(rep.dir / "readout_report.json", j.dump(2) + "\n", files);
    return rep;
}

// ---------------------------------------------------------------------------
// verification suites

struct Check {
    std::string name;
    bool passed = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string detail;
};

struct VerifyReport {
    std::string suite;
    std::vector<Check> checks;

    [[nodiscard]] bool passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
    }
    [[nodiscard]] nlohmann::json to_json() const {
        nlohmann::json j{{"suite", suite}, {"passed", passed()}};
        j["checks"] = nlohmann::json::array();
        for (const auto& c : checks) {
            nlohmann::json cj{{"name", c.name}, {"passed", c.passed}, {"value", c.value}, {"threshold", c.threshold}};
            if (!c.detail.empty()) cj["detail"] = c.detail;
            j["checks"].push_back(cj);
        }
        return j;
    }
};

inline const std::vector<std::string>& verify_suites() {
    static const std::vector<std::string> s{"algebra", "gates", "trotter", "convergence", "readout"};
    return s;
}

namespace detail {

inline Check below(std::string name, double value, double threshold) {
    return {std::move(name), value < threshold, value, threshold, {}};
}

inline Check above(std::string name, double value, double threshold) {
    return {std::move(name), value > threshold, value, threshold, {}};
}

inline DenseMatrix expm_hermitian_times_minus_i(const DenseMatrix& g) {
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(g);
    const Eigen::VectorXcd ph = (cplx{0.0, -1.0} * es.eigenvalues().cast<cplx>()).array().exp();
    return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

inline ModelParams verify_params(int n, double g, int cut) {
    ModelParams p;
    p.n_sites = n;
    p.boson_mass = n == 2 ? 1.5 : 1.0;
    p.coupling = g;
    p.charge_sector = n == 2 ? 0 : -1;
    p.cutoffs.assign(static_cast<std::size_t>(n), cut);
    p.trotter_dt = n == 2 ? 0.5 : 1.0;
    p.trotter_steps = n == 2 ? 12 : 5;
    return p;
}

inline OperatorSum expected_reduced_n2(const ModelParams& p) {
    const double e0 = mode_energy(p, 0), e1 = mode_energy(p, 1);
    const double c = p.coupling * std::sqrt(p.lattice_spacing) / 2.0;
    OperatorSum h(1, 2);
    h.add(pauli(Pauli::Z, 0, p.fermion_mass));
    h.add(number(0, e0));
    h.add(number(1, e1));
    h.add(pauli(Pauli::Z, 0) * create(0, c / std::sqrt(e0)));
    h.add(pauli(Pauli::Z, 0) * annihilate(0, c / std::sqrt(e0)));
    h.add(create(1, c / std::sqrt(e1)));
    h.add(annihilate(1, c / std::sqrt(e1)));
    return h.canonical();
}

inline OperatorSum expected_reduced_n4(const ModelParams& p) {
    const double b = p.lattice_spacing;
    const double c = p.coupling * std::sqrt(b / 32.0);
    OperatorSum h(2, 4);
    h.add(pauli(Pauli::X, 1, 1.0 / (2.0 * b)));
    h.add(pauli(Pauli::X, 0) * pauli(Pauli::X, 1, 1.0 / (2.0 * b)));
    h.add(pauli(Pauli::Z, 1, p.fermion_mass));
    auto kick = [&](OperatorTerm spin, int m, cplx coeff) {
        const double e = mode_energy(p, m);
        h.add(spin * create(m, c * coeff / std::sqrt(e)));
        h.add(spin * annihilate(m, c * std::conj(coeff) / std::sqrt(e)));
    };
    const auto z0 = pauli(Pauli::Z, 0), z1 = pauli(Pauli::Z, 1), z01 = pauli(Pauli::Z, 0) * pauli(Pauli::Z, 1);
    kick(z1, 0, 2.0);
    kick(z0, 1, {1.0, -1.0});
    kick(z01, 1, {1.0, 1.0});
    kick(term(1.0), 2, 2.0);
    kick(z0, 3, {1.0, 1.0});
    kick(z01, 3, {1.0, -1.0});
    for (int m = 0; m < 4; ++m) h.add(number(m, mode_energy(p, m)));
    return h.canonical();
}

inline double max_marginal_deviation(const HybridState& a, const HybridState& b, int n_qubits) {
    double d = 0.0;
    const auto sa = qubit_marginal(a, n_qubits), sb = qubit_marginal(b, n_qubits);
    for (std::size_t i = 0; i < sa.size(); ++i) d = std::max(d, std::abs(sa[i] - sb[i]));
    for (int m : a.layout().mode_labels()) {
        const auto ma = mode_marginal(a, m), mb = mode_marginal(b, m);
        for (std::size_t i = 0; i < ma.size(); ++i) d = std::max(d, std::abs(ma[i] - mb[i]));
    }
    return d;
}

inline VerifyReport verify_algebra() {
    VerifyReport r{"algebra", {}};
    const auto p2 = verify_params(2, 4.0, 3), p4 = verify_params(4, 2.0, 3);
    r.checks.push_back(below("n2 reduced Hamiltonian vs closed form",
                             max_coefficient_deviation(reduced_hamiltonian(p2), expected_reduced_n2(p2)), 1e-10));
    r.checks.push_back(below("n4 reduced Hamiltonian vs closed form",
                             max_coefficient_deviation(reduced_hamiltonian(p4), expected_reduced_n4(p4)), 1e-10));
    const std::vector<double> quoted2{3.48, 1.5}, quoted4{3.30, 1.86, 1.0, 1.86};
    double e2 = 0, e4 = 0;
    for (int m = 0; m < 2; ++m) e2 = std::max(e2, std::abs(mode_energy(p2, m) - quoted2[static_cast<std::size_t>(m)]));
    for (int m = 0; m < 4; ++m) e4 = std::max(e4, std::abs(mode_energy(p4, m) - quoted4[static_cast<std::size_t>(m)]));
    r.checks.push_back(below("n2 mode energies vs quoted values", e2, 0.005 + 1e-12));
    r.checks.push_back(below("n4 mode energies vs quoted values", e4, 0.005 + 1e-12));
    for (int n : {2, 4}) {
        const auto p = verify_params(n, 2.0, 2);
        const Layout l(n, p.cutoffs);
        const SparseMatrix h = realize_matrix(build_full_hamiltonian(p), l);
        const SparseMatrix q = realize_matrix(build_charge_operator(n), l);
        const SparseMatrix comm = h * q - q * h;
        r.checks.push_back(below("[H,Q] for N=" + std::to_string(n), max_abs(comm), 1e-12));
        r.checks.push_back(below("Hermiticity defect for N=" + std::to_string(n), hermiticity_defect(h), 1e-12));
        const auto jw = jordan_wigner_check(n);
        r.checks.push_back(below("Jordan-Wigner anticommutators N=" + std::to_string(n),
                                 std::max(jw.anticommutator_deviation, jw.annihilator_deviation), 1e-12));
        r.checks.push_back(below("Jordan-Wigner spin Hamiltonian N=" + std::to_string(n), jw.hamiltonian_deviation, 1e-12));
    }
    return r;
}

inline VerifyReport verify_gates() {
    VerifyReport r{"gates", {}};
    const Layout l(2, {3});
    double unit = 0.0;
    for (const auto& g : {rx(0, 0.7), ry(1, -1.3), rz(0, 2.1), ms(0, 1, 0.9), cnot(1, 0), snp(0, 0, 0.8, 0.4),
                          zkick(1, 0, 1.1, -0.6), mode_phase(0, 0.5), displace(0, {0.3, -0.2})}) {
        const DenseMatrix u = gate_matrix(g, l);
        unit = std::max(unit, (u.adjoint() * u - DenseMatrix::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff());
    }
    r.checks.push_back(below("unitarity of every gate kind (Lambda=3)", unit, 1e-12));

    Circuit direct{2, {3}, {cnot(0, 1)}};
    r.checks.push_back(below("CNOT from MS and rotations", distance_up_to_phase(circuit_matrix(cnot_decomposition(0, 1), l),
                                                                                 circuit_matrix(direct, l)),
                             1e-12));

    // conjugated kick vs exp(-i theta/2 Z (e^{i phi} a + e^{-i phi} a^dag))
    const double th = 0.9, ph = 0.35;
    OperatorSum gen(2, 1);
    gen.add(pauli(Pauli::Z, 0) * annihilate(0, 0.5 * th * std::polar(1.0, ph)));
    gen.add(pauli(Pauli::Z, 0) * create(0, 0.5 * th * std::polar(1.0, -ph)));
    const DenseMatrix ref = expm_hermitian_times_minus_i(DenseMatrix(realize_matrix(gen, l)));
    r.checks.push_back(
        below("conjugated Z-kick vs direct exponential (Lambda=3)", (circuit_matrix(conjugated_kick(0, 0, th, ph), l) - ref).cwiseAbs().maxCoeff(), 1e-10));

    // SNP on |0>|0> gives (|+y>|beta> + |-y>|-beta>)/sqrt2
    const int cut = 30;
    const Layout lc(1, {cut});
    auto s = vacuum_state(lc);
    const double theta = 1.6;
    apply_gate(snp(0, 0, theta, 0.0), s);
    const cplx beta = kick_alpha(theta, 0.0);
    Vector coh(cut + 1), cohm(cut + 1);
    double fact = 1.0;
    for (int n = 0; n <= cut; ++n) {
        if (n) fact *= n;
        coh(n) = std::exp(-std::norm(beta) / 2) * std::pow(beta, n) / std::sqrt(fact);
        cohm(n) = std::exp(-std::norm(beta) / 2) * std::pow(-beta, n) / std::sqrt(fact);
    }
    const double h = 1.0 / std::sqrt(2.0);
    Vector py(2), my(2);
    py << h, cplx(0, h);
    my << h, cplx(0, -h);
    const Vector cat = h * (product_state(lc, py, {coh}).amplitudes() + product_state(lc, my, {cohm}).amplitudes());
    r.checks.push_back(above("SNP cat-state fidelity", std::norm(cat.dot(s.amplitudes())), 1.0 - 1e-6));
    return r;
}

inline VerifyReport verify_trotter() {
    VerifyReport r{"trotter", {}};
    const auto pl = plan_n4(verify_params(4, 2.0, 3));
    CompressOptions keep_tail;
    keep_tail.drop_trailing = false;
    const auto counts = cnots_per_step(compress(plan_circuit(pl.main, 5), keep_tail), 5);
    Check c{"N=4 CNOTs per step from vacuum", counts == std::vector<int>{1, 2, 2, 2, 2}, 0.0, 0.0, {}};
    for (int k : counts) c.detail += std::to_string(k) + " ";
    r.checks.push_back(c);
    r.checks.push_back({"one-step CNOT count", compress(plan_circuit(pl.main, 1), false, Measurement::spin()).count(GateKind::CNOT) == 2,
                        0.0, 0.0, {}});

    auto p = verify_params(2, 4.0, 12);
    auto plan = plan_n2(p);
    const Layout l = plan_layout(plan, p.cutoffs);
    const auto plain = run_trotter(plan, vacuum_state(l));
    plan.compile_phases = true;
    const auto framed = run_trotter(plan, vacuum_state(l));
    double dframe = 0.0;
    for (std::size_t k = 0; k < plain.snapshots.size(); ++k)
        dframe = std::max(dframe, (plain.snapshots[k].amplitudes() - framed.snapshots[k].amplitudes()).cwiseAbs().maxCoeff());
    r.checks.push_back(below("phase-frame compiled vs uncompiled", dframe, 1e-10));

    const auto direct_plan = plan_n2(p, KickMechanism::DirectDisplacement);
    const auto direct = run_trotter(direct_plan, vacuum_state(plan_layout(direct_plan, p.cutoffs)));
    double dmech = 0.0;
    for (std::size_t k = 0; k < plain.snapshots.size(); ++k) {
        const auto& a = plain.snapshots[k];  // qubit 1 is the ancilla
        dmech = std::max(dmech, std::abs(qubit_marginal(a, 2)[1]) + std::abs(qubit_marginal(a, 2)[3]));
        dmech = std::max(dmech, max_marginal_deviation(a, direct.snapshots[k], 1));
    }
    r.checks.push_back(below("ancilla vs direct identity kick", dmech, 1e-10));

    auto fine = p;
    fine.trotter_dt = 0.01;
    fine.trotter_steps = 600;
    const auto fplan = plan_n2(fine, KickMechanism::DirectDisplacement);
    std::vector<int> rec;
    for (int k = 0; k <= 600; k += 50) rec.push_back(k);
    const Layout fl = plan_layout(fplan, fine.cutoffs);
    const auto run = run_trotter(fplan, vacuum_state(fl), rec);
    ExactPropagator prop(realize_matrix(reduced_hamiltonian(fine), fl));
    double d = 0.0;
    for (std::size_t k = 0; k < rec.size(); ++k)
        d = std::max(d, max_marginal_deviation(prop.evolve(vacuum_state(fl), run.times[k]), run.snapshots[k], 1));
    r.checks.push_back(below("Trotter dt=0.01 vs continuous (N=2, Lambda=12)", d, 5e-3));
    return r;
}

inline VerifyReport verify_convergence() {
    VerifyReport r{"convergence", {}};
    const auto p = verify_params(4, 2.0, 8);
    const auto t = cutoff_sweep(reduced_hamiltonian(p), {7, 8}, 5.0);
    Check c = below("N=4 g=2 T=5 mean occupation, Lambda 7 vs 8", t.final_deviation(), 0.02);
    std::ostringstream os;
    os << std::setprecision(6);
    for (double m : t.rows.back().mean_occupation) os << m << ' ';
    c.detail = "Lambda=8 occupations: " + os.str();
    r.checks.push_back(c);
    return r;
}

inline VerifyReport verify_readout() {
    VerifyReport r{"readout", {}};
    RunConfig cfg = preset_config("n4_qm1_g2");
    const auto truth = simulated_mode_distribution(cfg, 2, 3);
    SidebandModel m;
    m.n_max = choose_n_max(truth);
    const auto times = default_probe_times(m);
    const auto curve = synthesize_signal(truth, m, times);
    auto err = [&](const FitResult& f) {
        double e = 0.0;
        for (int n = 0; n <= m.n_max; ++n) e = std::max(e, std::abs(f.populations[static_cast<std::size_t>(n)] - truth[static_cast<std::size_t>(n)]));
        return e;
    };
    r.checks.push_back(below("noiseless fit of mode-2 t=3 distribution", err(fit_populations({times, 1000, curve, 0}, m)), 1e-4));
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) ok += err(fit_populations(sample_shots(curve, times, 1000, seed), m)) <= 0.05;
    r.checks.push_back({"1000-shot fits within 0.05 (of 100 seeds)", ok >= 95, double(ok), 95.0, {}});
    SidebandModel one;
    one.n_max = 4;
    const auto t1 = default_probe_times(one);
    const auto f1 = fit_populations({t1, 1000, synthesize_signal({0.0, 1.0}, one, t1), 0}, one);
    r.checks.push_back(below("noiseless single-Fock roundtrip", std::abs(f1.populations[1] - 1.0), 1e-6));
    return r;
}

}  // namespace detail

inline VerifyReport verify(const std::string& suite) {
    if (suite == "algebra") return detail::verify_algebra();
    if (suite == "gates") return detail::verify_gates();
    if (suite == "trotter") return detail::verify_trotter();
    if (suite == "convergence") return detail::verify_convergence();
    if (suite == "readout") return detail::verify_readout();
    throw ValidationError("unknown verify suite '" + suite + "'");
}

}  // namespace hybridsim
