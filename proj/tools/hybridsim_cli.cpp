// hybridsim command line: Hamiltonians, circuits, evolution, cutoff sweeps,
// readout fits, verification suites and preset runs.
//
// exit codes: 0 ok, 2 validation error, 3 numerical failure

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "hybridsim/experiments.hpp"

using namespace hybridsim;

namespace {

constexpr int kValidation = 2;
constexpr int kNumerical = 3;

// model flags mirror the config keys
struct ModelFlags {
    std::string config_file;
    std::string preset;
    std::map<std::string, std::string> values;

    void add(CLI::App* app) {
        app->add_option("--config", config_file, "key=value config file");
        app->add_option("--preset", preset, "start from a preset's parameters");
        for (const char* key : {"n_sites", "lattice_spacing", "fermion_mass", "boson_mass", "coupling", "charge_sector",
                                "cutoff", "cutoffs", "trotter_dt", "trotter_steps"}) {
            std::string flag = std::string("--") + key;
            std::replace(flag.begin(), flag.end(), '_', '-');
            app->add_option_function<std::string>(flag, [this, key](const std::string& v) { values[key] = v; },
                                                  std::string("config key ") + key);
        }
    }

    [[nodiscard]] RunConfig resolve() const {
        RunConfig rc;
        if (!preset.empty()) rc = preset_config(preset);
        else rc.preset = "custom";
        ModelParams base = rc.params;
        if (!config_file.empty()) base = load_config(config_file, base);
        ConfigBuilder b(base);
        for (const auto& [k, v] : values) b.set(k, v);
        rc.params = b.finish();
        return rc;
    }
};

std::ostream& output(const std::string& dir, const std::string& name, std::ofstream& file) {
    if (dir.empty()) return std::cout;
    fs::create_directories(dir);
    file.open(fs::path(dir) / name);
    if (!file) throw ValidationError("cannot write " + (fs::path(dir) / name).string());
    return file;
}

void check_format(const std::string& f) {
    if (f != "csv") throw ValidationError("unsupported --format '" + f + "' (only csv)");
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(detail::parse_int("list", detail::trim(item)));
    if (out.empty()) throw ValidationError("empty list");
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hybrid qubit-boson quench emulator"};
    app.require_subcommand(1);
    std::string out_dir, format = "csv";
    std::uint64_t seed = 1;
    app.add_option("--out-dir", out_dir, "output directory (stdout when empty, where applicable)");
    app.add_option("--format", format, "table format")->capture_default_str();
    app.add_option("--seed", seed, "random seed")->capture_default_str();

    // hamiltonian
    auto* cmd_h = app.add_subcommand("hamiltonian", "print the full or sector-reduced Hamiltonian");
    ModelFlags mf_h;
    mf_h.add(cmd_h);
    bool full = false;
    cmd_h->add_flag("--full", full, "unreduced Hamiltonian on all N qubits");

    // circuit
    auto* cmd_c = app.add_subcommand("circuit", "emit the Trotter circuit in the gate text format");
    ModelFlags mf_c;
    mf_c.add(cmd_c);
    int steps_c = -1, measure_mode = -1;
    bool no_compress = false, native = false, unknown_initial = false, compile_phases = false;
    std::string plan_part = "main";
    cmd_c->add_option("--steps", steps_c, "number of steps (default: trotter_steps)");
    cmd_c->add_flag("--no-compress", no_compress, "skip CNOT cancellation and elision");
    cmd_c->add_flag("--unknown-initial", unknown_initial, "do not assume the vacuum initial state");
    cmd_c->add_option("--measure-mode", measure_mode, "compress for a measurement of this mode (default: spins)");
    cmd_c->add_flag("--native", native, "lower CNOT/ZKICK to MS, rotations and SNP");
    cmd_c->add_flag("--compile-phases", compile_phases, "absorb mode phases into the phase frame");
    cmd_c->add_option("--part", plan_part, "main | mode2 (N=4 only)")->check(CLI::IsMember({"main", "mode2"}));

    // evolve
    auto* cmd_e = app.add_subcommand("evolve", "time series of spin and Fock marginals");
    ModelFlags mf_e;
    mf_e.add(cmd_e);
    std::string method = "exact";
    int samples = 1;
    cmd_e->add_option("--method", method, "exact | trotter")->check(CLI::IsMember({"exact", "trotter"}));
    cmd_e->add_option("--samples-per-step", samples, "exact grid points per trotter_dt");

    // sweep-cutoff
    auto* cmd_s = app.add_subcommand("sweep-cutoff", "mean occupations vs cutoff from continuous evolution");
    ModelFlags mf_s;
    mf_s.add(cmd_s);
    std::string sweep_list = "7,8";
    double sweep_time = -1.0, max_dev = -1.0;
    cmd_s->add_option("--sweep", sweep_list, "ascending cutoffs")->capture_default_str();
    cmd_s->add_option("--time", sweep_time, "evolution time (default: trotter_dt * trotter_steps)");
    cmd_s->add_option("--max-deviation", max_dev, "fail (exit 3) if the last relative deviation is not below this");

    // readout-fit
    auto* cmd_r = app.add_subcommand("readout-fit", "fit Fock populations from a sideband dataset, or run the demo");
    ModelFlags mf_r;
    mf_r.add(cmd_r);
    std::string data_file;
    SidebandModel sb;
    int n_max = 0, resamples = 200, shots = 1000, mode = 2, step = 3;
    bool weighted = false, demo = false;
    cmd_r->add_option("--data", data_file, "dataset CSV (t,excited_fraction,shots)");
    cmd_r->add_flag("--demo", demo, "simulate, sample, fit and bootstrap a preset mode");
    cmd_r->add_option("--omega1", sb.omega1)->capture_default_str();
    cmd_r->add_option("--gamma1", sb.gamma1)->capture_default_str();
    cmd_r->add_option("--n-max", n_max, "fit cutoff (default: 6 for data, from the simulation for --demo)");
    cmd_r->add_option("--resamples", resamples)->capture_default_str();
    cmd_r->add_option("--shots", shots)->capture_default_str();
    cmd_r->add_option("--mode", mode)->capture_default_str();
    cmd_r->add_option("--step", step)->capture_default_str();
    cmd_r->add_flag("--weighted", weighted, "binomial-variance weights");

    // verify
    auto* cmd_v = app.add_subcommand("verify", "run verification suites, JSON verdicts on stdout");
    std::vector<std::string> suites;
    cmd_v->add_option("--suite", suites, "algebra, gates, trotter, convergence, readout (default: all)")
        ->check(CLI::IsMember(verify_suites()));

    // preset
    auto* cmd_p = app.add_subcommand("preset", "full reproduction run into a content-addressed directory");
    std::string preset_name;
    std::vector<std::string> overrides;
    cmd_p->add_option("name", preset_name, "n2_q0 | n4_qm1_g2 | n4_qm1_g0")->required();
    cmd_p->add_option("--set", overrides, "key=value override (model or run keys)");

    // global flags may follow the subcommand
    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kValidation;
    }

    try {
        check_format(format);
        std::ofstream file;

        if (*cmd_h) {
            const auto p = mf_h.resolve().params;
            const OperatorSum h = full ? build_full_hamiltonian(p) : detail::reduced_hamiltonian(p);
            auto& os = output(out_dir, "hamiltonian.txt", file);
            os << "# mode energies:";
            for (int m = 0; m < p.n_sites; ++m) os << ' ' << std::setprecision(12) << mode_energy(p, m);
            os << '\n';
            write_operator_sum(os, h);
        } else if (*cmd_c) {
            const auto p = mf_c.resolve().params;
            auto plans = config_plans(p);
            if (plan_part == "mode2" && plans.size() < 2) throw ValidationError("--part mode2 needs N=4, Q=-1");
            TrotterPlan plan = plans[plan_part == "mode2" ? 1 : 0];
            const int steps = steps_c < 0 ? plan.steps : steps_c;
            if (steps < 0 || steps > 100000) throw ValidationError("--steps out of range");
            Circuit c = plan_circuit(plan, steps);
            std::map<int, double> residual;
            if (compile_phases) {
                auto cc = compile_mode_phases(c);
                c = std::move(cc.circuit);
                residual = std::move(cc.residual);
            }
            if (!no_compress)
                c = compress(c, !unknown_initial, measure_mode >= 0 ? Measurement::of_mode(measure_mode) : Measurement::spin(plan.n_qubits));
            if (native) c = lower_to_native(c);
            auto& os = output(out_dir, "circuit_" + plan.name + ".txt", file);
            write_circuit(os, c);
            for (const auto& [m, th] : residual) os << "# pending phase m" << m << " theta=" << std::setprecision(17) << th << '\n';
            std::ofstream meta_file;
            if (!out_dir.empty()) {
                meta_file.open(fs::path(out_dir) / ("circuit_" + plan.name + ".meta.jsonl"));
                for (std::size_t g = 0; g < c.ops.size(); ++g)
                    meta_file << nlohmann::json{{"index", g}, {"step", c.ops[g].step}, {"label", c.ops[g].label}}.dump() << '\n';
            }
            std::cerr << "cnots per step:";
            for (int k : cnots_per_step(c, steps)) std::cerr << ' ' << k;
            std::cerr << '\n';
        } else if (*cmd_e) {
            RunConfig rc = mf_e.resolve();
            const auto& p = rc.params;
            SeriesSet set;
            if (method == "exact") {
                rc.continuous_cutoff = *std::max_element(p.cutoffs.begin(), p.cutoffs.end());
                rc.samples_per_step = samples;
                if (std::adjacent_find(p.cutoffs.begin(), p.cutoffs.end(), std::not_equal_to<>()) != p.cutoffs.end())
                    throw ValidationError("evolve --method exact needs a uniform cutoff");
                set = detail::continuous_series(rc);
            } else {
                std::vector<std::string> warnings, names;
                std::vector<Circuit> circuits;
                set = detail::trotter_series(rc, warnings, circuits, names);
                for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
            }
            if (out_dir.empty()) {
                std::cout << detail::table_csv(set.spin, "P_");
            } else {
                std::vector<std::string> files;
                fs::create_directories(out_dir);
                const fs::path d(out_dir);
                detail::write_file(d / (method + "_spin.csv"), detail::table_csv(set.spin, "P_"), files);
                for (const auto& [m, t] : set.modes)
                    detail::write_file(d / (method + "_mode" + std::to_string(m) + ".csv"), detail::table_csv(t, "P"), files);
                detail::write_file(d / (method + "_mean_occupation.csv"),
                                   detail::per_mode_csv(set.times, set.mean_occupation, p.n_sites, "N"), files);
                for (const auto& f : files) std::cout << (d / f).string() << '\n';
            }
        } else if (*cmd_s) {
            const auto p = mf_s.resolve().params;
            const double t = sweep_time >= 0 ? sweep_time : p.total_time();
            const auto table = cutoff_sweep(detail::reduced_hamiltonian(p), parse_int_list(sweep_list), t);
            auto& os = output(out_dir, "cutoff_sweep.csv", file);
            os << "cutoff";
            for (int m : table.modes) os << ",N" << m;
            os << ",max_rel_deviation\n" << std::setprecision(12);
            for (const auto& row : table.rows) {
                os << row.cutoff;
                for (double x : row.mean_occupation) os << ',' << x;
                os << ',' << row.max_rel_deviation << '\n';
            }
            if (max_dev > 0 && !(table.final_deviation() < max_dev)) {
                std::cerr << "cutoff deviation " << table.final_deviation() << " is not below " << max_dev << '\n';
                return kNumerical;
            }
        } else if (*cmd_r) {
            FitOptions fo;
            fo.weighted = weighted;
            if (demo) {
                RunConfig rc = mf_r.resolve();
                if (mf_r.preset.empty() && mf_r.config_file.empty() && mf_r.values.empty()) rc = preset_config("n4_qm1_g2");
                ReadoutDemoOptions o;
                o.mode = mode;
                o.step = step;
                o.shots = shots;
                o.seed = seed;
                o.resamples = resamples;
                o.n_max = n_max;
                o.model = sb;
                o.fit = fo;
                const auto rep = run_readout_demo(rc, o, out_dir.empty() ? fs::path("runs") : fs::path(out_dir));
                std::cout << rep.dir.string() << '\n';
                std::ifstream cmp(rep.dir / "readout_comparison.csv");
                std::cout << cmp.rdbuf();
            } else {
                if (data_file.empty()) throw ValidationError("readout-fit needs --data or --demo");
                std::ifstream in(data_file);
                if (!in) throw ValidationError("cannot open " + data_file);
                const auto d = read_dataset_csv(in);
                sb.n_max = n_max > 0 ? n_max : 6;
                const auto fit = fit_populations(d, sb, fo);
                const auto boot = bootstrap(d, sb, resamples, seed, fo);
                auto& os = output(out_dir, "readout_fit.csv", file);
                write_fit_csv(os, fit, &boot);
                std::cerr << "residual norm " << fit.residual_norm << ", condition " << fit.condition << '\n';
                for (const auto& msg : boot.diagnostics) std::cerr << "bootstrap: " << msg << '\n';
            }
        } else if (*cmd_v) {
            if (suites.empty()) suites = verify_suites();
            nlohmann::json all = nlohmann::json::array();
            bool ok = true;
            for (const auto& s : suites) {
                const auto r = verify(s);
                ok = ok && r.passed();
                all.push_back(r.to_json());
            }
            auto& os = output(out_dir, "verify.json", file);
            os << all.dump(2) << '\n';
            if (!ok) return kNumerical;
        } else if (*cmd_p) {
            RunConfig rc = preset_config(preset_name);
            for (const auto& kv : overrides) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) throw ValidationError("--set expects key=value, got '" + kv + "'");
                apply_override(rc, detail::trim(kv.substr(0, eq)), detail::trim(kv.substr(eq + 1)));
            }
            const auto rep = run_preset(rc, out_dir.empty() ? fs::path("runs") : fs::path(out_dir));
            for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
            std::cout << rep.dir.string() << '\n';
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << '\n';
        return kNumerical;
    }
    return 0;
}
