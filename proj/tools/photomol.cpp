// photomol: simulator and analytic toolkit for storing an associating light
// pulse as a stable-molecule amplitude in a condensate, driven by flat
// key=value scenario configs.
//
// Exit codes: 0 ok | 1 configuration/degenerate input | 2 numerical/regime
// failure | 3 validation or comparison bound exceeded.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "photomol/analytic.hpp"
#include "photomol/config.hpp"
#include "photomol/csv.hpp"
#include "photomol/envelope.hpp"
#include "photomol/errors.hpp"
#include "photomol/grid.hpp"
#include "photomol/mb_solver.hpp"
#include "photomol/meanfield.hpp"
#include "photomol/params.hpp"
#include "photomol/transfer.hpp"
#include "photomol/version.hpp"

namespace fs = std::filesystem;
using namespace photomol;

namespace {

struct CliOptions {
    std::string config_path;
    std::string out_override;
    int jobs = 1;
    bool plot_data = false;
    bool full = false;
    bool validate = false;
};

std::string sanitize_note(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n') c = ';';
    return s;
}

// Resolve the time step (auto when unset) and honor the lab-frame CFL bound.
// Boundary-fed pulses cross the inflow plane at c; an adiabatically prepared
// pulse only needs its own group-velocity transit resolved.
void resolve_time_step(ScenarioConfig& cfg) {
    if (cfg.grid.dt <= 0.0) {
        double v_ref = cfg.params.c_light;
        if (cfg.init == InitState::polariton)
            v_ref = std::max(group_velocity_lossy(cfg.params, omega_at(cfg.schedule, 0.0)),
                             1e-12 * cfg.params.c_light);
        const double pulse_time = cfg.input.width / v_ref;
        double dt = auto_dt(cfg.params, cfg.schedule, pulse_time,
                            cfg.grid.span() / cfg.params.c_light);
        if (cfg.grid.frame == Frame::lab)
            dt = std::min(dt, cfg.grid.dz() / cfg.params.c_light);
        cfg.grid.dt = dt;
    }
}

std::vector<TimeSegment> build_segments(const ScenarioConfig& cfg) {
    const double dt = cfg.grid.dt;
    if (!(dt > 0.0)) throw config_error("time step dt did not resolve to a positive value");
    const double T = cfg.t_end > 0.0 ? cfg.t_end : dt * cfg.grid.n_t;
    if (!(T > 0.0)) throw config_error("no simulated time: set t_end, or dt and n_t");
    std::vector<TimeSegment> segs{{T, dt}};
    if (cfg.hold_duration > 0.0)
        segs.push_back({cfg.hold_duration, cfg.hold_dt > 0.0 ? cfg.hold_dt : dt});
    return segs;
}

fs::path prepare_out_dir(ScenarioConfig& cfg, const CliOptions& cli) {
    if (!cli.out_override.empty()) cfg.out_dir = cli.out_override;
    fs::path dir(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw config_error("cannot create output directory '" + cfg.out_dir + "'");
    return dir;
}

void write_manifest(const fs::path& dir, const ScenarioConfig& cfg) {
    std::ofstream out(dir / "manifest.cfg");
    if (!out) throw config_error("cannot write manifest in '" + dir.string() + "'");
    out << serialize_config(cfg);
    if (!out) throw config_error("manifest write failed");
}

void write_plot_xy(const fs::path& path, const std::vector<double>& x,
                   const std::vector<double>& y) {
    std::ofstream out(path);
    if (!out) throw config_error("cannot write plot file '" + path.string() + "'");
    for (std::size_t i = 0; i < x.size(); ++i)
        out << format_sci17(x[i]) << ' ' << format_sci17(y[i]) << '\n';
}

MbRunResult run_linearized_scenario(const ScenarioConfig& cfg) {
    SolveOptions opts;
    opts.init = cfg.init;
    opts.snapshot_stride = cfg.snapshot_stride;
    opts.segments = build_segments(cfg);
    return integrate_linearized(cfg.params, cfg.schedule, cfg.grid, cfg.input.make(), opts);
}

MfRunResult run_meanfield_scenario(const ScenarioConfig& cfg) {
    SolveOptions opts;
    opts.init = cfg.init;
    opts.snapshot_stride = cfg.snapshot_stride;
    opts.segments = build_segments(cfg);
    return integrate_meanfield(cfg.params, cfg.schedule, cfg.grid, cfg.input.make(), opts);
}

double scenario_end_time(const ScenarioConfig& cfg) {
    double T = cfg.t_end > 0.0 ? cfg.t_end : cfg.grid.dt * cfg.grid.n_t;
    return T + cfg.hold_duration;
}

// ---------------------------------------------------------------------- analytic
int cmd_analytic(ScenarioConfig cfg, const CliOptions& cli) {
    resolve_time_step(cfg);
    validate_scenario(cfg);
    const double T = scenario_end_time(cfg);
    if (!(T > 0.0)) throw config_error("analytic command needs t_end or dt and n_t");
    const fs::path dir = prepare_out_dir(cfg, cli);
    write_manifest(dir, cfg);

    const int n = cfg.analytic_samples;
    CsvWriter csv((dir / "analytic.csv").string());
    csv.row({"t", "omega", "theta", "vg_lossless", "vg_lossy", "gamma_cum", "alpha_cum",
             "eta"});
    std::vector<double> ts(n), etas(n), vgs(n);
    bool alpha_dead = false;
    for (int k = 0; k < n; ++k) {
        const double t = T * k / (n - 1);
        const double om = omega_at(cfg.schedule, t);
        const double gamma_cum = gamma_integral(cfg.params, cfg.schedule, t);
        double alpha_cum = std::numeric_limits<double>::quiet_NaN();
        if (!alpha_dead) {
            try {
                alpha_cum = alpha_integral(cfg.params, cfg.schedule, t);
            } catch (const numerical_error&) {
                alpha_dead = true;  // control hit zero while still changing
            }
        }
        const double eta = std::exp(-gamma_cum);
        ts[k] = t;
        etas[k] = eta;
        vgs[k] = group_velocity_lossy(cfg.params, om);
        csv.row({format_sci17(t), format_sci17(om),
                 format_sci17(mixing_angle(cfg.params, om)),
                 format_sci17(group_velocity_lossless(cfg.params, om)),
                 format_sci17(vgs[k]), format_sci17(gamma_cum), format_sci17(alpha_cum),
                 format_sci17(eta)});
    }
    csv.close();
    if (alpha_dead)
        std::cerr << "note: alpha_cum is nan past the time the control field reaches zero"
                  << std::endl;
    if (cli.plot_data) {
        write_plot_xy(dir / "eta_vs_t.dat", ts, etas);
        write_plot_xy(dir / "vg_vs_t.dat", ts, vgs);
    }
    const DetuningCheck det = check_small_detuning(cfg.params);
    if (!det.ok) std::cerr << "note: " << det.note << std::endl;
    return 0;
}

// ---------------------------------------------------------------------- simulate
void write_fields_csv(const fs::path& path, const MbRunResult& run) {
    CsvWriter csv(path.string());
    csv.row({"t", "z", "re_e", "im_e", "re_p", "im_p", "re_s", "im_s"});
    for (const auto& fs_ : run.history) {
        const std::string t = format_sci17(fs_.tau);
        for (int j = 0; j < run.grid.n_z; ++j) {
            csv.row({t, format_sci17(run.grid.z_at(j)), format_sci17(fs_.e[j].real()),
                     format_sci17(fs_.e[j].imag()), format_sci17(fs_.p[j].real()),
                     format_sci17(fs_.p[j].imag()), format_sci17(fs_.s[j].real()),
                     format_sci17(fs_.s[j].imag())});
        }
    }
    csv.close();
}

int cmd_simulate(ScenarioConfig cfg, const CliOptions& cli) {
    resolve_time_step(cfg);
    validate_scenario(cfg);
    const fs::path dir = prepare_out_dir(cfg, cli);
    write_manifest(dir, cfg);

    const Envelope env = cfg.input.make();
    const MbRunResult run = run_linearized_scenario(cfg);
    write_fields_csv(dir / "fields.csv", run);

    TransferReport rep = build_transfer_report(run, env, cfg.alpha);

    // Optional nonlinear cross-check on the same scenario.
    bool have_mf = false;
    MfRunResult mf;
    double field_diff = std::numeric_limits<double>::quiet_NaN();
    if (cli.full) {
        mf = run_meanfield_scenario(cfg);
        have_mf = true;
        field_diff = field_history_difference(run, mf);
        rep.molecular_fraction_max = mf.molecular_fraction_max;
    }

    CsvWriter csv((dir / "report.csv").string());
    csv.row({"key", "value"});
    auto put = [&csv](const std::string& k, double v) { csv.row({k, format_sci17(v)}); };
    put("eta_numeric", rep.eta_numeric);
    put("eta_analytic", rep.eta_analytic);
    put("mode_overlap", rep.mode_overlap);
    put("phase", rep.phase);
    put("vg_measured", rep.vg_measured);
    put("vg_predicted", rep.vg_predicted);
    put("fidelity_coherent", rep.fidelity_coherent);
    put("conservation_residual", rep.conservation_residual);
    put("molecular_fraction_max", rep.molecular_fraction_max);
    put("injected_norm2", run.injected_norm2);
    put("outflow_norm2", run.outflow_norm2);
    put("stored_norm2_initial", run.stored_norm2_initial);
    put("stored_norm2_final", run.stored_norm2_final);
    put("composite_scale", run.composite_scale);
    csv.row({"steps_total", format_int(run.steps_total)});
    if (have_mf) {
        put("mf_atom_residual", mf.atom_residual);
        put("mf_photon_residual", mf.photon_residual);
        put("mf_molecular_fraction_max", mf.molecular_fraction_max);
        put("field_l2_difference", field_diff);
        csv.row({"mf_steps_total", format_int(mf.steps_total)});
    }
    csv.row({"notes", sanitize_note(rep.notes)});
    csv.close();

    if (cli.plot_data) {
        const auto& fin = run.final_state();
        std::vector<double> zs(run.grid.n_z), ae(run.grid.n_z), as(run.grid.n_z);
        for (int j = 0; j < run.grid.n_z; ++j) {
            zs[j] = run.grid.z_at(j);
            ae[j] = std::abs(fin.e[j]);
            as[j] = std::abs(fin.s[j]);
        }
        write_plot_xy(dir / "final_abs_e.dat", zs, ae);
        write_plot_xy(dir / "final_abs_s.dat", zs, as);
    }

    if (cli.validate) {
        std::vector<std::string> failures;
        const bool lossless = cfg.params.gamma_b == 0.0 && cfg.params.gamma_e == 0.0 &&
                              cfg.params.gamma_c == 0.0;
        if (lossless && !(run.conservation_residual <= 1e-6))
            failures.push_back("conservation residual " +
                               format_shortest(run.conservation_residual) + " > 1e-6");
        if (std::isfinite(rep.eta_numeric) && rep.eta_numeric > 1.0 + 1e-9)
            failures.push_back("eta_numeric exceeds 1");
        if (std::isfinite(rep.mode_overlap) && rep.mode_overlap > 1.0 + 1e-9)
            failures.push_back("mode_overlap exceeds 1");
        if (have_mf) {
            if (lossless && !(mf.atom_residual <= 1e-6))
                failures.push_back("atom-number residual " +
                                   format_shortest(mf.atom_residual) + " > 1e-6");
            if (mf.molecular_fraction_max < 1e-3 && !(field_diff <= 0.01))
                failures.push_back("nonlinear/linearized field mismatch " +
                                   format_shortest(field_diff) +
                                   " > 1% despite weak excitation");
        }
        if (!failures.empty()) {
            for (const auto& f : failures) std::cerr << "validation: " << f << std::endl;
            return 3;
        }
    }
    return 0;
}

// ---------------------------------------------------------------------- compare
int cmd_compare(ScenarioConfig cfg, const CliOptions& cli) {
    resolve_time_step(cfg);
    validate_scenario(cfg);
    const fs::path dir = prepare_out_dir(cfg, cli);
    write_manifest(dir, cfg);

    const Envelope env = cfg.input.make();
    const MbRunResult run = run_linearized_scenario(cfg);
    const CompareResult cr = compare_to_analytic(run, env, cfg.analytic_samples);

    CsvWriter csv((dir / "compare.csv").string());
    csv.row({"t", "l2_rel_error"});
    std::vector<double> ts, errs;
    for (const auto& row : cr.rows) {
        csv.row({format_sci17(row.tau), format_sci17(row.rel_error)});
        if (row.in_regime) {
            ts.push_back(row.tau);
            errs.push_back(row.rel_error);
        }
    }
    csv.row({"summary_max", format_sci17(cr.max_rel_error)});
    csv.close();
    if (!cr.note.empty()) std::cerr << "note: " << cr.note << std::endl;
    if (cli.plot_data) write_plot_xy(dir / "compare_error.dat", ts, errs);

    if (cr.max_rel_error > cfg.compare_max_error) {
        std::cerr << "comparison failed: max relative L2 error "
                  << format_shortest(cr.max_rel_error) << " exceeds bound "
                  << format_shortest(cfg.compare_max_error) << std::endl;
        return 3;
    }
    return 0;
}

// ---------------------------------------------------------------------- sweep
struct SweepRow {
    std::vector<double> keys;
    double eta_numeric = std::numeric_limits<double>::quiet_NaN();
    double eta_analytic = std::numeric_limits<double>::quiet_NaN();
    double vg_limit = std::numeric_limits<double>::quiet_NaN();
    double fidelity = std::numeric_limits<double>::quiet_NaN();
    double molecular_fraction_max = std::numeric_limits<double>::quiet_NaN();
    std::string status = "ok";
};

SweepRow run_sweep_point(const ScenarioConfig& base, const std::vector<double>& vals,
                         const std::vector<std::string>& keys) {
    SweepRow row;
    row.keys = vals;
    ScenarioConfig cfg = base;
    try {
        for (std::size_t i = 0; i < keys.size(); ++i) set_numeric_key(cfg, keys[i], vals[i]);
        resolve_time_step(cfg);
        validate_scenario(cfg);
        row.vg_limit = regime_estimates(cfg.params).v_g_limit;
        const double T = scenario_end_time(cfg);
        row.eta_analytic = std::exp(-gamma_integral(cfg.params, cfg.schedule, T));
        const Envelope env = cfg.input.make();
        const MbRunResult run = run_linearized_scenario(cfg);
        const EtaExtraction ex = extract_eta(run, env);
        row.eta_numeric = ex.eta_numeric;
        row.fidelity = coherent_fidelity(ex.eta_numeric, cfg.alpha);
        row.molecular_fraction_max =
            weak_excitation_check(cfg.alpha * cfg.alpha, ex.eta_numeric, cfg.params.n_atoms)
                .ratio;
    } catch (const config_error&) {
        row.status = "config-error";
    } catch (const degenerate_input_error&) {
        row.status = "degenerate-input";
    } catch (const regime_error&) {
        row.status = "regime-error";
    } catch (const numerical_error&) {
        row.status = "numerical-error";
    }
    return row;
}

int cmd_sweep(ScenarioConfig cfg, const CliOptions& cli) {
    validate_sweep(cfg);
    const fs::path dir = prepare_out_dir(cfg, cli);
    write_manifest(dir, cfg);
    const fs::path points_dir = dir / "points";
    std::error_code ec;
    fs::create_directories(points_dir, ec);
    if (ec) throw config_error("cannot create sweep points directory");

    std::vector<std::string> keys{cfg.sweep.key};
    const std::vector<double> v1 = sweep_values(cfg.sweep);
    std::vector<double> v2{0.0};
    if (cfg.sweep2.active()) {
        keys.push_back(cfg.sweep2.key);
        v2 = sweep_values(cfg.sweep2);
    }

    struct Task {
        std::vector<double> vals;
    };
    std::vector<Task> tasks;
    for (double a : v1) {
        for (double b : v2) {
            Task t;
            t.vals = cfg.sweep2.active() ? std::vector<double>{a, b} : std::vector<double>{a};
            tasks.push_back(std::move(t));
        }
    }

    std::vector<SweepRow> rows(tasks.size());
    std::atomic<std::size_t> next{0};
    const int jobs = std::max(1, cli.jobs);
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) break;
            rows[i] = run_sweep_point(cfg, tasks[i].vals, keys);
            CsvWriter pt((points_dir / (std::to_string(i) + ".csv")).string());
            pt.row({"index", "status"});
            pt.row({format_int(static_cast<long long>(i)), rows[i].status});
            pt.close();
        }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    CsvWriter csv((dir / "sweep.csv").string());
    std::vector<std::string> header;
    for (const auto& k : keys) header.push_back(k);
    for (const char* c : {"eta_numeric", "eta_analytic", "vg_limit", "fidelity",
                          "molecular_fraction_max", "status"})
        header.push_back(c);
    csv.row(header);
    for (const auto& row : rows) {
        std::vector<std::string> cells;
        for (double v : row.keys) cells.push_back(format_sci17(v));
        cells.push_back(format_sci17(row.eta_numeric));
        cells.push_back(format_sci17(row.eta_analytic));
        cells.push_back(format_sci17(row.vg_limit));
        cells.push_back(format_sci17(row.fidelity));
        cells.push_back(format_sci17(row.molecular_fraction_max));
        cells.push_back(row.status);
        csv.row(cells);
    }
    csv.close();
    return 0;
}

// ---------------------------------------------------------------------- estimates
int cmd_estimates(ScenarioConfig cfg, const CliOptions& cli) {
    cfg.params.validate();
    const fs::path dir = prepare_out_dir(cfg, cli);
    write_manifest(dir, cfg);
    const RegimeEstimates est = regime_estimates(cfg.params);
    std::cout << "collective coupling G = " << format_shortest(cfg.params.G()) << " s^-1\n";
    std::cout << "gamma_be = " << format_shortest(cfg.params.gamma_be())
              << " s^-1, gamma_bc = " << format_shortest(cfg.params.gamma_bc())
              << " s^-1\n";
    std::cout << "v_g_limit = " << format_shortest(est.v_g_limit) << " m/s\n";
    std::cout << "t_max = " << format_shortest(est.t_max) << " s\n";
    std::cout << "z_max = " << format_shortest(est.z_max) << " m\n";
    std::cout << "note: at {gamma_be=2e7 s^-1, gamma_bc=5e3 s^-1, N=3e6, g_tilde=50 s^-1} "
                 "the velocity limit evaluates to about 1.33e3 m/s\n";
    std::cout << "note: at {N=1e8, g_tilde=50 s^-1, same rates} the same formula gives "
                 "about 1.2 m/s; a commonly cited figure for that point is 0.13 m/s "
                 "(about 9x lower) — this tool reports the formula value\n";
    const DetuningCheck det = check_small_detuning(cfg.params);
    if (!det.ok) std::cout << "note: " << det.note << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"associating-light to molecular-condensate transfer toolkit"};
    app.require_subcommand(1);
    app.fallthrough(true);

    CliOptions cli;
    app.add_option("--config", cli.config_path, "scenario config file (key = value lines)")
        ->required();
    app.add_option("--out", cli.out_override, "output directory (overrides config)");
    app.add_option("--jobs", cli.jobs, "concurrent sweep points")->default_val(1);
    app.add_flag("--plot-data", cli.plot_data, "also write two-column plot files");

    CLI::App* sub_analytic = app.add_subcommand("analytic", "closed-form curves to CSV");
    CLI::App* sub_simulate = app.add_subcommand("simulate", "integrate the scenario");
    sub_simulate->add_flag("--full", cli.full, "also run the nonlinear mean-field solver");
    sub_simulate->add_flag("--validate", cli.validate, "fail (exit 3) on invariant breaches");
    CLI::App* sub_compare =
        app.add_subcommand("compare", "simulated vs analytic envelopes");
    CLI::App* sub_sweep = app.add_subcommand("sweep", "run a parameter sweep");
    CLI::App* sub_estimates = app.add_subcommand("estimates", "operating-limit table");

    CLI11_PARSE(app, argc, argv);

    try {
        ScenarioConfig cfg = parse_config_file(cli.config_path);
        if (sub_analytic->parsed()) return cmd_analytic(std::move(cfg), cli);
        if (sub_simulate->parsed()) return cmd_simulate(std::move(cfg), cli);
        if (sub_compare->parsed()) return cmd_compare(std::move(cfg), cli);
        if (sub_sweep->parsed()) return cmd_sweep(std::move(cfg), cli);
        if (sub_estimates->parsed()) return cmd_estimates(std::move(cfg), cli);
        std::cerr << "no subcommand selected" << std::endl;
        return 1;
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << std::endl;
        return 1;
    } catch (const degenerate_input_error& e) {
        std::cerr << "degenerate input: " << e.what() << std::endl;
        return 1;
    } catch (const regime_error& e) {
        std::cerr << "regime error: " << e.what() << std::endl;
        return 2;
    } catch (const numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << std::endl;
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "unexpected failure: " << e.what() << std::endl;
        return 2;
    }
}
