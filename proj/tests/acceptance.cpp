// Acceptance suite for the light-to-molecule storage toolkit.
//
// Each criterion prints exactly one line:
//   [PASS] criterion  N: <what is being checked> | <measured values and bounds>
// and the process exit status is the number of failed criteria. Tolerances
// are pinned in code next to each check. Criteria 1, 2 and 6 drive the
// command-line tool; the rest call the library directly.

#include <sys/wait.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "photomol/analytic.hpp"
#include "photomol/csv.hpp"
#include "photomol/envelope.hpp"
#include "photomol/mb_solver.hpp"
#include "photomol/meanfield.hpp"
#include "photomol/transfer.hpp"

namespace fs = std::filesystem;
using namespace photomol;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string g6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// ---- process + file helpers for the CLI-driven criteria -------------------

const char* kScratch = "acceptance_scratch";

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct CliOut {
    int code = -1;
    std::string out;
    std::string err;
};

CliOut run_cli(const std::string& args) {
    fs::create_directories(kScratch);
    static int seq = 0;
    ++seq;
    const fs::path so = fs::path(kScratch) / ("stdout_" + std::to_string(seq) + ".txt");
    const fs::path se = fs::path(kScratch) / ("stderr_" + std::to_string(seq) + ".txt");
    const std::string cmd = std::string(PHOTOMOL_CLI_PATH) + " " + args + " > " +
                            so.string() + " 2> " + se.string();
    const int raw = std::system(cmd.c_str());
    CliOut r;
    r.code = (raw != -1 && WIFEXITED(raw)) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(so);
    r.err = slurp(se);
    return r;
}

std::string write_cfg(const std::string& name, const std::string& text) {
    fs::create_directories(kScratch);
    const fs::path p = fs::path(kScratch) / name;
    std::ofstream(p) << text;
    return p.string();
}

// Parses the number out of a "label = <value> unit" stdout line.
double stdout_number(const std::string& text, const std::string& label) {
    const std::string prefix = label + " = ";
    const std::size_t at = text.find(prefix);
    if (at == std::string::npos) throw std::runtime_error("missing stdout line: " + label);
    const std::size_t b = at + prefix.size();
    const std::size_t e = text.find(' ', b);
    return parse_double(text.substr(b, e - b), label);
}

// ---- scenario helpers ------------------------------------------------------

// Scaled medium with c = 1 so lengths and times share one scale.
PhysicalParams unit_params(double G) {
    PhysicalParams p;
    p.c_light = 1.0;
    p.n_atoms = 1.0e6;
    p.g_tilde = G / p.n_atoms;
    p.length = 1.0;
    p.gamma_b = p.gamma_e = p.gamma_c = 0.0;
    return p;
}

Grid1D box(double z_min, double z_max, int n_z) {
    Grid1D g;
    g.z_min = z_min;
    g.z_max = z_max;
    g.n_z = n_z;
    return g;
}

SolveOptions segment_opts(double T, double dt, InitState init, int stride) {
    SolveOptions o;
    o.init = init;
    o.segments = {{T, dt}};
    o.snapshot_stride = stride;
    return o;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

int run_criterion(int id, const std::string& label, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
        o = fn();
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail = std::string("unexpected exception: ") + e.what();
    }
    std::printf("[%s] criterion %2d: %s | %s\n", o.pass ? "PASS" : "FAIL", id,
                label.c_str(), o.detail.c_str());
    std::fflush(stdout);
    return o.pass ? 0 : 1;
}

}  // namespace

int main() {
    int failures = 0;

    failures += run_criterion(
        1, "velocity floor reproduces the reference operating points", [] {
            constexpr double tol = 5.0e-3;  // 0.5 %
            const std::string ref = write_cfg("c1_ref.cfg",
                                              "gamma_e = 2e7\n"
                                              "gamma_c = 5e3\n"
                                              "out_dir = acceptance_scratch/c1_ref\n");
            const CliOut a = run_cli("estimates --config " + ref);
            if (a.code != 0)
                return Outcome{false, "estimates exited with code " + std::to_string(a.code)};
            const double v_ref = stdout_number(a.out, "v_g_limit");

            const std::string dense = write_cfg("c1_dense.cfg",
                                                "gamma_e = 2e7\n"
                                                "gamma_c = 5e3\n"
                                                "n_atoms = 1e8\n"
                                                "out_dir = acceptance_scratch/c1_dense\n");
            const CliOut b = run_cli("estimates --config " + dense);
            if (b.code != 0)
                return Outcome{false, "estimates exited with code " + std::to_string(b.code)};
            const double v_dense = stdout_number(b.out, "v_g_limit");
            const bool disclosed = b.out.find("0.13 m/s") != std::string::npos;

            Outcome o;
            o.pass = std::abs(v_ref / 1333.3274074337447 - 1.0) <= tol &&
                     std::abs(v_dense / 1.2 - 1.0) <= tol && disclosed;
            o.detail = "v_g[N=3e6] = " + g6(v_ref) + " m/s (want 1333.33 +-0.5%), v_g[N=1e8] = " +
                       g6(v_dense) + " m/s (want 1.2 +-0.5%), 0.13 m/s note " +
                       (disclosed ? "shown" : "MISSING");
            return o;
        });

    failures += run_criterion(
        2, "storage-time estimate follows the two-photon linewidth", [] {
            constexpr double tol = 1.0e-12;
            const std::string cfg = write_cfg("c2.cfg",
                                              "gamma_c = 1e3\n"
                                              "out_dir = acceptance_scratch/c2\n");
            const CliOut r = run_cli("estimates --config " + cfg);
            if (r.code != 0)
                return Outcome{false, "estimates exited with code " + std::to_string(r.code)};
            const double t_max = stdout_number(r.out, "t_max");
            Outcome o;
            o.pass = std::abs(t_max / 1.0e-3 - 1.0) <= tol;
            o.detail = "t_max = " + g6(t_max) +
                       " s at gamma_bc = 1e3 s^-1 (want 1e-3 s, rel tol 1e-12)";
            return o;
        });

    failures += run_criterion(
        3, "complete storage reproduces the input mode shape", [] {
            constexpr double eta_tol = 1.0e-3;
            constexpr double overlap_min = 0.999;
            constexpr double phase_tol = 1.0e-2;
            PhysicalParams p = unit_params(1.0);  // lossless, G = 1
            PulseSchedule s;
            s.shape = PulseShape::tanh_off;
            s.omega0 = 50.0;       // strong initial control: v_g ~ c on entry
            s.t_switch = 140.0;
            s.tau_switch = 20.0;   // slow against 1/G = 1
            const Envelope env = gaussian_pulse(-80.0, 20.0, 1.0);
            const auto run = integrate_linearized(
                p, s, box(0.0, 200.0, 1025), env,
                segment_opts(260.0, 0.01, InitState::ground, 1000000));
            const EtaExtraction ex = extract_eta(run, env);
            const double dphi = std::abs(ex.phase - M_PI);  // stored amplitude is -env0
            Outcome o;
            o.pass = std::abs(ex.eta_numeric - 1.0) <= eta_tol &&
                     ex.mode_overlap >= overlap_min && dphi <= phase_tol;
            o.detail = "eta = " + g6(ex.eta_numeric) + " (want 1 +-0.001), overlap = " +
                       g6(ex.mode_overlap) + " (want >= 0.999), |phase - pi| = " + g6(dphi) +
                       " (want <= 0.01)";
            return o;
        });

    failures += run_criterion(
        4, "held molecules decay at the two-photon rate", [] {
            constexpr double tol = 1.0e-2;  // 1 %
            PhysicalParams p;  // reference medium in SI units
            p.g_tilde = 50.0;
            p.n_atoms = 3.0e6;  // G = 1.5e8 s^-1
            p.c_light = 3.0e8;
            p.length = 8.0e-3;
            p.gamma_b = 0.0;
            p.gamma_e = 2.0e7;  // gamma_be = 2e7 s^-1
            p.gamma_c = 5.0e3;  // gamma_bc = 5e3 s^-1
            PulseSchedule s;
            s.shape = PulseShape::tanh_off;
            s.omega0 = 1.5e5;  // deep slow light: v_g ~ 1.6e3 m/s while on
            s.t_switch = 1.0e-6;
            s.tau_switch = 2.0e-7;
            const Envelope env = gaussian_pulse(1.0e-3, 2.0e-4, 1.0);
            SolveOptions o4;
            o4.init = InitState::polariton;
            o4.segments = {{2.5e-6, 1.0e-9},   // switch-off era
                           {1.0e-5, 5.0e-8},   // hold for 1e-5 s
                           {9.0e-5, 5.0e-8}};  // extend the hold to 1e-4 s
            o4.snapshot_stride = 1000000000;   // segment boundaries only
            const auto run = integrate_linearized(p, s, box(0.0, 8.0e-3, 513), env, o4);
            if (run.history.size() != 4)
                return Outcome{false,
                               "expected 4 snapshots, got " + std::to_string(run.history.size())};
            const double dz = run.grid.dz();
            const double n0 = detail::trapezoid_norm2(run.history[1].s, dz);
            const double n1 = detail::trapezoid_norm2(run.history[2].s, dz);
            const double n2 = detail::trapezoid_norm2(run.history[3].s, dz);
            const double r1 = std::sqrt(n1 / n0), w1 = std::exp(-5.0e3 * 1.0e-5);
            const double r2 = std::sqrt(n2 / n0), w2 = std::exp(-5.0e3 * 1.0e-4);
            Outcome o;
            o.pass = std::abs(r1 / w1 - 1.0) <= tol && std::abs(r2 / w2 - 1.0) <= tol;
            o.detail = "amplitude ratio after a 1e-5 s hold = " + g6(r1) + " (want " + g6(w1) +
                       " +-1%), after 1e-4 s = " + g6(r2) + " (want " + g6(w2) + " +-1%)";
            return o;
        });

    failures += run_criterion(
        5, "group velocity follows the mixing-angle prediction", [] {
            constexpr double tol = 2.0e-2;  // 2 %
            // Measured in the lab frame, where the packet keeps its width and
            // z_pk(t) reads off the velocity directly. (On retarded-time
            // slices a packet appears stretched by 1/(1 - v_g/c), so the
            // fastest operating point would not fit a trackable peak into
            // this box.) The horizon T walks the peak from z = 15 to ~50.
            struct Setup {
                double omega, T;
                int stride;
            };
            const std::vector<Setup> setups = {
                {1.0 / 3.0, 345.0, 115},  // v_g = 0.1 c
                {1.0, 69.0, 23},          // v_g = 0.5 c
                {3.0, 36.0, 12},          // v_g = 0.9 c
            };
            PhysicalParams p = unit_params(1.0);
            Grid1D g = box(0.0, 60.0, 257);
            g.frame = Frame::lab;
            const Envelope env = gaussian_pulse(15.0, 5.0, 1.0);
            std::string detail_text;
            bool pass = true;
            for (const auto& su : setups) {
                PulseSchedule s;
                s.omega0 = su.omega;
                const auto run = integrate_linearized(
                    p, s, g, env,
                    segment_opts(su.T, 0.15, InitState::polariton, su.stride));
                const VgFit fit = measure_group_velocity(run);
                const double want = group_velocity_lossless(p, su.omega);
                pass = pass && fit.ok && std::abs(fit.vg / want - 1.0) <= tol;
                if (!detail_text.empty()) detail_text += ", ";
                detail_text += "v_g(Omega=" + g6(su.omega) + ") = " + g6(fit.vg) + " (want " +
                               g6(want) + " +-2%)";
            }
            return Outcome{pass, detail_text + "; c = 1"};
        });

    failures += run_criterion(
        6, "velocity floor scales as the square of the atom number", [] {
            constexpr double tol = 2.0e-2;  // slope 2.00 +- 0.02
            const std::string cfg = write_cfg("c6.cfg",
                                              "c_light = 1\n"
                                              "g_tilde = 1e-6\n"
                                              "n_atoms = 1e6\n"
                                              "length = 1\n"
                                              "gamma_e = 0.5\n"
                                              "gamma_c = 0.5\n"
                                              "omega0 = 2\n"
                                              "pulse_shape = tanh-off\n"
                                              "t_switch = 5\n"
                                              "tau_switch = 1\n"
                                              "z_min = 0\nz_max = 30\nn_z = 64\n"
                                              "dt = 5e-4\nt_end = 15\n"
                                              "init = polariton\n"
                                              "input_amplitude = 0.3\n"
                                              "input_center = 8\n"
                                              "input_width = 2\n"
                                              "sweep_key = n_atoms\n"
                                              "sweep_start = 1e6\n"
                                              "sweep_stop = 1e7\n"
                                              "sweep_count = 5\n"
                                              "sweep_scale = log\n"
                                              "out_dir = acceptance_scratch/c6\n");
            const CliOut r = run_cli("sweep --config " + cfg);
            if (r.code != 0)
                return Outcome{false, "sweep exited with code " + std::to_string(r.code)};
            const CsvTable t = read_csv(std::string(kScratch) + "/c6/sweep.csv");
            if (t.rows.size() != 5)
                return Outcome{false,
                               "expected 5 sweep rows, got " + std::to_string(t.rows.size())};
            const int kn = t.column("n_atoms");
            const int kv = t.column("vg_limit");
            const int ks = t.column("status");
            std::vector<double> x, y;
            for (const auto& row : t.rows) {
                if (row[ks] != "ok") return Outcome{false, "sweep point status: " + row[ks]};
                const double n = parse_double(row[kn], "n_atoms");
                const double v = parse_double(row[kv], "vg_limit");
                x.push_back(std::log(n));
                y.push_back(std::log(1.0 / v - 1.0));  // c = 1, so c/v - 1 tracks G^2
            }
            const double slope = fit_slope(x, y);
            Outcome o;
            o.pass = std::abs(slope - 2.0) <= tol;
            o.detail = "d log(c/v_g - 1) / d log N = " + g6(slope) +
                       " across N in [1e6, 1e7] (want 2.00 +-0.02)";
            return o;
        });

    failures += run_criterion(
        7, "lossless runs conserve the excitation bookkeeping", [] {
            constexpr double tol = 1.0e-6;
            PulseSchedule s;
            s.omega0 = 1.0;
            const PhysicalParams pl = unit_params(1.0);
            const auto lin = integrate_linearized(
                pl, s, box(0.0, 100.0, 513), gaussian_pulse(20.0, 5.0, 1.0),
                segment_opts(30.0, 0.02, InitState::polariton, 0));
            PhysicalParams pm = pl;
            pm.n_atoms = 10.0;  // few atoms: depletion terms are exercised
            pm.g_tilde = 0.1;   // keeps G = 1
            const auto mf = integrate_meanfield(
                pm, s, box(0.0, 80.0, 257), gaussian_pulse(20.0, 4.0, 1.0),
                segment_opts(20.0, 0.01, InitState::polariton, 500));
            // The pinned residuals pair the invariant with the solver that
            // owns it: photon+molecule bookkeeping for the linearized run,
            // atom number for the mean-field run. The mean-field exchange
            // balance is reported alongside; it carries an O(dz^2) sampling
            // defect on depleted condensates and is not pinned here.
            Outcome o;
            o.pass = lin.conservation_residual <= tol && mf.atom_residual <= tol;
            o.detail = "linearized photon+molecule residual = " +
                       g6(lin.conservation_residual) + ", mean-field atom residual = " +
                       g6(mf.atom_residual) + " (want both <= 1e-6); exchange balance = " +
                       g6(mf.photon_residual);
            return o;
        });

    failures += run_criterion(
        8, "weak drives match the linear model and strong drives are flagged", [] {
            constexpr double diff_tol = 1.0e-2;  // 1 % relative L2 field difference
            constexpr double weak_frac_max = 1.0e-3;
            constexpr double strong_frac_lo = 0.05, strong_frac_hi = 0.2;
            PulseSchedule s;
            s.omega0 = 1.0;
            const Grid1D g = box(0.0, 60.0, 257);
            const SolveOptions opts = segment_opts(20.0, 0.02, InitState::polariton, 100);

            const PhysicalParams weak = unit_params(1.0);  // N = 1e6
            const Envelope env_w = gaussian_pulse(15.0, 4.0, 0.05);
            const auto lin_w = integrate_linearized(weak, s, g, env_w, opts);
            const auto mf_w = integrate_meanfield(weak, s, g, env_w, opts);
            const double d_w = field_history_difference(lin_w, mf_w);

            PhysicalParams strong = weak;
            strong.n_atoms = 10.0;
            strong.g_tilde = 0.1;  // same G = 1
            // Amplitude chosen so the peak molecular fraction lands at the
            // ~0.1 flag point for the weak-excitation breach.
            const Envelope env_s = gaussian_pulse(15.0, 4.0, 1.5);
            const auto lin_s = integrate_linearized(strong, s, g, env_s, opts);
            const auto mf_s = integrate_meanfield(strong, s, g, env_s, opts);
            const double d_s = field_history_difference(lin_s, mf_s);

            Outcome o;
            o.pass = d_w <= diff_tol && mf_w.molecular_fraction_max < weak_frac_max &&
                     d_s > diff_tol && mf_s.molecular_fraction_max >= strong_frac_lo &&
                     mf_s.molecular_fraction_max <= strong_frac_hi;
            o.detail = "weak: field difference = " + g6(d_w) + " (want <= 0.01) at fraction " +
                       g6(mf_w.molecular_fraction_max) + " (< 0.001); strong: difference = " +
                       g6(d_s) + " (want > 0.01) at fraction " +
                       g6(mf_s.molecular_fraction_max) + " (want in [0.05, 0.2])";
            return o;
        });

    failures += run_criterion(
        9, "closed-form amplitude matches the integrated rates", [] {
            constexpr double tol_lossy = 1.0e-3;
            constexpr double tol_lossless = 1.0e-9;
            PhysicalParams p;
            p.g_tilde = 50.0;
            p.n_atoms = 3.0e6;  // G = 1.5e8 s^-1
            p.gamma_b = 0.0;
            p.gamma_e = 2.0e7;
            p.gamma_c = 5.0e3;
            PulseSchedule s;
            s.shape = PulseShape::tanh_off;
            s.omega0 = 7.5e9;  // 50 G: inside the asymptotic window
            s.t_switch = 2.0e-6;
            s.tau_switch = 5.0e-7;
            const double t = s.t_switch + 3.75 * s.tau_switch;
            const double closed = lossy_amplitude_closed_form(p, s, t);
            const double integ = std::exp(alpha_integral(p, s, t));
            const double err_lossy = std::abs(closed / integ - 1.0);

            PhysicalParams q = p;
            q.gamma_e = q.gamma_c = 0.0;  // exp(int alpha) reduces to a cosine ratio
            PulseSchedule s2 = s;
            s2.omega0 = 3.0e8;
            const double t2 = 5.0e-6;
            const double lhs = std::exp(alpha_integral(q, s2, t2));
            const double c0 = std::cos(mixing_angle(q, omega_at(s2, 0.0)));
            const double ct = std::cos(mixing_angle(q, omega_at(s2, t2)));
            const double err_ll = std::abs(lhs / (ct / c0) - 1.0);

            Outcome o;
            o.pass = err_lossy <= tol_lossy && err_ll <= tol_lossless;
            o.detail = "asymptotic closed form vs integrated rate: rel err = " + g6(err_lossy) +
                       " (want <= 1e-3); lossless cosine identity: rel err = " + g6(err_ll) +
                       " (want <= 1e-9)";
            return o;
        });

    failures += run_criterion(
        10, "solver self-convergence is second order", [] {
            constexpr double lo = 1.7, hi = 2.3;
            PhysicalParams p = unit_params(1.0);
            PulseSchedule s;
            s.omega0 = 1.0;
            const auto rep = convergence_probe(
                p, s, box(0.0, 40.0, 65), gaussian_pulse(12.0, 4.0, 1.0),
                segment_opts(10.0, 0.1, InitState::polariton, 0), 3);
            Outcome o;
            o.pass = rep.conclusive && rep.within_expected && rep.order >= lo && rep.order <= hi;
            o.detail = "observed order = " + g6(rep.order) +
                       " over 3 refinement levels (want in [1.7, 2.3])" +
                       (rep.conclusive ? std::string()
                                       : "; probe inconclusive: " + rep.note);
            return o;
        });

    std::printf("%d of 10 criteria passed\n", 10 - failures);
    return failures;
}
