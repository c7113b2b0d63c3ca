// SPDX-License-Identifier: MIT
// Command-line front end: boundary-control solves on the channel domain plus
// the spectral analysis reports, with CSV/JSON/VTK artifacts.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "flowctrl/analysis.hpp"
#include "flowctrl/io.hpp"
#include "flowctrl/solver.hpp"

using nlohmann::json;
using namespace flowctrl;

namespace {

constexpr const char* kVersion = "0.1.0";

// exit codes: 0 ok, 1 usage/config, 2 dense cap, 3 divergence (the dash),
// 4 nonlinear non-convergence, 5 io, 6 internal
enum ExitCode { kOk = 0, kUsage = 1, kCap = 2, kDash = 3, kNoConv = 4, kIo = 5, kInternal = 6 };

struct CommonOpts {
    int level = 3;
    double alpha = 1e-3;
    double beta = 1e-3;
    double nu = 0.1;
    int stride = 1;
    double tol = 1e-6;
    long long maxit = 2000;
    int cheb_steps = 20;
    int uzawa_steps = 0;  // 0: per-solver default (5 Stokes, 30 Oseen)
    int mg_cycles = 5;
    std::string out = ".";
    int jobs = 1;
    std::vector<int> levels;  // sweep; empty means the single --level
    bool vtk = false;
};

void add_common_flags(CLI::App* cmd, CommonOpts& o, bool with_nu) {
    cmd->add_option("--level", o.level, "grid level (2..9)");
    cmd->add_option("--levels", o.levels, "sweep over levels")->delimiter(',');
    cmd->add_option("--alpha", o.alpha, "pressure regularization weight");
    cmd->add_option("--beta", o.beta, "control penalty weight");
    if (with_nu) {
        cmd->add_option("--nu", o.nu, "viscosity");
        cmd->add_option("--stride", o.stride, "inflow node stride (1,2,4,6,8)");
    }
    cmd->add_option("--tol", o.tol, "relative residual tolerance");
    cmd->add_option("--maxit", o.maxit, "MINRES iteration cap");
    cmd->add_option("--cheb-steps", o.cheb_steps, "Chebyshev semi-iteration steps");
    cmd->add_option("--uzawa-steps", o.uzawa_steps, "Uzawa steps (0: solver default)");
    cmd->add_option("--mg-cycles", o.mg_cycles, "multigrid V-cycles");
    cmd->add_option("--out", o.out, "artifact directory");
    cmd->add_option("--jobs", o.jobs, "parallel sweep runs")->check(CLI::PositiveNumber);
    cmd->add_flag("--vtk", o.vtk, "write VTK fields");
}

void write_manifest(const std::string& dir, const std::string& command, const json& flags) {
    json m;
    m["command"] = command;
    m["flags"] = flags;
    m["version"] = kVersion;
    m["compiler"] = __VERSION__;
    // fixed seeds of the stochastic pieces, for bit-identical artifacts
    m["seeds"] = {{"lanczos", 7}, {"power_iteration", 3}, {"probes", 12345}};
    std::ofstream f(dir + "/manifest.json");
    if (!f) throw IoError("cannot write manifest in " + dir);
    f << m.dump(2) << "\n";
}

json common_flags_json(const CommonOpts& o, bool with_nu) {
    json j = {{"level", o.level},       {"alpha", o.alpha},
              {"beta", o.beta},         {"tol", o.tol},
              {"maxit", o.maxit},       {"cheb_steps", o.cheb_steps},
              {"uzawa_steps", o.uzawa_steps}, {"mg_cycles", o.mg_cycles},
              {"jobs", o.jobs},         {"vtk", o.vtk}};
    if (with_nu) {
        j["nu"] = o.nu;
        j["stride"] = o.stride;
    }
    if (!o.levels.empty()) j["levels"] = o.levels;
    return j;
}

SolverOptions solver_options(const CommonOpts& o, bool oseen) {
    SolverOptions s;
    s.tol = o.tol;
    s.maxit = o.maxit;
    s.stride = o.stride;
    s.stokes_pc.cheb_steps = o.cheb_steps;
    s.stokes_pc.mg_cycles = o.mg_cycles;
    if (o.uzawa_steps > 0) s.stokes_pc.uzawa_steps = o.uzawa_steps;
    s.perm_pc.cheb_steps = o.cheb_steps;
    if (oseen && o.uzawa_steps > 0) s.perm_pc.uzawa_steps = o.uzawa_steps;
    return s;
}

void write_residual_csv(const std::string& path, const Vec& hist) {
    std::vector<Vec> rows;
    for (std::size_t i = 0; i < hist.size(); ++i)
        rows.push_back({static_cast<double>(i), hist[i]});
    write_csv(path, "iteration,preconditioned_residual", rows);
}

void write_fields(const std::string& dir, const ChannelMesh& mesh, const KktSystem& k,
                  const Vec& sol) {
    Vec vx(sol.begin(), sol.begin() + k.n_scalar);
    Vec vy(sol.begin() + k.n_scalar, sol.begin() + 2 * k.n_scalar);
    Vec p(sol.begin() + k.off_p(), sol.begin() + k.off_p() + k.n_p);
    write_vtk_fields(dir + "/fields.vtk", mesh, vx, vy, p);
    // control profile along the inflow: y, u_x, u_y
    index_t nus = k.n_u / 2;
    std::vector<Vec> rows;
    for (index_t i = 0; i < nus; ++i) {
        double y = mesh.node_y(mesh.inflow_nodes[i]);
        rows.push_back({y, sol[k.off_u() + i], sol[k.off_u() + nus + i]});
    }
    write_csv(dir + "/control.csv", "y,u_x,u_y", rows);
}

// run fn(level) for each sweep level, jobs at a time, in level order
template <class Fn>
void sweep(const CommonOpts& o, Fn fn) {
    std::vector<int> levels = o.levels.empty() ? std::vector<int>{o.level} : o.levels;
    if (o.jobs <= 1 || levels.size() <= 1) {
        for (int l : levels) fn(l);
        return;
    }
    std::mutex mtx;
    std::size_t next = 0;
    auto worker = [&] {
        for (;;) {
            std::size_t i;
            {
                std::lock_guard<std::mutex> g(mtx);
                if (next >= levels.size()) return;
                i = next++;
            }
            fn(levels[i]);
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < o.jobs && t < static_cast<int>(levels.size()); ++t)
        pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

int run_stokes(const CommonOpts& o) {
    std::filesystem::create_directories(o.out);
    write_manifest(o.out, "stokes-control", common_flags_json(o, false));
    std::mutex print_mtx;
    sweep(o, [&](int level) {
        ProblemSetup s(level);
        StokesControlResult r = solve_stokes_control(s, o.alpha, o.beta, solver_options(o, false));
        std::string tag = "l" + std::to_string(level);
        json rep = {{"level", level},
                    {"iterations", r.report.iterations},
                    {"converged", r.report.converged},
                    {"wall_time", r.report.wall_time},
                    {"final_true_residual", r.report.final_true_residual},
                    {"control_energy", r.energy}};
        std::ofstream(o.out + "/report_" + tag + ".json") << rep.dump(2) << "\n";
        write_residual_csv(o.out + "/residuals_" + tag + ".csv", r.report.residual_history);
        write_vector_market(o.out + "/solution_" + tag + ".mm", r.solution);
        if (o.vtk) {
            KktSystem k = build_stokes_kkt(s.mesh, s.stokes, s.control, s.targets, o.alpha, o.beta);
            write_fields(o.out, s.mesh, k, r.solution);
        }
        std::lock_guard<std::mutex> g(print_mtx);
        std::cout << "l=" << level << " iterations=" << r.report.iterations
                  << " converged=" << r.report.converged << " energy=" << r.energy << "\n";
    });
    return kOk;
}

int run_ns(const CommonOpts& o) {
    std::filesystem::create_directories(o.out);
    write_manifest(o.out, "ns-control", common_flags_json(o, true));
    std::mutex print_mtx;
    bool dash = false;
    sweep(o, [&](int level) {
        ProblemSetup s(level);
        PicardOptions po;
        po.nonlinear_tol = o.tol;
        po.inner = solver_options(o, true);
        std::string tag = "l" + std::to_string(level);
        try {
            NavierControlResult r = solve_navier_control(s, o.alpha, o.beta, o.nu, po);
            json rep = {{"level", level},
                        {"nu", o.nu},
                        {"stride", o.stride},
                        {"picard_iterations", r.report.picard_iterations},
                        {"minres_counts", r.report.minres_counts},
                        {"average_minres", r.report.average_minres},
                        {"residual_history", r.report.residual_history},
                        {"control_energy", r.report.control_energy},
                        {"converged", r.report.converged}};
            std::ofstream(o.out + "/report_" + tag + ".json") << rep.dump(2) << "\n";
            write_residual_csv(o.out + "/nonlinear_residuals_" + tag + ".csv",
                               r.report.residual_history);
            write_vector_market(o.out + "/solution_" + tag + ".mm", r.solution);
            if (o.vtk) {
                Vec wx(r.solution.begin(), r.solution.begin() + s.mesh.n_scalar);
                Vec wy(r.solution.begin() + s.mesh.n_scalar,
                       r.solution.begin() + 2 * s.mesh.n_scalar);
                KktSystem k = build_oseen_kkt(s.mesh, s.stokes, s.control, s.targets, wx, wy,
                                              o.alpha, o.beta, o.nu);
                write_fields(o.out, s.mesh, k, r.solution);
            }
            std::lock_guard<std::mutex> g(print_mtx);
            std::cout << "l=" << level << " nu=" << o.nu << " stride=" << o.stride << " avg="
                      << r.report.average_minres << " (" << r.report.picard_iterations
                      << ") energy=" << r.report.control_energy << "\n";
        } catch (const DivergenceError& e) {
            std::lock_guard<std::mutex> g(print_mtx);
            std::cout << "l=" << level << " nu=" << o.nu << " stride=" << o.stride
                      << " --- (" << e.what() << ")\n";
            json rep = {{"level", level}, {"nu", o.nu}, {"stride", o.stride},
                        {"divergent", true}, {"reason", e.what()}};
            std::ofstream(o.out + "/report_" + tag + ".json") << rep.dump(2) << "\n";
            dash = true;
        }
    });
    return dash ? kDash : kOk;
}

struct AnalyzeOpts {
    int level = 3;
    double alpha = 1e-3;
    double beta = 1e-3;
    double nu = 0.05;
    int cheb_steps = 20;
    int trials = 50;
    std::string out = ".";
    std::string pattern;
    std::vector<int> strides = {2, 4};
};

int run_mass_bounds(const AnalyzeOpts& o) {
    write_csv(o.out + "/table1_mass_bounds.csv", "matrix,theta,Theta",
              {{0, MassBounds::qv_lo, MassBounds::qv_hi},
               {1, MassBounds::qp_lo, MassBounds::qp_hi},
               {2, MassBounds::qu_lo, MassBounds::qu_hi}});
    std::cout << "Qv (" << MassBounds::qv_lo << ", " << MassBounds::qv_hi << ")\n"
              << "Qp (" << MassBounds::qp_lo << ", " << MassBounds::qp_hi << ")\n"
              << "Qu (" << MassBounds::qu_lo << ", " << MassBounds::qu_hi << ")\n";
    return kOk;
}

int run_chebyshev(const AnalyzeOpts& o) {
    std::vector<Vec> rows;
    int which = 0;
    for (MassKind k : {MassKind::Qv, MassKind::Qp, MassKind::Qu}) {
        SpectrumReport r = mass_spectrum_report(k, o.level, o.cheb_steps);
        rows.push_back({static_cast<double>(which++), r.min, r.max, r.condition_number});
        std::cout << "kind=" << which - 1 << " min=" << r.min << " max=" << r.max
                  << " kappa=" << r.condition_number << "\n";
    }
    write_csv(o.out + "/table2_chebyshev.csv", "matrix,min,max,kappa", rows);
    return kOk;
}

int run_schur_spectrum(const AnalyzeOpts& o) {
    InterlacingReport r = schur_interlacing_report(o.level, o.alpha, o.beta);
    std::vector<Vec> rows;
    for (std::size_t i = 0; i < r.eigenvalues.size(); ++i)
        rows.push_back({static_cast<double>(i + 1), r.eigenvalues[i]});
    write_csv(o.out + "/fig1_schur_spectrum.csv", "index,eigenvalue", rows);
    std::cout << "n_u=" << r.n_u << " bulk=[" << r.bulk_min << "," << r.bulk_max << "] top=["
              << r.top_min << "," << r.top_max << "]\n";
    return kOk;
}

int run_convection(const AnalyzeOpts& o) {
    ProblemSetup s(o.level);
    // wind = converged Navier-Stokes velocity at the requested nu (beta = 1)
    PicardOptions po;
    NavierControlResult nr = solve_navier_control(s, o.alpha, 1.0, o.nu, po);
    Vec wx(nr.solution.begin(), nr.solution.begin() + s.mesh.n_scalar);
    Vec wy(nr.solution.begin() + s.mesh.n_scalar, nr.solution.begin() + 2 * s.mesh.n_scalar);
    ConvectionReport r = convection_symmetric_report(s, o.nu, wx, wy, o.strides);
    std::vector<Vec> rows;
    rows.push_back({0.0, static_cast<double>(r.full.n_negative), r.full.cond});
    for (const ConvectionRow& c : r.reduced)
        rows.push_back({static_cast<double>(c.stride), static_cast<double>(c.n_negative), c.cond});
    write_csv(o.out + "/table3_convection.csv", "stride,n_negative,kappa", rows);
    std::cout << "off_support_max=" << r.off_support_max
              << " negative_inflow_fraction=" << r.negative_inflow_fraction
              << " median_positive_fraction=" << r.median_positive_fraction << "\n";
    for (const Vec& row : rows)
        std::cout << "stride=" << row[0] << " n_negative=" << row[1] << " kappa=" << row[2]
                  << "\n";
    return kOk;
}

int run_element_elim(const AnalyzeOpts& o) {
    std::vector<int> pattern;
    if (!o.pattern.empty()) {
        std::istringstream ss(o.pattern);
        std::string tok;
        while (std::getline(ss, tok, ',')) pattern.push_back(std::stoi(tok));
    }
    SpectrumReport r = element_elimination_eigs(pattern);
    write_csv(o.out + "/table5_element_elim.csv", "min,max", {{r.min, r.max}});
    std::cout << "(" << r.min << ", " << r.max << ")\n";
    return kOk;
}

int run_murphy(const AnalyzeOpts& o) {
    SpectrumReport r = murphy_ideal_check(o.level, o.alpha, o.beta);
    std::vector<Vec> rows;
    for (std::size_t i = 0; i < r.eigenvalues.size(); ++i)
        rows.push_back({static_cast<double>(i + 1), r.eigenvalues[i]});
    write_csv(o.out + "/murphy_spectrum.csv", "index,eigenvalue", rows);
    std::cout << "cluster_distance=" << murphy_cluster_distance(r) << "\n";
    return kOk;
}

int run_interlacing(const AnalyzeOpts& o) {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> dist;
    const index_t n = 20;
    for (int t = 0; t < o.trials; ++t) {
        index_t m = 1 + t % 5;
        DenseMatrix a(n, n), l(n, n), c(n, m);
        for (index_t i = 0; i < n; ++i)
            for (index_t j = 0; j <= i; ++j) a(i, j) = a(j, i) = dist(rng);
        for (auto& v : c.data) v = dist(rng);
        for (index_t i = 0; i < n; ++i)
            for (index_t j = 0; j < n; ++j)
                for (index_t k = 0; k < m; ++k) l(i, j) += c(i, k) * c(j, k);
        LowrankCheck chk = lowrank_interlacing_check(a, l);
        if (!chk.pass) {
            std::cout << "fail at trial " << t << " index " << chk.offending << "\n";
            return kInternal;
        }
    }
    std::cout << "pass (" << o.trials << " trials)\n";
    return kOk;
}

int run_export(const std::string& in_dir, const CommonOpts& o) {
    std::string solpath = in_dir + "/solution_l" + std::to_string(o.level) + ".mm";
    if (!std::filesystem::exists(solpath)) throw IoError("missing solve artifact: " + solpath);
    Vec sol = read_vector_market(solpath);
    ProblemSetup s(o.level);
    KktSystem k = build_stokes_kkt(s.mesh, s.stokes, s.control, s.targets, o.alpha, o.beta);
    if (sol.size() != static_cast<std::size_t>(k.total()))
        throw IoError("solve artifact does not match the requested level");
    std::filesystem::create_directories(o.out);
    write_fields(o.out, s.mesh, k, sol);
    double e = control_energy(k, sol);
    std::cout << "control_energy=" << e << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"channel-flow boundary control solver"};
    app.require_subcommand(1);
    app.set_config("--config");

    CommonOpts so, no, eo;
    AnalyzeOpts ao;
    std::string export_in;

    CLI::App* stokes = app.add_subcommand("stokes-control", "Stokes boundary control solve");
    add_common_flags(stokes, so, false);
    CLI::App* ns = app.add_subcommand("ns-control", "Navier-Stokes boundary control solve");
    add_common_flags(ns, no, true);

    CLI::App* an = app.add_subcommand("analyze", "spectral reports");
    an->require_subcommand(1);
    for (const char* name : {"mass-bounds", "chebyshev", "schur-spectrum", "convection",
                             "element-elim", "murphy", "interlacing"}) {
        CLI::App* sub = an->add_subcommand(name, name);
        sub->add_option("--level", ao.level);
        sub->add_option("--alpha", ao.alpha);
        sub->add_option("--beta", ao.beta);
        sub->add_option("--nu", ao.nu);
        sub->add_option("--cheb-steps", ao.cheb_steps);
        sub->add_option("--trials", ao.trials);
        sub->add_option("--out", ao.out);
        sub->add_option("--pattern", ao.pattern, "comma separated node labels");
        sub->add_option("--strides", ao.strides)->delimiter(',');
    }

    CLI::App* ex = app.add_subcommand("export-fields", "VTK/CSV export of a solve artifact");
    ex->add_option("--in", export_in, "directory of a completed solve")->required();
    add_common_flags(ex, eo, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    try {
        if (stokes->parsed()) return run_stokes(so);
        if (ns->parsed()) return run_ns(no);
        if (ex->parsed()) return run_export(export_in, eo);
        CLI::App* sub = an->get_subcommands().front();
        std::filesystem::create_directories(ao.out);
        write_manifest(ao.out, "analyze " + sub->get_name(),
                       {{"level", ao.level}, {"alpha", ao.alpha}, {"beta", ao.beta},
                        {"nu", ao.nu}, {"cheb_steps", ao.cheb_steps}, {"trials", ao.trials},
                        {"pattern", ao.pattern}, {"strides", ao.strides}});
        const std::string& name = sub->get_name();
        if (name == "mass-bounds") return run_mass_bounds(ao);
        if (name == "chebyshev") return run_chebyshev(ao);
        if (name == "schur-spectrum") return run_schur_spectrum(ao);
        if (name == "convection") return run_convection(ao);
        if (name == "element-elim") return run_element_elim(ao);
        if (name == "murphy") return run_murphy(ao);
        return run_interlacing(ao);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kUsage;
    } catch (const CapError& e) {
        std::cerr << "cap error: " << e.what() << "\n";
        return kCap;
    } catch (const DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return kDash;
    } catch (const NonConvergence& e) {
        std::cerr << "no convergence: " << e.what() << "\n";
        return kNoConv;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInternal;
    }
}
