// hzfem: convergence studies, certificate suite and export for the symmetric
// H(div) mixed elasticity element.
//
//   hzfem conv   --degree 4 --levels 3 --out conv.csv
//   hzfem verify --seed 7
//   hzfem export --degree 4 --levels 2 --vtk solution.vtk
//
// Exit codes: 0 success, 1 configuration error, 2 solve failure, 3 certificate failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "hzfem/hzfem.hpp"
#include "hzfem/report.hpp"

namespace
{

enum ExitCode { kOk = 0, kConfig = 1, kSolve = 2, kCertificate = 3 };

struct Options
{
    hzfem::RunConfig run;
    std::string config_file;
    std::string out;
    std::string json;
    std::string vtk;
    std::string dof_layout;
    std::string matrix_market;
    std::string solver = "direct";
    bool no_timing = false;
    bool corrupt_dof = false;
    int infsup_levels = 2;
    std::optional<int> degree;   // verify: restrict to one degree
};

hzfem::SolveMethod parse_method(const std::string& s)
{
    if (s == "direct")
        return hzfem::SolveMethod::direct;
    if (s == "lu")
        return hzfem::SolveMethod::lu;
    if (s == "minres")
        return hzfem::SolveMethod::minres;
    throw hzfem::ConfigError("unknown solver '" + s + "' (expected direct, lu or minres)");
}

/// Keys present in the JSON file override the command-line values.
void apply_config_file(Options& o)
{
    if (o.config_file.empty())
        return;
    std::ifstream in(o.config_file);
    if (!in)
        throw hzfem::ConfigError("cannot read config file " + o.config_file);
    hzfem::Json j;
    try {
        j = hzfem::Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw hzfem::ConfigError("config file " + o.config_file + ": " + e.what());
    }
    if (!j.is_object())
        throw hzfem::ConfigError("config file must hold a JSON object");
    try {
        for (auto it = j.begin(); it != j.end(); ++it) {
            const std::string& key = it.key();
            const auto& v = it.value();
            if (key == "degree") {
                o.run.degree = v.get<int>();
                o.degree = o.run.degree;
            } else if (key == "levels")
                o.run.levels = v.get<int>();
            else if (key == "mu")
                o.run.mu = v.get<double>();
            else if (key == "lambda")
                o.run.lambda = v.get<double>();
            else if (key == "tol")
                o.run.tol = v.get<double>();
            else if (key == "quad_degree")
                o.run.quad_degree = v.get<int>();
            else if (key == "seed")
                o.run.seed = v.get<std::uint64_t>();
            else if (key == "out")
                o.out = v.get<std::string>();
            else if (key == "json")
                o.json = v.get<std::string>();
            else if (key == "vtk")
                o.vtk = v.get<std::string>();
            else if (key == "solver")
                o.solver = v.get<std::string>();
            else if (key == "timing")
                o.no_timing = !v.get<bool>();
            else if (key == "infsup_levels")
                o.infsup_levels = v.get<int>();
            else
                throw hzfem::ConfigError("unknown config key '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw hzfem::ConfigError("config file " + o.config_file + ": " + e.what());
    }
}

void add_common(CLI::App* app, Options& o)
{
    app->add_option("--levels", o.run.levels, "Finest mesh level (level l has 2^(l-1) cubes per side)");
    app->add_option("--seed", o.run.seed, "Seed for all randomized checks");
    app->add_option("--out", o.out, "Output file (CSV for conv, JSON otherwise)");
    app->add_option("--config", o.config_file, "JSON file whose keys override the flags");
}

void add_problem(CLI::App* app, Options& o)
{
    app->add_option("--degree", o.run.degree, "Stress polynomial degree k (k >= 4)");
    app->add_option("--mu", o.run.mu, "Lame constant mu");
    app->add_option("--lambda", o.run.lambda, "Lame constant lambda");
    app->add_option("--tol", o.run.tol, "Relative residual tolerance of the linear solve");
    app->add_option("--quad-degree", o.run.quad_degree, "Quadrature exactness (default 2k+2)");
    app->add_option("--solver", o.solver, "direct | lu | minres");
    app->add_option("--vtk", o.vtk, "Write the finest solution as legacy VTK");
    app->add_option("--dof-layout", o.dof_layout, "Write the finest DOF layout as JSON");
    app->add_option("--matrix-market", o.matrix_market, "Write the finest saddle matrix (MatrixMarket)");
}

void finish_run_config(Options& o)
{
    o.run.method = parse_method(o.solver);
    o.run.timing = !o.no_timing;
    o.run.validate();
}

void write_level_artifacts(const Options& o, const hzfem::LevelSolution& s)
{
    if (!o.vtk.empty())
        hzfem::export_vtk(s, o.vtk);
    if (!o.dof_layout.empty())
        hzfem::write_json(o.dof_layout, hzfem::dof_layout(s.mesh, s.smap, s.umap));
    if (!o.matrix_market.empty())
        hzfem::write_matrix_market(o.matrix_market, s.system);
}

int run_conv(Options& o)
{
    apply_config_file(o);
    finish_run_config(o);
    const int finest = o.run.levels;
    const auto report = hzfem::run_convergence(o.run, [&](const hzfem::LevelSolution& s) {
        if (s.mesh.level == finest)
            write_level_artifacts(o, s);
    });
    hzfem::write_table(std::cout, report);
    if (!o.out.empty()) {
        std::ofstream csv(o.out, std::ios::binary);
        if (!csv)
            throw std::runtime_error("cannot open " + o.out + " for writing");
        hzfem::write_csv(csv, report);
    }
    if (!o.json.empty())
        hzfem::write_json(o.json, hzfem::to_json(report));
    return kOk;
}

int run_verify(Options& o)
{
    apply_config_file(o);
    hzfem::VerifyConfig cfg;
    if (o.degree)
        cfg.degrees = {*o.degree};
    cfg.levels = o.run.levels;
    cfg.infsup_levels = o.infsup_levels;
    cfg.seed = o.run.seed;
    cfg.corrupt_dof = o.corrupt_dof;
    const auto reports = hzfem::run_verify(cfg, [](const hzfem::CertificateReport& r) {
        std::printf("%s  %-36s measured %-12.4e tol %-9.1e %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                    r.measured, r.tolerance, r.witness.c_str());
        std::fflush(stdout);
    });
    if (!o.out.empty()) {
        hzfem::Json arr = hzfem::Json::array();
        for (const auto& r : reports)
            arr.push_back(hzfem::to_json(r));
        hzfem::write_json(o.out, hzfem::Json{{"seed", cfg.seed}, {"certificates", arr}});
    }
    const bool ok = hzfem::all_passed(reports);
    std::printf("%s\n", ok ? "all certificates passed" : "certificate failure");
    return ok ? kOk : kCertificate;
}

int run_export(Options& o)
{
    apply_config_file(o);
    finish_run_config(o);
    if (o.vtk.empty() && o.dof_layout.empty() && o.matrix_market.empty() && o.out.empty())
        throw hzfem::ConfigError("export needs at least one of --vtk, --dof-layout, --matrix-market, --out");
    const hzfem::LevelSolution s = hzfem::solve_level(o.run, o.run.levels);
    write_level_artifacts(o, s);
    if (!o.out.empty()) {
        auto j = hzfem::to_json(s.solve);
        if (!o.run.timing)
            j["seconds"] = 0.0;
        hzfem::write_json(o.out, hzfem::Json{{"config", hzfem::to_json(o.run)},
                                             {"solve", j},
                                             {"layout", hzfem::dof_layout(s.mesh, s.smap, s.umap)}});
    }
    std::printf("level %d: %lld stress + %lld displacement unknowns, residual %.2e (%s)\n", o.run.levels,
                static_cast<long long>(s.system.n_sigma), static_cast<long long>(s.system.n_u),
                s.solve.relative_residual, hzfem::to_string(s.solve.method));
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Symmetric H(div) mixed finite elements for 3D elasticity"};
    app.require_subcommand(1);
    Options o;

    auto* conv = app.add_subcommand("conv", "Convergence study on the unit-cube Kuhn meshes");
    add_common(conv, o);
    add_problem(conv, o);
    conv->add_option("--json", o.json, "Also write the report as JSON");
    conv->add_flag("--no-timing", o.no_timing, "Write 0 in the seconds column (byte-reproducible CSV)");

    auto* verify = app.add_subcommand("verify", "Run the numerical certificate suite");
    add_common(verify, o);
    verify->add_option("--degree", o.degree, "Restrict to one degree (default: 4 and 5)");
    verify->add_option("--infsup-levels", o.infsup_levels, "Levels used by the inf-sup probe");
    verify->add_flag("--corrupt-dof", o.corrupt_dof, "Duplicate a displacement DOF (negative control)");
    o.run.levels = 3;

    auto* exp = app.add_subcommand("export", "Solve one level and write VTK / JSON / MatrixMarket");
    add_common(exp, o);
    add_problem(exp, o);
    exp->add_flag("--no-timing", o.no_timing, "Write 0 for timings");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*verify && verify->count("--levels") == 0)
            o.run.levels = 2;
        if (*exp && exp->count("--levels") == 0)
            o.run.levels = 1;
        if (*conv)
            return run_conv(o);
        if (*verify)
            return run_verify(o);
        return run_export(o);
    } catch (const hzfem::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kConfig;
    } catch (const hzfem::CapabilityError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kConfig;
    } catch (const hzfem::SolveError& e) {
        std::cerr << "solve failure: " << e.what() << '\n';
        return kSolve;
    } catch (const hzfem::GeometryError& e) {
        std::cerr << "solve failure: " << e.what() << '\n';
        return kSolve;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfig;
    }
}
