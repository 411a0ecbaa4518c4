#include "kcdc/cli.hpp"

#include "kcdc/analysis.hpp"
#include "kcdc/cdc.hpp"
#include "kcdc/config.hpp"
#include "kcdc/errors.hpp"
#include "kcdc/integrators.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <random>

namespace kcdc {

namespace {

constexpr double kStructureTol = 1e-10;

// Flags shared by all subcommands; unset options leave the base config alone.
struct Overrides {
    std::string config_path;
    std::string preset_name;
    std::string model;
    std::optional<double> dt;
    std::optional<int> corrections;
    std::optional<int> nodes;
    std::optional<double> t_end;
    std::optional<double> reference_tol;
    std::vector<double> u0;
    std::vector<double> params;
    std::string output_dir;

    void attach(CLI::App& cmd)
    {
        cmd.add_option("--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
        cmd.add_option("--preset", preset_name, "Named config: lv1-paper, lv2-paper");
        cmd.add_option("--model", model, "lv1 or lv2 (selects its preset unless --config/--preset is given)");
        cmd.add_option("--dt", dt, "Step size (CDC interval length)");
        cmd.add_option("--corrections", corrections, "Number of correction sweeps S");
        cmd.add_option("--nodes", nodes, "Nodes per interval n (default 2S+3)");
        cmd.add_option("--t-end", t_end, "Final time T");
        cmd.add_option("--reference-tol", reference_tol, "Tolerance of the reference solver");
        cmd.add_option("--u0", u0, "Initial state, comma separated")->delimiter(',');
        cmd.add_option("--params", params, "lv1 parameters a,b,c,lambda,mu,nu")->delimiter(',');
        cmd.add_option("--output-dir", output_dir, "Directory for CSV output");
    }

    ExperimentConfig resolve() const
    {
        if (!config_path.empty() && !preset_name.empty())
            throw ValidationError("--config and --preset are mutually exclusive");
        ExperimentConfig cfg;
        if (!config_path.empty())
            cfg = load_config(config_path);
        else if (!preset_name.empty())
            cfg = preset(preset_name);
        else
            cfg = preset(model == "lv2" ? "lv2-paper" : "lv1-paper");

        if (!model.empty()) {
            if (model == "lv1")
                cfg.model = ModelKind::Lv1;
            else if (model == "lv2")
                cfg.model = ModelKind::Lv2;
            else
                throw ValidationError("--model: expected lv1 or lv2 (custom models need --config), got '" + model +
                                      "'");
        }
        if (dt)
            cfg.dt = *dt;
        if (corrections) {
            cfg.corrections = *corrections;
            if (!nodes)
                cfg.nodes.reset();
        }
        if (nodes)
            cfg.nodes = *nodes;
        if (t_end)
            cfg.t_end = *t_end;
        if (reference_tol)
            cfg.reference_tol = *reference_tol;
        if (!u0.empty())
            cfg.u0 = u0;
        if (!params.empty()) {
            if (params.size() != 6)
                throw ValidationError("--params: expected 6 values a,b,c,lambda,mu,nu");
            cfg.params = Lv1Params{params[0], params[1], params[2], params[3], params[4], params[5]};
        }
        if (!output_dir.empty())
            cfg.output_dir = output_dir;
        cfg.validate();
        return cfg;
    }
};

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

std::ofstream open_output(const std::filesystem::path& dir, const char* name)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    const auto path = dir / name;
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file)
        throw IoError("cannot open " + path.string() + " for writing");
    return file;
}

void close_output(std::ofstream& file, const std::filesystem::path& path)
{
    file.close();
    if (!file)
        throw IoError("error writing " + path.string());
}

void cmd_integrate(const ExperimentConfig& cfg, bool no_cdc, std::ostream& out, std::ostream& err)
{
    const ModelBundle model = make_model(cfg);
    const StateVector u0 = Eigen::Map<const StateVector>(cfg.u0.data(), static_cast<Eigen::Index>(cfg.u0.size()));

    // S = 0 is plain Kahan at dt, the same path as --no-cdc.
    const bool plain = no_cdc || cfg.corrections == 0;
    CdcConfig cdc = cfg.cdc();
    if (plain) {
        cdc.corrections = 0;
        cdc.nodes.reset();
    }
    cdc.validate();

    auto traj_file = open_output(cfg.output_dir, "trajectory.csv");
    std::optional<std::ofstream> inv_file;
    if (model.has_invariants())
        inv_file = open_output(cfg.output_dir, "invariants.csv");
    else
        err << "note: model '" << model.name << "' has no invariants; invariants.csv not written\n";

    traj_file << "t";
    for (std::size_t i = 0; i < cfg.u0.size(); ++i)
        traj_file << ",u" << i + 1;
    traj_file << "\n";
    double h1_0 = 0.0, h2_0 = 0.0;
    if (inv_file) {
        *inv_file << "t,H1_err,H2_err\n";
        h1_0 = eval_invariant(*model.h1, u0);
        h2_0 = eval_invariant(*model.h2, u0);
    }

    double max_h1 = 0.0, max_h2 = 0.0;
    const auto record = [&](double t, const StateVector& u) {
        traj_file << fmt(t);
        for (Eigen::Index i = 0; i < u.size(); ++i)
            traj_file << ',' << fmt(u[i]);
        traj_file << '\n';
        if (inv_file) {
            const double e1 = eval_invariant(*model.h1, u) - h1_0;
            const double e2 = eval_invariant(*model.h2, u) - h2_0;
            max_h1 = std::max(max_h1, std::abs(e1));
            max_h2 = std::max(max_h2, std::abs(e2));
            *inv_file << fmt(t) << ',' << fmt(e1) << ',' << fmt(e2) << '\n';
        }
    };
    if (plain)
        integrate_fixed(model.system, u0, cdc.dt, static_cast<long>(cdc.intervals()), record);
    else
        cdc_integrate(model.system, u0, cdc, record);

    close_output(traj_file, cfg.output_dir / "trajectory.csv");
    if (inv_file)
        close_output(*inv_file, cfg.output_dir / "invariants.csv");

    out << "integrated " << model.name << " with " << (plain ? "plain Kahan" : "CDC") << ", dt = " << cdc.dt;
    if (!plain)
        out << ", S = " << cdc.corrections << ", n = " << cdc.node_count();
    out << ", T = " << cdc.t_end << "\n";
    if (inv_file)
        out << "max |H1 - H1(0)| = " << max_h1 << ", max |H2 - H2(0)| = " << max_h2 << "\n";
    out << "wrote " << (cfg.output_dir / "trajectory.csv").string() << "\n";
}

std::string order_field(double v)
{
    return std::isnan(v) ? std::string("nan") : fmt(v);
}

void cmd_converge(const ExperimentConfig& cfg, std::ostream& out)
{
    if (cfg.grid.empty())
        throw ValidationError("converge: empty grid (set 'grid' in the config or pass --cell)");
    const ModelBundle model = make_model(cfg);
    if (!model.has_invariants())
        throw ValidationError("converge: model '" + model.name + "' has no invariants to measure");
    const StateVector u0 = Eigen::Map<const StateVector>(cfg.u0.data(), static_cast<Eigen::Index>(cfg.u0.size()));

    const ConvergenceReport report = convergence_study(model, u0, cfg.grid, cfg.study());

    auto file = open_output(cfg.output_dir, "convergence.csv");
    file << "S,n,dt,l2_u,l2_H1,l2_H2,order_u,order_H1,order_H2,wall_s\n";
    for (const auto& r : report.rows())
        file << r.corrections << ',' << r.nodes << ',' << fmt(r.dt) << ',' << fmt(r.l2_u) << ',' << fmt(r.l2_h1)
             << ',' << fmt(r.l2_h2) << ',' << order_field(r.order_u) << ',' << order_field(r.order_h1) << ','
             << order_field(r.order_h2) << ',' << fmt(r.wall_s) << '\n';
    close_output(file, cfg.output_dir / "convergence.csv");

    for (const auto& c : report.cells) {
        char line[200];
        std::snprintf(line, sizeof line, "S=%d n=%-2d rows=%zu mean order u=%.2f H1=%.2f H2=%.2f%s\n", c.corrections,
                      c.nodes, c.rows.size(), c.mean_order(ErrorMetric::Solution), c.mean_order(ErrorMetric::H1),
                      c.mean_order(ErrorMetric::H2),
                      c.reached_target ? "" : (c.saturated ? " (saturated)" : " (halving limit)"));
        out << line;
    }
    out << "wrote " << (cfg.output_dir / "convergence.csv").string() << "\n";
}

int cmd_structure(const ExperimentConfig& cfg, int samples, std::uint64_t seed, std::ostream& out)
{
    const ModelBundle model = make_model(cfg);
    if (!model.has_poisson_structure())
        throw ValidationError("structure: model '" + model.name + "' has no Poisson structure");
    if (samples < 1)
        throw ValidationError("structure: --samples must be at least 1");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.1, 2.0);
    StructureResiduals worst;
    double nambu = 0.0;
    for (int s = 0; s < samples; ++s) {
        StateVector u(model.system.dim());
        for (Eigen::Index i = 0; i < u.size(); ++i)
            u[i] = dist(rng);
        const auto r = structure_residuals(model, u);
        worst.casimir1 = std::max(worst.casimir1, r.casimir1);
        worst.casimir2 = std::max(worst.casimir2, r.casimir2);
        worst.hamilton1 = std::max(worst.hamilton1, r.hamilton1);
        worst.hamilton2 = std::max(worst.hamilton2, r.hamilton2);
        if (cfg.model == ModelKind::Lv2) {
            const Eigen::Vector3d g1 = eval_invariant_gradient(*model.h1, u);
            const Eigen::Vector3d g2 = eval_invariant_gradient(*model.h2, u);
            const Eigen::Vector3d f = eval_field(model.system, u);
            nambu = std::max(nambu, (g1.cross(g2) - f).norm());
        }
    }

    char line[160];
    std::snprintf(line, sizeof line, "model %s, %d states in [0.1, 2]^%d, seed %" PRIu64 "\n", model.name.c_str(),
                  samples, model.system.dim(), seed);
    out << line;
    const std::pair<const char*, double> rows[] = {{"r1 |J1 grad H1|       ", worst.casimir1},
                                                   {"r2 |J2 grad H2|       ", worst.casimir2},
                                                   {"r3 |J1 grad H2 - f|   ", worst.hamilton1},
                                                   {"r4 |J2 grad H1 - f|   ", worst.hamilton2}};
    for (const auto& [label, v] : rows) {
        std::snprintf(line, sizeof line, "%s max %.3e\n", label, v);
        out << line;
    }
    if (cfg.model == ModelKind::Lv2) {
        std::snprintf(line, sizeof line, "nambu |gH1 x gH2 - f| max %.3e\n", nambu);
        out << line;
    }
    const bool ok = worst.max() <= kStructureTol && nambu <= kStructureTol;
    out << (ok ? "ok" : "FAILED") << ": tolerance " << kStructureTol << "\n";
    return ok ? kExitOk : kExitNumerical;
}

std::vector<StudyCell> parse_cells(const std::vector<std::string>& specs)
{
    std::vector<StudyCell> cells;
    for (const auto& spec : specs) {
        StudyCell cell;
        double dt = 0.0;
        int n = 0;
        char tail = 0;
        const int got = std::sscanf(spec.c_str(), "%d:%d:%lf%c", &cell.corrections, &n, &dt, &tail);
        if (got < 2 || got > 3)
            throw ValidationError("--cell: expected S:n or S:n:dt, got '" + spec + "'");
        cell.nodes = n;
        if (got == 3)
            cell.dt0 = dt;
        cells.push_back(cell);
    }
    return cells;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Kahan integrator with classical deferred correction for quadratic Lotka-Volterra systems", "kcdc"};
    app.require_subcommand(1);

    Overrides integrate_flags, converge_flags, structure_flags;
    bool no_cdc = false;
    auto* integrate = app.add_subcommand("integrate", "Integrate one trajectory; writes trajectory.csv, invariants.csv");
    integrate_flags.attach(*integrate);
    integrate->add_flag("--no-cdc", no_cdc, "Plain Kahan at dt (same as --corrections 0)");

    std::vector<std::string> cell_specs;
    std::optional<double> target;
    std::string stop_metric;
    auto* converge = app.add_subcommand("converge", "Step-halving convergence study; writes convergence.csv");
    converge_flags.attach(*converge);
    converge->add_option("--cell", cell_specs, "Study cell S:n[:dt]; repeatable, replaces the config grid");
    converge->add_option("--target", target, "Stop once the stop metric reaches this error");
    converge->add_option("--stop-metric", stop_metric, "u, H1 or H2");

    int samples = 1000;
    std::uint64_t seed = 20240101;
    auto* structure = app.add_subcommand("structure", "Check Casimir and bi-Hamiltonian identities at random states");
    structure_flags.attach(*structure);
    structure->add_option("--samples", samples, "Number of random states");
    structure->add_option("--seed", seed, "Random seed");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    }

    try {
        if (integrate->parsed()) {
            cmd_integrate(integrate_flags.resolve(), no_cdc, out, err);
            return kExitOk;
        }
        if (converge->parsed()) {
            ExperimentConfig cfg = converge_flags.resolve();
            if (!cell_specs.empty())
                cfg.grid = parse_cells(cell_specs);
            if (target)
                cfg.target = *target;
            if (!stop_metric.empty()) {
                if (stop_metric == "u")
                    cfg.stop_metric = ErrorMetric::Solution;
                else if (stop_metric == "H1")
                    cfg.stop_metric = ErrorMetric::H1;
                else if (stop_metric == "H2")
                    cfg.stop_metric = ErrorMetric::H2;
                else
                    throw ValidationError("--stop-metric: expected u, H1 or H2");
            }
            cfg.validate();
            cmd_converge(cfg, out);
            return kExitOk;
        }
        return cmd_structure(structure_flags.resolve(), samples, seed, out);
    } catch (const ValidationError& e) {
        err << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
}

} // namespace kcdc
