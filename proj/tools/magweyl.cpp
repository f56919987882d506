#include "magweyl/dynamics.hpp"
#include "magweyl/errors.hpp"
#include "magweyl/experiments.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace magweyl;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.find_first_not_of(" \t") == std::string::npos) continue;
        out.push_back(std::stod(tok));
    }
    require(!out.empty(), errc::config_error, "empty number list '" + text + "'");
    return out;
}

Eigen::VectorXd parse_vector(const std::string& text, int d, const char* what) {
    std::vector<double> v = parse_list(text);
    require(static_cast<int>(v.size()) == d, errc::config_error,
            std::string(what) + " needs " + std::to_string(d) + " components");
    return Eigen::Map<Eigen::VectorXd>(v.data(), d);
}

void emit(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-")
        std::cout << content;
    else
        write_atomic(path, content);
}

// common field/scale flags shared by the closed-form and dynamics commands
struct FieldArgs {
    int d = 2;
    std::string f = "1";
    int q = -1; // derived from d and f when negative
    double h = 0.01;
    double mu = 1.0;
    std::string potential;
    double half_width = std::numeric_limits<double>::infinity();

    void attach(CLI::App* cmd) {
        // free the short -h for the semiclassical parameter
        cmd->set_help_flag("--help", "print this help message and exit");
        cmd->add_option("--d", d, "space dimension");
        cmd->add_option("--f", f, "field frequencies, comma separated");
        cmd->add_option("--q", q, "kernel dimension (default d - 2r)");
        cmd->add_option("--h", h, "semiclassical parameter");
        cmd->add_option("--mu", mu, "field coupling");
        cmd->add_option("--potential", potential, "potential expression, e.g. '(* 0.3 x1)'");
        cmd->add_option("--half-width", half_width, "potential box half width");
    }

    FieldConfig config() const {
        std::vector<double> fv = parse_list(f);
        int qq = q >= 0 ? q : d - 2 * static_cast<int>(fv.size());
        require(qq >= 0 && 2 * static_cast<int>(fv.size()) + qq == d, errc::config_error,
                "d must equal 2 * (number of frequencies) + q");
        return field_from_frequencies(fv, qq);
    }
    SemiclassicalScale scale(const FieldConfig& cfg) const { return make_scale(h, mu, d, cfg.q); }
    Potential V() const {
        if (potential.empty()) return {};
        return Potential::expression(potential, d, half_width);
    }
};

json flux_json(const FluxRecord& flux) {
    json j;
    j["quanta"] = flux.quanta;
    j["requested_L"] = flux.requested_L;
    j["snapped_L"] = flux.snapped_L;
    j["snapped"] = flux.snapped;
    return j;
}

SweepPlan plan_from_file(const std::string& path) {
    Config cfg;
    cfg.load_file(path);
    return plan_from_config(cfg);
}

// --- weyl -------------------------------------------------------------------

int run_weyl(const FieldArgs& fa, const std::vector<double>& taus, const std::string& xtext,
             const std::string& norm, const std::string& density, const std::string& out) {
    FieldConfig cfg = fa.config();
    SemiclassicalScale scale = fa.scale(cfg);
    Potential V = fa.V();
    Eigen::VectorXd x =
        xtext.empty() ? Eigen::VectorXd::Zero(fa.d).eval() : parse_vector(xtext, fa.d, "--x");

    WeylNorm wn;
    if (norm == "physical")
        wn = WeylNorm::physical;
    else if (norm == "paper")
        wn = WeylNorm::paper_literal;
    else
        fail(errc::config_error, "--norm must be physical or paper");

    std::string csv = "tau,value,provenance\n";
    for (double tau : taus) {
        double v;
        std::string prov;
        if (density == "mw") {
            v = magnetic_weyl_density(tau, x, V, cfg, scale, wn);
            prov = provenance_name(Provenance::magnetic_weyl);
        } else if (density == "mw-corrected") {
            v = mw_corrected_density(tau, x, V, cfg, scale, wn);
            prov = "magnetic-weyl-corrected";
        } else if (density == "weyl") {
            v = standard_weyl_density(tau, x, V, fa.d, fa.h, wn);
            prov = provenance_name(Provenance::weyl);
        } else {
            fail(errc::config_error, "--density must be mw, mw-corrected, or weyl");
        }
        csv += fmt(tau) + "," + fmt(v) + "," + prov + "\n";
    }
    emit(out, csv);
    return 0;
}

// --- op ---------------------------------------------------------------------

int run_op_assemble(const std::string& config_path, const std::string& matrix_path,
                    const std::string& out) {
    SweepPlan plan = plan_from_file(config_path);
    require(!plan.points.empty(), errc::config_error, "config needs an h value");
    PointInputs in = materialize(plan, plan.points[0]);
    DiscreteOperator op = assemble(in.V, in.cfg, in.scale, in.grid);

    json j;
    j["d"] = op.grid.d;
    j["n"] = op.grid.n;
    j["dim"] = op.dim();
    j["spacing"] = op.grid.spacing();
    j["stencil_order"] = op.grid.stencil_order;
    j["regime"] = regime_name(op.scale.regime);
    j["potential"] = op.potential_id;
    j["flux"] = flux_json(op.flux);
    j["hermiticity_residual"] = op.hermiticity_residual;
    if (!matrix_path.empty()) {
        op.export_coordinate_text(matrix_path);
        j["matrix_file"] = matrix_path;
    }
    emit(out, j.dump(2) + "\n");
    return 0;
}

// --- spec -------------------------------------------------------------------

int run_spec_count(const std::string& config_path, std::string engine, const std::string& out,
                   const std::string& sidecar_path) {
    const auto t0 = std::chrono::steady_clock::now();
    Config cfg;
    cfg.load_file(config_path);
    SweepPlan plan = plan_from_config(cfg);
    require(!plan.points.empty(), errc::config_error, "config needs an h value");
    std::vector<double> taus = cfg.numbers("taus", {plan.tau});

    PointInputs in = materialize(plan, plan.points[0]);
    DiscreteOperator op = assemble(in.V, in.cfg, in.scale, in.grid);
    if (engine.empty()) engine = plan.engine == "auto" ? "dense" : plan.engine;

    json side;
    side["engine"] = engine;
    side["dim"] = op.dim();
    side["taus"] = taus;
    side["flux"] = flux_json(op.flux);
    side["hermiticity_residual"] = op.hermiticity_residual;

    CountingCurve curve;
    const bool localized = in.psi.dim() != 0;
    if (engine == "dense") {
        if (localized) {
            LocalizedSpectrum spec =
                dense_localized(op, taus.back(), op.sample_diagonal(in.psi), plan.dense_cap);
            curve = localized_curve(spec, taus);
        } else {
            curve = dense_counting(op, taus, plan.dense_cap);
        }
    } else if (engine == "inertia") {
        require(!localized, errc::config_error,
                "the inertia engine counts globally; use dense or kpm with psi");
        std::vector<double> shifts;
        curve = inertia_counting(op, taus, &shifts);
        side["applied_shifts"] = shifts;
    } else if (engine == "kpm") {
        Eigen::VectorXd w = localized
                                ? op.sample_diagonal(in.psi)
                                : Eigen::VectorXd::Ones(static_cast<Eigen::Index>(op.dim()));
        KpmOptions kopt = plan.kpm;
        kopt.seed = plan.seed;
        KpmResult k = kpm_local_counting(op, taus, w, kopt);
        curve = k.curve;
        side["seed"] = kopt.seed;
        side["n_moments"] = kopt.n_moments;
        side["n_vectors"] = kopt.n_vectors;
        side["spectral_bounds"] = {k.lambda_lo, k.lambda_hi};
        side["resolution"] = k.resolution;
    } else {
        fail(errc::config_error, "unknown engine '" + engine + "'");
    }

    std::string csv = "tau,value,stderr,provenance\n";
    for (size_t i = 0; i < curve.taus.size(); ++i) {
        double se = i < curve.stderrs.size() ? curve.stderrs[i] : 0.0;
        csv += fmt(curve.taus[i]) + "," + fmt(curve.values[i]) + "," + fmt(se) + "," +
               provenance_name(curve.provenance) + "\n";
    }
    side["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    emit(out, csv);
    if (!sidecar_path.empty()) write_atomic(sidecar_path, side.dump(2) + "\n");
    return 0;
}

// --- dyn --------------------------------------------------------------------

Trajectory integrate_from_args(const FieldArgs& fa, const std::string& xtext,
                               const std::string& xitext, double T, double dt, bool fourth,
                               FieldConfig& cfg, SemiclassicalScale& scale, Potential& V) {
    cfg = fa.config();
    scale = fa.scale(cfg);
    V = fa.V();
    PhaseState s0;
    s0.x = parse_vector(xtext, fa.d, "--x");
    s0.xi = parse_vector(xitext, fa.d, "--xi");
    IntegrateOptions opt;
    opt.dt = dt;
    opt.fourth_order = fourth;
    return integrate(s0, V, cfg, scale, T, opt);
}

int run_dyn_run(const FieldArgs& fa, const std::string& xtext, const std::string& xitext,
                double T, double dt, bool fourth, const std::string& out) {
    FieldConfig cfg;
    SemiclassicalScale scale;
    Potential V;
    Trajectory traj = integrate_from_args(fa, xtext, xitext, T, dt, fourth, cfg, scale, V);

    std::string csv = "t";
    for (int a = 1; a <= fa.d; ++a) csv += ",x" + std::to_string(a);
    for (int a = 1; a <= fa.d; ++a) csv += ",xi" + std::to_string(a);
    for (int a = 1; a <= fa.d; ++a) csv += ",X" + std::to_string(a);
    csv += ",H\n";
    for (const PhaseState& s : traj.samples) {
        Eigen::VectorXd X = slow_variables(s, cfg, scale);
        csv += fmt(s.t);
        for (int a = 0; a < fa.d; ++a) csv += "," + fmt(s.x[a]);
        for (int a = 0; a < fa.d; ++a) csv += "," + fmt(s.xi[a]);
        for (int a = 0; a < fa.d; ++a) csv += "," + fmt(X[a]);
        csv += "," + fmt(s.energy) + "\n";
    }
    emit(out, csv);
    return 0;
}

int run_dyn_drift(const FieldArgs& fa, const std::string& xtext, const std::string& xitext,
                  double T, double dt, bool fourth, const std::string& out) {
    FieldConfig cfg;
    SemiclassicalScale scale;
    Potential V;
    Trajectory traj = integrate_from_args(fa, xtext, xitext, T, dt, fourth, cfg, scale, V);
    DriftReport rep = measure_drift(traj, cfg, scale);

    json j;
    j["velocity"] = std::vector<double>(rep.velocity.data(), rep.velocity.data() + fa.d);
    j["intercept"] = std::vector<double>(rep.intercept.data(), rep.intercept.data() + fa.d);
    j["rel_residual"] = rep.rel_residual;
    j["window"] = {rep.window_lo, rep.window_hi};
    j["n_used"] = rep.n_used;
    if (V.dim() != 0) {
        Eigen::VectorXd th = drift_velocity(cfg, scale, V.gradient(rep.intercept));
        j["theory_at_intercept"] = std::vector<double>(th.data(), th.data() + fa.d);
    }
    emit(out, j.dump(2) + "\n");
    return 0;
}

// --- lab --------------------------------------------------------------------

int run_lab_sweep(const std::string& config_path, const std::string& out_dir) {
    SweepPlan plan = plan_from_file(config_path);
    std::vector<RemainderRecord> recs = run_sweep(plan);
    fs::create_directories(out_dir);
    for (size_t i = 0; i < recs.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "record_%04zu.json", i);
        write_atomic((fs::path(out_dir) / name).string(),
                     record_to_json(recs[i], plan, plan.points[i]) + "\n");
    }
    write_atomic((fs::path(out_dir) / "records.csv").string(), records_to_csv(recs));
    write_atomic((fs::path(out_dir) / "plot_remainder.gp").string(),
                 plot_script("records.csv", "remainder vs h", 1, 12, true));
    std::cout << "wrote " << recs.size() << " records to " << out_dir << "\n";
    return 0;
}

std::vector<RemainderRecord> load_records(const std::vector<std::string>& paths) {
    std::vector<std::string> files;
    for (const std::string& p : paths) {
        if (fs::is_directory(p)) {
            for (const auto& e : fs::directory_iterator(p))
                if (e.path().extension() == ".json") files.push_back(e.path().string());
        } else {
            files.push_back(p);
        }
    }
    std::sort(files.begin(), files.end());
    require(!files.empty(), errc::config_error, "no record files found");

    std::vector<RemainderRecord> recs;
    for (const std::string& file : files) {
        std::ifstream inp(file);
        require(inp.good(), errc::io_error, "cannot open " + file);
        json j = json::parse(inp);
        const json& in = j.at("inputs");
        const json& o = j.at("outputs");
        RemainderRecord rec;
        rec.h = in.at("h").get<double>();
        rec.mu = in.at("mu").get<double>();
        rec.tau = in.at("tau").get<double>();
        rec.regime = o.at("regime").get<std::string>();
        rec.r_abs = o.at("r_abs").get<double>();
        rec.r_corrected_abs = o.at("r_corrected_abs").get<double>();
        rec.engine_error = o.at("engine_error").get<double>();
        recs.push_back(std::move(rec));
    }
    return recs;
}

int run_lab_fit(const std::vector<std::string>& record_paths, const std::string& parameter,
                bool corrected, bool subtract, const std::string& out) {
    std::vector<RemainderRecord> recs = load_records(record_paths);
    ScalingFit fit = scaling_fit(recs, parameter, corrected, subtract);
    json j;
    j["parameter"] = parameter;
    j["slope"] = fit.slope;
    j["intercept"] = fit.intercept;
    j["ci_lo"] = fit.ci_lo;
    j["ci_hi"] = fit.ci_hi;
    j["n"] = fit.n;
    j["corrected"] = corrected;
    j["subtract_engine_error"] = subtract;
    emit(out, j.dump(2) + "\n");
    return 0;
}

int run_lab_weyl_limit(const std::string& config_path, const std::string& out_dir) {
    Config cfg;
    cfg.load_file(config_path);
    int d = static_cast<int>(cfg.integer("d", 2));
    std::vector<double> f = cfg.numbers("f", {1.0});
    double tau = cfg.num("tau", 0.5);
    double v0 = cfg.num("v0", 0.0);
    std::vector<double> mu_h = cfg.numbers("mu_h");
    double h = cfg.num("h", 1e-3);

    WeylLimitStudy st = weyl_limit_study(d, f, tau, v0, mu_h, h);
    std::string csv = "mu_h,emw,ew,rel_gap\n";
    for (const auto& row : st.rows)
        csv += fmt(row.mu_h) + "," + fmt(row.emw) + "," + fmt(row.ew) + "," + fmt(row.rel_gap) +
               "\n";

    fs::create_directories(out_dir);
    write_atomic((fs::path(out_dir) / "weyl_limit.csv").string(), csv);
    json j;
    j["slope"] = st.slope;
    j["d"] = d;
    j["tau"] = tau;
    write_atomic((fs::path(out_dir) / "weyl_limit.json").string(), j.dump(2) + "\n");
    write_atomic((fs::path(out_dir) / "plot_weyl_limit.gp").string(),
                 plot_script("weyl_limit.csv", "MW vs Weyl deviation", 1, 4, true));
    std::cout << "rel_gap slope " << fmt(st.slope) << ", wrote " << out_dir << "\n";
    return 0;
}

int run_lab_gaps(const std::string& config_path, const std::string& out_dir) {
    Config cfg;
    cfg.load_file(config_path);
    GapStudyPlan plan;
    plan.mu_h = cfg.numbers("mu_h", plan.mu_h);
    plan.h = cfg.num("h", plan.h);
    plan.potential = cfg.str("potential", plan.potential);
    plan.half_width = cfg.num("half_width", plan.half_width);
    plan.n = static_cast<int>(cfg.integer("n", plan.n));
    plan.scan_hi_levels = cfg.num("scan_hi_levels", plan.scan_hi_levels);

    std::vector<GapStudyRow> rows = gap_study(plan);
    std::string csv =
        "mu_h,n_clusters,max_center_offset,widest_gap,min_required_gap,gaps_present,"
        "count_at_zero\n";
    json sidecar = json::array();
    for (const auto& row : rows) {
        double offset = 0, widest = 0;
        for (size_t a = 0; a < row.cluster_centers.size(); ++a)
            offset = std::max(offset,
                              std::fabs(row.cluster_centers[a] - row.predicted_centers[a]));
        for (double w : row.gap_widths) widest = std::max(widest, w);
        csv += fmt(row.mu_h) + "," + std::to_string(row.cluster_centers.size()) + "," +
               fmt(offset) + "," + fmt(widest) + "," + fmt(row.min_required_gap) + "," +
               (row.gaps_present ? "1" : "0") + "," + fmt(row.localized_count_at_zero) + "\n";
        json r;
        r["mu_h"] = row.mu_h;
        r["cluster_centers"] = row.cluster_centers;
        r["predicted_centers"] = row.predicted_centers;
        r["gap_widths"] = row.gap_widths;
        r["min_required_gap"] = row.min_required_gap;
        r["gaps_present"] = row.gaps_present;
        r["localized_count_at_zero"] = row.localized_count_at_zero;
        sidecar.push_back(std::move(r));
    }
    fs::create_directories(out_dir);
    write_atomic((fs::path(out_dir) / "gaps.csv").string(), csv);
    write_atomic((fs::path(out_dir) / "gaps.json").string(), sidecar.dump(2) + "\n");
    write_atomic((fs::path(out_dir) / "plot_gaps.gp").string(),
                 plot_script("gaps.csv", "cluster gaps vs mu h", 1, 4, false));
    std::cout << "wrote " << rows.size() << " gap rows to " << out_dir << "\n";
    return 0;
}

int run_lab_diophantine(const std::string& config_path, const std::string& out_dir) {
    Config cfg;
    cfg.load_file(config_path);
    std::vector<std::vector<double>> f_choices;
    for (int i = 1; cfg.has("f" + std::to_string(i)); ++i)
        f_choices.push_back(cfg.numbers("f" + std::to_string(i)));
    if (f_choices.empty() && cfg.has("f")) f_choices.push_back(cfg.numbers("f"));
    require(!f_choices.empty(), errc::config_error, "config needs f or f1, f2, ...");
    std::vector<double> hbars = cfg.numbers("hbar");
    double tau_max = cfg.num("tau_max", 1.0);

    std::vector<DiophantineRow> rows = diophantine_study(f_choices, hbars, tau_max);
    std::string csv = "f,hbar,nu,nu_over_hbar\n";
    for (const auto& row : rows) {
        std::string fs_col;
        for (size_t i = 0; i < row.f.size(); ++i)
            fs_col += (i ? ";" : "") + fmt(row.f[i]);
        csv += fs_col + "," + fmt(row.hbar) + "," + fmt(row.nu) + "," + fmt(row.nu / row.hbar) +
               "\n";
    }
    fs::create_directories(out_dir);
    write_atomic((fs::path(out_dir) / "diophantine.csv").string(), csv);
    write_atomic((fs::path(out_dir) / "plot_diophantine.gp").string(),
                 plot_script("diophantine.csv", "incommensurability modulus", 2, 3, true));
    std::cout << "wrote " << rows.size() << " modulus rows to " << out_dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"magnetic Schrodinger spectral asymptotics toolkit"};
    app.require_subcommand(1);

    // weyl
    auto* weyl = app.add_subcommand("weyl", "closed-form spectral densities");
    weyl->require_subcommand(1);
    FieldArgs weyl_fa;
    std::string weyl_x, weyl_norm = "physical", weyl_density = "mw", weyl_out;
    double weyl_tau = 1.0, tau_min = 0.0, tau_max = 1.0;
    int tau_points = 50;

    auto* weval = weyl->add_subcommand("eval", "density at one tau");
    weyl_fa.attach(weval);
    weval->add_option("--tau", weyl_tau, "energy level");
    auto* wcurve = weyl->add_subcommand("curve", "density on a tau grid");
    weyl_fa.attach(wcurve);
    wcurve->add_option("--tau-min", tau_min, "grid start");
    wcurve->add_option("--tau-max", tau_max, "grid end");
    wcurve->add_option("--tau-points", tau_points, "grid size");
    for (auto* cmd : {weval, wcurve}) {
        cmd->add_option("--x", weyl_x, "evaluation point, comma separated");
        cmd->add_option("--norm", weyl_norm, "physical | paper");
        cmd->add_option("--density", weyl_density, "mw | mw-corrected | weyl");
        cmd->add_option("--out", weyl_out, "output CSV path (default stdout)");
    }

    // op
    auto* op = app.add_subcommand("op", "discrete operator assembly");
    op->require_subcommand(1);
    auto* opasm = op->add_subcommand("assemble", "assemble and report the operator");
    std::string op_config, op_matrix, op_out;
    opasm->add_option("--config", op_config, "plan config file")->required();
    opasm->add_option("--matrix", op_matrix, "write (row, col, re, im) coordinate text");
    opasm->add_option("--out", op_out, "output JSON path (default stdout)");

    // spec
    auto* spec = app.add_subcommand("spec", "counting curves from the discrete operator");
    spec->require_subcommand(1);
    auto* scount = spec->add_subcommand("count", "counting curve at the config taus");
    std::string spec_config, spec_engine, spec_out, spec_sidecar;
    scount->add_option("--config", spec_config, "plan config file")->required();
    scount->add_option("--engine", spec_engine, "dense | inertia | kpm");
    scount->add_option("--out", spec_out, "output CSV path (default stdout)");
    scount->add_option("--sidecar", spec_sidecar, "JSON sidecar path");

    // dyn
    auto* dyn = app.add_subcommand("dyn", "classical cyclotron and drift dynamics");
    dyn->require_subcommand(1);
    FieldArgs dyn_fa;
    std::string dyn_x = "0,0", dyn_xi = "1,0", dyn_out;
    double dyn_T = 1.0, dyn_dt = 0.0;
    bool dyn_fourth = false;

    auto* drun = dyn->add_subcommand("run", "integrate one trajectory to CSV");
    auto* ddrift = dyn->add_subcommand("drift", "fit the guiding-center drift to JSON");
    for (auto* cmd : {drun, ddrift}) {
        dyn_fa.attach(cmd);
        cmd->add_option("--x", dyn_x, "initial position, comma separated");
        cmd->add_option("--xi", dyn_xi, "initial momentum, comma separated");
        cmd->add_option("--T", dyn_T, "integration time");
        cmd->add_option("--dt", dyn_dt, "integrator step (0 = default)");
        cmd->add_flag("--fourth-order", dyn_fourth, "triple-jump composition");
        cmd->add_option("--out", dyn_out, "output path (default stdout)");
    }

    // lab
    auto* lab = app.add_subcommand("lab", "remainder experiments and studies");
    lab->require_subcommand(1);
    std::string lab_config, lab_dir = ".", fit_param = "h", fit_out;
    std::vector<std::string> fit_records;
    bool fit_corrected = false, fit_subtract = false;

    auto* lsweep = lab->add_subcommand("sweep", "run a remainder sweep");
    lsweep->add_option("--config", lab_config, "sweep config file")->required();
    lsweep->add_option("--out-dir", lab_dir, "output directory");

    auto* lfit = lab->add_subcommand("fit", "power-law fit over recorded sweeps");
    lfit->add_option("--records", fit_records, "record JSON files or directories")->required();
    lfit->add_option("--parameter", fit_param, "h | mu");
    lfit->add_flag("--corrected", fit_corrected, "fit the corrected remainder");
    lfit->add_flag("--subtract-engine-error", fit_subtract, "remove the stencil estimate");
    lfit->add_option("--out", fit_out, "output JSON path (default stdout)");

    auto* llimit = lab->add_subcommand("weyl-limit", "MW to Weyl convergence study");
    llimit->add_option("--config", lab_config, "study config file")->required();
    llimit->add_option("--out-dir", lab_dir, "output directory");

    auto* lgaps = lab->add_subcommand("gaps", "superstrong cluster gap study");
    lgaps->add_option("--config", lab_config, "study config file")->required();
    lgaps->add_option("--out-dir", lab_dir, "output directory");

    auto* ldio = lab->add_subcommand("diophantine", "frequency incommensurability moduli");
    ldio->add_option("--config", lab_config, "study config file")->required();
    ldio->add_option("--out-dir", lab_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (weval->parsed()) return run_weyl(weyl_fa, {weyl_tau}, weyl_x, weyl_norm, weyl_density,
                                             weyl_out);
        if (wcurve->parsed()) {
            require(tau_points >= 2, errc::config_error, "--tau-points must be at least 2");
            std::vector<double> taus(tau_points);
            for (int i = 0; i < tau_points; ++i)
                taus[i] = tau_min + (tau_max - tau_min) * i / (tau_points - 1);
            return run_weyl(weyl_fa, taus, weyl_x, weyl_norm, weyl_density, weyl_out);
        }
        if (opasm->parsed()) return run_op_assemble(op_config, op_matrix, op_out);
        if (scount->parsed()) return run_spec_count(spec_config, spec_engine, spec_out,
                                                    spec_sidecar);
        if (drun->parsed())
            return run_dyn_run(dyn_fa, dyn_x, dyn_xi, dyn_T, dyn_dt, dyn_fourth, dyn_out);
        if (ddrift->parsed())
            return run_dyn_drift(dyn_fa, dyn_x, dyn_xi, dyn_T, dyn_dt, dyn_fourth, dyn_out);
        if (lsweep->parsed()) return run_lab_sweep(lab_config, lab_dir);
        if (lfit->parsed())
            return run_lab_fit(fit_records, fit_param, fit_corrected, fit_subtract, fit_out);
        if (llimit->parsed()) return run_lab_weyl_limit(lab_config, lab_dir);
        if (lgaps->parsed()) return run_lab_gaps(lab_config, lab_dir);
        if (ldio->parsed()) return run_lab_diophantine(lab_config, lab_dir);
    } catch (const error& e) {
        std::cerr << e.what() << "\n";
        if (e.code() == errc::budget_exceeded) return 2;
        if (e.code() == errc::invariant_violation) return 3;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    return 0;
}
