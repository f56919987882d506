#include "magweyl/dynamics.hpp"
#include "magweyl/errors.hpp"
#include "magweyl/experiments.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace magweyl;

namespace {

WeylNorm parse_norm(const std::string& norm) {
    if (norm == "physical") return WeylNorm::physical;
    if (norm == "paper") return WeylNorm::paper_literal;
    fail(errc::config_error, "norm must be 'physical' or 'paper'");
}

SweepPlan plan_from_text(const std::string& text) {
    Config cfg;
    cfg.load_text(text);
    return plan_from_config(cfg);
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "semiclassical spectral asymptotics for constant-field magnetic "
              "Schrodinger operators";
    m.attr("__version__") = "0.1.0";

    py::register_exception<error>(m, "Error", PyExc_RuntimeError);

    // --- field and scale ------------------------------------------------------
    py::class_<FieldConfig>(m, "FieldConfig")
        .def_readonly("d", &FieldConfig::d)
        .def_readonly("f", &FieldConfig::f)
        .def_readonly("r", &FieldConfig::r)
        .def_readonly("q", &FieldConfig::q)
        .def_readonly("F", &FieldConfig::F)
        .def_readonly("basis", &FieldConfig::basis)
        .def("canonical", &FieldConfig::canonical)
        .def("gauge", &FieldConfig::gauge)
        .def("beta", &FieldConfig::beta)
        .def("f_min", &FieldConfig::f_min)
        .def("f_max", &FieldConfig::f_max);

    m.def("field_from_frequencies", &field_from_frequencies, py::arg("f"), py::arg("q") = 0);
    m.def("field_invariants", &field_invariants, py::arg("F"), py::arg("skew_tol") = 1e-12);
    m.def("gauge_potential", &gauge_potential, py::arg("cfg"), py::arg("x"));

    py::class_<SemiclassicalScale>(m, "SemiclassicalScale")
        .def_readonly("h", &SemiclassicalScale::h)
        .def_readonly("mu", &SemiclassicalScale::mu)
        .def_property_readonly(
            "regime", [](const SemiclassicalScale& s) { return regime_name(s.regime); })
        .def_readonly("rho_bar1", &SemiclassicalScale::rho_bar1)
        .def_readonly("eps_weak", &SemiclassicalScale::eps_weak)
        .def("magnetic_length", &SemiclassicalScale::magnetic_length, py::arg("f") = 1.0);

    m.def("make_scale", &make_scale, py::arg("h"), py::arg("mu"), py::arg("d"), py::arg("q"));

    // --- potentials -----------------------------------------------------------
    py::class_<Smoothness>(m, "Smoothness")
        .def(py::init([](double l, double sigma) {
                 Smoothness sm;
                 sm.l = l;
                 sm.sigma = sigma;
                 return sm;
             }),
             py::arg("l") = std::numeric_limits<double>::infinity(), py::arg("sigma") = 0.0)
        .def_readwrite("l", &Smoothness::l)
        .def_readwrite("sigma", &Smoothness::sigma);

    py::class_<Potential>(m, "Potential")
        .def(py::init<>())
        .def_static(
            "expression",
            [](const std::string& text, int dim, double half_width, const Smoothness& sm) {
                return Potential::expression(text, dim, half_width, sm);
            },
            py::arg("text"), py::arg("dim"),
            py::arg("half_width") = std::numeric_limits<double>::infinity(),
            py::arg("smoothness") = Smoothness{})
        .def_static("constant", &Potential::constant, py::arg("value"), py::arg("dim"),
                    py::arg("half_width") = std::numeric_limits<double>::infinity())
        .def("__call__", [](const Potential& p, const Eigen::VectorXd& x) { return p(x); })
        .def("gradient", &Potential::gradient)
        .def("mollified", &Potential::mollified, py::arg("eps"), py::arg("nodes_per_axis") = 0)
        .def("dim", &Potential::dim)
        .def("half_width", &Potential::half_width)
        .def("min_on_grid", &Potential::min_on_grid, py::arg("samples_per_axis") = 33)
        .def("max_on_grid", &Potential::max_on_grid, py::arg("samples_per_axis") = 33)
        .def("describe", &Potential::describe);

    // --- closed-form densities --------------------------------------------------
    py::class_<LandauLattice>(m, "LandauLattice")
        .def_readonly("f", &LandauLattice::f)
        .def_readonly("hbar_eff", &LandauLattice::hbar_eff)
        .def_readonly("e_cut", &LandauLattice::e_cut)
        .def_readonly("levels", &LandauLattice::levels)
        .def("ground", &LandauLattice::ground);

    m.def("landau_lattice", &landau_lattice, py::arg("f"), py::arg("hbar_eff"),
          py::arg("e_cut"));
    m.def(
        "magnetic_weyl_density",
        [](double tau, const Eigen::VectorXd& x, const Potential& V, const FieldConfig& cfg,
           const SemiclassicalScale& scale, const std::string& norm) {
            return magnetic_weyl_density(tau, x, V, cfg, scale, parse_norm(norm));
        },
        py::arg("tau"), py::arg("x"), py::arg("V"), py::arg("cfg"), py::arg("scale"),
        py::arg("norm") = "physical");
    m.def(
        "standard_weyl_density",
        [](double tau, const Eigen::VectorXd& x, const Potential& V, int d, double h,
           const std::string& norm) {
            return standard_weyl_density(tau, x, V, d, h, parse_norm(norm));
        },
        py::arg("tau"), py::arg("x"), py::arg("V"), py::arg("d"), py::arg("h"),
        py::arg("norm") = "physical");
    m.def(
        "mw_corrected_density",
        [](double tau, const Eigen::VectorXd& x, const Potential& V, const FieldConfig& cfg,
           const SemiclassicalScale& scale, const std::string& norm) {
            return mw_corrected_density(tau, x, V, cfg, scale, parse_norm(norm));
        },
        py::arg("tau"), py::arg("x"), py::arg("V"), py::arg("cfg"), py::arg("scale"),
        py::arg("norm") = "physical");
    m.def("lattice_count", &lattice_count, py::arg("hbar"), py::arg("tau"), py::arg("f"),
          py::arg("v0") = 0.0, py::arg("literal_reading") = false);

    py::class_<DiophantineEstimate>(m, "DiophantineEstimate")
        .def_readonly("nu", &DiophantineEstimate::nu)
        .def_readonly("tau_lo", &DiophantineEstimate::tau_lo)
        .def_readonly("tau_hi", &DiophantineEstimate::tau_hi)
        .def_readonly("levels_enumerated", &DiophantineEstimate::levels_enumerated);

    m.def("diophantine_modulus", &diophantine_modulus, py::arg("f"), py::arg("hbar"),
          py::arg("tau_max") = 1.0, py::arg("grid_step") = 0.0);

    // --- discrete operator ------------------------------------------------------
    py::enum_<Boundary>(m, "Boundary")
        .value("torus", Boundary::torus)
        .value("dirichlet", Boundary::dirichlet);

    py::class_<GridSpec>(m, "GridSpec")
        .def(py::init([](int d, int n, double L, Boundary boundary, int stencil_order) {
                 GridSpec g;
                 g.d = d;
                 g.n = n;
                 g.L = L;
                 g.boundary = boundary;
                 g.stencil_order = stencil_order;
                 return g;
             }),
             py::arg("d") = 2, py::arg("n") = 16, py::arg("L") = 1.0,
             py::arg("boundary") = Boundary::torus, py::arg("stencil_order") = 2)
        .def_readwrite("d", &GridSpec::d)
        .def_readwrite("n", &GridSpec::n)
        .def_readwrite("L", &GridSpec::L)
        .def_readwrite("boundary", &GridSpec::boundary)
        .def_readwrite("stencil_order", &GridSpec::stencil_order)
        .def("spacing", &GridSpec::spacing)
        .def("total_sites", &GridSpec::total_sites);

    py::class_<FluxRecord>(m, "FluxRecord")
        .def_readonly("quanta", &FluxRecord::quanta)
        .def_readonly("requested_L", &FluxRecord::requested_L)
        .def_readonly("snapped_L", &FluxRecord::snapped_L)
        .def_readonly("snapped", &FluxRecord::snapped);

    py::class_<DiscreteOperator>(m, "DiscreteOperator")
        .def_readonly("grid", &DiscreteOperator::grid)
        .def_readonly("flux", &DiscreteOperator::flux)
        .def_readonly("hermiticity_residual", &DiscreteOperator::hermiticity_residual)
        .def("dim", &DiscreteOperator::dim)
        .def("dense", &DiscreteOperator::dense)
        .def("site_position", &DiscreteOperator::site_position)
        .def("sample_diagonal", &DiscreteOperator::sample_diagonal)
        .def("export_coordinate_text", &DiscreteOperator::export_coordinate_text);

    m.def("assemble", &assemble, py::arg("V"), py::arg("cfg"), py::arg("scale"),
          py::arg("grid"));

    py::class_<Band>(m, "Band")
        .def_readonly("alpha", &Band::alpha)
        .def_readonly("level", &Band::level)
        .def_readonly("scalar", &Band::scalar)
        .def_readonly("op", &Band::op);

    py::class_<BandFamily>(m, "BandFamily")
        .def_readonly("bands", &BandFamily::bands)
        .def_readonly("e_cut", &BandFamily::e_cut)
        .def_readonly("q", &BandFamily::q);

    m.def("band_reduce", &band_reduce, py::arg("V"), py::arg("cfg"), py::arg("scale"),
          py::arg("e_cut"), py::arg("kernel_grid"));
    m.def("band_counting", &band_counting, py::arg("family"), py::arg("taus"),
          py::arg("degeneracy"));

    // --- spectral engines -------------------------------------------------------
    py::class_<CountingCurve>(m, "CountingCurve")
        .def_readonly("taus", &CountingCurve::taus)
        .def_readonly("values", &CountingCurve::values)
        .def_readonly("stderrs", &CountingCurve::stderrs)
        .def_property_readonly(
            "provenance", [](const CountingCurve& c) { return provenance_name(c.provenance); })
        .def("at", &CountingCurve::at)
        .def("validate", &CountingCurve::validate, py::arg("monotone_tol") = 0.0);

    m.def("dense_eigenvalues", &dense_eigenvalues, py::arg("op"), py::arg("dense_cap") = 6000);
    m.def("dense_counting", &dense_counting, py::arg("op"), py::arg("taus"),
          py::arg("dense_cap") = 6000);
    m.def(
        "inertia_counting",
        [](const DiscreteOperator& op, const std::vector<double>& taus) {
            return inertia_counting(op, taus);
        },
        py::arg("op"), py::arg("taus"));

    py::class_<KpmOptions>(m, "KpmOptions")
        .def(py::init<>())
        .def_readwrite("n_moments", &KpmOptions::n_moments)
        .def_readwrite("n_vectors", &KpmOptions::n_vectors)
        .def_readwrite("seed", &KpmOptions::seed);

    py::class_<KpmResult>(m, "KpmResult")
        .def_readonly("curve", &KpmResult::curve)
        .def_readonly("lambda_lo", &KpmResult::lambda_lo)
        .def_readonly("lambda_hi", &KpmResult::lambda_hi)
        .def_readonly("resolution", &KpmResult::resolution);

    m.def("kpm_local_counting", &kpm_local_counting, py::arg("op"), py::arg("taus"),
          py::arg("psi_diag"), py::arg("options") = KpmOptions{});

    py::class_<GapReport::Interval>(m, "GapInterval")
        .def_readonly("lo", &GapReport::Interval::lo)
        .def_readonly("hi", &GapReport::Interval::hi);

    py::class_<GapReport>(m, "GapReport")
        .def_readonly("gaps", &GapReport::gaps)
        .def_readonly("cluster_centers", &GapReport::cluster_centers)
        .def_readonly("cluster_widths", &GapReport::cluster_widths)
        .def_readonly("cluster_counts", &GapReport::cluster_counts);

    m.def("gap_scan", &gap_scan, py::arg("op"), py::arg("lo"), py::arg("hi"),
          py::arg("resolution"), py::arg("min_gap_width") = 0.0);

    // --- dynamics ---------------------------------------------------------------
    py::class_<PhaseState>(m, "PhaseState")
        .def(py::init([](const Eigen::VectorXd& x, const Eigen::VectorXd& xi) {
                 PhaseState s;
                 s.x = x;
                 s.xi = xi;
                 return s;
             }),
             py::arg("x"), py::arg("xi"))
        .def_readonly("t", &PhaseState::t)
        .def_readonly("x", &PhaseState::x)
        .def_readonly("xi", &PhaseState::xi)
        .def_readonly("energy", &PhaseState::energy);

    py::class_<Trajectory>(m, "Trajectory")
        .def_readonly("samples", &Trajectory::samples)
        .def_readonly("step", &Trajectory::step)
        .def_readonly("sample_spacing", &Trajectory::sample_spacing);

    py::class_<IntegrateOptions>(m, "IntegrateOptions")
        .def(py::init<>())
        .def_readwrite("dt", &IntegrateOptions::dt)
        .def_readwrite("fourth_order", &IntegrateOptions::fourth_order)
        .def_readwrite("max_samples", &IntegrateOptions::max_samples);

    m.def("hamiltonian", &hamiltonian, py::arg("V"), py::arg("cfg"), py::arg("scale"),
          py::arg("x"), py::arg("xi"));
    m.def("max_step", &max_step, py::arg("cfg"), py::arg("scale"));
    m.def("cyclotron_period", &cyclotron_period, py::arg("cfg"), py::arg("scale"));
    m.def("integrate", &integrate, py::arg("initial"), py::arg("V"), py::arg("cfg"),
          py::arg("scale"), py::arg("T"), py::arg("options") = IntegrateOptions{});
    m.def("slow_variables", &slow_variables, py::arg("state"), py::arg("cfg"),
          py::arg("scale"));

    py::class_<DriftReport>(m, "DriftReport")
        .def_readonly("velocity", &DriftReport::velocity)
        .def_readonly("intercept", &DriftReport::intercept)
        .def_readonly("rel_residual", &DriftReport::rel_residual)
        .def_readonly("window_lo", &DriftReport::window_lo)
        .def_readonly("window_hi", &DriftReport::window_hi)
        .def_readonly("n_used", &DriftReport::n_used);

    m.def("measure_drift", &measure_drift, py::arg("trajectory"), py::arg("cfg"),
          py::arg("scale"));
    m.def("drift_velocity", &drift_velocity, py::arg("cfg"), py::arg("scale"), py::arg("grad"));

    py::class_<PoissonReport>(m, "PoissonReport")
        .def_readonly("sign_xx", &PoissonReport::sign_xx)
        .def_readonly("sign_pp", &PoissonReport::sign_pp)
        .def_readonly("px_zero", &PoissonReport::px_zero)
        .def_readonly("max_px_residual", &PoissonReport::max_px_residual)
        .def_readonly("kernel_pair_value", &PoissonReport::kernel_pair_value)
        .def_readonly("max_xx_mismatch", &PoissonReport::max_xx_mismatch)
        .def_readonly("max_pp_mismatch", &PoissonReport::max_pp_mismatch);

    m.def("poisson_check", &poisson_check, py::arg("cfg"), py::arg("scale"));

    // --- experiments --------------------------------------------------------------
    py::class_<SweepPoint>(m, "SweepPoint")
        .def(py::init([](double h, double mu) { return SweepPoint{h, mu}; }), py::arg("h"),
             py::arg("mu"))
        .def_readwrite("h", &SweepPoint::h)
        .def_readwrite("mu", &SweepPoint::mu);

    py::class_<SweepPlan>(m, "SweepPlan")
        .def(py::init<>())
        .def_readwrite("d", &SweepPlan::d)
        .def_readwrite("f", &SweepPlan::f)
        .def_readwrite("q", &SweepPlan::q)
        .def_readwrite("points", &SweepPlan::points)
        .def_readwrite("potential", &SweepPlan::potential)
        .def_readwrite("half_width", &SweepPlan::half_width)
        .def_readwrite("mollify_eps", &SweepPlan::mollify_eps)
        .def_readwrite("smoothness", &SweepPlan::smoothness)
        .def_readwrite("psi", &SweepPlan::psi)
        .def_readwrite("tau", &SweepPlan::tau)
        .def_readwrite("engine", &SweepPlan::engine)
        .def_readwrite("n", &SweepPlan::n)
        .def_readwrite("points_per_length", &SweepPlan::points_per_length)
        .def_readwrite("stencil_order", &SweepPlan::stencil_order)
        .def_readwrite("dense_cap", &SweepPlan::dense_cap)
        .def_readwrite("budget_dim", &SweepPlan::budget_dim)
        .def_readwrite("kpm", &SweepPlan::kpm)
        .def_readwrite("estimate_engine_error", &SweepPlan::estimate_engine_error)
        .def_readwrite("seed", &SweepPlan::seed)
        .def_readwrite("threads", &SweepPlan::threads);

    py::class_<RemainderRecord>(m, "RemainderRecord")
        .def_readonly("h", &RemainderRecord::h)
        .def_readonly("mu", &RemainderRecord::mu)
        .def_readonly("tau", &RemainderRecord::tau)
        .def_readonly("regime", &RemainderRecord::regime)
        .def_readonly("count", &RemainderRecord::count)
        .def_readonly("emw", &RemainderRecord::emw)
        .def_readonly("emw_corrected", &RemainderRecord::emw_corrected)
        .def_readonly("r_signed", &RemainderRecord::r_signed)
        .def_readonly("r_abs", &RemainderRecord::r_abs)
        .def_readonly("r_corrected_signed", &RemainderRecord::r_corrected_signed)
        .def_readonly("r_corrected_abs", &RemainderRecord::r_corrected_abs)
        .def_readonly("engine_error", &RemainderRecord::engine_error)
        .def_readonly("engine_stderr", &RemainderRecord::engine_stderr)
        .def_readonly("quad_error", &RemainderRecord::quad_error)
        .def_readonly("bounds", &RemainderRecord::bounds)
        .def_readonly("engine", &RemainderRecord::engine)
        .def_readonly("n", &RemainderRecord::n)
        .def_readonly("degraded", &RemainderRecord::degraded)
        .def_readonly("snapped_half_width", &RemainderRecord::snapped_half_width)
        .def_readonly("wall_seconds", &RemainderRecord::wall_seconds);

    m.def("remainder", &magweyl::remainder, py::arg("plan"), py::arg("point"));
    m.def("run_sweep", &run_sweep, py::arg("plan"));
    m.def("remainder_bounds", &remainder_bounds, py::arg("cfg"), py::arg("scale"),
          py::arg("smoothness"), py::arg("value_nondeg"), py::arg("gradient_nondeg"),
          py::arg("level_nondeg") = false, py::arg("nu_hat") = py::none());

    py::class_<ScalingFit>(m, "ScalingFit")
        .def_readonly("slope", &ScalingFit::slope)
        .def_readonly("intercept", &ScalingFit::intercept)
        .def_readonly("ci_lo", &ScalingFit::ci_lo)
        .def_readonly("ci_hi", &ScalingFit::ci_hi)
        .def_readonly("n", &ScalingFit::n);

    m.def("fit_power_law", &fit_power_law, py::arg("xs"), py::arg("rs"), py::arg("seed") = 7,
          py::arg("resamples") = 400);
    m.def("scaling_fit", &scaling_fit, py::arg("records"), py::arg("parameter") = "h",
          py::arg("use_corrected") = false, py::arg("subtract_engine_error") = false);

    py::class_<WeylLimitRow>(m, "WeylLimitRow")
        .def_readonly("mu_h", &WeylLimitRow::mu_h)
        .def_readonly("emw", &WeylLimitRow::emw)
        .def_readonly("ew", &WeylLimitRow::ew)
        .def_readonly("rel_gap", &WeylLimitRow::rel_gap);

    py::class_<WeylLimitStudy>(m, "WeylLimitStudy")
        .def_readonly("rows", &WeylLimitStudy::rows)
        .def_readonly("slope", &WeylLimitStudy::slope);

    m.def("weyl_limit_study", &weyl_limit_study, py::arg("d"), py::arg("f"), py::arg("tau"),
          py::arg("v0"), py::arg("mu_h_values"), py::arg("h") = 1e-3);

    py::class_<GapStudyPlan>(m, "GapStudyPlan")
        .def(py::init<>())
        .def_readwrite("mu_h", &GapStudyPlan::mu_h)
        .def_readwrite("h", &GapStudyPlan::h)
        .def_readwrite("potential", &GapStudyPlan::potential)
        .def_readwrite("half_width", &GapStudyPlan::half_width)
        .def_readwrite("n", &GapStudyPlan::n)
        .def_readwrite("scan_hi_levels", &GapStudyPlan::scan_hi_levels);

    py::class_<GapStudyRow>(m, "GapStudyRow")
        .def_readonly("mu_h", &GapStudyRow::mu_h)
        .def_readonly("cluster_centers", &GapStudyRow::cluster_centers)
        .def_readonly("predicted_centers", &GapStudyRow::predicted_centers)
        .def_readonly("gap_widths", &GapStudyRow::gap_widths)
        .def_readonly("min_required_gap", &GapStudyRow::min_required_gap)
        .def_readonly("gaps_present", &GapStudyRow::gaps_present)
        .def_readonly("localized_count_at_zero", &GapStudyRow::localized_count_at_zero);

    m.def("gap_study", &gap_study, py::arg("plan"));

    py::class_<DiophantineRow>(m, "DiophantineRow")
        .def_readonly("f", &DiophantineRow::f)
        .def_readonly("hbar", &DiophantineRow::hbar)
        .def_readonly("nu", &DiophantineRow::nu);

    m.def("diophantine_study", &diophantine_study, py::arg("f_choices"), py::arg("hbars"),
          py::arg("tau_max") = 1.0);

    m.def("record_to_json", &record_to_json, py::arg("record"), py::arg("plan"),
          py::arg("point"));
    m.def("replay_record", &replay_record, py::arg("json_text"));
    m.def("strip_volatile", &strip_volatile, py::arg("json_text"));
    m.def("records_to_csv", &records_to_csv, py::arg("records"));
    m.def("plan_from_text", &plan_from_text, py::arg("text"),
          "build a SweepPlan from layered key = value config text");
}
