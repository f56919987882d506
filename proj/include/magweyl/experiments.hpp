#pragma once

#include "magweyl/config.hpp"
#include "magweyl/counting.hpp"
#include "magweyl/discrete_op.hpp"
#include "magweyl/field.hpp"
#include "magweyl/potential.hpp"
#include "magweyl/spectral.hpp"
#include "magweyl/weyl.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace magweyl {

// One (h, mu) grid point of a sweep.
struct SweepPoint {
    double h = 0.1;
    double mu = 1.0;
};

// Declarative description of a remainder sweep: the potential and weight as
// expression text so records are reproducible from their sidecars alone.
struct SweepPlan {
    int d = 2;
    std::vector<double> f = {1.0};
    int q = 0;
    std::vector<SweepPoint> points;

    std::string potential; // expression text, empty means 0
    double half_width = 1.0;
    double mollify_eps = 0;   // 0: use the potential as written
    Smoothness smoothness{};  // declared class of the potential

    std::string psi;       // weight expression text, empty means 1
    double tau = 0;

    std::string engine = "auto"; // auto | dense | inertia | kpm
    int n = 0;                   // grid points per axis, 0 = from the length rule
    int points_per_length = 8;   // magnetic length rule target
    int stencil_order = 2;
    std::size_t dense_cap = 6000;
    std::size_t budget_dim = 250000; // refuse operators above this dimension
    KpmOptions kpm{};
    bool estimate_engine_error = true; // re-run with the other stencil order

    std::uint64_t seed = 1;
    int threads = 0; // 0: hardware concurrency
};

// Everything measured at one sweep point. `bounds` holds the closed-form
// remainder bound predictions (evaluated with constant 1) for each regime
// hypothesis the configuration satisfies.
struct RemainderRecord {
    double h = 0, mu = 0, tau = 0;
    std::string regime;
    double count = 0;       // localized counting from the engine
    double emw = 0;         // integral of the magnetic Weyl density against psi
    double emw_corrected = 0;
    double r_signed = 0;    // count - emw
    double r_abs = 0;
    double r_corrected_signed = 0;
    double r_corrected_abs = 0;
    double engine_error = 0;  // stencil-difference estimate, 0 if not requested
    double engine_stderr = 0; // stochastic engine standard error (kpm only)
    double quad_error = 0;    // quadrature error of the Weyl integrals
    std::map<std::string, double> bounds;
    std::string engine;
    int n = 0;
    int stencil_order = 2;
    double requested_half_width = 0;
    double snapped_half_width = 0;
    bool degraded = false; // resolution below the magnetic length rule
    std::uint64_t seed = 0;
    double wall_seconds = 0; // excluded from reproducibility comparison
};

// Closed-form remainder bound predictions with constant 1. Included keys
// depend on which hypotheses hold: value/gradient nondegeneracy, kernel
// dimension, regime, and (for r >= 2) the frequency incommensurability
// modulus nu evaluated at hbar = mu h.
std::map<std::string, double> remainder_bounds(const FieldConfig& cfg,
                                               const SemiclassicalScale& scale,
                                               const Smoothness& sm, bool value_nondeg,
                                               bool gradient_nondeg, bool level_nondeg = false,
                                               std::optional<double> nu_hat = std::nullopt);

// Materialized plan inputs for one point (shared by remainder() and replay).
struct PointInputs {
    FieldConfig cfg;
    SemiclassicalScale scale;
    Potential V;
    Potential psi; // dim 0 means psi == 1
    GridSpec grid;
};

PointInputs materialize(const SweepPlan& plan, const SweepPoint& pt);

RemainderRecord remainder(const SweepPlan& plan, const SweepPoint& pt);

// Runs all plan points on a small pool and merges results in grid order.
std::vector<RemainderRecord> run_sweep(const SweepPlan& plan);

// Least-squares power-law fit log r = slope * log x + intercept with a
// resampling confidence interval.
struct ScalingFit {
    double slope = 0;
    double intercept = 0;
    double ci_lo = 0, ci_hi = 0; // 95% bootstrap interval for the slope
    std::size_t n = 0;
};

ScalingFit fit_power_law(const std::vector<double>& xs, const std::vector<double>& rs,
                         std::uint64_t seed = 7, int resamples = 400);

// Record-level wrapper: fits |R| against the chosen parameter ("h" or "mu"),
// requiring >= 5 points, a decade of span, and a single regime.
ScalingFit scaling_fit(const std::vector<RemainderRecord>& records,
                       const std::string& parameter = "h", bool use_corrected = false,
                       bool subtract_engine_error = false);

struct WeylLimitRow {
    double mu_h = 0;
    double emw = 0;
    double ew = 0;
    double rel_gap = 0;
};

// |E^MW - E^W|/E^W at fixed tau across a geometric mu h ladder; fits the
// log-log slope of the gap.
struct WeylLimitStudy {
    std::vector<WeylLimitRow> rows;
    double slope = 0;
};

WeylLimitStudy weyl_limit_study(int d, const std::vector<double>& f, double tau, double v0,
                                const std::vector<double>& mu_h_values, double h = 1e-3);

struct GapStudyRow {
    double mu_h = 0;
    std::vector<double> cluster_centers;
    std::vector<double> predicted_centers; // (2a+1) mu h f + [min V, max V] midpoints
    std::vector<double> gap_widths;
    double min_required_gap = 0; // 2 mu h f - osc V
    bool gaps_present = false;
    double localized_count_at_zero = -1; // only when the below-lowest-level condition holds
};

struct GapStudyPlan {
    std::vector<double> mu_h = {2, 4, 8};
    double h = 0.25;
    std::string potential = "(* 0.15 (sin (* 3.141592653589793 x1)))";
    double half_width = 1.0;
    int n = 48;
    double scan_hi_levels = 3.5; // scan up to this multiple of mu h f
};

std::vector<GapStudyRow> gap_study(const GapStudyPlan& plan);

struct DiophantineRow {
    std::vector<double> f;
    double hbar = 0;
    double nu = 0;
};

std::vector<DiophantineRow> diophantine_study(const std::vector<std::vector<double>>& f_choices,
                                              const std::vector<double>& hbars,
                                              double tau_max = 1.0);

// --- serialization and emission ---------------------------------------------

std::string record_to_json(const RemainderRecord& rec, const SweepPlan& plan,
                           const SweepPoint& pt);
// Re-runs the embedded plan point and returns the regenerated record; the
// reproducibility check compares record_to_json outputs (minus wall time).
RemainderRecord replay_record(const std::string& json_text);
std::string strip_volatile(const std::string& json_text); // drops wall_seconds

void write_atomic(const std::string& path, const std::string& content);
std::string records_to_csv(const std::vector<RemainderRecord>& records);
// gnuplot script plotting column `ycol` of the CSV against column `xcol`
std::string plot_script(const std::string& csv_path, const std::string& title, int xcol, int ycol,
                        bool loglog);

// Plan construction from layered config text (keys documented in README).
SweepPlan plan_from_config(const Config& cfg);

} // namespace magweyl
