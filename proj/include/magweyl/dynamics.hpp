#pragma once

#include "magweyl/field.hpp"
#include "magweyl/potential.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace magweyl {

// Classical flow of H = |xi - mu A(x)|^2 + V(x) in the canonical coordinates
// of the field (A is the linear gauge of FieldConfig::gauge()). There is no
// factor 1/2, so the cyclotron angular frequency is 2 mu f.

struct PhaseState {
    double t = 0;
    Eigen::VectorXd x;
    Eigen::VectorXd xi;
    double energy = 0;
};

struct Trajectory {
    std::vector<PhaseState> samples; // uniform time spacing
    double step = 0;                 // integrator step actually used
    double sample_spacing = 0;       // spacing between stored samples
    FieldConfig cfg;
    SemiclassicalScale scale;
};

struct IntegrateOptions {
    // 0 selects the default step: the precondition cap divided by 64, small
    // enough to hold the 1e-8 energy tolerance on smooth bounded potentials
    double dt = 0;
    bool fourth_order = false; // triple-jump composition of the midpoint step
    std::size_t max_samples = 1 << 16;
    double fixed_point_tol = 1e-14;
    int max_fixed_point_iters = 64;
};

double hamiltonian(const Potential& V, const FieldConfig& cfg, const SemiclassicalScale& scale,
                   const Eigen::VectorXd& x, const Eigen::VectorXd& xi);

// largest admissible integrator step, (2 mu f_max)^{-1} / 20
double max_step(const FieldConfig& cfg, const SemiclassicalScale& scale);

// slowest cyclotron period pi / (mu f_min)
double cyclotron_period(const FieldConfig& cfg, const SemiclassicalScale& scale);

// Implicit midpoint integration (exact on quadratic Hamiltonians, symplectic
// in general) up to time T. The step is opt.dt, or the default when 0; steps
// larger than max_step raise StepTooLarge. Positions leaving a finite
// potential box raise LeftDomain.
Trajectory integrate(const PhaseState& initial, const Potential& V, const FieldConfig& cfg,
                     const SemiclassicalScale& scale, double T, const IntegrateOptions& opt = {});

// Guiding center X_j = x_j - sum_k beta_{jk} p_k with p_k = mu^{-1} xi_k - A_k
// and beta the inverse of F on the rank block; kernel coordinates pass
// through unchanged.
Eigen::VectorXd slow_variables(const PhaseState& state, const FieldConfig& cfg,
                               const SemiclassicalScale& scale);

struct DriftReport {
    Eigen::VectorXd velocity;
    Eigen::VectorXd intercept;  // fitted X at t = 0
    double rel_residual = 0;    // rms fit residual over |velocity| * window
    double window_lo = 0, window_hi = 0;
    std::size_t n_used = 0;
};

// Least-squares linear fit of the guiding center versus time. Requires at
// least 20 slow cyclotron periods and drops the first and last period.
DriftReport measure_drift(const Trajectory& traj, const FieldConfig& cfg,
                          const SemiclassicalScale& scale);

// Theoretical drift velocity mu^{-1} F^{-1} grad V for the canonical field
// (kernel components 0); grad is the potential gradient at x.
Eigen::VectorXd drift_velocity(const FieldConfig& cfg, const SemiclassicalScale& scale,
                               const Eigen::VectorXd& grad);

struct PoissonReport {
    // {X_j, X_k} = sign_xx * mu^{-1} beta_{jk};  {p_j, p_k} = sign_pp * mu^{-1} F_{jk}
    int sign_xx = 0;
    int sign_pp = 0;
    bool px_zero = false;       // {p_k, X_j} identically zero off the kernel diagonal
    double max_px_residual = 0; // numeric value of any nonzero off-diagonal {p,X} bracket
    // On a kernel axis the slow variable is the coordinate itself, so {p_a, X_a}
    // is the canonical pair value mu^{-1} rather than zero. Verified symbolically
    // and reported here; stays 0 when the field has full rank.
    double kernel_pair_value = 0;
    double max_xx_mismatch = 0; // residual after fixing sign_xx
    double max_pp_mismatch = 0;
};

// Evaluates all Poisson brackets of the kinetic momenta and slow variables
// exactly, treating the frequencies f_m and mu as symbols with rational
// coefficients; the brackets of these linear forms are state independent.
PoissonReport poisson_check(const FieldConfig& cfg, const SemiclassicalScale& scale);

struct PeriodicityOptions {
    int n_samples = 64;
    double delta = 1e-3;
    double energy = 1.0;
    double x_radius = 0.25;
    // reject ensemble draws whose kernel kinetic momentum components are
    // smaller than this in absolute value
    double min_kernel_momentum = 0;
    std::uint64_t seed = 2026;
    double dt = 0;
};

// Fraction of an energy-shell ensemble whose slow variables return to their
// initial values within opt.delta after time T.
double periodicity_probe(const Potential& V, const FieldConfig& cfg,
                         const SemiclassicalScale& scale, double T,
                         const PeriodicityOptions& opt = {});

} // namespace magweyl
