#pragma once

#include "magweyl/counting.hpp"
#include "magweyl/field.hpp"
#include "magweyl/potential.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace magweyl {

// volume of the unit ball in R^n (omega_0 = 1, omega_1 = 2, omega_2 = pi, ...)
double unit_ball_volume(int n);

// Prefactor conventions for the closed-form densities. `physical` is
// normalized against the exact constant-field spectrum (Landau degeneracy
// mu f/(2 pi h) per unit area in d=2) and recovers the standard Weyl term as
// mu h -> 0; `paper_literal` keeps the displayed omega_q (2 pi)^{-q} and
// omega_d h^{-d} constants.
enum class WeylNorm { physical, paper_literal };

// Landau levels E_alpha = sum_j (2 alpha_j + 1) f_j * hbar_eff below e_cut,
// sorted ascending, with their multi-indices.
struct LandauLattice {
    std::vector<double> f;
    double hbar_eff = 0;
    double e_cut = 0;
    std::vector<std::pair<double, std::vector<int>>> levels;
    double ground() const; // sum_j f_j * hbar_eff
};

LandauLattice landau_lattice(const std::vector<double>& f, double hbar_eff, double e_cut);

// E^MW(x, tau): the alpha-sum density with plus-power exponent q/2.
// t_+^0 is the indicator of t > 0, so q=0 jumps are left-continuous.
double magnetic_weyl_density(double tau, const Eigen::VectorXd& x, const Potential& V,
                             const FieldConfig& cfg, const SemiclassicalScale& scale,
                             WeylNorm norm = WeylNorm::physical);

// E^W(x, tau): the standard Weyl density (tau - V)_+^{d/2} with the mode's
// prefactor.
double standard_weyl_density(double tau, const Eigen::VectorXd& x, const Potential& V, int d,
                             double h, WeylNorm norm = WeylNorm::physical);

// Mean of V over the circle of radius rho around x in the (axis_a, axis_b)
// plane, by N-point periodic trapezoid (exact for trigonometric polynomials of
// degree < N). quad_points = 0 picks N from the declared trig degree.
double averaged_potential(const Potential& V, const Eigen::VectorXd& x, double rho,
                          int axis_a = 0, int axis_b = 1, int quad_points = 0);

// E^MW_I: magnetic Weyl density with V(x) replaced by its circular average at
// radius rho = (mu f_1)^{-1} sqrt((tau - V(x))_+).
double mw_corrected_density(double tau, const Eigen::VectorXd& x, const Potential& V,
                            const FieldConfig& cfg, const SemiclassicalScale& scale,
                            WeylNorm norm = WeylNorm::physical);

// Tensor midpoint quadrature of density(x) * psi(x) over the box, refined once
// for a Richardson error estimate. psi must vanish outside B(0, half_width/2).
struct LocalizedWeylResult {
    double value = 0;
    double quad_error = 0;
    int points_per_axis = 0;
};

LocalizedWeylResult localized_weyl(const std::function<double(const Eigen::VectorXd&)>& density,
                                   const Potential& psi, int dim, double half_width,
                                   int base_points = 24);

// |E^MW - E^W| / E^W at a fixed (tau, x) along a sequence of scales.
struct WeylLimitResult {
    std::vector<double> deviations;
    double max_deviation = 0;
};

WeylLimitResult weyl_limit_check(const Potential& V, const FieldConfig& cfg,
                                 const std::vector<SemiclassicalScale>& scales, double tau,
                                 const Eigen::VectorXd& x);

// n(hbar, tau) = #{alpha in Z_+^r : hbar * sum_j (2 alpha_j + 1) f_j + v0 < tau}.
// literal_reading moves hbar onto v0 instead of the frequency sum.
std::int64_t lattice_count(double hbar, double tau, const std::vector<double>& f, double v0 = 0,
                           bool literal_reading = false);

// Empirical modulus nu(hbar): the largest excess of n-jumps over window width,
// sup over tau < tau' of [ (n(tau') - n(tau)) * hbar^r - (tau' - tau) ]_+,
// scanned on a tau grid of the given spacing (default hbar/16).
struct DiophantineEstimate {
    double nu = 0;
    double tau_lo = 0;
    double tau_hi = 0;
    std::int64_t levels_enumerated = 0;
};

DiophantineEstimate diophantine_modulus(const std::vector<double>& f, double hbar,
                                        double tau_max = 1.0, double grid_step = 0);

} // namespace magweyl
