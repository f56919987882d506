#pragma once

#include "magweyl/potential.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace magweyl {

// Constant magnetic field described by a skew-symmetric intensity matrix F
// with eigenvalues {+-i f_m} and a kernel of dimension q = d - 2r. The stored
// orthogonal basis Q maps canonical coordinates to the original ones:
// Q^T F Q = canonical_field(f, d).
struct FieldConfig {
    int d = 0;
    Eigen::MatrixXd F;
    std::vector<double> f; // positive, descending
    int r = 0;
    int q = 0;
    Eigen::MatrixXd basis;

    // block form: F(m, r+m) = -f_m, F(r+m, m) = +f_m, kernel last
    Eigen::MatrixXd canonical() const;
    // linear gauge A(x) = G x with d_j A_k - d_k A_j = canonical F
    Eigen::MatrixXd gauge() const;
    // inverse of the canonical F; requires q = 0
    Eigen::MatrixXd beta() const;
    double f_min() const;
    double f_max() const;
};

// Diagonalizes a (nearly) skew-symmetric matrix into FieldConfig form.
// Symmetrizes inputs within 1e-12 of skew-symmetry, rejects others.
FieldConfig field_invariants(const Eigen::MatrixXd& F, double skew_tol = 1e-12);

// Canonical construction from an explicit frequency list plus kernel size.
FieldConfig field_from_frequencies(std::vector<double> f, int q = 0);

Eigen::MatrixXd canonical_field(const std::vector<double>& f, int dim);

// Vector potential of the canonical linear gauge at a point.
Eigen::VectorXd gauge_potential(const FieldConfig& cfg, const Eigen::VectorXd& x);

enum class Regime { weak, intermediate, strong, superstrong, ultrastrong };

const char* regime_name(Regime r);

// Threshold values of mu separating the regimes, with the fixed constants
// C = 1 and eps = 1/2. mu_star1 = h^{-q/(q+2)} is reported when q >= 1.
struct RegimeThresholds {
    double weak_max = 0;
    double intermediate_max = 0;
    double strong_max = 0;
    double superstrong_max = 0;
    double mu_star1 = 0;
};

struct SemiclassicalScale {
    double h = 0;
    double mu = 1;
    Regime regime = Regime::weak;
    RegimeThresholds thresholds;
    double rho_bar1 = 0;  // max(mu^{-1}, sqrt(mu h |log h|))
    double eps_weak = 0;  // mu h |log h|
    double magnetic_length(double f = 1) const; // sqrt(h / (mu f))
};

Regime classify_regime(double h, double mu, int d, int q, RegimeThresholds* out = nullptr);

SemiclassicalScale make_scale(double h, double mu, int d, int q);

enum class NondegeneracyCondition {
    value_bounded_below,    // |V| >= eps0 on the unit ball
    gradient_bounded_below, // |grad V| >= eps0
    level_or_gradient,      // |tau - V - Lambda_alpha| + |grad V| >= eps0 over low alpha
    below_lowest_level,     // tau - V - sum_j f_j mu h <= -eps0
};

struct NondegeneracyReport {
    bool holds = false;
    double margin = 0;
    Eigen::VectorXd worst_point;
    std::string detail;
};

NondegeneracyReport check_nondegeneracy(const Potential& V, NondegeneracyCondition which,
                                        const SemiclassicalScale& scale, const FieldConfig& cfg,
                                        double eps0 = 0.05, double tau = 0,
                                        int samples_per_axis = 64);

} // namespace magweyl
