#pragma once

#include "magweyl/counting.hpp"
#include "magweyl/discrete_op.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace magweyl {

// Stochastic trace value with its sampling error.
struct TraceEstimate {
    double value = 0;
    double stderr_est = 0;
    int n_vectors = 0;
    int n_moments = 0;
    std::string kernel = "jackson";
};

// Full Hermitian eigendecomposition (eigenvalues only), ascending.
Eigen::VectorXd dense_eigenvalues(const DiscreteOperator& op, std::size_t dense_cap = 6000);

// N(tau) = #{lambda <= tau} from the dense spectrum.
CountingCurve dense_counting(const DiscreteOperator& op, const std::vector<double>& taus,
                             std::size_t dense_cap = 6000);

// Eigenpairs below tau_max with psi-weights w_k = u_k^* diag(psi) u_k, for
// localized counting tr(Psi 1_{A <= tau}).
struct LocalizedSpectrum {
    Eigen::VectorXd eigenvalues; // ascending
    Eigen::VectorXd weights;
};

LocalizedSpectrum dense_localized(const DiscreteOperator& op, double tau_max,
                                  const Eigen::VectorXd& psi_diag,
                                  std::size_t dense_cap = 6000);

CountingCurve localized_curve(const LocalizedSpectrum& spec, const std::vector<double>& taus);

// Eigenvalue counts below each tau via LDL^T inertia of A - tau I. Exact
// integers; breakdown at a pivot retried at tau +- 1e-10 (shift recorded in
// applied_shifts when given).
CountingCurve inertia_counting(const DiscreteOperator& op, const std::vector<double>& taus,
                               std::vector<double>* applied_shifts = nullptr);

// Spectral interval estimate by 30-iteration power method, padded 1% (5% when
// the iteration has not settled).
struct SpectralBounds {
    double lo = 0;
    double hi = 0;
    double pad_fraction = 0;
};

SpectralBounds estimate_bounds(const Eigen::SparseMatrix<std::complex<double>>& M);

struct KpmOptions {
    int n_moments = 1024;
    int n_vectors = 16;
    std::uint64_t seed = 0x9e3779b97f4a7c15ull;
};

struct KpmResult {
    CountingCurve curve; // localized counting estimate per tau
    std::vector<TraceEstimate> estimates;
    double lambda_lo = 0;
    double lambda_hi = 0;
    double resolution = 0; // Jackson kernel width pi (hi - lo) / n_moments
};

// Stochastic Chebyshev estimate of tr(Psi 1_{A <= tau}) with Jackson damping
// and Psi^{1/2}-seeded Rademacher probes; deterministic given the seed.
KpmResult kpm_local_counting(const DiscreteOperator& op, const std::vector<double>& taus,
                             const Eigen::VectorXd& psi_diag, const KpmOptions& opt = {});

// The same Jackson-smoothed step applied to a known spectrum; isolates the
// kernel-resolution error from the stochastic error when validating KPM.
double jackson_smoothed_count(const Eigen::VectorXd& eigenvalues,
                              const Eigen::VectorXd& weights, double tau, double lo, double hi,
                              int n_moments);

// Spectrum-free intervals and eigenvalue clusters located by inertia counts on
// a tau grid over [lo, hi].
struct GapReport {
    struct Interval {
        double lo = 0;
        double hi = 0;
    };
    std::vector<Interval> gaps;
    std::vector<double> cluster_centers;
    std::vector<double> cluster_widths;
    std::vector<double> cluster_counts;
    CountingCurve scan;
};

GapReport gap_scan(const DiscreteOperator& op, double lo, double hi, int resolution,
                   double min_gap_width = 0);

} // namespace magweyl
