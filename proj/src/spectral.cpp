#include "magweyl/spectral.hpp"
#include "magweyl/errors.hpp"

#include <Eigen/SparseCholesky>

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace magweyl {

namespace {

using Cplx = std::complex<double>;
using SpMat = Eigen::SparseMatrix<Cplx>;

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

void check_taus(const std::vector<double>& taus) {
    require(!taus.empty(), errc::out_of_range, "need at least one tau");
    for (size_t i = 1; i < taus.size(); ++i)
        require(taus[i] > taus[i - 1], errc::out_of_range, "taus must be strictly ascending");
}

} // namespace

Eigen::VectorXd dense_eigenvalues(const DiscreteOperator& op, std::size_t dense_cap) {
    const auto n = static_cast<lapack_int>(op.dim());
    require(op.dim() <= dense_cap, errc::dimension_too_large,
            "matrix dimension exceeds the dense cap");
    Eigen::MatrixXcd a = op.dense();
    Eigen::VectorXd w(n);
    lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'N', 'L', n,
                                     reinterpret_cast<lapack_complex_double*>(a.data()), n,
                                     w.data());
    require(info == 0, errc::complex_arithmetic_failure,
            "zheevd failed with info " + std::to_string(info));
    return w;
}

CountingCurve dense_counting(const DiscreteOperator& op, const std::vector<double>& taus,
                             std::size_t dense_cap) {
    check_taus(taus);
    Eigen::VectorXd w = dense_eigenvalues(op, dense_cap);
    CountingCurve curve;
    curve.provenance = Provenance::dense;
    curve.taus = taus;
    for (double tau : taus) {
        auto cnt = std::upper_bound(w.data(), w.data() + w.size(), tau) - w.data();
        curve.values.push_back(static_cast<double>(cnt));
    }
    curve.validate();
    return curve;
}

LocalizedSpectrum dense_localized(const DiscreteOperator& op, double tau_max,
                                  const Eigen::VectorXd& psi_diag, std::size_t dense_cap) {
    const auto n = static_cast<lapack_int>(op.dim());
    require(op.dim() <= dense_cap, errc::dimension_too_large,
            "matrix dimension exceeds the dense cap");
    require(psi_diag.size() == n, errc::out_of_range, "psi diagonal length mismatch");

    Eigen::MatrixXcd a = op.dense();
    // lower bound for the half-open search interval (vl, vu]
    double lo = 0;
    for (lapack_int i = 0; i < n; ++i) {
        double off = 0;
        for (SpMat::InnerIterator it(op.matrix, i); it; ++it)
            if (it.row() != it.col()) off += std::abs(it.value());
        lo = std::min(lo, a(i, i).real() - off);
    }
    lo -= 1.0;

    Eigen::VectorXd w(n);
    Eigen::MatrixXcd z(n, n);
    std::vector<lapack_int> isuppz(2 * static_cast<size_t>(n) + 2);
    lapack_int m = 0;
    lapack_int info = LAPACKE_zheevr(LAPACK_COL_MAJOR, 'V', 'V', 'L', n,
                                     reinterpret_cast<lapack_complex_double*>(a.data()), n, lo,
                                     tau_max, 0, 0, 0.0, &m, w.data(),
                                     reinterpret_cast<lapack_complex_double*>(z.data()), n,
                                     isuppz.data());
    require(info == 0, errc::complex_arithmetic_failure,
            "zheevr failed with info " + std::to_string(info));

    LocalizedSpectrum spec;
    spec.eigenvalues = w.head(m);
    spec.weights.resize(m);
    for (lapack_int k = 0; k < m; ++k) {
        double acc = 0;
        for (lapack_int i = 0; i < n; ++i) acc += psi_diag[i] * std::norm(z(i, k));
        spec.weights[k] = acc;
    }
    return spec;
}

CountingCurve localized_curve(const LocalizedSpectrum& spec, const std::vector<double>& taus) {
    check_taus(taus);
    CountingCurve curve;
    curve.provenance = Provenance::dense;
    curve.taus = taus;
    for (double tau : taus) {
        double acc = 0;
        for (Eigen::Index k = 0; k < spec.eigenvalues.size(); ++k) {
            if (spec.eigenvalues[k] > tau) break;
            acc += spec.weights[k];
        }
        curve.values.push_back(acc);
    }
    curve.validate(1e-12);
    return curve;
}

CountingCurve inertia_counting(const DiscreteOperator& op, const std::vector<double>& taus,
                               std::vector<double>* applied_shifts) {
    check_taus(taus);
    const auto n = static_cast<Eigen::Index>(op.dim());
    SpMat ident(n, n);
    ident.setIdentity();

    Eigen::SimplicialLDLT<SpMat, Eigen::Lower> solver;
    solver.analyzePattern(op.matrix);

    CountingCurve curve;
    curve.provenance = Provenance::inertia;
    curve.taus = taus;
    if (applied_shifts) applied_shifts->assign(taus.size(), 0.0);

    const double shifts[] = {0.0, 1e-10, -1e-10};
    for (size_t ti = 0; ti < taus.size(); ++ti) {
        bool done = false;
        for (double sh : shifts) {
            double tau = taus[ti] + sh;
            SpMat shifted = op.matrix - Cplx(tau, 0) * ident;
            solver.factorize(shifted);
            if (solver.info() != Eigen::Success) continue;
            const auto& D = solver.vectorD();
            // a vanishing pivot means tau sits on an eigenvalue: perturb
            double dmax = 0;
            for (Eigen::Index i = 0; i < D.size(); ++i)
                dmax = std::max(dmax, std::abs(D[i]));
            bool degenerate = false;
            long neg = 0;
            for (Eigen::Index i = 0; i < D.size(); ++i) {
                double dr = std::real(D[i]);
                if (!std::isfinite(dr) || std::abs(D[i]) <= 1e-14 * dmax) {
                    degenerate = true;
                    break;
                }
                if (dr < 0) ++neg;
            }
            if (degenerate) continue;
            curve.values.push_back(static_cast<double>(neg));
            if (applied_shifts) (*applied_shifts)[ti] = sh;
            done = true;
            break;
        }
        require(done, errc::factorization_breakdown,
                "LDL^T factorization failed at tau = " + std::to_string(taus[ti]) +
                    " and both perturbations");
    }
    curve.validate();
    return curve;
}

SpectralBounds estimate_bounds(const SpMat& M) {
    const Eigen::Index n = M.rows();
    require(n >= 2, errc::out_of_range, "matrix too small for bounds estimate");

    auto power = [&](const SpMat& A, double shift, double& out, bool& settled) {
        std::uint64_t st = 0x5851f42d4c957f2dull;
        Eigen::VectorXcd v(n);
        for (Eigen::Index i = 0; i < n; ++i)
            v[i] = Cplx((splitmix64(st) >> 11) * 0x1p-53 - 0.5, 0);
        v.normalize();
        double ray = 0;
        for (int it = 0; it < 30; ++it) {
            Eigen::VectorXcd w = A * v - shift * v;
            double nw = w.norm();
            if (nw == 0) {
                out = shift;
                settled = true;
                return;
            }
            v = w / nw;
        }
        Eigen::VectorXcd Av = A * v - shift * v;
        ray = std::real(v.dot(Av));
        settled = (Av - ray * v).norm() <= 1e-3 * std::max(1.0, std::fabs(ray));
        out = ray + shift;
    };

    double lam1 = 0, lam2 = 0;
    bool ok1 = false, ok2 = false;
    power(M, 0.0, lam1, ok1);
    power(M, lam1, lam2, ok2);
    double lo = std::min(lam1, lam2), hi = std::max(lam1, lam2);
    SpectralBounds b;
    b.pad_fraction = (ok1 && ok2) ? 0.01 : 0.05;
    double pad = b.pad_fraction * std::max(hi - lo, 1e-8 * std::max(1.0, std::fabs(hi)));
    b.lo = lo - pad;
    b.hi = hi + pad;
    return b;
}

namespace {

std::vector<double> jackson_coefficients(int M) {
    std::vector<double> g(M);
    const double den = M + 1.0;
    const double cot = std::cos(M_PI / den) / std::sin(M_PI / den);
    for (int k = 0; k < M; ++k) {
        g[k] = ((M - k + 1.0) * std::cos(M_PI * k / den) + std::sin(M_PI * k / den) * cot) / den;
    }
    return g;
}

// Chebyshev coefficients of the step function 1_{x <= t}: c_0 = (pi - phi)/pi,
// c_k = -2 sin(k phi)/(k pi), phi = arccos(t)
void step_coefficients(double t, int M, std::vector<double>& c) {
    double tc = std::clamp(t, -1.0, 1.0);
    double phi = std::acos(tc);
    c.resize(M);
    c[0] = (M_PI - phi) / M_PI;
    for (int k = 1; k < M; ++k) c[k] = -2.0 * std::sin(k * phi) / (k * M_PI);
}

} // namespace

KpmResult kpm_local_counting(const DiscreteOperator& op, const std::vector<double>& taus,
                             const Eigen::VectorXd& psi_diag, const KpmOptions& opt) {
    check_taus(taus);
    const Eigen::Index n = static_cast<Eigen::Index>(op.dim());
    require(psi_diag.size() == n, errc::out_of_range, "psi diagonal length mismatch");
    require(opt.n_moments >= 16, errc::out_of_range, "need at least 16 moments");
    require(opt.n_vectors >= 1, errc::out_of_range, "need at least one probe vector");
    for (Eigen::Index i = 0; i < n; ++i)
        require(psi_diag[i] >= 0, errc::out_of_range,
                "psi weights must be nonnegative for probe seeding");

    KpmResult res;
    const int M = opt.n_moments;
    const int R = opt.n_vectors;

    double psi_total = psi_diag.sum();
    if (psi_diag.maxCoeff() == 0) {
        // zero weight: the trace is exactly 0 with no variance
        res.curve.provenance = Provenance::kpm;
        res.curve.taus = taus;
        res.curve.values.assign(taus.size(), 0.0);
        res.curve.stderrs.assign(taus.size(), 0.0);
        res.estimates.assign(taus.size(), TraceEstimate{0, 0, R, M, "jackson"});
        return res;
    }

    SpectralBounds b = estimate_bounds(op.matrix);
    res.lambda_lo = b.lo;
    res.lambda_hi = b.hi;
    res.resolution = M_PI * (b.hi - b.lo) / M;
    const double center = 0.5 * (b.hi + b.lo);
    const double half = 0.5 * (b.hi - b.lo);

    Eigen::VectorXd sqrt_psi = psi_diag.cwiseSqrt();

    // per-vector Chebyshev moments of the Psi-weighted spectral measure
    std::vector<std::vector<double>> moments(R, std::vector<double>(M, 0.0));
    const double overflow_cap = 1.05 * psi_total + 1.0;
    for (int v = 0; v < R; ++v) {
        std::uint64_t st = opt.seed + 0x632be59bd9b4e019ull * static_cast<std::uint64_t>(v + 1);
        Eigen::VectorXcd w(n);
        for (Eigen::Index i = 0; i < n; ++i)
            w[i] = Cplx(sqrt_psi[i] * ((splitmix64(st) & 1) ? 1.0 : -1.0), 0);

        Eigen::VectorXcd t0 = w;
        Eigen::VectorXcd t1 = (op.matrix * w - center * w) / half;
        moments[v][0] = std::real(w.dot(t0));
        if (M > 1) moments[v][1] = std::real(w.dot(t1));
        for (int k = 2; k < M; ++k) {
            Eigen::VectorXcd t2 = 2.0 * ((op.matrix * t1 - center * t1) / half) - t0;
            double mk = std::real(w.dot(t2));
            require(std::isfinite(mk), errc::non_finite_moment,
                    "non-finite Chebyshev moment at order " + std::to_string(k));
            require(std::fabs(mk) <= overflow_cap, errc::moment_overflow,
                    "Chebyshev moment exceeds the spectral-bound budget at order " +
                        std::to_string(k));
            moments[v][k] = mk;
            t0.swap(t1);
            t1.swap(t2);
        }
    }

    std::vector<double> g = jackson_coefficients(M);
    std::vector<double> c;
    res.curve.provenance = Provenance::kpm;
    res.curve.taus = taus;
    for (double tau : taus) {
        step_coefficients((tau - center) / half, M, c);
        // fixed merge order over probe vectors keeps the result deterministic
        double mean = 0, m2 = 0;
        for (int v = 0; v < R; ++v) {
            double est = 0;
            for (int k = 0; k < M; ++k) est += g[k] * c[k] * moments[v][k];
            double delta = est - mean;
            mean += delta / (v + 1);
            m2 += delta * (est - mean);
        }
        double se = R > 1 ? std::sqrt(m2 / (R - 1.0) / R) : 0.0;
        res.curve.values.push_back(mean);
        res.curve.stderrs.push_back(se);
        res.estimates.push_back(TraceEstimate{mean, se, R, M, "jackson"});
    }
    res.curve.validate(1e-9 * std::max(1.0, psi_total));
    return res;
}

double jackson_smoothed_count(const Eigen::VectorXd& eigenvalues,
                              const Eigen::VectorXd& weights, double tau, double lo, double hi,
                              int n_moments) {
    require(eigenvalues.size() == weights.size(), errc::out_of_range,
            "eigenvalue/weight length mismatch");
    const double center = 0.5 * (hi + lo);
    const double half = 0.5 * (hi - lo);
    std::vector<double> g = jackson_coefficients(n_moments);
    std::vector<double> c;
    step_coefficients((tau - center) / half, n_moments, c);
    double acc = 0;
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
        double x = std::clamp((eigenvalues[i] - center) / half, -1.0, 1.0);
        // evaluate sum_k g_k c_k T_k(x) by the trigonometric form
        double th = std::acos(x);
        double s = g[0] * c[0];
        for (int k = 1; k < n_moments; ++k) s += g[k] * c[k] * std::cos(k * th);
        acc += weights[i] * s;
    }
    return acc;
}

GapReport gap_scan(const DiscreteOperator& op, double lo, double hi, int resolution,
                   double min_gap_width) {
    require(hi > lo, errc::out_of_range, "scan window must have positive width");
    require(resolution >= 8, errc::grid_too_coarse, "need at least 8 scan points");
    const double step = (hi - lo) / (resolution - 1);
    std::vector<double> taus(resolution);
    for (int i = 0; i < resolution; ++i) taus[i] = lo + i * step;

    GapReport rep;
    rep.scan = inertia_counting(op, taus);

    // jump cells: count increases across (tau_i, tau_{i+1}]
    struct Jump {
        double left, right, size;
    };
    std::vector<Jump> jumps;
    for (int i = 0; i + 1 < resolution; ++i) {
        double dv = rep.scan.values[i + 1] - rep.scan.values[i];
        if (dv > 0) jumps.push_back({taus[i], taus[i + 1], dv});
    }
    if (min_gap_width <= 0) min_gap_width = 2 * step;

    if (jumps.empty()) {
        rep.gaps.push_back({lo, hi});
        return rep;
    }

    // group jumps into clusters separated by flat runs of at least the minimal
    // gap width
    std::vector<std::pair<size_t, size_t>> clusters;
    size_t start = 0;
    for (size_t j = 1; j <= jumps.size(); ++j) {
        if (j == jumps.size() || jumps[j].left - jumps[j - 1].right >= min_gap_width) {
            clusters.push_back({start, j - 1});
            start = j;
        }
    }
    for (const auto& [a, bidx] : clusters) {
        double wsum = 0, wpos = 0;
        for (size_t j = a; j <= bidx; ++j) {
            double mid = 0.5 * (jumps[j].left + jumps[j].right);
            wsum += jumps[j].size;
            wpos += jumps[j].size * mid;
        }
        rep.cluster_centers.push_back(wpos / wsum);
        rep.cluster_widths.push_back(0.5 * (jumps[bidx].left + jumps[bidx].right) -
                                     0.5 * (jumps[a].left + jumps[a].right));
        rep.cluster_counts.push_back(wsum);
    }
    // gaps: leading, between clusters, trailing
    if (jumps.front().left - lo >= min_gap_width) rep.gaps.push_back({lo, jumps.front().left});
    for (size_t ci = 0; ci + 1 < clusters.size(); ++ci) {
        double glo = jumps[clusters[ci].second].right;
        double ghi = jumps[clusters[ci + 1].first].left;
        if (ghi - glo >= min_gap_width) rep.gaps.push_back({glo, ghi});
    }
    if (hi - jumps.back().right >= min_gap_width) rep.gaps.push_back({jumps.back().right, hi});

    // verify each gap with a fresh inertia query at its midpoint
    for (const auto& gap : rep.gaps) {
        double mid = 0.5 * (gap.lo + gap.hi);
        CountingCurve probe = inertia_counting(op, {mid});
        double left_count = rep.scan.at(gap.lo);
        require(probe.values[0] == left_count, errc::invariant_violation,
                "gap interval contains spectrum on re-verification");
    }
    return rep;
}

} // namespace magweyl
