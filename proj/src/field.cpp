#include "magweyl/field.hpp"
#include "magweyl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace magweyl {

Eigen::MatrixXd canonical_field(const std::vector<double>& f, int dim) {
    int r = static_cast<int>(f.size());
    require(2 * r <= dim, errc::out_of_range, "frequency list longer than dim/2");
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(dim, dim);
    for (int m = 0; m < r; ++m) {
        F(m, r + m) = -f[m];
        F(r + m, m) = f[m];
    }
    return F;
}

Eigen::MatrixXd FieldConfig::canonical() const { return canonical_field(f, d); }

Eigen::MatrixXd FieldConfig::gauge() const {
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(d, d);
    for (int m = 0; m < r; ++m) G(r + m, m) = -f[m];
    return G;
}

Eigen::MatrixXd FieldConfig::beta() const {
    require(q == 0, errc::degenerate_rank, "field inverse needs full rank (q = 0)");
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(d, d);
    for (int m = 0; m < r; ++m) {
        B(m, r + m) = 1.0 / f[m];
        B(r + m, m) = -1.0 / f[m];
    }
    return B;
}

double FieldConfig::f_min() const { return f.empty() ? 0 : f.back(); }
double FieldConfig::f_max() const { return f.empty() ? 0 : f.front(); }

FieldConfig field_from_frequencies(std::vector<double> f, int q) {
    require(!f.empty(), errc::degenerate_rank, "field needs at least one frequency (r >= 1)");
    require(q >= 0, errc::out_of_range, "kernel dimension must be nonnegative");
    for (double v : f)
        require(v > 0, errc::out_of_range, "frequencies must be positive");
    std::sort(f.begin(), f.end(), std::greater<double>());
    FieldConfig cfg;
    cfg.r = static_cast<int>(f.size());
    cfg.q = q;
    cfg.d = 2 * cfg.r + q;
    cfg.f = std::move(f);
    cfg.F = canonical_field(cfg.f, cfg.d);
    cfg.basis = Eigen::MatrixXd::Identity(cfg.d, cfg.d);
    return cfg;
}

FieldConfig field_invariants(const Eigen::MatrixXd& F, double skew_tol) {
    require(F.rows() == F.cols() && F.rows() >= 2, errc::out_of_range,
            "field matrix must be square with d >= 2");
    const int d = static_cast<int>(F.rows());
    double scale = std::max(1.0, F.cwiseAbs().maxCoeff());
    double asym = (F + F.transpose()).cwiseAbs().maxCoeff();
    require(asym <= skew_tol * scale, errc::not_skew_symmetric,
            "matrix deviates from skew-symmetry by " + std::to_string(asym));
    Eigen::MatrixXd Fs = 0.5 * (F - F.transpose());

    // -F^2 is symmetric positive semidefinite with eigenvalues {f_m^2 (twice), 0}
    Eigen::MatrixXd S = -(Fs * Fs);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    require(es.info() == Eigen::Success, errc::complex_arithmetic_failure,
            "eigensolver failed on -F^2");
    Eigen::VectorXd lam = es.eigenvalues(); // ascending
    Eigen::MatrixXd U = es.eigenvectors();

    double lam_max = std::max(lam.maxCoeff(), 0.0);
    double rank_tol = 1e-10 * std::max(1.0, lam_max);

    // walk eigenvalues from the top, greedily extracting (u, Fu/f) pairs
    std::vector<Eigen::VectorXd> us, vs;
    std::vector<double> freqs;
    std::vector<Eigen::VectorXd> chosen; // all u's and v's so far
    for (int i = d - 1; i >= 0; --i) {
        if (lam[i] <= rank_tol) break;
        double fm = std::sqrt(lam[i]);
        Eigen::VectorXd u = U.col(i);
        for (const auto& c : chosen) u -= c.dot(u) * c;
        double nu = u.norm();
        if (nu < 0.5) continue; // already inside an extracted pair plane
        u /= nu;
        Eigen::VectorXd v = Fs * u / fm;
        // re-orthogonalize v defensively against roundoff
        for (const auto& c : chosen) v -= c.dot(v) * c;
        v -= v.dot(u) * u;
        require(std::fabs(v.norm() - 1.0) < 1e-6, errc::complex_arithmetic_failure,
                "pair extraction produced a non-unit partner vector");
        v.normalize();
        us.push_back(u);
        vs.push_back(v);
        freqs.push_back(fm);
        chosen.push_back(u);
        chosen.push_back(v);
    }
    int r = static_cast<int>(freqs.size());
    require(r >= 1, errc::degenerate_rank, "zero field (q = d) is not supported");
    int q = d - 2 * r;
    require(q >= 0, errc::complex_arithmetic_failure, "pair extraction exceeded dim/2 pairs");

    FieldConfig cfg;
    cfg.d = d;
    cfg.F = Fs;
    cfg.f = freqs; // descending by construction (eigenvalues walked from the top)
    cfg.r = r;
    cfg.q = q;
    cfg.basis = Eigen::MatrixXd(d, d);
    for (int m = 0; m < r; ++m) {
        cfg.basis.col(m) = us[m];
        cfg.basis.col(r + m) = vs[m];
    }
    // kernel columns: eigenvectors of the zero eigenvalues, orthogonalized
    int kcol = 2 * r;
    for (int i = 0; i < d && kcol < d; ++i) {
        if (lam[i] > rank_tol) continue;
        Eigen::VectorXd k = U.col(i);
        for (int cc = 0; cc < kcol; ++cc) k -= cfg.basis.col(cc).dot(k) * cfg.basis.col(cc);
        double nk = k.norm();
        if (nk < 0.5) continue;
        cfg.basis.col(kcol++) = k / nk;
    }
    require(kcol == d, errc::complex_arithmetic_failure, "kernel basis extraction incomplete");

    double resid =
        (cfg.basis.transpose() * Fs * cfg.basis - cfg.canonical()).cwiseAbs().maxCoeff();
    require(resid < 1e-10 * std::max(1.0, cfg.f_max()), errc::complex_arithmetic_failure,
            "canonical form reconstruction residual " + std::to_string(resid));
    return cfg;
}

Eigen::VectorXd gauge_potential(const FieldConfig& cfg, const Eigen::VectorXd& x) {
    require(x.size() == cfg.d, errc::out_of_range, "point dimension mismatch");
    return cfg.gauge() * x;
}

const char* regime_name(Regime r) {
    switch (r) {
        case Regime::weak: return "weak";
        case Regime::intermediate: return "intermediate";
        case Regime::strong: return "strong";
        case Regime::superstrong: return "superstrong";
        case Regime::ultrastrong: return "ultrastrong";
    }
    return "?";
}

Regime classify_regime(double h, double mu, int d, int q, RegimeThresholds* out) {
    require(h > 0 && h < 1, errc::out_of_range, "h must lie in (0,1)");
    require(mu >= 1, errc::out_of_range, "mu must be >= 1");
    require(d >= 2 && q >= 0 && q < d, errc::out_of_range, "need d >= 2 and 0 <= q < d");
    double hl = h * std::fabs(std::log(h));
    RegimeThresholds t;
    t.weak_max = d == 2 ? std::pow(hl, -1.0 / 3.0) : std::pow(hl, -0.5);
    t.intermediate_max = 1.0 / hl;
    t.strong_max = 0.5 / h;
    t.superstrong_max = 1.0 / h;
    t.mu_star1 = q >= 1 ? std::pow(h, -static_cast<double>(q) / (q + 2)) : 0.0;
    if (out) *out = t;
    if (mu * h >= 1) return Regime::ultrastrong;
    if (mu > t.strong_max) return Regime::superstrong;
    if (mu > t.intermediate_max) return Regime::strong;
    if (mu > t.weak_max) return Regime::intermediate;
    return Regime::weak;
}

SemiclassicalScale make_scale(double h, double mu, int d, int q) {
    SemiclassicalScale s;
    s.h = h;
    s.mu = mu;
    s.regime = classify_regime(h, mu, d, q, &s.thresholds);
    double hl = h * std::fabs(std::log(h));
    s.rho_bar1 = std::max(1.0 / mu, std::sqrt(mu * hl));
    s.eps_weak = mu * hl;
    return s;
}

double SemiclassicalScale::magnetic_length(double f) const {
    require(f > 0 && mu > 0, errc::out_of_range, "magnetic length needs f, mu > 0");
    return std::sqrt(h / (mu * f));
}

namespace {

// lattice levels Lambda_alpha = sum_j (2 alpha_j + 1) f_j mu h up to a cap
void enumerate_levels(const std::vector<double>& f, double muh, double cap,
                      std::vector<double>& out, size_t j = 0, double acc = 0) {
    if (j == f.size()) {
        out.push_back(acc);
        return;
    }
    double base = acc + f[j] * muh; // alpha_j = 0 contributes f_j mu h
    for (int a = 0;; ++a) {
        double lvl = base + 2.0 * a * f[j] * muh;
        if (lvl > cap) break;
        enumerate_levels(f, muh, cap, out, j + 1, lvl);
        if (f[j] <= 0) break;
    }
}

} // namespace

NondegeneracyReport check_nondegeneracy(const Potential& V, NondegeneracyCondition which,
                                        const SemiclassicalScale& scale, const FieldConfig& cfg,
                                        double eps0, double tau, int samples_per_axis) {
    require(samples_per_axis >= 32, errc::grid_too_coarse,
            "nondegeneracy scan needs at least 32 samples per axis");
    const int d = cfg.d;
    require(V.dim() >= 1, errc::out_of_range, "potential has no dimension");
    double muh = scale.mu * scale.h;

    std::vector<double> levels;
    if (which == NondegeneracyCondition::level_or_gradient) {
        double vmin = V.min_on_grid(std::min(samples_per_axis, 33));
        enumerate_levels(cfg.f, muh, tau - vmin + 1.0, levels);
        require(!levels.empty(), errc::empty_allowed_region,
                "no lattice level below the enumeration cap");
        std::sort(levels.begin(), levels.end());
    }
    double lowest_level = 0;
    for (double fm : cfg.f) lowest_level += fm * muh;

    // dense scan over the unit ball
    const int m = samples_per_axis;
    int vd = V.dim();
    size_t total = 1;
    for (int a = 0; a < vd; ++a) total *= static_cast<size_t>(m);
    Eigen::VectorXd x(vd);
    NondegeneracyReport rep;
    rep.margin = std::numeric_limits<double>::infinity();
    rep.worst_point = Eigen::VectorXd::Zero(vd);
    bool any = false;
    for (size_t fidx = 0; fidx < total; ++fidx) {
        size_t rem = fidx;
        double r2 = 0;
        for (int a = vd - 1; a >= 0; --a) {
            int i = static_cast<int>(rem % m);
            rem /= m;
            x[a] = -1.0 + 2.0 * i / (m - 1);
            r2 += x[a] * x[a];
        }
        if (r2 > 1.0) continue;
        any = true;
        double g = 0;
        switch (which) {
            case NondegeneracyCondition::value_bounded_below:
                g = std::fabs(V(x));
                break;
            case NondegeneracyCondition::gradient_bounded_below:
                g = V.gradient(x).norm();
                break;
            case NondegeneracyCondition::level_or_gradient: {
                double v = V(x);
                double best = std::numeric_limits<double>::infinity();
                for (double lvl : levels) best = std::min(best, std::fabs(tau - v - lvl));
                g = best + V.gradient(x).norm();
                break;
            }
            case NondegeneracyCondition::below_lowest_level:
                // require tau - V - sum f_j mu h <= -eps0, so the margin is the
                // pointwise value of -(tau - V - lowest_level)
                g = V(x) + lowest_level - tau;
                break;
        }
        if (g < rep.margin) {
            rep.margin = g;
            rep.worst_point = x;
        }
    }
    require(any, errc::empty_allowed_region, "no sample points inside the unit ball");
    rep.holds = rep.margin >= eps0;
    char buf[128];
    std::snprintf(buf, sizeof buf, "min over B(0,1) = %.6g against eps0 = %.6g", rep.margin,
                  eps0);
    rep.detail = buf;
    return rep;
}

} // namespace magweyl
