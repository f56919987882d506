#include "magweyl/weyl.hpp"
#include "magweyl/errors.hpp"

#include <algorithm>
#include <cmath>

namespace magweyl {

const char* provenance_name(Provenance p) {
    switch (p) {
        case Provenance::exact_oracle: return "exact-oracle";
        case Provenance::dense: return "dense";
        case Provenance::inertia: return "inertia";
        case Provenance::kpm: return "kpm";
        case Provenance::weyl: return "weyl";
        case Provenance::magnetic_weyl: return "magnetic-weyl";
        case Provenance::band: return "band";
    }
    return "?";
}

void CountingCurve::validate(double monotone_tol) const {
    require(taus.size() == values.size(), errc::invariant_violation,
            "counting curve tau/value length mismatch");
    require(stderrs.empty() || stderrs.size() == values.size(), errc::invariant_violation,
            "counting curve stderr length mismatch");
    for (size_t i = 1; i < taus.size(); ++i) {
        require(taus[i] > taus[i - 1], errc::invariant_violation,
                "counting curve taus not strictly ascending");
        require(values[i] >= values[i - 1] - monotone_tol, errc::invariant_violation,
                "counting curve values decrease beyond tolerance");
    }
}

double CountingCurve::at(double tau) const {
    auto it = std::upper_bound(taus.begin(), taus.end(), tau);
    if (it == taus.begin()) return 0;
    return values[static_cast<size_t>(it - taus.begin()) - 1];
}

double unit_ball_volume(int n) {
    require(n >= 0, errc::out_of_range, "ball dimension must be nonnegative");
    return std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

double LandauLattice::ground() const {
    double g = 0;
    for (double fm : f) g += fm * hbar_eff;
    return g;
}

namespace {

void lattice_rec(const std::vector<double>& f, double hbar, double cap, size_t j, double acc,
                 std::vector<int>& alpha,
                 std::vector<std::pair<double, std::vector<int>>>& out) {
    if (j == f.size()) {
        out.push_back({acc, alpha});
        require(out.size() <= 20'000'000, errc::budget_exceeded,
                "Landau lattice enumeration exceeds 2e7 levels");
        return;
    }
    for (int a = 0;; ++a) {
        double lvl = acc + (2.0 * a + 1.0) * f[j] * hbar;
        if (lvl > cap) break;
        alpha[j] = a;
        lattice_rec(f, hbar, cap, j + 1, lvl, alpha, out);
    }
    alpha[j] = 0;
}

// sum over alpha of (avail - sum_j (2 alpha_j + 1) f_j muh)_+^{q/2}; for q = 0
// the summand is the indicator of strict positivity
double alpha_sum(const std::vector<double>& f, double muh, double avail, int q, size_t j,
                 double used) {
    if (j == f.size()) {
        double t = avail - used;
        if (t <= 0) return 0;
        return q == 0 ? 1.0 : std::pow(t, 0.5 * q);
    }
    double s = 0;
    for (int a = 0;; ++a) {
        double next = used + (2.0 * a + 1.0) * f[j] * muh;
        if (next >= avail) break;
        s += alpha_sum(f, muh, avail, q, j + 1, next);
    }
    return s;
}

double mw_prefactor(const FieldConfig& cfg, const SemiclassicalScale& scale, WeylNorm norm) {
    double pf = 1;
    for (double fm : cfg.f) pf *= fm;
    double pref = pf * std::pow(scale.mu, cfg.r) * std::pow(scale.h, cfg.r - cfg.d);
    if (norm == WeylNorm::physical)
        pref *= std::pow(2 * M_PI, -(cfg.r + cfg.q)) * unit_ball_volume(cfg.q);
    else
        pref *= unit_ball_volume(cfg.q) * std::pow(2 * M_PI, -cfg.q);
    return pref;
}

double mw_density_from_value(double tau, double v, const FieldConfig& cfg,
                             const SemiclassicalScale& scale, WeylNorm norm) {
    double muh = scale.mu * scale.h;
    double s = alpha_sum(cfg.f, muh, tau - v, cfg.q, 0, 0.0);
    if (s == 0) return 0;
    return mw_prefactor(cfg, scale, norm) * s;
}

} // namespace

LandauLattice landau_lattice(const std::vector<double>& f, double hbar_eff, double e_cut) {
    require(!f.empty(), errc::degenerate_rank, "need at least one frequency");
    require(hbar_eff > 0, errc::out_of_range, "hbar_eff must be positive");
    for (double fm : f)
        require(fm > 0, errc::out_of_range, "frequencies must be positive");
    LandauLattice lat;
    lat.f = f;
    lat.hbar_eff = hbar_eff;
    lat.e_cut = e_cut;
    std::vector<int> alpha(f.size(), 0);
    lattice_rec(f, hbar_eff, e_cut, 0, 0.0, alpha, lat.levels);
    std::sort(lat.levels.begin(), lat.levels.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return lat;
}

double magnetic_weyl_density(double tau, const Eigen::VectorXd& x, const Potential& V,
                             const FieldConfig& cfg, const SemiclassicalScale& scale,
                             WeylNorm norm) {
    double v = V.value(x.data(), static_cast<int>(x.size()));
    return mw_density_from_value(tau, v, cfg, scale, norm);
}

double standard_weyl_density(double tau, const Eigen::VectorXd& x, const Potential& V, int d,
                             double h, WeylNorm norm) {
    require(d >= 1 && h > 0, errc::out_of_range, "standard Weyl density needs d >= 1, h > 0");
    double t = tau - V.value(x.data(), static_cast<int>(x.size()));
    if (t <= 0) return 0;
    double val = std::pow(t, 0.5 * d);
    if (norm == WeylNorm::physical)
        return std::pow(2 * M_PI * h, -d) * unit_ball_volume(d) * val;
    return unit_ball_volume(d) * std::pow(h, -d) * val;
}

double averaged_potential(const Potential& V, const Eigen::VectorXd& x, double rho, int axis_a,
                          int axis_b, int quad_points) {
    require(rho >= 0, errc::out_of_range, "averaging radius must be nonnegative");
    int n = static_cast<int>(x.size());
    require(axis_a >= 0 && axis_b >= 0 && axis_a < n && axis_b < n && axis_a != axis_b,
            errc::out_of_range, "averaging plane axes invalid");
    if (rho == 0) return V(x);
    double L = V.half_width();
    if (std::isfinite(L))
        require(std::fabs(x[axis_a]) + rho <= L && std::fabs(x[axis_b]) + rho <= L,
                errc::circle_exits_domain, "averaging circle leaves the potential box");
    int N = quad_points;
    if (N <= 0) {
        int deg = V.trig_degree();
        N = deg >= 0 ? std::max(32, 2 * deg + 2) : 256;
    }
    Eigen::VectorXd y = x;
    double s = 0;
    for (int k = 0; k < N; ++k) {
        double th = 2 * M_PI * k / N;
        y[axis_a] = x[axis_a] + rho * std::cos(th);
        y[axis_b] = x[axis_b] + rho * std::sin(th);
        s += V(y);
    }
    return s / N;
}

double mw_corrected_density(double tau, const Eigen::VectorXd& x, const Potential& V,
                            const FieldConfig& cfg, const SemiclassicalScale& scale,
                            WeylNorm norm) {
    double v = V.value(x.data(), static_cast<int>(x.size()));
    double rho = 0;
    if (tau > v) rho = std::sqrt(tau - v) / (scale.mu * cfg.f[0]);
    double w = averaged_potential(V, x, rho);
    return mw_density_from_value(tau, w, cfg, scale, norm);
}

namespace {

double midpoint_integral(const std::function<double(const Eigen::VectorXd&)>& density,
                         const Potential& psi, int dim, double L, int n) {
    size_t total = 1;
    for (int a = 0; a < dim; ++a) total *= static_cast<size_t>(n);
    double cell = 2 * L / n;
    double vol = std::pow(cell, dim);
    Eigen::VectorXd x(dim);
    double acc = 0;
    for (size_t fidx = 0; fidx < total; ++fidx) {
        size_t rem = fidx;
        for (int a = dim - 1; a >= 0; --a) {
            int i = static_cast<int>(rem % n);
            rem /= n;
            x[a] = -L + (i + 0.5) * cell;
        }
        double w = psi.value(x.data(), dim);
        if (w == 0) continue;
        acc += w * density(x);
    }
    return acc * vol;
}

} // namespace

LocalizedWeylResult localized_weyl(const std::function<double(const Eigen::VectorXd&)>& density,
                                   const Potential& psi, int dim, double half_width,
                                   int base_points) {
    require(dim >= 1 && dim <= 4, errc::out_of_range, "localized quadrature supports dim 1..4");
    require(half_width > 0 && std::isfinite(half_width), errc::out_of_range,
            "localized quadrature needs a finite box");
    require(base_points >= 8, errc::grid_too_coarse, "need at least 8 base points per axis");

    // psi must vanish outside the half-radius ball
    {
        const int m = 17;
        Eigen::VectorXd x(dim);
        size_t total = 1;
        for (int a = 0; a < dim; ++a) total *= static_cast<size_t>(m);
        for (size_t fidx = 0; fidx < total; ++fidx) {
            size_t rem = fidx;
            double r2 = 0;
            for (int a = dim - 1; a >= 0; --a) {
                int i = static_cast<int>(rem % m);
                rem /= m;
                x[a] = -half_width + 2 * half_width * i / (m - 1);
                r2 += x[a] * x[a];
            }
            if (r2 <= 0.25 * half_width * half_width) continue;
            require(std::fabs(psi.value(x.data(), dim)) < 1e-13, errc::psi_support_violation,
                    "psi does not vanish outside B(0, half_width/2)");
        }
    }

    double coarse = midpoint_integral(density, psi, dim, half_width, base_points);
    double fine = midpoint_integral(density, psi, dim, half_width, 2 * base_points);
    LocalizedWeylResult res;
    res.value = fine;
    res.quad_error = std::fabs(fine - coarse);
    res.points_per_axis = 2 * base_points;
    return res;
}

WeylLimitResult weyl_limit_check(const Potential& V, const FieldConfig& cfg,
                                 const std::vector<SemiclassicalScale>& scales, double tau,
                                 const Eigen::VectorXd& x) {
    require(!scales.empty(), errc::out_of_range, "need at least one scale");
    WeylLimitResult res;
    for (const auto& s : scales) {
        double ew = standard_weyl_density(tau, x, V, cfg.d, s.h, WeylNorm::physical);
        require(ew > 0, errc::empty_allowed_region, "tau does not exceed V at the probe point");
        double emw = magnetic_weyl_density(tau, x, V, cfg, s, WeylNorm::physical);
        res.deviations.push_back(std::fabs(emw - ew) / ew);
    }
    res.max_deviation = *std::max_element(res.deviations.begin(), res.deviations.end());
    return res;
}

namespace {

std::int64_t count_rec(const std::vector<double>& f, size_t j, double cap, std::int64_t& budget) {
    if (j == f.size()) return cap > 0 ? 1 : 0;
    std::int64_t total = 0;
    for (std::int64_t a = 0;; ++a) {
        double used = (2.0 * static_cast<double>(a) + 1.0) * f[j];
        if (used >= cap) break;
        require(--budget > 0, errc::budget_exceeded, "lattice count would exceed 1e9");
        total += count_rec(f, j + 1, cap - used, budget);
    }
    return total;
}

} // namespace

std::int64_t lattice_count(double hbar, double tau, const std::vector<double>& f, double v0,
                           bool literal_reading) {
    require(!f.empty(), errc::degenerate_rank, "need at least one frequency");
    require(hbar > 0, errc::out_of_range, "hbar must be positive");
    for (double fm : f)
        require(fm > 0, errc::out_of_range, "frequencies must be positive");
    double cap = literal_reading ? tau - v0 * hbar : (tau - v0) / hbar;
    std::int64_t budget = 1'000'000'000;
    return count_rec(f, 0, cap, budget);
}

DiophantineEstimate diophantine_modulus(const std::vector<double>& f, double hbar,
                                        double tau_max, double grid_step) {
    require(!f.empty(), errc::degenerate_rank, "need at least one frequency");
    require(hbar > 0 && tau_max > 0, errc::out_of_range, "need hbar > 0 and tau_max > 0");
    if (grid_step <= 0) grid_step = hbar / 16;
    require(grid_step <= hbar / 2, errc::grid_too_coarse,
            "tau grid spacing must resolve hbar (step <= hbar/2)");

    // enumerate all levels hbar * sum_j (2 alpha_j + 1) f_j below tau_max
    std::vector<double> levels;
    {
        struct Rec {
            const std::vector<double>& f;
            double hbar, cap;
            std::vector<double>& out;
            void walk(size_t j, double acc) {
                if (j == f.size()) {
                    out.push_back(acc);
                    require(out.size() <= 50'000'000, errc::budget_exceeded,
                            "level enumeration exceeds 5e7");
                    return;
                }
                for (int a = 0;; ++a) {
                    double lvl = acc + (2.0 * a + 1.0) * f[j] * hbar;
                    if (lvl >= cap) break;
                    walk(j + 1, lvl);
                }
            }
        } rec{f, hbar, tau_max, levels};
        rec.walk(0, 0.0);
    }
    std::sort(levels.begin(), levels.end());

    DiophantineEstimate est;
    est.levels_enumerated = static_cast<std::int64_t>(levels.size());
    if (levels.empty()) return est;

    double lo = *std::min_element(f.begin(), f.end()) * hbar;
    double hr = std::pow(hbar, static_cast<int>(f.size()));
    // nu = sup_{tau < tau'} [ (n(tau') - n(tau)) hbar^r - (tau' - tau) ]_+
    //    = max_i [ (g_i - t_i) - min_{j <= i} (g_j - t_j) ]_+ over the grid,
    // where g = n(t) hbar^r. One forward pass with a running minimum.
    double best = 0, run_min = std::numeric_limits<double>::infinity();
    double run_min_tau = lo, best_lo = lo, best_hi = lo;
    auto steps = static_cast<std::int64_t>(std::floor((tau_max - lo) / grid_step));
    for (std::int64_t i = 0; i <= steps; ++i) {
        double t = lo + static_cast<double>(i) * grid_step;
        auto nt = static_cast<double>(
            std::lower_bound(levels.begin(), levels.end(), t) - levels.begin());
        double score = nt * hr - t;
        if (score - run_min > best) {
            best = score - run_min;
            best_lo = run_min_tau;
            best_hi = t;
        }
        if (score < run_min) {
            run_min = score;
            run_min_tau = t;
        }
    }
    est.nu = best;
    est.tau_lo = best_lo;
    est.tau_hi = best_hi;
    return est;
}

} // namespace magweyl
