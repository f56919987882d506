#include "magweyl/experiments.hpp"
#include "magweyl/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

namespace magweyl {

namespace {

using nlohmann::json;

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// pow with the l = infinity limits used by the smoothness classes
double powx(double base, double e) {
    if (e == 0) return 1.0;
    if (std::isinf(e)) {
        if (base == 1.0) return 1.0;
        bool shrink = (base < 1.0) == (e > 0);
        return shrink ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return std::pow(base, e);
}

bool smooth_at_least(const Smoothness& sm, double l, double sigma) {
    if (sm.l > l) return true;
    return sm.l == l && sm.sigma >= sigma;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// product midpoint rule over the full box [-L, L]^d with one refinement
std::pair<double, double> box_midpoint(const std::function<double(const Eigen::VectorXd&)>& f,
                                       int d, double L, int base_points) {
    auto pass = [&](int n) {
        const double dx = 2.0 * L / n;
        Eigen::VectorXd x(d);
        std::vector<int> idx(d, 0);
        double acc = 0;
        const std::int64_t total = static_cast<std::int64_t>(std::pow(double(n), d) + 0.5);
        for (std::int64_t c = 0; c < total; ++c) {
            std::int64_t rem = c;
            for (int a = d - 1; a >= 0; --a) {
                idx[a] = static_cast<int>(rem % n);
                rem /= n;
            }
            for (int a = 0; a < d; ++a) x[a] = -L + (idx[a] + 0.5) * dx;
            acc += f(x);
        }
        return acc * std::pow(dx, d);
    };
    double coarse = pass(base_points);
    double fine = pass(2 * base_points);
    return {fine, std::fabs(fine - coarse)};
}

} // namespace

std::map<std::string, double> remainder_bounds(const FieldConfig& cfg,
                                               const SemiclassicalScale& scale,
                                               const Smoothness& sm, bool value_nondeg,
                                               bool gradient_nondeg, bool level_nondeg,
                                               std::optional<double> nu_hat) {
    std::map<std::string, double> out;
    const double h = scale.h;
    const double mu = scale.mu;
    const int d = cfg.d;
    const int q = cfg.q;
    const int r = cfg.r;
    const double l = sm.l;
    const double s = sm.sigma;
    const double lg = std::fabs(std::log(h));
    const double mh = mu * h;
    const bool ultra = mh >= 1.0;

    // fractions that appear in the kernel bounds, with their l -> inf limits
    const double f_2l = std::isinf(l) ? 2.0 : 2.0 * l / (l + 2.0);
    const double f_1l = std::isinf(l) ? 1.0 : l / (l + 2.0);
    const double f_2s = std::isinf(l) ? 0.0 : 2.0 * s / (l + 2.0);
    const double f_1s = std::isinf(l) ? 0.0 : s / (l + 2.0);

    if (q == 0 && !ultra) {
        if (value_nondeg && gradient_nondeg && smooth_at_least(sm, 1, 2)) {
            if (scale.regime == Regime::weak) {
                out["weak_full_rank"] = std::pow(h, 1 - d) / mu +
                                        powx(mh * lg, l) * powx(lg, -s) * std::pow(h, -d);
            } else {
                double eps = mu <= 1.0 / (h * lg) ? 1.0 / mu : std::sqrt(h * lg / mu);
                bool nondeg_ok = scale.regime != Regime::superstrong || level_nondeg;
                if (nondeg_ok)
                    out["strong_full_rank"] = std::pow(h, 1 - d) / mu +
                                              powx(eps, l) * powx(lg, -s) * std::pow(h, -d);
            }
        }
    }
    if (q == 0 && ultra && level_nondeg) {
        out["ultrastrong_full_rank"] = std::pow(mu, r - 1) * std::pow(h, 1 - r);
    }

    if (q >= 1 && !ultra) {
        const bool smooth_ok = q == 1 ? smooth_at_least(sm, 1, 2) : smooth_at_least(sm, 1, 1);
        if (value_nondeg && smooth_ok) {
            out["kernel_generic"] =
                std::pow(h, 1 - d) + powx(mh, 0.5 * q + 1) * std::pow(h, -d);
            if (gradient_nondeg)
                // grouped as (mu h)^{q/2} (mu h lg)^l lg^{-s} so the smooth
                // limit l -> inf stays finite instead of multiplying 0 by inf
                out["kernel_nondegenerate"] = std::pow(h, 1 - d) + powx(mh, 0.5 * q) *
                                                                       powx(mh * lg, l) *
                                                                       powx(lg, -s) *
                                                                       std::pow(h, -d);
            if (q == 2) {
                out["kernel_multiplicity"] = std::pow(h, 1 - d) +
                                             mu * std::pow(h, f_2l + 1 - d) * powx(lg, -f_2s);
            } else if (q == 1) {
                out["kernel_multiplicity"] = std::pow(h, 1 - d) +
                                             mu * std::pow(h, f_1l + 1 - d) * powx(lg, -f_1s) +
                                             powx(mu, 1 - 0.5 * l) * std::pow(h, 1 - d) *
                                                 powx(lg, -0.5 * s);
            }
            if (nu_hat && r >= 2 && (q == 1 || q == 2)) {
                const double nu = *nu_hat;
                if (q == 2) {
                    out["diophantine_generic"] =
                        std::pow(h, 1 - d) + nu * std::pow(h, 2.0 / 3 - d);
                    out["diophantine_multiplicity"] =
                        std::pow(h, 1 - d) + nu * std::pow(h, f_2l - d) * powx(lg, -f_2s);
                } else {
                    const double head = std::pow(h, 1 - d) + powx(mu, 0.5 - l) *
                                                                 std::pow(h, 0.5 - d) *
                                                                 powx(lg, 0.5 - s);
                    out["diophantine_generic"] =
                        head + nu * (std::pow(h, 1.0 / 3 - d) +
                                     powx(mu, -0.5 * l) * std::pow(h, -d) * powx(lg, -0.5 * s));
                    out["diophantine_multiplicity"] =
                        head + nu * (std::pow(h, f_1l - d) * powx(lg, -f_1s) +
                                     powx(mu, -0.5 * l) * std::pow(h, -d) * powx(lg, -0.5 * s));
                }
            }
        }
    }
    if (q >= 1 && ultra) {
        const double lead = std::pow(mu, r) * std::pow(h, 1 - r);
        if (q >= 3) {
            out["ultrastrong_kernel"] = lead;
        } else {
            out["ultrastrong_kernel"] =
                lead * (1.0 + std::pow(h, -1 + f_1l * q) * powx(lg, -f_1s * q));
        }
    }
    return out;
}

PointInputs materialize(const SweepPlan& plan, const SweepPoint& pt) {
    PointInputs in;
    in.cfg = field_from_frequencies(plan.f, plan.q);
    require(in.cfg.d == plan.d, errc::config_error,
            "plan dimension must equal 2 * (number of frequencies) + q");
    in.scale = make_scale(pt.h, pt.mu, plan.d, plan.q);

    if (!plan.potential.empty()) {
        in.V = Potential::expression(plan.potential, plan.d, plan.half_width, plan.smoothness);
        if (plan.mollify_eps > 0) in.V = in.V.mollified(plan.mollify_eps);
    }
    if (!plan.psi.empty()) in.psi = Potential::expression(plan.psi, plan.d, plan.half_width);

    int n = plan.n;
    const double lb = in.scale.magnetic_length(in.cfg.f_max());
    if (n == 0) {
        n = static_cast<int>(std::ceil(2.0 * plan.half_width * plan.points_per_length / lb));
        n = std::max(n, 16);
    }
    double dim = std::pow(static_cast<double>(n), plan.d);
    require(dim <= static_cast<double>(plan.budget_dim), errc::budget_exceeded,
            "operator dimension " + std::to_string(static_cast<long long>(dim)) +
                " exceeds the plan budget");

    in.grid.d = plan.d;
    in.grid.n = n;
    in.grid.L = plan.half_width;
    in.grid.boundary = Boundary::torus;
    in.grid.stencil_order = plan.stencil_order;
    return in;
}

namespace {

struct EngineResult {
    double count = 0;
    double stderr_est = 0;
    std::string engine;
};

EngineResult run_engine(const SweepPlan& plan, const PointInputs& in, const DiscreteOperator& op) {
    EngineResult res;
    const std::size_t dim = op.dim();
    const bool uniform = in.psi.dim() == 0;

    Eigen::VectorXd psi_diag;
    if (!uniform) {
        psi_diag.resize(static_cast<Eigen::Index>(dim));
        for (std::size_t i = 0; i < dim; ++i) {
            double v = in.psi(op.site_position(i));
            require(v >= -1e-12, errc::out_of_range, "psi must be nonnegative");
            psi_diag[static_cast<Eigen::Index>(i)] = std::max(v, 0.0);
        }
    }

    std::string engine = plan.engine;
    if (engine == "auto")
        engine = dim <= plan.dense_cap ? "dense" : (uniform ? "inertia" : "kpm");
    res.engine = engine;

    if (engine == "dense") {
        if (uniform) {
            res.count = dense_counting(op, {plan.tau}, plan.dense_cap).values[0];
        } else {
            LocalizedSpectrum spec = dense_localized(op, plan.tau, psi_diag, plan.dense_cap);
            res.count = spec.weights.sum();
        }
    } else if (engine == "inertia") {
        require(uniform, errc::config_error,
                "the inertia engine counts globally; use dense or kpm with psi");
        res.count = inertia_counting(op, {plan.tau}).values[0];
    } else if (engine == "kpm") {
        KpmOptions kopt = plan.kpm;
        kopt.seed = plan.seed ^ 0xaf251af3b0f025b5ull;
        Eigen::VectorXd w =
            uniform ? Eigen::VectorXd::Ones(static_cast<Eigen::Index>(dim)) : psi_diag;
        KpmResult k = kpm_local_counting(op, {plan.tau}, w, kopt);
        res.count = k.curve.values[0];
        res.stderr_est = k.curve.stderrs[0];
    } else {
        fail(errc::config_error, "unknown engine '" + engine + "'");
    }
    return res;
}

} // namespace

RemainderRecord remainder(const SweepPlan& plan, const SweepPoint& pt) {
    const auto t0 = std::chrono::steady_clock::now();
    PointInputs in = materialize(plan, pt);

    RemainderRecord rec;
    rec.h = pt.h;
    rec.mu = pt.mu;
    rec.tau = plan.tau;
    rec.regime = regime_name(in.scale.regime);
    rec.n = in.grid.n;
    rec.stencil_order = plan.stencil_order;
    rec.requested_half_width = plan.half_width;
    rec.seed = plan.seed;

    DiscreteOperator op = assemble(in.V, in.cfg, in.scale, in.grid);
    rec.snapped_half_width = op.grid.L;
    const double lb = in.scale.magnetic_length(in.cfg.f_max());
    rec.degraded = lb / op.grid.spacing() < plan.points_per_length - 1e-9;

    EngineResult eng = run_engine(plan, in, op);
    rec.count = eng.count;
    rec.engine = eng.engine;
    rec.engine_stderr = eng.stderr_est;

    if (plan.estimate_engine_error) {
        GridSpec alt = in.grid;
        alt.stencil_order = plan.stencil_order == 2 ? 4 : 2;
        DiscreteOperator op2 = assemble(in.V, in.cfg, in.scale, alt);
        EngineResult eng2 = run_engine(plan, in, op2);
        rec.engine_error = std::fabs(eng.count - eng2.count);
    }

    const double L = op.grid.L;
    auto plain = [&](const Eigen::VectorXd& x) {
        return magnetic_weyl_density(plan.tau, x, in.V, in.cfg, in.scale);
    };
    // near the box edge the averaging circle can leave the domain of a
    // box-limited potential; degrade to the plain density there
    auto corrected = [&](const Eigen::VectorXd& x) {
        try {
            return mw_corrected_density(plan.tau, x, in.V, in.cfg, in.scale);
        } catch (const error& e) {
            if (e.code() == errc::circle_exits_domain) return plain(x);
            throw;
        }
    };

    double q1 = 0, q2 = 0;
    if (in.psi.dim() == 0) {
        std::tie(rec.emw, q1) = box_midpoint(plain, plan.d, L, 24);
        std::tie(rec.emw_corrected, q2) = box_midpoint(corrected, plan.d, L, 24);
    } else {
        LocalizedWeylResult lw = localized_weyl(plain, in.psi, plan.d, L, 24);
        LocalizedWeylResult lwc = localized_weyl(corrected, in.psi, plan.d, L, 24);
        rec.emw = lw.value;
        rec.emw_corrected = lwc.value;
        q1 = lw.quad_error;
        q2 = lwc.quad_error;
    }
    rec.quad_error = std::max(q1, q2);
    rec.r_signed = rec.count - rec.emw;
    rec.r_abs = std::fabs(rec.r_signed);
    rec.r_corrected_signed = rec.count - rec.emw_corrected;
    rec.r_corrected_abs = std::fabs(rec.r_corrected_signed);

    const Potential& nd_V = in.V.dim() == 0 ? Potential::constant(0.0, plan.d) : in.V;
    NondegeneracyReport nd_val = check_nondegeneracy(
        nd_V, NondegeneracyCondition::value_bounded_below, in.scale, in.cfg, 0.05, plan.tau);
    NondegeneracyReport nd_grad = check_nondegeneracy(
        nd_V, NondegeneracyCondition::gradient_bounded_below, in.scale, in.cfg, 0.05, plan.tau);
    NondegeneracyReport nd_level = check_nondegeneracy(
        nd_V, NondegeneracyCondition::level_or_gradient, in.scale, in.cfg, 0.05, plan.tau);
    std::optional<double> nu;
    if (in.cfg.r >= 2 && (plan.q == 1 || plan.q == 2))
        nu = diophantine_modulus(plan.f, pt.mu * pt.h).nu;
    rec.bounds = remainder_bounds(in.cfg, in.scale, plan.smoothness, nd_val.holds, nd_grad.holds,
                                  nd_level.holds, nu);

    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

std::vector<RemainderRecord> run_sweep(const SweepPlan& plan) {
    require(!plan.points.empty(), errc::config_error, "sweep plan has no points");
    const std::size_t n = plan.points.size();
    std::vector<RemainderRecord> out(n);
    std::vector<std::exception_ptr> errors(n);

    unsigned hw = std::thread::hardware_concurrency();
    unsigned workers = plan.threads > 0 ? static_cast<unsigned>(plan.threads) : std::max(1u, hw);
    workers = std::min<unsigned>(workers, static_cast<unsigned>(n));

    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                out[i] = remainder(plan, plan.points[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    for (std::size_t i = 0; i < n; ++i)
        if (errors[i]) std::rethrow_exception(errors[i]);
    return out;
}

ScalingFit fit_power_law(const std::vector<double>& xs, const std::vector<double>& rs,
                         std::uint64_t seed, int resamples) {
    require(xs.size() == rs.size(), errc::out_of_range, "size mismatch");
    require(xs.size() >= 2, errc::span_too_small, "need at least two points to fit");
    std::vector<double> lx(xs.size()), lr(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) {
        require(xs[i] > 0 && rs[i] > 0, errc::out_of_range,
                "power-law fit needs positive values");
        lx[i] = std::log(xs[i]);
        lr[i] = std::log(rs[i]);
    }

    auto slope_of = [&](const std::vector<size_t>& idx, double& slope, double& icept) {
        double mx = 0, my = 0;
        for (size_t i : idx) {
            mx += lx[i];
            my += lr[i];
        }
        mx /= idx.size();
        my /= idx.size();
        double sxx = 0, sxy = 0;
        for (size_t i : idx) {
            sxx += (lx[i] - mx) * (lx[i] - mx);
            sxy += (lx[i] - mx) * (lr[i] - my);
        }
        if (sxx == 0) return false;
        slope = sxy / sxx;
        icept = my - slope * mx;
        return true;
    };

    ScalingFit fit;
    fit.n = xs.size();
    std::vector<size_t> all(xs.size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = i;
    require(slope_of(all, fit.slope, fit.intercept), errc::span_too_small,
            "all abscissae identical");

    std::vector<double> boots;
    boots.reserve(resamples);
    std::uint64_t st = seed;
    std::vector<size_t> idx(xs.size());
    int guard = 0;
    while (static_cast<int>(boots.size()) < resamples && guard < 20 * resamples) {
        ++guard;
        for (size_t i = 0; i < idx.size(); ++i)
            idx[i] = static_cast<size_t>(splitmix64(st) % xs.size());
        double s = 0, c = 0;
        if (slope_of(idx, s, c)) boots.push_back(s);
    }
    if (!boots.empty()) {
        std::sort(boots.begin(), boots.end());
        auto pick = [&](double p) {
            double pos = p * (boots.size() - 1);
            size_t k = static_cast<size_t>(pos);
            double fr = pos - k;
            return k + 1 < boots.size() ? boots[k] * (1 - fr) + boots[k + 1] * fr : boots[k];
        };
        fit.ci_lo = pick(0.025);
        fit.ci_hi = pick(0.975);
    } else {
        fit.ci_lo = fit.ci_hi = fit.slope;
    }
    return fit;
}

ScalingFit scaling_fit(const std::vector<RemainderRecord>& records, const std::string& parameter,
                       bool use_corrected, bool subtract_engine_error) {
    require(records.size() >= 5, errc::span_too_small, "scaling fit needs at least 5 points");
    for (const auto& r : records)
        require(r.regime == records.front().regime, errc::regime_mixed,
                "records span multiple regimes (" + records.front().regime + " vs " + r.regime +
                    ")");
    std::vector<double> xs, rs;
    for (const auto& r : records) {
        double x = 0;
        if (parameter == "h")
            x = r.h;
        else if (parameter == "mu")
            x = r.mu;
        else
            fail(errc::config_error, "unknown fit parameter '" + parameter + "'");
        double val = use_corrected ? r.r_corrected_abs : r.r_abs;
        if (subtract_engine_error) val = std::max(val - r.engine_error, 1e-300);
        xs.push_back(x);
        rs.push_back(val);
    }
    double lo = *std::min_element(xs.begin(), xs.end());
    double hi = *std::max_element(xs.begin(), xs.end());
    require(hi >= 10.0 * lo, errc::span_too_small,
            "fit span must cover at least one decade of the parameter");
    return fit_power_law(xs, rs);
}

WeylLimitStudy weyl_limit_study(int d, const std::vector<double>& f, double tau, double v0,
                                const std::vector<double>& mu_h_values, double h) {
    require(!mu_h_values.empty(), errc::out_of_range, "need at least one mu h value");
    const int q = d - 2 * static_cast<int>(f.size());
    FieldConfig cfg = field_from_frequencies(f, q);
    Potential V = Potential::constant(v0, d);
    std::vector<SemiclassicalScale> scales;
    for (double mh : mu_h_values) {
        require(mh > 0, errc::out_of_range, "mu h must be positive");
        scales.push_back(make_scale(h, mh / h, d, q));
    }
    Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
    WeylLimitResult res = weyl_limit_check(V, cfg, scales, tau, x);

    WeylLimitStudy study;
    std::vector<double> xs, rs;
    for (size_t i = 0; i < mu_h_values.size(); ++i) {
        WeylLimitRow row;
        row.mu_h = mu_h_values[i];
        row.ew = standard_weyl_density(tau, x, V, d, h);
        row.rel_gap = res.deviations[i];
        row.emw = row.ew * (1 + res.deviations[i]); // magnitude only, sign folded away
        study.rows.push_back(row);
        if (row.rel_gap > 0) {
            xs.push_back(row.mu_h);
            rs.push_back(row.rel_gap);
        }
    }
    if (xs.size() >= 2) study.slope = fit_power_law(xs, rs).slope;
    return study;
}

std::vector<GapStudyRow> gap_study(const GapStudyPlan& plan) {
    require(!plan.mu_h.empty(), errc::out_of_range, "gap study needs mu h points");
    bool any_super = false;
    for (double mh : plan.mu_h) any_super |= mh >= 2.0;
    require(any_super, errc::out_of_range, "gap study needs at least one point with mu h >= 2");

    FieldConfig cfg = field_from_frequencies({1.0}, 0);
    Potential V = plan.potential.empty()
                      ? Potential()
                      : Potential::expression(plan.potential, 2, plan.half_width);
    const double vmin = V.dim() == 0 ? 0.0 : V.min_on_grid();
    const double vmax = V.dim() == 0 ? 0.0 : V.max_on_grid();
    const double osc = vmax - vmin;

    std::vector<GapStudyRow> rows;
    for (double mh : plan.mu_h) {
        const double mu = mh / plan.h;
        SemiclassicalScale scale = make_scale(plan.h, mu, 2, 0);

        GridSpec grid;
        grid.d = 2;
        grid.n = plan.n;
        grid.L = plan.half_width;
        grid.boundary = Boundary::torus;
        DiscreteOperator op = assemble(V, cfg, scale, grid);

        GapStudyRow row;
        row.mu_h = mh;
        const double lo = std::max(0.0, mh + vmin - 0.8 * mh);
        const double hi = plan.scan_hi_levels * mh + vmax;
        GapReport rep = gap_scan(op, lo, hi, 200, 0.25 * mh);
        row.cluster_centers = rep.cluster_centers;
        for (const auto& g : rep.gaps) row.gap_widths.push_back(g.hi - g.lo);

        for (int a = 0; (2 * a + 1) * mh + vmax < hi; ++a)
            row.predicted_centers.push_back((2 * a + 1) * mh + 0.5 * (vmin + vmax));

        // reference run without potential isolates the discretization error
        DiscreteOperator op0 = assemble(Potential(), cfg, scale, grid);
        GapReport rep0 = gap_scan(op0, lo, hi, 200, 0.25 * mh);
        double grid_err = 0;
        for (size_t a = 0; a < rep0.cluster_centers.size(); ++a)
            grid_err = std::max(grid_err,
                                std::fabs(rep0.cluster_centers[a] - (2.0 * a + 1.0) * mh));
        row.min_required_gap = 2.0 * mh - osc - 2.0 * grid_err;

        // gaps between consecutive clusters wholly inside the scan window
        row.gaps_present = rep.cluster_centers.size() >= 2;
        for (size_t cA = 0; cA + 1 < rep.cluster_centers.size(); ++cA) {
            double glo = rep.cluster_centers[cA] + 0.5 * rep.cluster_widths[cA];
            double ghi = rep.cluster_centers[cA + 1] - 0.5 * rep.cluster_widths[cA + 1];
            bool found = false;
            for (const auto& g : rep.gaps)
                if (g.lo >= glo - 0.3 * mh && g.hi <= ghi + 0.3 * mh &&
                    g.hi - g.lo >= row.min_required_gap)
                    found = true;
            row.gaps_present = row.gaps_present && found;
        }

        if (0.0 - vmin - mh <= -0.05) {
            CountingCurve zero = inertia_counting(op, {0.0});
            row.localized_count_at_zero = zero.values[0];
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<DiophantineRow> diophantine_study(const std::vector<std::vector<double>>& f_choices,
                                              const std::vector<double>& hbars, double tau_max) {
    std::vector<DiophantineRow> rows;
    for (const auto& f : f_choices)
        for (double hb : hbars) {
            DiophantineRow row;
            row.f = f;
            row.hbar = hb;
            row.nu = diophantine_modulus(f, hb, tau_max).nu;
            rows.push_back(std::move(row));
        }
    return rows;
}

// --- serialization -----------------------------------------------------------

namespace {

json smoothness_to_json(const Smoothness& sm) {
    json j;
    if (std::isinf(sm.l))
        j["l"] = nullptr;
    else
        j["l"] = sm.l;
    j["sigma"] = sm.sigma;
    return j;
}

Smoothness smoothness_from_json(const json& j) {
    Smoothness sm;
    sm.l = j.at("l").is_null() ? std::numeric_limits<double>::infinity()
                               : j.at("l").get<double>();
    sm.sigma = j.at("sigma").get<double>();
    return sm;
}

json plan_point_to_json(const SweepPlan& plan, const SweepPoint& pt) {
    json j;
    j["d"] = plan.d;
    j["f"] = plan.f;
    j["q"] = plan.q;
    j["h"] = pt.h;
    j["mu"] = pt.mu;
    j["potential"] = plan.potential;
    j["half_width"] = plan.half_width;
    j["mollify_eps"] = plan.mollify_eps;
    j["smoothness"] = smoothness_to_json(plan.smoothness);
    j["psi"] = plan.psi;
    j["tau"] = plan.tau;
    j["engine"] = plan.engine;
    j["n"] = plan.n;
    j["points_per_length"] = plan.points_per_length;
    j["stencil_order"] = plan.stencil_order;
    j["dense_cap"] = plan.dense_cap;
    j["budget_dim"] = plan.budget_dim;
    j["kpm_moments"] = plan.kpm.n_moments;
    j["kpm_vectors"] = plan.kpm.n_vectors;
    j["estimate_engine_error"] = plan.estimate_engine_error;
    j["seed"] = plan.seed;
    return j;
}

void plan_point_from_json(const json& j, SweepPlan& plan, SweepPoint& pt) {
    plan.d = j.at("d").get<int>();
    plan.f = j.at("f").get<std::vector<double>>();
    plan.q = j.at("q").get<int>();
    pt.h = j.at("h").get<double>();
    pt.mu = j.at("mu").get<double>();
    plan.potential = j.at("potential").get<std::string>();
    plan.half_width = j.at("half_width").get<double>();
    plan.mollify_eps = j.at("mollify_eps").get<double>();
    plan.smoothness = smoothness_from_json(j.at("smoothness"));
    plan.psi = j.at("psi").get<std::string>();
    plan.tau = j.at("tau").get<double>();
    plan.engine = j.at("engine").get<std::string>();
    plan.n = j.at("n").get<int>();
    plan.points_per_length = j.at("points_per_length").get<int>();
    plan.stencil_order = j.at("stencil_order").get<int>();
    plan.dense_cap = j.at("dense_cap").get<std::size_t>();
    plan.budget_dim = j.at("budget_dim").get<std::size_t>();
    plan.kpm.n_moments = j.at("kpm_moments").get<int>();
    plan.kpm.n_vectors = j.at("kpm_vectors").get<int>();
    plan.estimate_engine_error = j.at("estimate_engine_error").get<bool>();
    plan.seed = j.at("seed").get<std::uint64_t>();
    plan.points = {pt};
}

} // namespace

std::string record_to_json(const RemainderRecord& rec, const SweepPlan& plan,
                           const SweepPoint& pt) {
    json j;
    j["inputs"] = plan_point_to_json(plan, pt);
    json& o = j["outputs"];
    o["regime"] = rec.regime;
    o["count"] = rec.count;
    o["emw"] = rec.emw;
    o["emw_corrected"] = rec.emw_corrected;
    o["r_signed"] = rec.r_signed;
    o["r_abs"] = rec.r_abs;
    o["r_corrected_signed"] = rec.r_corrected_signed;
    o["r_corrected_abs"] = rec.r_corrected_abs;
    o["engine_error"] = rec.engine_error;
    o["engine_stderr"] = rec.engine_stderr;
    o["quad_error"] = rec.quad_error;
    o["engine"] = rec.engine;
    o["n"] = rec.n;
    o["stencil_order"] = rec.stencil_order;
    o["requested_half_width"] = rec.requested_half_width;
    o["snapped_half_width"] = rec.snapped_half_width;
    o["degraded"] = rec.degraded;
    o["bounds"] = rec.bounds;
    j["wall_seconds"] = rec.wall_seconds;
    return j.dump(2);
}

RemainderRecord replay_record(const std::string& json_text) {
    json j = json::parse(json_text);
    SweepPlan plan;
    SweepPoint pt;
    plan_point_from_json(j.at("inputs"), plan, pt);
    return remainder(plan, pt);
}

std::string strip_volatile(const std::string& json_text) {
    json j = json::parse(json_text);
    j.erase("wall_seconds");
    return j.dump(2);
}

void write_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        require(out.good(), errc::io_error, "cannot open " + tmp.string());
        out << content;
        require(out.good(), errc::io_error, "short write to " + tmp.string());
    }
    fs::rename(tmp, target);
}

std::string records_to_csv(const std::vector<RemainderRecord>& records) {
    std::set<std::string> bound_keys;
    for (const auto& r : records)
        for (const auto& [k, v] : r.bounds) bound_keys.insert(k);

    std::string out = "h,mu,tau,regime,engine,n,stencil_order,count,emw,emw_corrected,r_signed,"
                      "r_abs,r_corrected_signed,r_corrected_abs,engine_error,engine_stderr,"
                      "quad_error,snapped_half_width,degraded,wall_seconds";
    for (const auto& k : bound_keys) out += ",bound_" + k;
    out += "\n";
    for (const auto& r : records) {
        out += fmt(r.h) + "," + fmt(r.mu) + "," + fmt(r.tau) + "," + r.regime + "," + r.engine +
               "," + std::to_string(r.n) + "," + std::to_string(r.stencil_order) + "," +
               fmt(r.count) + "," + fmt(r.emw) + "," + fmt(r.emw_corrected) + "," +
               fmt(r.r_signed) + "," + fmt(r.r_abs) + "," + fmt(r.r_corrected_signed) + "," +
               fmt(r.r_corrected_abs) + "," + fmt(r.engine_error) + "," + fmt(r.engine_stderr) +
               "," + fmt(r.quad_error) + "," + fmt(r.snapped_half_width) + "," +
               (r.degraded ? "1" : "0") + "," + fmt(r.wall_seconds);
        for (const auto& k : bound_keys) {
            auto it = r.bounds.find(k);
            out += ",";
            if (it != r.bounds.end()) out += fmt(it->second);
        }
        out += "\n";
    }
    return out;
}

std::string plot_script(const std::string& csv_path, const std::string& title, int xcol, int ycol,
                        bool loglog) {
    std::string s;
    s += "set datafile separator ','\n";
    s += "set key autotitle columnhead\n";
    s += "set title '" + title + "'\n";
    if (loglog) s += "set logscale xy\n";
    s += "set grid\n";
    s += "plot '" + csv_path + "' using " + std::to_string(xcol) + ":" + std::to_string(ycol) +
         " with linespoints\n";
    return s;
}

SweepPlan plan_from_config(const Config& cfg) {
    SweepPlan plan;
    plan.d = static_cast<int>(cfg.integer("d", 2));
    plan.f = cfg.numbers("f", {1.0});
    plan.q = static_cast<int>(cfg.integer("q", plan.d - 2 * static_cast<int>(plan.f.size())));
    plan.potential = cfg.str("potential", "");
    plan.half_width = cfg.num("half_width", 1.0);
    plan.mollify_eps = cfg.num("mollify_eps", 0.0);
    if (cfg.has("smooth_l")) plan.smoothness.l = cfg.num("smooth_l");
    plan.smoothness.sigma = cfg.num("smooth_sigma", 0.0);
    plan.psi = cfg.str("psi", "");
    plan.tau = cfg.num("tau", 0.0);
    plan.engine = cfg.str("engine", "auto");
    plan.n = static_cast<int>(cfg.integer("n", 0));
    plan.points_per_length = static_cast<int>(cfg.integer("points_per_length", 8));
    plan.stencil_order = static_cast<int>(cfg.integer("stencil_order", 2));
    plan.dense_cap = static_cast<std::size_t>(cfg.integer("dense_cap", 6000));
    plan.budget_dim = static_cast<std::size_t>(cfg.integer("budget_dim", 250000));
    plan.kpm.n_moments = static_cast<int>(cfg.integer("kpm_moments", 1024));
    plan.kpm.n_vectors = static_cast<int>(cfg.integer("kpm_vectors", 16));
    plan.estimate_engine_error = cfg.flag("estimate_engine_error", true);
    plan.seed = static_cast<std::uint64_t>(cfg.integer("seed", 1));
    plan.threads = static_cast<int>(cfg.integer("threads", 0));

    std::vector<double> hs = cfg.numbers("h");
    if (cfg.has("mu_h")) {
        double mh = cfg.num("mu_h");
        for (double h : hs) plan.points.push_back({h, mh / h});
    } else {
        std::vector<double> mus = cfg.numbers("mu", {1.0});
        for (double h : hs)
            for (double mu : mus) plan.points.push_back({h, mu});
    }
    return plan;
}

} // namespace magweyl
