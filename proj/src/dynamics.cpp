#include "magweyl/dynamics.hpp"
#include "magweyl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace magweyl {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

double uniform01(std::uint64_t& state) { return (splitmix64(state) >> 11) * 0x1p-53; }

Eigen::MatrixXd beta_block(const FieldConfig& cfg) {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(cfg.d, cfg.d);
    for (int m = 0; m < cfg.r; ++m) {
        require(cfg.f[m] != 0, errc::singular_block, "zero frequency in rank block");
        B(m, cfg.r + m) = 1.0 / cfg.f[m];
        B(cfg.r + m, m) = -1.0 / cfg.f[m];
    }
    return B;
}

// midpoint step machinery for z' = M z + g(x), z = (x, xi)
struct MidpointStep {
    Eigen::MatrixXd plus;  // I + dt/2 M
    Eigen::PartialPivLU<Eigen::MatrixXd> lu; // I - dt/2 M
    double dt;
    int d;

    MidpointStep() = default;
    MidpointStep(const Eigen::MatrixXd& M, double dt_, int d_) : dt(dt_), d(d_) {
        const int n = 2 * d;
        Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
        plus = eye + 0.5 * dt * M;
        lu.compute(eye - 0.5 * dt * M);
    }

    void advance(Eigen::VectorXd& z, const Potential& V, const IntegrateOptions& opt) const {
        Eigen::VectorXd rhs0 = plus * z;
        Eigen::VectorXd x_mid = z.head(d);
        Eigen::VectorXd z_new = z;
        Eigen::VectorXd rhs = rhs0;
        double scale = std::max(1.0, x_mid.cwiseAbs().maxCoeff());
        bool settled = false;
        for (int it = 0; it < opt.max_fixed_point_iters; ++it) {
            rhs = rhs0;
            Eigen::VectorXd grad = V.gradient(x_mid);
            rhs.tail(d) -= dt * grad;
            z_new = lu.solve(rhs);
            Eigen::VectorXd x_mid_new = 0.5 * (z.head(d) + z_new.head(d));
            double delta = (x_mid_new - x_mid).cwiseAbs().maxCoeff();
            x_mid = x_mid_new;
            if (delta <= opt.fixed_point_tol * scale) {
                settled = true;
                break;
            }
        }
        require(settled, errc::step_too_large,
                "midpoint fixed point did not converge; reduce the step");
        z = z_new;
    }
};

// --- exact bracket arithmetic ------------------------------------------------
// Scalars are integer-coefficient Laurent polynomials in mu and the f_m. The
// kinetic momenta and slow variables are linear in (x, xi) with such scalars
// as coefficients, so their Poisson brackets reduce to exact arithmetic.

struct Rat {
    long long n = 0, d = 1;
    Rat() = default;
    Rat(long long num, long long den = 1) : n(num), d(den) { normalize(); }
    void normalize() {
        if (d < 0) {
            n = -n;
            d = -d;
        }
        long long g = std::gcd(n < 0 ? -n : n, d);
        if (g > 1) {
            n /= g;
            d /= g;
        }
        if (n == 0) d = 1;
    }
    bool zero() const { return n == 0; }
};

Rat operator+(Rat a, Rat b) { return Rat(a.n * b.d + b.n * a.d, a.d * b.d); }
Rat operator*(Rat a, Rat b) { return Rat(a.n * b.n, a.d * b.d); }
Rat operator-(Rat a) { return Rat(-a.n, a.d); }

struct Mono {
    std::vector<int> fexp; // exponent per frequency
    int muexp = 0;
    bool operator<(const Mono& o) const {
        if (muexp != o.muexp) return muexp < o.muexp;
        return fexp < o.fexp;
    }
};

using Poly = std::map<Mono, Rat>;

void add_term(Poly& p, const Mono& m, Rat c) {
    auto [it, fresh] = p.try_emplace(m, c);
    if (!fresh) {
        it->second = it->second + c;
        if (it->second.zero()) p.erase(it);
    }
}

Poly poly_mul(const Poly& a, const Poly& b) {
    Poly out;
    for (const auto& [ma, ca] : a)
        for (const auto& [mb, cb] : b) {
            Mono m = ma;
            m.muexp += mb.muexp;
            for (size_t i = 0; i < m.fexp.size(); ++i) m.fexp[i] += mb.fexp[i];
            add_term(out, m, ca * cb);
        }
    return out;
}

void poly_add_inplace(Poly& a, const Poly& b, Rat scale) {
    for (const auto& [m, c] : b) add_term(a, m, c * scale);
}

Poly monomial(int r, Rat c, int muexp, int which_f = -1, int fpow = 0) {
    Poly p;
    Mono m;
    m.fexp.assign(r, 0);
    m.muexp = muexp;
    if (which_f >= 0) m.fexp[which_f] = fpow;
    if (!c.zero()) p[m] = c;
    return p;
}

double poly_eval(const Poly& p, const std::vector<double>& f, double mu) {
    double acc = 0;
    for (const auto& [m, c] : p) {
        double term = double(c.n) / double(c.d) * std::pow(mu, m.muexp);
        for (size_t i = 0; i < m.fexp.size(); ++i) term *= std::pow(f[i], m.fexp[i]);
        acc += term;
    }
    return acc;
}

// linear form c_x . x + c_xi . xi with Poly coefficients
struct LinForm {
    std::vector<Poly> cx, cxi;
    explicit LinForm(int d) : cx(d), cxi(d) {}
};

Poly bracket(const LinForm& a, const LinForm& b) {
    // {f,g} = sum_l (d_xi_l f)(d_x_l g) - (d_x_l f)(d_xi_l g)
    Poly out;
    for (size_t l = 0; l < a.cx.size(); ++l) {
        Poly t1 = poly_mul(a.cxi[l], b.cx[l]);
        Poly t2 = poly_mul(a.cx[l], b.cxi[l]);
        poly_add_inplace(out, t1, Rat(1));
        poly_add_inplace(out, t2, Rat(-1));
    }
    return out;
}

} // namespace

double hamiltonian(const Potential& V, const FieldConfig& cfg, const SemiclassicalScale& scale,
                   const Eigen::VectorXd& x, const Eigen::VectorXd& xi) {
    Eigen::VectorXd kin = xi - scale.mu * gauge_potential(cfg, x);
    return kin.squaredNorm() + V(x);
}

double max_step(const FieldConfig& cfg, const SemiclassicalScale& scale) {
    return 1.0 / (2.0 * scale.mu * cfg.f_max()) / 20.0;
}

double cyclotron_period(const FieldConfig& cfg, const SemiclassicalScale& scale) {
    return M_PI / (scale.mu * cfg.f_min());
}

Trajectory integrate(const PhaseState& initial, const Potential& V, const FieldConfig& cfg,
                     const SemiclassicalScale& scale, double T, const IntegrateOptions& opt) {
    const int d = cfg.d;
    require(initial.x.size() == d && initial.xi.size() == d, errc::out_of_range,
            "initial state dimension mismatch");
    require(V.dim() <= d, errc::out_of_range, "potential dimension exceeds the flow dimension");
    require(T > 0, errc::out_of_range, "final time must be positive");

    const double cap = max_step(cfg, scale);
    double dt = opt.dt > 0 ? opt.dt : cap / 64.0;
    require(dt <= cap * (1 + 1e-12), errc::step_too_large,
            "step does not resolve the cyclotron period");

    std::size_t n_steps = static_cast<std::size_t>(std::ceil(T / dt - 1e-12));
    std::size_t stride = 1;
    if (n_steps + 1 > opt.max_samples) {
        stride = (n_steps + opt.max_samples - 2) / (opt.max_samples - 1);
        n_steps = ((n_steps + stride - 1) / stride) * stride;
    }
    dt = T / static_cast<double>(n_steps);

    const Eigen::MatrixXd G = cfg.gauge();
    Eigen::MatrixXd M(2 * d, 2 * d);
    M.topLeftCorner(d, d) = -2.0 * scale.mu * G;
    M.topRightCorner(d, d) = 2.0 * Eigen::MatrixXd::Identity(d, d);
    M.bottomLeftCorner(d, d) = -2.0 * scale.mu * scale.mu * G.transpose() * G;
    M.bottomRightCorner(d, d) = 2.0 * scale.mu * G.transpose();

    std::vector<MidpointStep> stages;
    if (!opt.fourth_order) {
        stages.emplace_back(M, dt, d);
    } else {
        const double w1 = 1.0 / (2.0 - std::cbrt(2.0));
        const double w0 = 1.0 - 2.0 * w1;
        stages.emplace_back(M, w1 * dt, d);
        stages.emplace_back(M, w0 * dt, d);
        stages.emplace_back(M, w1 * dt, d);
    }

    const double box = V.half_width();
    auto in_box = [&](const Eigen::VectorXd& x) {
        return !std::isfinite(box) || x.cwiseAbs().maxCoeff() <= box;
    };
    require(in_box(initial.x), errc::left_domain, "initial position outside the potential box");

    Eigen::VectorXd z(2 * d);
    z.head(d) = initial.x;
    z.tail(d) = initial.xi;

    Trajectory traj;
    traj.cfg = cfg;
    traj.scale = scale;
    traj.step = dt;
    traj.sample_spacing = dt * static_cast<double>(stride);
    traj.samples.reserve(n_steps / stride + 1);

    auto record = [&](std::size_t k) {
        PhaseState s;
        s.t = initial.t + dt * static_cast<double>(k);
        s.x = z.head(d);
        s.xi = z.tail(d);
        s.energy = hamiltonian(V, cfg, scale, s.x, s.xi);
        traj.samples.push_back(std::move(s));
    };
    record(0);
    for (std::size_t k = 1; k <= n_steps; ++k) {
        if (stages.size() == 1) {
            stages[0].advance(z, V, opt);
        } else {
            stages[0].advance(z, V, opt);
            stages[1].advance(z, V, opt);
            stages[2].advance(z, V, opt);
        }
        require(in_box(z.head(d)), errc::left_domain,
                "trajectory left the potential box at t = " +
                    std::to_string(initial.t + dt * static_cast<double>(k)));
        if (k % stride == 0) record(k);
    }
    return traj;
}

Eigen::VectorXd slow_variables(const PhaseState& state, const FieldConfig& cfg,
                               const SemiclassicalScale& scale) {
    Eigen::VectorXd p = state.xi / scale.mu - gauge_potential(cfg, state.x);
    return state.x - beta_block(cfg) * p;
}

Eigen::VectorXd drift_velocity(const FieldConfig& cfg, const SemiclassicalScale& scale,
                               const Eigen::VectorXd& grad) {
    require(grad.size() == cfg.d, errc::out_of_range, "gradient dimension mismatch");
    return beta_block(cfg) * grad / scale.mu;
}

DriftReport measure_drift(const Trajectory& traj, const FieldConfig& cfg,
                          const SemiclassicalScale& scale) {
    require(traj.samples.size() >= 2, errc::trajectory_too_short, "trajectory has < 2 samples");
    const double t0 = traj.samples.front().t;
    const double t1 = traj.samples.back().t;
    const double period = cyclotron_period(cfg, scale);
    require(t1 - t0 >= 20.0 * period * (1 - 1e-12), errc::trajectory_too_short,
            "drift fit needs at least 20 cyclotron periods");

    const double lo = t0 + period;
    const double hi = t1 - period;
    const int d = cfg.d;

    std::vector<double> ts;
    std::vector<Eigen::VectorXd> xs;
    for (const auto& s : traj.samples) {
        if (s.t < lo || s.t > hi) continue;
        ts.push_back(s.t);
        xs.push_back(slow_variables(s, cfg, scale));
    }
    require(ts.size() >= 8, errc::trajectory_too_short, "too few samples inside the fit window");

    const double t_mean = std::accumulate(ts.begin(), ts.end(), 0.0) / ts.size();
    Eigen::VectorXd x_mean = Eigen::VectorXd::Zero(d);
    for (const auto& x : xs) x_mean += x;
    x_mean /= static_cast<double>(xs.size());

    double stt = 0;
    Eigen::VectorXd stx = Eigen::VectorXd::Zero(d);
    for (size_t i = 0; i < ts.size(); ++i) {
        const double dtc = ts[i] - t_mean;
        stt += dtc * dtc;
        stx += dtc * (xs[i] - x_mean);
    }
    DriftReport rep;
    rep.velocity = stx / stt;
    rep.intercept = x_mean - rep.velocity * t_mean;
    rep.window_lo = lo;
    rep.window_hi = hi;
    rep.n_used = ts.size();

    double ss = 0;
    double spread = 0;
    for (size_t i = 0; i < ts.size(); ++i) {
        Eigen::VectorXd res = xs[i] - (rep.intercept + rep.velocity * ts[i]);
        ss += res.squaredNorm();
        spread = std::max(spread, (xs[i] - x_mean).cwiseAbs().maxCoeff());
    }
    const double rms = std::sqrt(ss / static_cast<double>(ts.size()));
    const double denom = std::max(rep.velocity.norm() * (hi - lo), std::max(spread, 1e-30));
    rep.rel_residual = rms / denom;
    return rep;
}

PoissonReport poisson_check(const FieldConfig& cfg, const SemiclassicalScale& scale) {
    const int d = cfg.d;
    const int r = cfg.r;

    // p_k = mu^{-1} xi_k - (G x)_k, G(r+m, m) = -f_m
    std::vector<LinForm> p(d, LinForm(d));
    for (int k = 0; k < d; ++k) p[k].cxi[k] = monomial(r, Rat(1), -1);
    for (int m = 0; m < r; ++m) poly_add_inplace(p[r + m].cx[m], monomial(r, Rat(1), 0, m, 1), Rat(1));

    // X_j = x_j - sum_k beta_{jk} p_k on the rank block, identity on kernel
    std::vector<LinForm> X(d, LinForm(d));
    for (int j = 0; j < d; ++j) X[j].cx[j] = monomial(r, Rat(1), 0);
    for (int m = 0; m < r; ++m) {
        // beta(m, r+m) = 1/f_m, beta(r+m, m) = -1/f_m
        for (int l = 0; l < d; ++l) {
            poly_add_inplace(X[m].cx[l], poly_mul(monomial(r, Rat(-1), 0, m, -1), p[r + m].cx[l]),
                             Rat(1));
            poly_add_inplace(X[m].cxi[l], poly_mul(monomial(r, Rat(-1), 0, m, -1), p[r + m].cxi[l]),
                             Rat(1));
            poly_add_inplace(X[r + m].cx[l], poly_mul(monomial(r, Rat(1), 0, m, -1), p[m].cx[l]),
                             Rat(1));
            poly_add_inplace(X[r + m].cxi[l], poly_mul(monomial(r, Rat(1), 0, m, -1), p[m].cxi[l]),
                             Rat(1));
        }
    }

    PoissonReport rep;
    rep.px_zero = true;
    for (int k = 0; k < d; ++k)
        for (int j = 0; j < d; ++j) {
            Poly b = bracket(p[k], X[j]);
            if (k == j && k >= 2 * r) {
                // kernel diagonal: X_a = x_a, so the bracket is the canonical
                // value mu^{-1}, not a residual; assert it exactly
                Poly diff = b;
                poly_add_inplace(diff, monomial(r, Rat(1), -1), Rat(-1));
                if (!diff.empty()) {
                    rep.px_zero = false;
                    rep.max_px_residual =
                        std::max(rep.max_px_residual, std::fabs(poly_eval(diff, cfg.f, scale.mu)));
                }
                rep.kernel_pair_value = poly_eval(b, cfg.f, scale.mu);
                continue;
            }
            if (!b.empty()) {
                rep.px_zero = false;
                rep.max_px_residual =
                    std::max(rep.max_px_residual, std::fabs(poly_eval(b, cfg.f, scale.mu)));
            }
        }

    // beta_{jk} and F_{jk} as exact polynomials
    auto beta_poly = [&](int j, int k) -> Poly {
        for (int m = 0; m < r; ++m) {
            if (j == m && k == r + m) return monomial(r, Rat(1), 0, m, -1);
            if (j == r + m && k == m) return monomial(r, Rat(-1), 0, m, -1);
        }
        return Poly{};
    };
    auto field_poly = [&](int j, int k) -> Poly {
        for (int m = 0; m < r; ++m) {
            if (j == m && k == r + m) return monomial(r, Rat(-1), 0, m, 1);
            if (j == r + m && k == m) return monomial(r, Rat(1), 0, m, 1);
        }
        return Poly{};
    };

    auto family_sign = [&](const std::vector<LinForm>& forms, auto target, double& mismatch) {
        int sign = 0;
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k) {
                Poly b = bracket(forms[j], forms[k]);
                Poly tgt = poly_mul(target(j, k), monomial(r, Rat(1), -1));
                if (tgt.empty()) {
                    if (!b.empty())
                        mismatch = std::max(mismatch, std::fabs(poly_eval(b, cfg.f, scale.mu)));
                    continue;
                }
                // compare b against +-tgt
                for (int s : {+1, -1}) {
                    Poly diff = b;
                    poly_add_inplace(diff, tgt, Rat(-s));
                    if (diff.empty()) {
                        if (sign == 0) sign = s;
                        if (sign != s)
                            mismatch = std::max(mismatch, std::fabs(poly_eval(b, cfg.f, scale.mu)));
                        goto matched;
                    }
                }
                mismatch = std::max(mismatch, std::fabs(poly_eval(b, cfg.f, scale.mu)));
            matched:;
            }
        return sign;
    };

    rep.sign_xx = family_sign(X, beta_poly, rep.max_xx_mismatch);
    rep.sign_pp = family_sign(p, field_poly, rep.max_pp_mismatch);
    return rep;
}

double periodicity_probe(const Potential& V, const FieldConfig& cfg,
                         const SemiclassicalScale& scale, double T,
                         const PeriodicityOptions& opt) {
    require(opt.n_samples >= 1, errc::out_of_range, "ensemble needs at least one sample");
    require(T > 0, errc::out_of_range, "probe time must be positive");
    const int d = cfg.d;
    std::uint64_t rng = opt.seed;

    auto normal = [&]() {
        double u1 = std::max(uniform01(rng), 1e-300);
        double u2 = uniform01(rng);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    };

    int returned = 0;
    for (int s = 0; s < opt.n_samples; ++s) {
        Eigen::VectorXd x(d), kin(d);
        bool ok = false;
        for (int attempt = 0; attempt < 4096 && !ok; ++attempt) {
            for (int i = 0; i < d; ++i) x[i] = (2.0 * uniform01(rng) - 1.0) * opt.x_radius;
            double k2 = opt.energy - V(x);
            if (k2 <= 0) continue;
            for (int i = 0; i < d; ++i) kin[i] = normal();
            double nk = kin.norm();
            if (nk == 0) continue;
            kin *= std::sqrt(k2) / nk;
            ok = true;
            for (int i = 2 * cfg.r; i < d && ok; ++i)
                if (std::fabs(kin[i]) < opt.min_kernel_momentum) ok = false;
        }
        require(ok, errc::empty_allowed_region,
                "could not sample the energy shell inside the sampling box");

        PhaseState init;
        init.x = x;
        init.xi = scale.mu * gauge_potential(cfg, x) + kin;
        init.energy = hamiltonian(V, cfg, scale, x, init.xi);

        IntegrateOptions iopt;
        iopt.dt = opt.dt;
        Trajectory traj = integrate(init, V, cfg, scale, T, iopt);
        Eigen::VectorXd X0 = slow_variables(traj.samples.front(), cfg, scale);
        Eigen::VectorXd X1 = slow_variables(traj.samples.back(), cfg, scale);
        if ((X1 - X0).cwiseAbs().maxCoeff() <= opt.delta) ++returned;
    }
    return static_cast<double>(returned) / static_cast<double>(opt.n_samples);
}

} // namespace magweyl
