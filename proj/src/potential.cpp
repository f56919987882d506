#include "magweyl/potential.hpp"
#include "magweyl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace magweyl {

namespace {

void check_dim_box(int dim, double half_width) {
    require(dim >= 1 && dim <= 8, errc::out_of_range, "potential dimension must be in [1, 8]");
    require(half_width > 0, errc::out_of_range, "box half width must be positive");
}

} // namespace

Potential Potential::expression(const std::string& text, int dim, double half_width,
                                Smoothness sm) {
    return expression(parse_expr(text), dim, half_width, sm);
}

Potential Potential::expression(ExprPtr e, int dim, double half_width, Smoothness sm) {
    check_dim_box(dim, half_width);
    require(e != nullptr, errc::parse_error, "null expression");
    require(e->min_dim() <= dim, errc::out_of_range,
            "expression uses coordinate beyond dimension " + std::to_string(dim));
    Potential p;
    p.backend_ = Backend::expression;
    p.dim_ = dim;
    p.half_width_ = half_width;
    p.smooth_ = sm;
    p.expr_ = std::move(e);
    p.grad_.resize(dim);
    for (int a = 0; a < dim; ++a) p.grad_[a] = p.expr_->diff(a, dim);
    return p;
}

Potential Potential::constant(double c, int dim, double half_width) {
    if (c == 0.0) {
        Potential p;
        p.dim_ = dim;
        p.half_width_ = half_width;
        return p;
    }
    return expression(expr_constant(c), dim, half_width, {});
}

Potential Potential::callable(Fn f, GradFn grad, int dim, double half_width, Smoothness sm) {
    check_dim_box(dim, half_width);
    require(static_cast<bool>(f), errc::out_of_range, "callable potential needs a value function");
    Potential p;
    p.backend_ = Backend::generic;
    p.dim_ = dim;
    p.half_width_ = half_width;
    p.smooth_ = sm;
    p.fn_ = std::move(f);
    p.grad_fn_ = std::move(grad);
    return p;
}

Potential Potential::sampled(std::vector<double> values, int nodes_per_axis, int dim,
                             double half_width, Smoothness sm) {
    check_dim_box(dim, half_width);
    require(std::isfinite(half_width), errc::out_of_range, "grid potential needs a finite box");
    require(nodes_per_axis >= 2, errc::grid_too_coarse, "need at least 2 nodes per axis");
    size_t expect = 1;
    for (int a = 0; a < dim; ++a) expect *= static_cast<size_t>(nodes_per_axis);
    require(values.size() == expect, errc::out_of_range,
            "grid potential value count does not match nodes^dim");
    Potential p;
    p.backend_ = Backend::grid;
    p.dim_ = dim;
    p.half_width_ = half_width;
    p.smooth_ = sm;
    p.values_ = std::move(values);
    p.nodes_ = nodes_per_axis;
    return p;
}

double Potential::operator()(const Eigen::VectorXd& x) const {
    return value(x.data(), static_cast<int>(x.size()));
}

double Potential::value(const double* x, int n) const {
    if (backend_ == Backend::zero) return 0.0;
    require(n >= dim_, errc::out_of_range, "point dimension below potential dimension");
    switch (backend_) {
        case Backend::expression: return expr_->eval(x, dim_);
        case Backend::grid: return grid_value(x);
        case Backend::generic: {
            Eigen::Map<const Eigen::VectorXd> m(x, dim_);
            return fn_(m);
        }
        default: return 0.0;
    }
}

Eigen::VectorXd Potential::gradient(const Eigen::VectorXd& x) const {
    int n = static_cast<int>(x.size());
    if (backend_ == Backend::zero) return Eigen::VectorXd::Zero(n);
    require(n >= dim_, errc::out_of_range, "point dimension below potential dimension");
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    switch (backend_) {
        case Backend::expression:
            for (int a = 0; a < dim_; ++a) g[a] = grad_[a]->eval(x.data(), dim_);
            return g;
        case Backend::grid:
            grid_gradient(x.data(), g.data());
            return g;
        case Backend::generic: {
            if (grad_fn_) {
                Eigen::VectorXd gg = grad_fn_(x.head(dim_));
                g.head(dim_) = gg;
                return g;
            }
            // symmetric differences as a fallback
            Eigen::VectorXd xp = x, xm = x;
            double h = 1e-6 * std::max(1.0, x.head(dim_).cwiseAbs().maxCoeff());
            for (int a = 0; a < dim_; ++a) {
                xp[a] = x[a] + h;
                xm[a] = x[a] - h;
                g[a] = (fn_(xp.head(dim_)) - fn_(xm.head(dim_))) / (2 * h);
                xp[a] = x[a];
                xm[a] = x[a];
            }
            return g;
        }
        default: return g;
    }
}

double Potential::grid_value(const double* x) const {
    const int n = nodes_;
    const double delta = 2 * half_width_ / (n - 1);
    // cell index and barycentric coordinate per axis, clamped to the box
    int idx[8];
    double t[8];
    for (int a = 0; a < dim_; ++a) {
        double u = (x[a] + half_width_) / delta;
        u = std::clamp(u, 0.0, static_cast<double>(n - 1));
        int i = std::min(static_cast<int>(u), n - 2);
        idx[a] = i;
        t[a] = u - i;
    }
    double acc = 0;
    const int corners = 1 << dim_;
    for (int c = 0; c < corners; ++c) {
        double w = 1;
        size_t flat = 0;
        for (int a = 0; a < dim_; ++a) {
            int bit = (c >> a) & 1;
            w *= bit ? t[a] : 1 - t[a];
            flat = flat * static_cast<size_t>(n) + static_cast<size_t>(idx[a] + bit);
        }
        if (w != 0) acc += w * values_[flat];
    }
    return acc;
}

void Potential::grid_gradient(const double* x, double* g) const {
    const int n = nodes_;
    const double delta = 2 * half_width_ / (n - 1);
    int idx[8];
    double t[8];
    for (int a = 0; a < dim_; ++a) {
        double u = (x[a] + half_width_) / delta;
        u = std::clamp(u, 0.0, static_cast<double>(n - 1));
        int i = std::min(static_cast<int>(u), n - 2);
        idx[a] = i;
        t[a] = u - i;
    }
    const int corners = 1 << dim_;
    for (int a = 0; a < dim_; ++a) g[a] = 0;
    for (int c = 0; c < corners; ++c) {
        size_t flat = 0;
        for (int a = 0; a < dim_; ++a) {
            int bit = (c >> a) & 1;
            flat = flat * static_cast<size_t>(n) + static_cast<size_t>(idx[a] + bit);
        }
        double v = values_[flat];
        for (int a = 0; a < dim_; ++a) {
            // derivative of the multilinear weight along axis a
            double w = ((c >> a) & 1) ? 1.0 : -1.0;
            for (int b = 0; b < dim_; ++b) {
                if (b == a) continue;
                int bit = (c >> b) & 1;
                w *= bit ? t[b] : 1 - t[b];
            }
            g[a] += w * v / delta;
        }
    }
}

Potential Potential::mollified(double eps, int nodes_per_axis) const {
    require(eps > 0, errc::out_of_range, "mollification width must be positive");
    require(std::isfinite(half_width_), errc::out_of_range,
            "mollification needs a finite box");
    require(eps <= half_width_ / 4, errc::eps_too_large_for_domain,
            "mollification width exceeds a quarter of the box half width");
    int n = nodes_per_axis;
    if (n <= 0) {
        switch (dim_) {
            case 1: n = 513; break;
            case 2: n = 193; break;
            case 3: n = 49; break;
            default: n = 21; break;
        }
    }
    require(n >= 2, errc::grid_too_coarse, "need at least 2 nodes per axis");
    const double delta = 2 * half_width_ / (n - 1);
    require(delta < eps * 5, errc::grid_too_coarse,
            "mollification grid cannot resolve the kernel; raise nodes_per_axis");

    size_t total = 1;
    for (int a = 0; a < dim_; ++a) total *= static_cast<size_t>(n);

    // sample the source on the node grid
    std::vector<double> buf(total), out(total);
    {
        Eigen::VectorXd x(dim_);
        std::vector<int> ix(dim_, 0);
        for (size_t f = 0; f < total; ++f) {
            size_t rem = f;
            for (int a = dim_ - 1; a >= 0; --a) {
                ix[a] = static_cast<int>(rem % n);
                rem /= n;
            }
            for (int a = 0; a < dim_; ++a) x[a] = -half_width_ + ix[a] * delta;
            buf[f] = value(x.data(), dim_);
        }
    }

    // truncated Gaussian weights
    int radius = static_cast<int>(std::ceil(5 * eps / delta));
    radius = std::min(radius, n - 1);
    std::vector<double> w(radius + 1);
    for (int j = 0; j <= radius; ++j) w[j] = std::exp(-0.5 * (j * delta) * (j * delta) / (eps * eps));

    // separable pass per axis with pointwise renormalization at the edges
    for (int axis = 0; axis < dim_; ++axis) {
        size_t stride = 1;
        for (int a = axis + 1; a < dim_; ++a) stride *= static_cast<size_t>(n);
        size_t outer = total / static_cast<size_t>(n);
        for (size_t line = 0; line < outer; ++line) {
            // base index of this line: decompose line into the non-axis indices
            size_t hi = line / stride;
            size_t lo = line % stride;
            size_t base = hi * stride * static_cast<size_t>(n) + lo;
            for (int i = 0; i < n; ++i) {
                double num = 0, den = 0;
                int j0 = std::max(-radius, -i);
                int j1 = std::min(radius, n - 1 - i);
                for (int j = j0; j <= j1; ++j) {
                    double wj = w[std::abs(j)];
                    num += wj * buf[base + static_cast<size_t>(i + j) * stride];
                    den += wj;
                }
                out[base + static_cast<size_t>(i) * stride] = num / den;
            }
        }
        std::swap(buf, out);
    }

    // smoothed output is C^infinity regardless of the declared input class
    Potential p = sampled(std::move(buf), n, dim_, half_width_, Smoothness{});
    p.moll_eps_ = eps;
    return p;
}

bool Potential::is_constant(double* out) const {
    switch (backend_) {
        case Backend::zero:
            if (out) *out = 0;
            return true;
        case Backend::expression:
            if (expr_->min_dim() == 0) {
                if (out) *out = expr_->eval(nullptr, 0);
                return true;
            }
            return false;
        case Backend::grid: {
            double v0 = values_[0];
            for (double v : values_)
                if (v != v0) return false;
            if (out) *out = v0;
            return true;
        }
        default: return false;
    }
}

bool Potential::independent_of(const std::vector<int>& axes, double tol) const {
    for (int a : axes) require(a >= 0, errc::out_of_range, "axis out of range");
    if (backend_ == Backend::zero) return true;
    std::vector<bool> varied(dim_, false);
    for (int a : axes)
        if (a < dim_) varied[a] = true;
    if (backend_ == Backend::expression) {
        for (int a = 0; a < dim_; ++a)
            if (varied[a] && expr_->depends_on(a)) return false;
        return true;
    }
    // numeric check: vary the listed axes on a coarse lattice at several base
    // points of the remaining coordinates and compare
    double L = std::isfinite(half_width_) ? half_width_ : 1.0;
    const int m = 5;
    double scale = std::max(1.0, std::fabs(max_on_grid(9)));
    std::vector<int> fixed, moving;
    for (int a = 0; a < dim_; ++a) (varied[a] ? moving : fixed).push_back(a);
    if (moving.empty()) return true;
    size_t fixed_combos = 1, moving_combos = 1;
    for (size_t i = 0; i < fixed.size(); ++i) fixed_combos *= m;
    for (size_t i = 0; i < moving.size(); ++i) moving_combos *= m;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(dim_);
    for (size_t fc = 0; fc < fixed_combos; ++fc) {
        size_t rem = fc;
        for (int a : fixed) {
            int i = static_cast<int>(rem % m);
            rem /= m;
            x[a] = -0.9 * L + 1.8 * L * i / (m - 1);
        }
        double ref = 0;
        for (size_t mc = 0; mc < moving_combos; ++mc) {
            size_t r2 = mc;
            for (int a : moving) {
                int i = static_cast<int>(r2 % m);
                r2 /= m;
                x[a] = -0.9 * L + 1.8 * L * i / (m - 1);
            }
            double v = value(x.data(), dim_);
            if (mc == 0)
                ref = v;
            else if (std::fabs(v - ref) > tol * scale)
                return false;
        }
    }
    return true;
}

bool Potential::depends_only_on(int axis, double tol) const {
    require(axis >= 0 && axis < dim_, errc::out_of_range, "axis out of range");
    std::vector<int> others;
    for (int a = 0; a < dim_; ++a)
        if (a != axis) others.push_back(a);
    return independent_of(others, tol);
}

int Potential::trig_degree() const {
    if (backend_ == Backend::zero) return 0;
    if (backend_ == Backend::expression) return expr_->trig_degree();
    return -1;
}

std::string Potential::describe() const {
    char buf[160];
    switch (backend_) {
        case Backend::zero: return "0";
        case Backend::expression: return expr_->str();
        case Backend::grid:
            std::snprintf(buf, sizeof buf, "grid[%d^%d] on [-%.17g, %.17g]^%d (eps=%.17g)",
                          nodes_, dim_, half_width_, half_width_, dim_, moll_eps_);
            return buf;
        default: return "callable";
    }
}

void Potential::scan_extrema(int samples_per_axis, double& lo, double& hi) const {
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    if (backend_ == Backend::zero) {
        lo = hi = 0;
        return;
    }
    double L = std::isfinite(half_width_) ? half_width_ : 1.0;
    int m = std::max(2, samples_per_axis);
    size_t total = 1;
    for (int a = 0; a < dim_; ++a) total *= static_cast<size_t>(m);
    Eigen::VectorXd x(dim_);
    for (size_t f = 0; f < total; ++f) {
        size_t rem = f;
        for (int a = dim_ - 1; a >= 0; --a) {
            int i = static_cast<int>(rem % m);
            rem /= m;
            x[a] = -L + 2 * L * i / (m - 1);
        }
        double v = value(x.data(), dim_);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
}

double Potential::min_on_grid(int samples_per_axis) const {
    double lo, hi;
    scan_extrema(samples_per_axis, lo, hi);
    return lo;
}

double Potential::max_on_grid(int samples_per_axis) const {
    double lo, hi;
    scan_extrema(samples_per_axis, lo, hi);
    return hi;
}

} // namespace magweyl
