#pragma once

#include "magweyl/expr.hpp"

#include <Eigen/Dense>

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace magweyl {

// Holder continuity class C^{l,sigma}: l full derivatives, the top ones
// sigma-Holder. Defaults to smooth.
struct Smoothness {
    double l = std::numeric_limits<double>::infinity();
    double sigma = 0.0;
};

// Scalar potential on the box [-L, L]^d (L may be infinite for whole-space
// dynamics). Backed by an expression tree, a uniform grid sample, or a
// caller-supplied function.
class Potential {
public:
    using Fn = std::function<double(const Eigen::VectorXd&)>;
    using GradFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

    Potential() = default; // identically zero, any dimension

    static Potential expression(const std::string& text, int dim,
                                double half_width = std::numeric_limits<double>::infinity(),
                                Smoothness sm = {});
    static Potential expression(ExprPtr e, int dim,
                                double half_width = std::numeric_limits<double>::infinity(),
                                Smoothness sm = {});
    static Potential constant(double c, int dim,
                              double half_width = std::numeric_limits<double>::infinity());
    static Potential callable(Fn f, GradFn grad, int dim, double half_width, Smoothness sm = {});
    // values: row-major over an inclusive node grid, axis 0 slowest,
    // nodes_per_axis points per axis spanning [-L, L].
    static Potential sampled(std::vector<double> values, int nodes_per_axis, int dim,
                             double half_width, Smoothness sm = {});

    int dim() const { return dim_; }
    double half_width() const { return half_width_; }
    const Smoothness& smoothness() const { return smooth_; }
    double mollification_eps() const { return moll_eps_; }

    double operator()(const Eigen::VectorXd& x) const;
    double value(const double* x, int n) const;
    Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;

    // Convolution with a product Gaussian of standard deviation eps per axis,
    // truncated at 5 eps and renormalized pointwise over the box, so constants
    // are exact fixed points and affine functions are reproduced on the
    // interior. Returns a grid-backed potential on the same box.
    Potential mollified(double eps, int nodes_per_axis = 0) const;

    bool is_constant(double* value = nullptr) const;
    // True when the potential does not vary along any of the given axes
    // (symbolic for expressions, sampled for grids and callables).
    bool independent_of(const std::vector<int>& axes, double tol = 1e-12) const;
    // True when the potential only varies along the given axis (separable
    // check used by band reduction).
    bool depends_only_on(int axis, double tol = 1e-12) const;
    const ExprPtr& expr() const { return expr_; } // null unless expression-backed
    int trig_degree() const;
    std::string describe() const;

    double min_on_grid(int samples_per_axis = 33) const;
    double max_on_grid(int samples_per_axis = 33) const;

private:
    enum class Backend { zero, expression, grid, generic };

    Backend backend_ = Backend::zero;
    int dim_ = 0;
    double half_width_ = std::numeric_limits<double>::infinity();
    Smoothness smooth_;
    double moll_eps_ = 0.0;

    ExprPtr expr_;
    std::vector<ExprPtr> grad_;

    std::vector<double> values_;
    int nodes_ = 0;

    Fn fn_;
    GradFn grad_fn_;

    double grid_value(const double* x) const;
    void grid_gradient(const double* x, double* g) const;
    void scan_extrema(int samples_per_axis, double& lo, double& hi) const;
};

} // namespace magweyl
