#pragma once
#include <memory>
#include <string>
#include <vector>

namespace magweyl {

// Prefix-notation scalar expressions over box coordinates, e.g.
//   (+ 1 (* 0.3 x1))
//   (+ (pow x1 2) (pow x2 2))
//   (abspow (+ x1 x2) 1.5)
//   (bump 0.5)                radial C^inf bump, 1 at the origin, 0 for |x| >= 0.5
// Supported heads: + * - pow sin cos exp abspow bump. Numbers are literals,
// coordinates are x1..xd. Products evaluate to 0 as soon as one factor is 0,
// so compactly supported factors can multiply unbounded ones without 0*inf.
struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    enum class Kind { constant, coord, sum, product, pow, sin, cos, exp, abspow, bump };

    Kind kind;
    double value = 0;     // constant / pow exponent / abspow exponent / bump radius
    int axis = 0;         // coord, 0-based
    std::vector<ExprPtr> kids;

    double eval(const double* x, int dim) const;
    ExprPtr diff(int axis, int dim) const;
    int min_dim() const;              // smallest dim this expression is valid in
    std::string str() const;          // parseable round-trip form
    bool depends_on(int axis) const;
    // Largest trig-polynomial degree in any single coordinate, or -1 when the
    // expression is not a trig polynomial (used to size circle quadratures).
    int trig_degree() const;
};

ExprPtr parse_expr(const std::string& text);

ExprPtr expr_constant(double c);
ExprPtr expr_coord(int axis);
ExprPtr expr_sum(std::vector<ExprPtr> kids);
ExprPtr expr_product(std::vector<ExprPtr> kids);
ExprPtr expr_pow(ExprPtr base, double e);
ExprPtr expr_apply(Expr::Kind unary, ExprPtr arg);
ExprPtr expr_abspow(ExprPtr base, double e);
ExprPtr expr_bump(double radius);

} // namespace magweyl
