#include "doctest.h"

#include "magweyl/errors.hpp"
#include "magweyl/expr.hpp"
#include "magweyl/potential.hpp"

#include <cmath>

using namespace magweyl;

namespace {

double ev(const ExprPtr& e, std::initializer_list<double> xs) {
    std::vector<double> v(xs);
    return e->eval(v.data(), static_cast<int>(v.size()));
}

double pot(const Potential& V, std::initializer_list<double> xs) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(xs.size()));
    int i = 0;
    for (double t : xs) x[i++] = t;
    return V(x);
}

} // namespace

TEST_CASE("expression parsing and evaluation") {
    auto e = parse_expr("(+ 1 (* 0.3 x1))");
    CHECK(ev(e, {2.0}) == doctest::Approx(1.6).epsilon(1e-15));
    CHECK(e->min_dim() == 1);

    auto r2 = parse_expr("(+ (pow x1 2) (pow x2 2))");
    CHECK(ev(r2, {3.0, 4.0}) == doctest::Approx(25.0).epsilon(1e-15));
    CHECK(r2->min_dim() == 2);

    auto s = parse_expr("(sin (* 2 x1))");
    CHECK(ev(s, {0.25}) == doctest::Approx(std::sin(0.5)).epsilon(1e-15));

    CHECK_THROWS_AS(parse_expr("(frob x1)"), error);
    CHECK_THROWS_AS(parse_expr("(+ 1"), error);
}

TEST_CASE("expression round trip through str") {
    auto e = parse_expr("(+ 1 (* 0.25 (sin (* 3.5 x2))) (abspow x1 1.5))");
    auto e2 = parse_expr(e->str());
    for (double a : {-0.7, 0.0, 0.3, 1.1}) {
        for (double b : {-1.0, 0.2, 0.9}) {
            CHECK(ev(e, {a, b}) == doctest::Approx(ev(e2, {a, b})).epsilon(1e-15));
        }
    }
}

TEST_CASE("differentiation matches finite differences") {
    auto cases = {
        "(+ 1 (* 0.3 x1))",
        "(* x1 x2)",
        "(pow x1 3)",
        "(sin (* 2 x1))",
        "(cos (+ x1 x2))",
        "(exp (* 0.5 x1))",
        "(abspow (+ x1 x2) 2.5)",
        "(* (sin x1) (cos x2) x1)",
    };
    const double fd = 1e-6;
    for (const char* text : cases) {
        auto e = parse_expr(text);
        for (int axis = 0; axis < 2; ++axis) {
            auto d = e->diff(axis, 2);
            double x[2] = {0.4, -0.3};
            double xp[2] = {x[0], x[1]};
            double xm[2] = {x[0], x[1]};
            xp[axis] += fd;
            xm[axis] -= fd;
            double expect = (e->eval(xp, 2) - e->eval(xm, 2)) / (2 * fd);
            CHECK(d->eval(x, 2) == doctest::Approx(expect).epsilon(1e-6));
        }
    }
}

TEST_CASE("bump is compactly supported and smooth at the edge") {
    auto b = parse_expr("(bump 0.5)");
    CHECK(ev(b, {0.0, 0.0}) == doctest::Approx(1.0));
    CHECK(ev(b, {0.5, 0.0}) == 0.0);
    CHECK(ev(b, {0.7, 0.2}) == 0.0);
    CHECK(ev(b, {0.2, 0.0}) > 0.0);

    // derivative exists and tends to 0 at the support edge
    auto db = b->diff(0, 2);
    double inside[2] = {0.499, 0.0};
    double outside[2] = {0.51, 0.0};
    CHECK(std::fabs(db->eval(inside, 2)) < 1e-6);
    CHECK(db->eval(outside, 2) == 0.0);

    // product short-circuit: bump * unbounded stays finite outside support
    auto prod = parse_expr("(* (bump 0.5) (abspow x1 -1))");
    CHECK(ev(prod, {2.0, 0.0}) == 0.0);
}

TEST_CASE("trig degree detection") {
    CHECK(parse_expr("(sin (* 2 x1))")->trig_degree() == 2);
    CHECK(parse_expr("(+ (sin x1) (cos (* 3 x2)))")->trig_degree() == 3);
    CHECK(parse_expr("(+ 1 x1)")->trig_degree() == 1);
    CHECK(parse_expr("(cos (+ x1 (* -2.5 x2)))")->trig_degree() == 4);
    CHECK(parse_expr("(* (sin x1) (sin x1))")->trig_degree() == 2);
    CHECK(parse_expr("(pow (+ (pow x1 2) (pow x2 2)) 2)")->trig_degree() == 4);
    CHECK(parse_expr("(sin 0.7)")->trig_degree() == 0);
    CHECK(parse_expr("(* x1 (sin x2))")->trig_degree() == 2);
    CHECK(parse_expr("(sin (pow x1 2))")->trig_degree() == -1);
    CHECK(parse_expr("(exp x1)")->trig_degree() == -1);
}

TEST_CASE("potential backends agree on values and gradients") {
    auto V = Potential::expression("(+ (pow x1 2) (* 0.5 x2))", 2);
    CHECK(pot(V, {0.3, 0.4}) == doctest::Approx(0.29).epsilon(1e-15));
    Eigen::VectorXd x(2);
    x << 0.3, 0.4;
    Eigen::VectorXd g = V.gradient(x);
    CHECK(g[0] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(g[1] == doctest::Approx(0.5).epsilon(1e-12));

    auto C = Potential::constant(2.5, 3);
    double cval = 0;
    CHECK(C.is_constant(&cval));
    CHECK(cval == 2.5);

    auto Z = Potential();
    CHECK(Z.is_constant(&cval));
    CHECK(cval == 0.0);
}

TEST_CASE("sampled potential interpolates multilinearly") {
    // V = x on [-1, 1], 3 nodes
    auto V = Potential::sampled({-1.0, 0.0, 1.0}, 3, 1, 1.0);
    CHECK(pot(V, {0.5}) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(pot(V, {-0.25}) == doctest::Approx(-0.25).epsilon(1e-14));
    Eigen::VectorXd x(1);
    x << 0.3;
    CHECK(V.gradient(x)[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mollification damps a cosine by the gaussian factor") {
    // cos(k x) convolved with N(0, eps^2) gives exp(-k^2 eps^2 / 2) cos(k x)
    const double k = 3.0;
    const double eps = 0.05;
    auto V = Potential::expression("(cos (* 3 x1))", 1, 1.0);
    auto M = V.mollified(eps);
    const double damp = std::exp(-0.5 * k * k * eps * eps);
    for (double t : {-0.4, -0.1, 0.0, 0.2, 0.5}) {
        CHECK(pot(M, {t}) == doctest::Approx(damp * std::cos(k * t)).epsilon(5e-4));
    }
    CHECK(std::isinf(M.smoothness().l));

    // constants are exact fixed points of the mollifier
    auto Cm = Potential::constant(0.7, 2, 1.0).mollified(0.1);
    CHECK(pot(Cm, {0.9, -0.9}) == doctest::Approx(0.7).epsilon(1e-12));

    CHECK_THROWS_AS(V.mollified(0.3), error); // eps > L/4
}

TEST_CASE("independence queries") {
    auto V = Potential::expression("(+ (pow x3 2) 1)", 3, 1.0);
    CHECK(V.independent_of({0, 1}));
    CHECK(!V.independent_of({2}));
    CHECK(V.depends_only_on(2));
    CHECK(!V.depends_only_on(0));
}
