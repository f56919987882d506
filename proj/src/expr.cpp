#include "magweyl/expr.hpp"
#include "magweyl/errors.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>

namespace magweyl {

double Expr::eval(const double* x, int dim) const {
    switch (kind) {
        case Kind::constant: return value;
        case Kind::coord:
            require(axis < dim, errc::out_of_range,
                    "coordinate x" + std::to_string(axis + 1) + " in dim " + std::to_string(dim));
            return x[axis];
        case Kind::sum: {
            double s = 0;
            for (const auto& k : kids) s += k->eval(x, dim);
            return s;
        }
        case Kind::product: {
            double p = 1;
            for (const auto& k : kids) {
                double v = k->eval(x, dim);
                if (v == 0.0) return 0.0;
                p *= v;
            }
            return p;
        }
        case Kind::pow: return std::pow(kids[0]->eval(x, dim), value);
        case Kind::sin: return std::sin(kids[0]->eval(x, dim));
        case Kind::cos: return std::cos(kids[0]->eval(x, dim));
        case Kind::exp: return std::exp(kids[0]->eval(x, dim));
        case Kind::abspow: return std::pow(std::fabs(kids[0]->eval(x, dim)), value);
        case Kind::bump: {
            double r2 = 0;
            for (int i = 0; i < dim; ++i) r2 += x[i] * x[i];
            double u = r2 / (value * value);
            if (u >= 1.0) return 0.0;
            return std::exp(1.0 - 1.0 / (1.0 - u));
        }
    }
    return 0;
}

namespace {

ExprPtr make(Expr e) { return std::make_shared<Expr>(std::move(e)); }

bool is_const(const ExprPtr& e, double v) {
    return e->kind == Expr::Kind::constant && e->value == v;
}

} // namespace

ExprPtr expr_constant(double c) {
    Expr e;
    e.kind = Expr::Kind::constant;
    e.value = c;
    return make(std::move(e));
}

ExprPtr expr_coord(int axis) {
    require(axis >= 0, errc::out_of_range, "coordinate axis");
    Expr e;
    e.kind = Expr::Kind::coord;
    e.axis = axis;
    return make(std::move(e));
}

ExprPtr expr_sum(std::vector<ExprPtr> kids) {
    std::vector<ExprPtr> kept;
    for (auto& k : kids)
        if (!is_const(k, 0.0)) kept.push_back(std::move(k));
    if (kept.empty()) return expr_constant(0);
    if (kept.size() == 1) return kept[0];
    Expr e;
    e.kind = Expr::Kind::sum;
    e.kids = std::move(kept);
    return make(std::move(e));
}

ExprPtr expr_product(std::vector<ExprPtr> kids) {
    std::vector<ExprPtr> kept;
    for (auto& k : kids) {
        if (is_const(k, 0.0)) return expr_constant(0);
        if (!is_const(k, 1.0)) kept.push_back(std::move(k));
    }
    if (kept.empty()) return expr_constant(1);
    if (kept.size() == 1) return kept[0];
    Expr e;
    e.kind = Expr::Kind::product;
    e.kids = std::move(kept);
    return make(std::move(e));
}

ExprPtr expr_pow(ExprPtr base, double ex) {
    if (ex == 0.0) return expr_constant(1);
    if (ex == 1.0) return base;
    Expr e;
    e.kind = Expr::Kind::pow;
    e.value = ex;
    e.kids = {std::move(base)};
    return make(std::move(e));
}

ExprPtr expr_apply(Expr::Kind unary, ExprPtr arg) {
    Expr e;
    e.kind = unary;
    e.kids = {std::move(arg)};
    return make(std::move(e));
}

ExprPtr expr_abspow(ExprPtr base, double ex) {
    Expr e;
    e.kind = Expr::Kind::abspow;
    e.value = ex;
    e.kids = {std::move(base)};
    return make(std::move(e));
}

ExprPtr expr_bump(double radius) {
    require(radius > 0, errc::out_of_range, "bump radius must be positive");
    Expr e;
    e.kind = Expr::Kind::bump;
    e.value = radius;
    return make(std::move(e));
}

ExprPtr Expr::diff(int d_axis, int dim) const {
    using K = Kind;
    switch (kind) {
        case K::constant: return expr_constant(0);
        case K::coord: return expr_constant(axis == d_axis ? 1 : 0);
        case K::sum: {
            std::vector<ExprPtr> ds;
            for (const auto& k : kids) ds.push_back(k->diff(d_axis, dim));
            return expr_sum(std::move(ds));
        }
        case K::product: {
            std::vector<ExprPtr> terms;
            for (size_t i = 0; i < kids.size(); ++i) {
                std::vector<ExprPtr> factors;
                for (size_t j = 0; j < kids.size(); ++j)
                    factors.push_back(i == j ? kids[j]->diff(d_axis, dim) : kids[j]);
                terms.push_back(expr_product(std::move(factors)));
            }
            return expr_sum(std::move(terms));
        }
        case K::pow:
            return expr_product({expr_constant(value), expr_pow(kids[0], value - 1),
                                 kids[0]->diff(d_axis, dim)});
        case K::sin:
            return expr_product({expr_apply(K::cos, kids[0]), kids[0]->diff(d_axis, dim)});
        case K::cos:
            return expr_product({expr_constant(-1), expr_apply(K::sin, kids[0]),
                                 kids[0]->diff(d_axis, dim)});
        case K::exp: {
            Expr self = *this;
            return expr_product({make(std::move(self)), kids[0]->diff(d_axis, dim)});
        }
        case K::abspow:
            // d/dt |u|^a = a |u|^(a-2) u u'; taken as 0 at u = 0.
            return expr_product({expr_constant(value), expr_abspow(kids[0], value - 2), kids[0],
                                 kids[0]->diff(d_axis, dim)});
        case K::bump: {
            // d/dx_k bump = bump * (-2 x_k / r^2) * (1 - |x|^2/r^2)^(-2); the
            // product short-circuit keeps this 0 outside the support because the
            // bump factor vanishes there before the singular factor is touched.
            Expr self = *this;
            double r = value;
            std::vector<ExprPtr> sq;
            for (int i = 0; i < dim; ++i) sq.push_back(expr_pow(expr_coord(i), 2));
            auto u = expr_product({expr_constant(1.0 / (r * r)), expr_sum(std::move(sq))});
            auto one_minus = expr_sum({expr_constant(1), expr_product({expr_constant(-1), u})});
            return expr_product({make(std::move(self)), expr_constant(-2.0 / (r * r)),
                                 expr_coord(d_axis), expr_abspow(one_minus, -2)});
        }
    }
    return expr_constant(0);
}

int Expr::min_dim() const {
    if (kind == Kind::coord) return axis + 1;
    if (kind == Kind::bump) return 1;
    int m = 0;
    for (const auto& k : kids) m = std::max(m, k->min_dim());
    return m;
}

bool Expr::depends_on(int a) const {
    if (kind == Kind::coord) return axis == a;
    if (kind == Kind::bump) return true;
    for (const auto& k : kids)
        if (k->depends_on(a)) return true;
    return false;
}

// Sum of |coefficients| of an affine expression, or nullopt when the
// expression is not affine in the coordinates.
static std::optional<double> affine_budget(const Expr& e) {
    if (e.min_dim() == 0) return 0.0;
    switch (e.kind) {
        case Expr::Kind::coord: return 1.0;
        case Expr::Kind::sum: {
            double s = 0;
            for (const auto& k : e.kids) {
                auto b = affine_budget(*k);
                if (!b) return std::nullopt;
                s += *b;
            }
            return s;
        }
        case Expr::Kind::product: {
            double scale = 1.0;
            const Expr* lin = nullptr;
            for (const auto& k : e.kids) {
                if (k->min_dim() == 0) {
                    double dummy = 0;
                    scale *= k->eval(&dummy, 0);
                } else if (lin) {
                    return std::nullopt;
                } else {
                    lin = k.get();
                }
            }
            if (!lin) return 0.0;
            auto b = affine_budget(*lin);
            if (!b) return std::nullopt;
            return std::abs(scale) * *b;
        }
        case Expr::Kind::pow:
            if (e.value == 1) return affine_budget(*e.kids[0]);
            if (e.value == 0) return 0.0;
            return std::nullopt;
        default: return std::nullopt;
    }
}

int Expr::trig_degree() const {
    if (min_dim() == 0) return 0;
    switch (kind) {
        case Kind::coord: return 1;
        case Kind::sum: {
            int m = 0;
            for (const auto& k : kids) {
                int d = k->trig_degree();
                if (d < 0) return -1;
                m = std::max(m, d);
            }
            return m;
        }
        case Kind::product: {
            int s = 0;
            for (const auto& k : kids) {
                int d = k->trig_degree();
                if (d < 0) return -1;
                s += d;
            }
            return s;
        }
        case Kind::pow: {
            if (value < 0 || value != std::floor(value)) return -1;
            int d = kids[0]->trig_degree();
            return d < 0 ? -1 : d * static_cast<int>(value);
        }
        case Kind::sin:
        case Kind::cos: {
            // Restricted to a circle, sin/cos of an affine argument has
            // Fourier coefficients decaying like Bessel J_n past the
            // argument's coefficient budget, so the budget is the right
            // quadrature-size measure. Nonlinear arguments are unbounded.
            auto b = affine_budget(*kids[0]);
            if (!b) return -1;
            return std::max(1, static_cast<int>(std::ceil(*b - 1e-9)));
        }
        default: return -1;
    }
}

std::string Expr::str() const {
    auto num = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    switch (kind) {
        case Kind::constant: return num(value);
        case Kind::coord: return "x" + std::to_string(axis + 1);
        case Kind::sum:
        case Kind::product: {
            std::string s = kind == Kind::sum ? "(+" : "(*";
            for (const auto& k : kids) s += " " + k->str();
            return s + ")";
        }
        case Kind::pow: return "(pow " + kids[0]->str() + " " + num(value) + ")";
        case Kind::sin: return "(sin " + kids[0]->str() + ")";
        case Kind::cos: return "(cos " + kids[0]->str() + ")";
        case Kind::exp: return "(exp " + kids[0]->str() + ")";
        case Kind::abspow: return "(abspow " + kids[0]->str() + " " + num(value) + ")";
        case Kind::bump: return "(bump " + num(value) + ")";
    }
    return "0";
}

namespace {

struct Lexer {
    const std::string& s;
    size_t i = 0;

    void skip() {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    }
    bool done() {
        skip();
        return i >= s.size();
    }
    char peek() {
        skip();
        return i < s.size() ? s[i] : '\0';
    }
    std::string token() {
        skip();
        require(i < s.size(), errc::parse_error, "unexpected end of expression");
        if (s[i] == '(' || s[i] == ')') return std::string(1, s[i++]);
        size_t j = i;
        while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j])) && s[j] != '(' &&
               s[j] != ')')
            ++j;
        std::string t = s.substr(i, j - i);
        i = j;
        return t;
    }
};

bool parse_number(const std::string& t, double& out) {
    char* end = nullptr;
    out = std::strtod(t.c_str(), &end);
    return end && *end == '\0' && end != t.c_str();
}

double expect_number(Lexer& lx, const char* what) {
    std::string t = lx.token();
    double v;
    require(parse_number(t, v), errc::parse_error, std::string("expected number for ") + what +
                                                       ", got '" + t + "'");
    return v;
}

ExprPtr parse_node(Lexer& lx);

ExprPtr parse_list(Lexer& lx) {
    std::string head = lx.token();
    auto args = [&] {
        std::vector<ExprPtr> v;
        while (lx.peek() != ')') v.push_back(parse_node(lx));
        lx.token(); // ')'
        return v;
    };
    if (head == "+") {
        auto v = args();
        require(!v.empty(), errc::parse_error, "(+) needs arguments");
        return expr_sum(std::move(v));
    }
    if (head == "*") {
        auto v = args();
        require(!v.empty(), errc::parse_error, "(*) needs arguments");
        return expr_product(std::move(v));
    }
    if (head == "-") {
        auto v = args();
        require(!v.empty(), errc::parse_error, "(-) needs arguments");
        if (v.size() == 1) return expr_product({expr_constant(-1), v[0]});
        std::vector<ExprPtr> terms{v[0]};
        for (size_t k = 1; k < v.size(); ++k)
            terms.push_back(expr_product({expr_constant(-1), v[k]}));
        return expr_sum(std::move(terms));
    }
    if (head == "pow") {
        auto base = parse_node(lx);
        double e = expect_number(lx, "pow exponent");
        require(lx.token() == ")", errc::parse_error, "pow takes (pow expr exponent)");
        return expr_pow(std::move(base), e);
    }
    if (head == "abspow") {
        auto base = parse_node(lx);
        double e = expect_number(lx, "abspow exponent");
        require(lx.token() == ")", errc::parse_error, "abspow takes (abspow expr exponent)");
        return expr_abspow(std::move(base), e);
    }
    if (head == "sin" || head == "cos" || head == "exp") {
        auto a = parse_node(lx);
        require(lx.token() == ")", errc::parse_error, head + " takes one argument");
        Expr::Kind k = head == "sin"   ? Expr::Kind::sin
                       : head == "cos" ? Expr::Kind::cos
                                       : Expr::Kind::exp;
        return expr_apply(k, std::move(a));
    }
    if (head == "bump") {
        double r = expect_number(lx, "bump radius");
        require(lx.token() == ")", errc::parse_error, "bump takes (bump radius)");
        return expr_bump(r);
    }
    fail(errc::parse_error, "unknown operator '" + head + "'");
}

ExprPtr parse_node(Lexer& lx) {
    std::string t = lx.token();
    if (t == "(") return parse_list(lx);
    require(t != ")", errc::parse_error, "unexpected ')'");
    double v;
    if (parse_number(t, v)) return expr_constant(v);
    if (t.size() >= 2 && t[0] == 'x') {
        char* end = nullptr;
        long ax = std::strtol(t.c_str() + 1, &end, 10);
        if (end && *end == '\0' && ax >= 1) return expr_coord(static_cast<int>(ax - 1));
    }
    fail(errc::parse_error, "cannot parse token '" + t + "'");
}

} // namespace

ExprPtr parse_expr(const std::string& text) {
    Lexer lx{text};
    auto e = parse_node(lx);
    require(lx.done(), errc::parse_error, "trailing input after expression");
    return e;
}

} // namespace magweyl
