#include "msc/field.hpp"

#include "msc/errors.hpp"

#include <cctype>
#include <unordered_map>

namespace msc {

namespace {

bool is_const(const ExprPtr& e) { return e->kind == Expr::Kind::Const; }

bool is_const_value(const ExprPtr& e, long v) {
    return is_const(e) && e->value.is_point() && e->value.lo == Dyadic(v);
}

std::shared_ptr<Expr> make(Expr::Kind k, ExprPtr a = nullptr, ExprPtr b = nullptr) {
    auto e = std::make_shared<Expr>();
    e->kind = k;
    e->a = std::move(a);
    e->b = std::move(b);
    return e;
}

} // namespace

ExprPtr Expr::constant(Interval v) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Const;
    e->value = std::move(v);
    return e;
}

ExprPtr Expr::var_x() { return make(Kind::VarX); }
ExprPtr Expr::var_y() { return make(Kind::VarY); }

ExprPtr Expr::add(ExprPtr l, ExprPtr r) {
    if (is_const(l) && is_const(r)) return constant(l->value + r->value);
    if (is_const_value(l, 0)) return r;
    if (is_const_value(r, 0)) return l;
    return make(Kind::Add, std::move(l), std::move(r));
}

ExprPtr Expr::sub(ExprPtr l, ExprPtr r) {
    if (is_const(l) && is_const(r)) return constant(l->value - r->value);
    if (is_const_value(r, 0)) return l;
    if (is_const_value(l, 0)) return neg(std::move(r));
    return make(Kind::Sub, std::move(l), std::move(r));
}

ExprPtr Expr::mul(ExprPtr l, ExprPtr r) {
    if (is_const(l) && is_const(r)) return constant(l->value * r->value);
    if (is_const_value(l, 0) || is_const_value(r, 0)) return constant(0L);
    if (is_const_value(l, 1)) return r;
    if (is_const_value(r, 1)) return l;
    return make(Kind::Mul, std::move(l), std::move(r));
}

ExprPtr Expr::div(ExprPtr l, ExprPtr r) {
    if (is_const_value(r, 1)) return l;
    return make(Kind::Div, std::move(l), std::move(r));
}

ExprPtr Expr::pow(ExprPtr base, long n) {
    if (n < 0) throw Error("negative exponent; use division");
    if (n == 0) return constant(1L);
    if (n == 1) return base;
    if (is_const(base)) return constant(iv_pow(base->value, n));
    auto e = make(Kind::Pow, std::move(base));
    e->power = n;
    return e;
}

ExprPtr Expr::neg(ExprPtr e) {
    if (is_const(e)) return constant(-e->value);
    if (e->kind == Kind::Neg) return e->a;
    return make(Kind::Neg, std::move(e));
}

ExprPtr Expr::sin(ExprPtr e) { return make(Kind::Sin, std::move(e)); }
ExprPtr Expr::cos(ExprPtr e) { return make(Kind::Cos, std::move(e)); }
ExprPtr Expr::exp(ExprPtr e) { return make(Kind::Exp, std::move(e)); }

namespace {

struct Parser {
    const std::string& s;
    size_t pos = 0;

    explicit Parser(const std::string& text) : s(text) {}

    void skip() {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool eat(char c) {
        skip();
        if (pos < s.size() && s[pos] == c) { ++pos; return true; }
        return false;
    }
    char peek() {
        skip();
        return pos < s.size() ? s[pos] : '\0';
    }

    ExprPtr expr() {
        ExprPtr e = term();
        for (;;) {
            if (eat('+')) e = Expr::add(e, term());
            else if (eat('-')) e = Expr::sub(e, term());
            else return e;
        }
    }

    ExprPtr term() {
        ExprPtr e = unary();
        for (;;) {
            if (eat('*')) e = Expr::mul(e, unary());
            else if (eat('/')) e = Expr::div(e, unary());
            else return e;
        }
    }

    ExprPtr unary() {
        if (eat('-')) return Expr::neg(unary());
        return power();
    }

    ExprPtr power() {
        ExprPtr base = atom();
        if (eat('^')) {
            skip();
            bool neg = eat('-');
            long n = 0;
            bool any = false;
            while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
                n = n * 10 + (s[pos++] - '0');
                any = true;
            }
            if (!any || neg) throw Error("expected nonnegative integer exponent");
            return Expr::pow(base, n);
        }
        return base;
    }

    ExprPtr atom() {
        char c = peek();
        if (c == '(') {
            eat('(');
            ExprPtr e = expr();
            if (!eat(')')) throw Error("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c))) return name();
        throw Error("unexpected character in field expression");
    }

    ExprPtr name() {
        size_t start = pos;
        while (pos < s.size() && std::isalpha(static_cast<unsigned char>(s[pos]))) ++pos;
        std::string id = s.substr(start, pos - start);
        if (id == "x") return Expr::var_x();
        if (id == "y") return Expr::var_y();
        if (id == "sin" || id == "cos" || id == "exp") {
            if (!eat('(')) throw Error("expected '(' after " + id);
            ExprPtr arg = expr();
            if (!eat(')')) throw Error("expected ')'");
            if (id == "sin") return Expr::sin(arg);
            if (id == "cos") return Expr::cos(arg);
            return Expr::exp(arg);
        }
        throw Error("unknown identifier: " + id);
    }

    ExprPtr number() {
        mpz_class digits = 0;
        long frac = 0;
        bool dot = false, any = false;
        while (pos < s.size()) {
            char c = s[pos];
            if (std::isdigit(static_cast<unsigned char>(c))) {
                digits = digits * 10 + (c - '0');
                if (dot) ++frac;
                any = true;
                ++pos;
            } else if (c == '.' && !dot) {
                dot = true;
                ++pos;
            } else break;
        }
        if (!any) throw Error("malformed number");
        if (frac == 0) return Expr::constant(Interval(Dyadic(digits, 0)));
        // value = digits / 10^frac = (digits / 5^frac) * 2^-frac
        mpz_class five;
        mpz_ui_pow_ui(five.get_mpz_t(), 5, static_cast<unsigned long>(frac));
        if (digits % five == 0)
            return Expr::constant(Interval(Dyadic(digits / five, -frac)));
        Dyadic num(digits, -frac), den(five, 0);
        return Expr::constant(
            Interval(div_down(num, den, 96), div_up(num, den, 96)));
    }
};

} // namespace

ExprPtr parse_field(const std::string& text) {
    Parser p(text);
    ExprPtr e = p.expr();
    p.skip();
    if (p.pos != text.size()) throw Error("trailing characters in field expression");
    return e;
}

std::string to_string(const ExprPtr& e) {
    using K = Expr::Kind;
    switch (e->kind) {
    case K::Const: {
        if (e->value.is_point()) return e->value.lo.to_string();
        return "[" + e->value.lo.to_string() + "," + e->value.hi.to_string() + "]";
    }
    case K::VarX: return "x";
    case K::VarY: return "y";
    case K::Add: return "(" + to_string(e->a) + "+" + to_string(e->b) + ")";
    case K::Sub: return "(" + to_string(e->a) + "-" + to_string(e->b) + ")";
    case K::Mul: return "(" + to_string(e->a) + "*" + to_string(e->b) + ")";
    case K::Div: return "(" + to_string(e->a) + "/" + to_string(e->b) + ")";
    case K::Pow: return to_string(e->a) + "^" + std::to_string(e->power);
    case K::Neg: return "(-" + to_string(e->a) + ")";
    case K::Sin: return "sin(" + to_string(e->a) + ")";
    case K::Cos: return "cos(" + to_string(e->a) + ")";
    case K::Exp: return "exp(" + to_string(e->a) + ")";
    }
    throw Error("bad expression node");
}

ExprPtr differentiate(const ExprPtr& e, int var) {
    using K = Expr::Kind;
    switch (e->kind) {
    case K::Const: return Expr::constant(0L);
    case K::VarX: return Expr::constant(var == 0 ? 1L : 0L);
    case K::VarY: return Expr::constant(var == 1 ? 1L : 0L);
    case K::Add: return Expr::add(differentiate(e->a, var), differentiate(e->b, var));
    case K::Sub: return Expr::sub(differentiate(e->a, var), differentiate(e->b, var));
    case K::Mul:
        return Expr::add(Expr::mul(differentiate(e->a, var), e->b),
                         Expr::mul(e->a, differentiate(e->b, var)));
    case K::Div:
        return Expr::div(Expr::sub(Expr::mul(differentiate(e->a, var), e->b),
                                   Expr::mul(e->a, differentiate(e->b, var))),
                         Expr::pow(e->b, 2));
    case K::Pow:
        return Expr::mul(Expr::mul(Expr::constant(e->power),
                                   Expr::pow(e->a, e->power - 1)),
                         differentiate(e->a, var));
    case K::Neg: return Expr::neg(differentiate(e->a, var));
    case K::Sin: return Expr::mul(Expr::cos(e->a), differentiate(e->a, var));
    case K::Cos: return Expr::neg(Expr::mul(Expr::sin(e->a), differentiate(e->a, var)));
    case K::Exp: return Expr::mul(Expr::exp(e->a), differentiate(e->a, var));
    }
    throw Error("bad expression node");
}

namespace {

struct EvalCtx {
    Interval x, y;
    std::int64_t p;
    std::unordered_map<const Expr*, Interval> memo;
};

Interval eval_rec(const ExprPtr& e, EvalCtx& ctx) {
    auto it = ctx.memo.find(e.get());
    if (it != ctx.memo.end()) return it->second;
    using K = Expr::Kind;
    Interval r;
    switch (e->kind) {
    case K::Const: r = e->value; break;
    case K::VarX: r = ctx.x; break;
    case K::VarY: r = ctx.y; break;
    case K::Add: r = (eval_rec(e->a, ctx) + eval_rec(e->b, ctx)).round_out(ctx.p); break;
    case K::Sub: r = (eval_rec(e->a, ctx) - eval_rec(e->b, ctx)).round_out(ctx.p); break;
    case K::Mul: r = (eval_rec(e->a, ctx) * eval_rec(e->b, ctx)).round_out(ctx.p); break;
    case K::Div: r = iv_div(eval_rec(e->a, ctx), eval_rec(e->b, ctx), ctx.p); break;
    case K::Pow: r = iv_pow(eval_rec(e->a, ctx), e->power).round_out(ctx.p); break;
    case K::Neg: r = -eval_rec(e->a, ctx); break;
    case K::Sin: r = iv_sin(eval_rec(e->a, ctx), ctx.p); break;
    case K::Cos: r = iv_cos(eval_rec(e->a, ctx), ctx.p); break;
    case K::Exp: r = iv_exp(eval_rec(e->a, ctx), ctx.p); break;
    }
    ctx.memo.emplace(e.get(), r);
    return r;
}

} // namespace

Interval eval_box(const ExprPtr& e, const Box2& b, std::int64_t p) {
    EvalCtx ctx{b.x, b.y, p, {}};
    return eval_rec(e, ctx);
}

Interval eval_point(const ExprPtr& e, const Dyadic& x, const Dyadic& y,
                    std::int64_t p) {
    EvalCtx ctx{Interval(x), Interval(y), p, {}};
    return eval_rec(e, ctx);
}

Interval eval_box_centered(const ExprPtr& e, const ExprPtr& ex,
                           const ExprPtr& ey, const Box2& b, std::int64_t p) {
    Interval direct = eval_box(e, b, p);
    Dyadic cx = b.x.mid(), cy = b.y.mid();
    Interval mv = eval_point(e, cx, cy, p) +
                  iv_mul(eval_box(ex, b, p), Interval(b.x.lo - cx, b.x.hi - cx)) +
                  iv_mul(eval_box(ey, b, p), Interval(b.y.lo - cy, b.y.hi - cy));
    // both enclose the true range, so the intersection does too
    return Interval(max(direct.lo, mv.lo), min(direct.hi, mv.hi));
}

int sign_at(const ExprPtr& e, const Dyadic& x, const Dyadic& y,
            std::int64_t p_cap) {
    for (std::int64_t p = 64;; p *= 2) {
        if (p > p_cap) p = p_cap;
        Interval r = eval_point(e, x, y, p);
        if (!r.contains_zero()) return r.lo.sign();
        if (p == p_cap)
            throw SignUndecidable("sign undecidable at precision cap 2^-" +
                                  std::to_string(p_cap));
    }
}

GradientField gradient_field(const ExprPtr& h) {
    return GradientField{h, differentiate(h, 0), differentiate(h, 1)};
}

HessianExprs hessian_exprs(const GradientField& g) {
    return HessianExprs{differentiate(g.hx, 0), differentiate(g.hx, 1),
                        differentiate(g.hy, 1)};
}

IntervalVec2 eval_gradient(const GradientField& g, const Box2& b, std::int64_t p) {
    return IntervalVec2{eval_box(g.hx, b, p), eval_box(g.hy, b, p)};
}

IntervalMat2 eval_hessian(const HessianExprs& hs, const Box2& b, std::int64_t p) {
    Interval mixed = eval_box(hs.hxy, b, p);
    return IntervalMat2{eval_box(hs.hxx, b, p), mixed, mixed,
                        eval_box(hs.hyy, b, p)};
}

namespace {

// max over the region of |num|/den, refining where den straddles zero
Dyadic ratio_bound(const ExprPtr& num, const ExprPtr& den, const Box2& b,
                   std::int64_t p, int depth) {
    Interval d = eval_box(den, b, p);
    if (d.lo.sign() > 0) {
        Interval n = eval_box(num, b, p);
        return div_up(n.mag(), d.lo, p);
    }
    if (depth == 0)
        throw GradientVanishes("denominator enclosure straddles zero in constants sweep");
    Dyadic m;
    for (const Box2& c : subdivide(b)) m = max(m, ratio_bound(num, den, c, p, depth - 1));
    return m;
}

} // namespace

AngleConstants compute_angle_constants(const GradientField& g,
                                       const HessianExprs& hs,
                                       const BoxUnion& region, std::int64_t p,
                                       int max_refine) {
    ExprPtr den = Expr::add(Expr::pow(g.hx, 2), Expr::pow(g.hy, 2));
    ExprPtr num_x = Expr::sub(Expr::mul(g.hx, hs.hxy), Expr::mul(g.hy, hs.hxx));
    ExprPtr num_y = Expr::sub(Expr::mul(g.hx, hs.hyy), Expr::mul(g.hy, hs.hxy));
    AngleConstants out;
    for (const Box2& b : region.boxes) {
        out.c0 = max(out.c0, ratio_bound(num_x, den, b, p, max_refine));
        out.c1 = max(out.c1, ratio_bound(num_y, den, b, p, max_refine));
    }
    return out;
}

namespace {

struct LeafAcc {
    std::vector<Box2> qh, qv;
};

// Sort region boxes into quasihorizontal / quasivertical leaves, refining
// until the relevant gradient component excludes zero on every kept leaf.
void collect_leaves(const GradientField& g, const Box2& b, std::int64_t p,
                    int depth, LeafAcc& acc) {
    Interval hx = eval_box(g.hx, b, p), hy = eval_box(g.hy, b, p);
    Dyadic two(2);
    bool maybe_qh = !(two * hx.mag() < hy.mig());
    bool maybe_qv = !(two * hy.mag() < hx.mig());
    bool need_split = (maybe_qh && hx.contains_zero()) || (maybe_qv && hy.contains_zero());
    if (!need_split) {
        if (maybe_qh) acc.qh.push_back(b);
        if (maybe_qv) acc.qv.push_back(b);
        return;
    }
    if (depth == 0)
        throw GradientVanishes("gradient component enclosure straddles zero in funnel constants sweep");
    for (const Box2& c : subdivide(b)) collect_leaves(g, c, p, depth - 1, acc);
}

} // namespace

FunnelConstants compute_funnel_constants(const GradientField& g,
                                         const BoxUnion& region, std::int64_t p,
                                         int max_refine) {
    LeafAcc leaves;
    for (const Box2& b : region.boxes) collect_leaves(g, b, p, max_refine, leaves);

    ExprPtr f_expr = Expr::div(g.hy, g.hx);
    ExprPtr g_expr = Expr::div(g.hx, g.hy);
    ExprPtr fx = differentiate(f_expr, 0), fy = differentiate(f_expr, 1);
    ExprPtr gy = differentiate(g_expr, 1), gx = differentiate(g_expr, 0);

    FunnelConstants fc;
    for (const Box2& b : leaves.qh) {
        fc.a_qh = max(fc.a_qh, eval_box(f_expr, b, p).mag());
        fc.b_qh = max(fc.b_qh, eval_box(fx, b, p).mag());
        fc.c_qh = max(fc.c_qh, eval_box(fy, b, p).mag());
    }
    for (const Box2& b : leaves.qv) {
        fc.a_qv = max(fc.a_qv, eval_box(g_expr, b, p).mag());
        fc.b_qv = max(fc.b_qv, eval_box(gy, b, p).mag());
        fc.c_qv = max(fc.c_qv, eval_box(gx, b, p).mag());
    }

    const Dyadic floor_c = Dyadic::power_of_two(-20);
    Dyadic quarter_pi = pi_interval().lo.round_down(120).ldexp2(-2);
    fc.m1_qh = max(fc.a_qh, floor_c);
    fc.m1_qv = max(fc.a_qv, floor_c);
    // tan t <= 2t on [0, pi/4], so theta = 1/(4*M1) gives tan(theta) <= 1/(2*M1)
    fc.theta_qh = min(quarter_pi, div_down(Dyadic(1), fc.m1_qh.ldexp2(2), 120));
    fc.theta_qv = min(quarter_pi, div_down(Dyadic(1), fc.m1_qv.ldexp2(2), 120));

    Dyadic cos_qh = iv_cos(Interval(fc.theta_qh), 80).lo;
    Dyadic cos_qv = iv_cos(Interval(fc.theta_qv), 80).lo;
    for (const Box2& b : leaves.qh) {
        Interval hx = eval_box(g.hx, b, p), hy = eval_box(g.hy, b, p);
        Interval s = iv_pow(hx, 2) + iv_pow(hy, 2);
        Dyadic den = hx.mig() * hx.mig() * cos_qh;
        fc.m2_qh = max(fc.m2_qh, div_up(s.mag(), den, p));
    }
    for (const Box2& b : leaves.qv) {
        Interval hx = eval_box(g.hx, b, p), hy = eval_box(g.hy, b, p);
        Interval s = iv_pow(hx, 2) + iv_pow(hy, 2);
        Dyadic den = hy.mig() * hy.mig() * cos_qv;
        fc.m2_qv = max(fc.m2_qv, div_up(s.mag(), den, p));
    }
    // With tan(theta) <= 1/(2*M1) the rotated denominator hx^2 cos(theta)
    // - hx hy sin(theta) stays above hx^2 cos(theta)/2, which yields
    // |F_theta - F| <= 2*M2*sin(theta). M = 2*M2 is therefore the sound
    // constant for that inequality.
    fc.m_qh = fc.m2_qh.ldexp2(1);
    fc.m_qv = fc.m2_qv.ldexp2(1);

    fc.c0 = max(fc.b_qh + fc.a_qh * fc.c_qh, fc.b_qv + fc.a_qv * fc.c_qv).ldexp2(1);
    fc.c1 = max(fc.m_qh, fc.m_qv).ldexp2(1);
    Dyadic cqh = max(fc.c_qh, floor_c), cqv = max(fc.c_qv, floor_c);
    fc.c_max = max(cqh, cqv);
    fc.d_min = min(cqh, cqv);
    fc.c2 = Dyadic(2) + div_up(fc.c0, fc.d_min, 120);
    fc.theta0 = max(fc.theta_qh, fc.theta_qv);
    Box2 bb = region.bounding_box();
    fc.t_span = max(bb.width_x(), bb.width_y());
    return fc;
}

} // namespace msc
