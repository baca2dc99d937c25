#pragma once

#include "msc/boxgrid.hpp"
#include "msc/interval.hpp"

#include <cstdint>
#include <memory>
#include <string>

namespace msc {

// Immutable expression tree for a scalar field in two variables. Constants
// are intervals so that non-dyadic literals stay rigorously enclosed.
class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

class Expr {
public:
    enum class Kind { Const, VarX, VarY, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp };

    Kind kind;
    Interval value; // Const only
    long power = 0; // Pow only
    ExprPtr a, b;

    // Smart constructors fold constants (exact operations only) and drop
    // additive/multiplicative identities.
    static ExprPtr constant(Interval v);
    static ExprPtr constant(long v) { return constant(Interval(Dyadic(v))); }
    static ExprPtr var_x();
    static ExprPtr var_y();
    static ExprPtr add(ExprPtr l, ExprPtr r);
    static ExprPtr sub(ExprPtr l, ExprPtr r);
    static ExprPtr mul(ExprPtr l, ExprPtr r);
    static ExprPtr div(ExprPtr l, ExprPtr r);
    static ExprPtr pow(ExprPtr base, long n);
    static ExprPtr neg(ExprPtr e);
    static ExprPtr sin(ExprPtr e);
    static ExprPtr cos(ExprPtr e);
    static ExprPtr exp(ExprPtr e);
};

// Grammar: expr := term (('+'|'-') term)* ; term := unary (('*'|'/') unary)* ;
// unary := '-' unary | power ; power := atom ('^' integer)? ;
// atom := number | 'x' | 'y' | ('sin'|'cos'|'exp') '(' expr ')' | '(' expr ')'.
// Decimal literals with a power-of-two denominator are exact; others become
// one-ulp interval constants.
ExprPtr parse_field(const std::string& text);

std::string to_string(const ExprPtr& e);

// Partial derivative, var 0 = x, var 1 = y.
ExprPtr differentiate(const ExprPtr& e, int var);

// Range enclosure over a box, rounding outward to the 2^-p grid per node.
Interval eval_box(const ExprPtr& e, const Box2& b, std::int64_t p);
Interval eval_point(const ExprPtr& e, const Dyadic& x, const Dyadic& y,
                    std::int64_t p);

// Mean-value form: e(center) + ex(b)*(b.x - cx) + ey(b)*(b.y - cy),
// intersected with the direct enclosure. Quadratic overestimation in the
// box width, which keeps sign tests decisive near zero sets where the
// direct form stalls at first order.
Interval eval_box_centered(const ExprPtr& e, const ExprPtr& ex,
                           const ExprPtr& ey, const Box2& b, std::int64_t p);

// Certified sign at a point; escalates precision up to 2^-p_cap and throws
// SignUndecidable if the enclosure still straddles zero.
int sign_at(const ExprPtr& e, const Dyadic& x, const Dyadic& y,
            std::int64_t p_cap = 256);

struct GradientField {
    ExprPtr h, hx, hy;
};
GradientField gradient_field(const ExprPtr& h);

struct HessianExprs {
    ExprPtr hxx, hxy, hyy;
};
HessianExprs hessian_exprs(const GradientField& g);

IntervalVec2 eval_gradient(const GradientField& g, const Box2& b, std::int64_t p);
IntervalMat2 eval_hessian(const HessianExprs& hs, const Box2& b, std::int64_t p);

// Upper bounds on the angle variation rates of the gradient direction:
// c0 bounds |hx*hxy - hy*hxx| / (hx^2 + hy^2) over the region (variation
// per unit step in x), c1 the analogue with (hxy, hyy) (per unit step in y).
struct AngleConstants {
    Dyadic c0, c1;
};

// Constants controlling fence growth. The qh block bounds F = hy/hx over
// quasihorizontal grid boxes, the qv block bounds G = hx/hy over
// quasivertical ones.
struct FunnelConstants {
    Dyadic a_qh, b_qh, c_qh, m1_qh, m2_qh, m_qh, theta_qh;
    Dyadic a_qv, b_qv, c_qv, m1_qv, m2_qv, m_qv, theta_qv;
    Dyadic c0;       // 2 * max(B + A*C) over both region types
    Dyadic c1;       // 2 * max(M_qh, M_qv)
    Dyadic c2;       // 2 + c0 / D
    Dyadic c_max;    // max(C_qh, C_qv)
    Dyadic d_min;    // min(C_qh, C_qv), floored at 2^-20
    Dyadic theta0;   // max(theta_qh, theta_qv)
    Dyadic t_span;   // edge length of the bounding square of the region
};

// Both computations subdivide region boxes adaptively (up to max_refine
// extra levels) where a needed denominator enclosure straddles zero, and
// throw GradientVanishes if that fails at full depth.
AngleConstants compute_angle_constants(const GradientField& g,
                                       const HessianExprs& hs,
                                       const BoxUnion& region, std::int64_t p,
                                       int max_refine = 10);

FunnelConstants compute_funnel_constants(const GradientField& g,
                                         const BoxUnion& region, std::int64_t p,
                                         int max_refine = 10);

} // namespace msc
