#pragma once

#include "ecarve/geometry.hpp"

#include <vector>

namespace ecarve {

// Exact-sign geometric predicates: a fast floating-point path guarded by a
// forward error bound, with a fallback that evaluates the determinant
// exactly using multi-term floating-point expansions.
//
// Sign conventions (right-handed coordinates):
//   orient3d(a,b,c,d) = sign of det [a-d; b-d; c-d] (rows). Positive when d
//     sees the triangle (a,b,c) in counterclockwise order.
//   insphere_det(a,b,c,d,e) > 0 when e is strictly inside the circumsphere
//     of a positively oriented (a,b,c,d); the sign flips with orientation.
//   insphere(a,b,c,d,e) is orientation-adjusted: > 0 means strictly inside
//     the circumsphere regardless of the order of a,b,c,d; 0 when the five
//     points are cospherical or a,b,c,d are coplanar.
//   orient2d(a,b,c) = sign of det [a-c; b-c]; positive for counterclockwise.
//   incircle2d(a,b,c,d) > 0 when d is strictly inside the circle through a
//     counterclockwise (a,b,c); the sign flips with orientation.

int orient3d(const Point3& a, const Point3& b, const Point3& c, const Point3& d);
int insphere_det(const Point3& a, const Point3& b, const Point3& c, const Point3& d,
                 const Point3& e);
int insphere(const Point3& a, const Point3& b, const Point3& c, const Point3& d,
             const Point3& e);

int orient2d(const Point2& a, const Point2& b, const Point2& c);
int incircle2d(const Point2& a, const Point2& b, const Point2& c, const Point2& d);

// Approximate signed value with a rigorous absolute error bound:
// |true_value - value| <= error. The sign is certain iff |value| > error.
struct FilteredValue {
    double value = 0.0;
    double error = 0.0;
    int certain_sign() const;  // -2 when uncertain
};

FilteredValue orient3d_filtered(const Point3& a, const Point3& b, const Point3& c,
                                const Point3& d);

// Exact expansion arithmetic (components nonoverlapping, increasing in
// magnitude; empty expansion means zero). Enough surface for exact ratio
// comparisons in the ray walker.
using Expansion = std::vector<double>;

Expansion expansion_from(double x);
Expansion expansion_sum(const Expansion& e, const Expansion& f);
Expansion expansion_sub(const Expansion& e, const Expansion& f);
Expansion expansion_mul(const Expansion& e, const Expansion& f);
int expansion_sign(const Expansion& e);

// Exact value of the orient3d determinant as an expansion.
Expansion orient3d_expansion(const Point3& a, const Point3& b, const Point3& c,
                             const Point3& d);

}  // namespace ecarve
