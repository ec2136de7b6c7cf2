#include "ecarve/predicates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ecarve {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon() / 2.0;  // 2^-53
const double kResultErr = (3.0 + 8.0 * kEps) * kEps;
const double kO2dErr = (3.0 + 16.0 * kEps) * kEps;
const double kO3dErr = (7.0 + 56.0 * kEps) * kEps;
const double kIccErr = (10.0 + 96.0 * kEps) * kEps;
const double kIspErr = (16.0 + 224.0 * kEps) * kEps;

// Error-free transforms. two_prod uses a correctly rounded fma, which keeps
// it exact independent of -ffp-contract.
inline void two_sum(double a, double b, double& s, double& err) {
    s = a + b;
    const double bv = s - a;
    const double av = s - bv;
    err = (a - av) + (b - bv);
}

inline void fast_two_sum(double a, double b, double& s, double& err) {
    // requires |a| >= |b|
    s = a + b;
    err = b - (s - a);
}

inline void two_diff(double a, double b, double& s, double& err) {
    s = a - b;
    const double bv = a - s;
    const double av = s + bv;
    err = (a - av) - (b - bv);
}

inline void two_prod(double a, double b, double& p, double& err) {
    p = a * b;
    err = std::fma(a, b, -p);
}

Expansion make2(double hi, double lo) {
    Expansion e;
    if (lo != 0.0) e.push_back(lo);
    if (hi != 0.0) e.push_back(hi);
    return e;
}

Expansion diff_exp(double a, double b) {
    double s, err;
    two_diff(a, b, s, err);
    return make2(s, err);
}

Expansion scale_exp(const Expansion& e, double b) {
    if (e.empty() || b == 0.0) return {};
    Expansion h;
    h.reserve(2 * e.size());
    double q, hh;
    two_prod(e[0], b, q, hh);
    if (hh != 0.0) h.push_back(hh);
    for (std::size_t i = 1; i < e.size(); ++i) {
        double p1, p0;
        two_prod(e[i], b, p1, p0);
        double sum, err;
        two_sum(q, p0, sum, err);
        if (err != 0.0) h.push_back(err);
        fast_two_sum(p1, sum, q, hh);
        if (hh != 0.0) h.push_back(hh);
    }
    if (q != 0.0 || h.empty()) h.push_back(q);
    while (h.size() > 1 && h.back() == 0.0) h.pop_back();
    if (h.size() == 1 && h[0] == 0.0) h.clear();
    return h;
}

}  // namespace

Expansion expansion_from(double x) {
    Expansion e;
    if (x != 0.0) e.push_back(x);
    return e;
}

Expansion expansion_sum(const Expansion& e, const Expansion& f) {
    if (e.empty()) return f;
    if (f.empty()) return e;
    // Merge by increasing magnitude, then run a two_sum chain
    // (fast-expansion-sum with zero elimination).
    std::vector<double> g;
    g.reserve(e.size() + f.size());
    std::size_t i = 0, j = 0;
    while (i < e.size() && j < f.size()) {
        if (std::abs(e[i]) <= std::abs(f[j]))
            g.push_back(e[i++]);
        else
            g.push_back(f[j++]);
    }
    while (i < e.size()) g.push_back(e[i++]);
    while (j < f.size()) g.push_back(f[j++]);

    Expansion h;
    h.reserve(g.size());
    double q = g[0];
    for (std::size_t k = 1; k < g.size(); ++k) {
        double qn, hh;
        two_sum(q, g[k], qn, hh);
        q = qn;
        if (hh != 0.0) h.push_back(hh);
    }
    if (q != 0.0 || h.empty()) h.push_back(q);
    if (h.size() == 1 && h[0] == 0.0) h.clear();
    return h;
}

Expansion expansion_sub(const Expansion& e, const Expansion& f) {
    Expansion nf = f;
    for (double& x : nf) x = -x;
    return expansion_sum(e, nf);
}

Expansion expansion_mul(const Expansion& e, const Expansion& f) {
    if (e.empty() || f.empty()) return {};
    Expansion acc;
    for (double fi : f) acc = expansion_sum(acc, scale_exp(e, fi));
    return acc;
}

int expansion_sign(const Expansion& e) {
    if (e.empty()) return 0;
    const double top = e.back();
    return top > 0.0 ? 1 : (top < 0.0 ? -1 : 0);
}

int FilteredValue::certain_sign() const {
    if (value > error) return 1;
    if (-value > error) return -1;
    if (error == 0.0) return 0;
    return -2;
}

// ---------------------------------------------------------------------------
// orient2d

namespace {

int orient2d_exact(const Point2& a, const Point2& b, const Point2& c) {
    const Expansion acx = diff_exp(a.x(), c.x());
    const Expansion acy = diff_exp(a.y(), c.y());
    const Expansion bcx = diff_exp(b.x(), c.x());
    const Expansion bcy = diff_exp(b.y(), c.y());
    const Expansion det =
        expansion_sub(expansion_mul(acx, bcy), expansion_mul(acy, bcx));
    return expansion_sign(det);
}

}  // namespace

int orient2d(const Point2& a, const Point2& b, const Point2& c) {
    const double detleft = (a.x() - c.x()) * (b.y() - c.y());
    const double detright = (a.y() - c.y()) * (b.x() - c.x());
    const double det = detleft - detright;
    double detsum;
    if (detleft > 0.0) {
        if (detright <= 0.0) return det > 0.0 ? 1 : (det < 0.0 ? -1 : 0);
        detsum = detleft + detright;
    } else if (detleft < 0.0) {
        if (detright >= 0.0) return det > 0.0 ? 1 : (det < 0.0 ? -1 : 0);
        detsum = -detleft - detright;
    } else {
        return det > 0.0 ? 1 : (det < 0.0 ? -1 : 0);
    }
    const double errbound = kO2dErr * detsum;
    if (det > errbound || -det > errbound) return det > 0.0 ? 1 : -1;
    return orient2d_exact(a, b, c);
}

// ---------------------------------------------------------------------------
// orient3d

FilteredValue orient3d_filtered(const Point3& a, const Point3& b, const Point3& c,
                                const Point3& d) {
    const double adx = a.x() - d.x(), ady = a.y() - d.y(), adz = a.z() - d.z();
    const double bdx = b.x() - d.x(), bdy = b.y() - d.y(), bdz = b.z() - d.z();
    const double cdx = c.x() - d.x(), cdy = c.y() - d.y(), cdz = c.z() - d.z();

    const double bdxcdy = bdx * cdy, cdxbdy = cdx * bdy;
    const double cdxady = cdx * ady, adxcdy = adx * cdy;
    const double adxbdy = adx * bdy, bdxady = bdx * ady;

    FilteredValue out;
    out.value = adz * (bdxcdy - cdxbdy) + bdz * (cdxady - adxcdy) +
                cdz * (adxbdy - bdxady);
    const double permanent = (std::abs(bdxcdy) + std::abs(cdxbdy)) * std::abs(adz) +
                             (std::abs(cdxady) + std::abs(adxcdy)) * std::abs(bdz) +
                             (std::abs(adxbdy) + std::abs(bdxady)) * std::abs(cdz);
    out.error = kO3dErr * permanent * (1.0 + 1e-14);
    return out;
}

Expansion orient3d_expansion(const Point3& a, const Point3& b, const Point3& c,
                             const Point3& d) {
    const Expansion adx = diff_exp(a.x(), d.x());
    const Expansion ady = diff_exp(a.y(), d.y());
    const Expansion adz = diff_exp(a.z(), d.z());
    const Expansion bdx = diff_exp(b.x(), d.x());
    const Expansion bdy = diff_exp(b.y(), d.y());
    const Expansion bdz = diff_exp(b.z(), d.z());
    const Expansion cdx = diff_exp(c.x(), d.x());
    const Expansion cdy = diff_exp(c.y(), d.y());
    const Expansion cdz = diff_exp(c.z(), d.z());

    const Expansion m_a = expansion_sub(expansion_mul(bdx, cdy), expansion_mul(cdx, bdy));
    const Expansion m_b = expansion_sub(expansion_mul(cdx, ady), expansion_mul(adx, cdy));
    const Expansion m_c = expansion_sub(expansion_mul(adx, bdy), expansion_mul(bdx, ady));

    Expansion det = expansion_mul(adz, m_a);
    det = expansion_sum(det, expansion_mul(bdz, m_b));
    det = expansion_sum(det, expansion_mul(cdz, m_c));
    return det;
}

int orient3d(const Point3& a, const Point3& b, const Point3& c, const Point3& d) {
    const FilteredValue f = orient3d_filtered(a, b, c, d);
    const int s = f.certain_sign();
    if (s != -2) return s;
    return expansion_sign(orient3d_expansion(a, b, c, d));
}

// ---------------------------------------------------------------------------
// incircle2d

namespace {

int incircle2d_exact(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
    const Expansion adx = diff_exp(a.x(), d.x());
    const Expansion ady = diff_exp(a.y(), d.y());
    const Expansion bdx = diff_exp(b.x(), d.x());
    const Expansion bdy = diff_exp(b.y(), d.y());
    const Expansion cdx = diff_exp(c.x(), d.x());
    const Expansion cdy = diff_exp(c.y(), d.y());

    const Expansion alift = expansion_sum(expansion_mul(adx, adx), expansion_mul(ady, ady));
    const Expansion blift = expansion_sum(expansion_mul(bdx, bdx), expansion_mul(bdy, bdy));
    const Expansion clift = expansion_sum(expansion_mul(cdx, cdx), expansion_mul(cdy, cdy));

    const Expansion bxcy = expansion_sub(expansion_mul(bdx, cdy), expansion_mul(cdx, bdy));
    const Expansion cxay = expansion_sub(expansion_mul(cdx, ady), expansion_mul(adx, cdy));
    const Expansion axby = expansion_sub(expansion_mul(adx, bdy), expansion_mul(bdx, ady));

    Expansion det = expansion_mul(alift, bxcy);
    det = expansion_sum(det, expansion_mul(blift, cxay));
    det = expansion_sum(det, expansion_mul(clift, axby));
    return expansion_sign(det);
}

}  // namespace

int incircle2d(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
    const double adx = a.x() - d.x(), ady = a.y() - d.y();
    const double bdx = b.x() - d.x(), bdy = b.y() - d.y();
    const double cdx = c.x() - d.x(), cdy = c.y() - d.y();

    const double bdxcdy = bdx * cdy, cdxbdy = cdx * bdy;
    const double cdxady = cdx * ady, adxcdy = adx * cdy;
    const double adxbdy = adx * bdy, bdxady = bdx * ady;
    const double alift = adx * adx + ady * ady;
    const double blift = bdx * bdx + bdy * bdy;
    const double clift = cdx * cdx + cdy * cdy;

    const double det = alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy) +
                       clift * (adxbdy - bdxady);
    const double permanent = (std::abs(bdxcdy) + std::abs(cdxbdy)) * alift +
                             (std::abs(cdxady) + std::abs(adxcdy)) * blift +
                             (std::abs(adxbdy) + std::abs(bdxady)) * clift;
    const double errbound = kIccErr * permanent;
    if (det > errbound || -det > errbound) return det > 0.0 ? 1 : -1;
    return incircle2d_exact(a, b, c, d);
}

// ---------------------------------------------------------------------------
// insphere

namespace {

int insphere_exact(const Point3& pa, const Point3& pb, const Point3& pc, const Point3& pd,
                   const Point3& pe) {
    const Point3* pts[4] = {&pa, &pb, &pc, &pd};
    Expansion ex[4], ey[4], ez[4], lift[4];
    for (int i = 0; i < 4; ++i) {
        ex[i] = diff_exp(pts[i]->x(), pe.x());
        ey[i] = diff_exp(pts[i]->y(), pe.y());
        ez[i] = diff_exp(pts[i]->z(), pe.z());
        Expansion l = expansion_mul(ex[i], ex[i]);
        l = expansion_sum(l, expansion_mul(ey[i], ey[i]));
        l = expansion_sum(l, expansion_mul(ez[i], ez[i]));
        lift[i] = std::move(l);
    }
    // det of rows [ex ey ez lift]; expand along the lift column.
    // minor(i) = det of the 3x3 xyz block with row i removed.
    auto minor3 = [&](int r0, int r1, int r2) {
        const Expansion m0 =
            expansion_sub(expansion_mul(ey[r1], ez[r2]), expansion_mul(ez[r1], ey[r2]));
        const Expansion m1 =
            expansion_sub(expansion_mul(ex[r1], ez[r2]), expansion_mul(ez[r1], ex[r2]));
        const Expansion m2 =
            expansion_sub(expansion_mul(ex[r1], ey[r2]), expansion_mul(ey[r1], ex[r2]));
        Expansion det = expansion_mul(ex[r0], m0);
        det = expansion_sub(det, expansion_mul(ey[r0], m1));
        det = expansion_sum(det, expansion_mul(ez[r0], m2));
        return det;
    };
    // Cofactor signs for column 4 (1-based): row1 -, row2 +, row3 -, row4 +.
    Expansion det = expansion_mul(lift[3], minor3(0, 1, 2));
    det = expansion_sub(det, expansion_mul(lift[2], minor3(0, 1, 3)));
    det = expansion_sum(det, expansion_mul(lift[1], minor3(0, 2, 3)));
    det = expansion_sub(det, expansion_mul(lift[0], minor3(1, 2, 3)));
    return expansion_sign(det);
}

}  // namespace

int insphere_det(const Point3& pa, const Point3& pb, const Point3& pc, const Point3& pd,
                 const Point3& pe) {
    const double aex = pa.x() - pe.x(), aey = pa.y() - pe.y(), aez = pa.z() - pe.z();
    const double bex = pb.x() - pe.x(), bey = pb.y() - pe.y(), bez = pb.z() - pe.z();
    const double cex = pc.x() - pe.x(), cey = pc.y() - pe.y(), cez = pc.z() - pe.z();
    const double dex = pd.x() - pe.x(), dey = pd.y() - pe.y(), dez = pd.z() - pe.z();

    const double aexbey = aex * bey, bexaey = bex * aey;
    const double ab = aexbey - bexaey;
    const double bexcey = bex * cey, cexbey = cex * bey;
    const double bc = bexcey - cexbey;
    const double cexdey = cex * dey, dexcey = dex * cey;
    const double cd = cexdey - dexcey;
    const double dexaey = dex * aey, aexdey = aex * dey;
    const double da = dexaey - aexdey;
    const double aexcey = aex * cey, cexaey = cex * aey;
    const double ac = aexcey - cexaey;
    const double bexdey = bex * dey, dexbey = dex * bey;
    const double bd = bexdey - dexbey;

    const double abc = aez * bc - bez * ac + cez * ab;
    const double bcd = bez * cd - cez * bd + dez * bc;
    const double cda = cez * da + dez * ac + aez * cd;
    const double dab = dez * ab + aez * bd + bez * da;

    const double alift = aex * aex + aey * aey + aez * aez;
    const double blift = bex * bex + bey * bey + bez * bez;
    const double clift = cex * cex + cey * cey + cez * cez;
    const double dlift = dex * dex + dey * dey + dez * dez;

    const double det = (dlift * abc - clift * dab) + (blift * cda - alift * bcd);

    const double aezplus = std::abs(aez), bezplus = std::abs(bez);
    const double cezplus = std::abs(cez), dezplus = std::abs(dez);
    const double aexbeyplus = std::abs(aexbey), bexaeyplus = std::abs(bexaey);
    const double bexceyplus = std::abs(bexcey), cexbeyplus = std::abs(cexbey);
    const double cexdeyplus = std::abs(cexdey), dexceyplus = std::abs(dexcey);
    const double dexaeyplus = std::abs(dexaey), aexdeyplus = std::abs(aexdey);
    const double aexceyplus = std::abs(aexcey), cexaeyplus = std::abs(cexaey);
    const double bexdeyplus = std::abs(bexdey), dexbeyplus = std::abs(dexbey);
    const double permanent =
        ((cexdeyplus + dexceyplus) * bezplus + (dexbeyplus + bexdeyplus) * cezplus +
         (bexceyplus + cexbeyplus) * dezplus) *
            alift +
        ((dexaeyplus + aexdeyplus) * cezplus + (aexceyplus + cexaeyplus) * dezplus +
         (cexdeyplus + dexceyplus) * aezplus) *
            blift +
        ((aexbeyplus + bexaeyplus) * dezplus + (bexdeyplus + dexbeyplus) * aezplus +
         (dexaeyplus + aexdeyplus) * bezplus) *
            clift +
        ((bexceyplus + cexbeyplus) * aezplus + (cexaeyplus + aexceyplus) * bezplus +
         (aexbeyplus + bexaeyplus) * cezplus) *
            dlift;
    const double errbound = kIspErr * permanent;
    if (det > errbound || -det > errbound) return det > 0.0 ? 1 : -1;
    return insphere_exact(pa, pb, pc, pd, pe);
}

int insphere(const Point3& a, const Point3& b, const Point3& c, const Point3& d,
             const Point3& e) {
    const int orient = orient3d(a, b, c, d);
    if (orient == 0) return 0;
    return orient * insphere_det(a, b, c, d, e);
}

}  // namespace ecarve
