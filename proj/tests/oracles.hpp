#pragma once

// Independent reference computations used as test oracles. Written directly from the
// model equations, without calling into the library.

#include <cmath>

namespace oracle {

inline long double mf_lateral_force(long double c, long double e, long double d, long double bcd,
                                    long double alpha, long double sv = 0.0L) {
    const long double b = bcd / (c * d);
    const long double x = b * alpha;
    const long double inner = x - e * (x - std::atan(x));
    return d * std::sin(c * std::atan(inner)) + sv;
}

// sin(2 atan r) = 2 r / (1 + r^2)
inline double stiffness_closed_form(double a3, double a4, double fz) {
    const double r = fz / a4;
    return a3 * 2.0 * r / (1.0 + r * r);
}

struct TwoDofParams {
    double m, iz, lf, lr, cf, cr;
};

struct TwoDofState {
    double v = 0.0, r = 0.0;
};

// Linear 2-DOF bicycle model with small-angle front slip.
inline void two_dof_rates(const TwoDofParams& p, double u, double delta, double mz, const TwoDofState& s,
                          double& vdot, double& rdot, double& ay) {
    const double af = delta - (s.v + p.lf * s.r) / u;
    const double ar = -(s.v - p.lr * s.r) / u;
    const double fyf = p.cf * af;
    const double fyr = p.cr * ar;
    ay = (fyf * std::cos(delta) + fyr) / p.m;
    vdot = ay - u * s.r;
    rdot = (p.lf * fyf * std::cos(delta) - p.lr * fyr + mz) / p.iz;
}

// Solves the 2x2 system by Cramer's rule.
inline void solve2(double a11, double a12, double a21, double a22, double b1, double b2, double& x1, double& x2) {
    const double det = a11 * a22 - a12 * a21;
    x1 = (b1 * a22 - a12 * b2) / det;
    x2 = (a11 * b2 - a21 * b1) / det;
}

}  // namespace oracle
