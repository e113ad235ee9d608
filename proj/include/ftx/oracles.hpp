#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "ftx/errors.hpp"
#include "ftx/grid.hpp"

namespace ftx {

// Radial profile u(x) = |x|^(1+alpha) with alpha = 1/(1+theta): an exact
// solution of |Du|^theta (-Delta u) = f with constant f, since
// alpha*(1+theta) = 1 kills the radial power in the source.
struct OnePhaseOracle {
    double theta = 1.0;
    int dim = 1;
    double alpha = 0.5;
    double f_const = 0.0;
    std::string u_closed_form;
    std::string f_closed_form;

    double u(const std::array<double, 2>& x) const {
        const double r = std::hypot(x[0], x[1]);
        return std::pow(r, 1.0 + alpha);
    }
    double f(const std::array<double, 2>&) const { return f_const; }

    GridFunction sample_u(const DomainPtr& dom) const {
        return GridFunction::from_fn(dom, [this](std::array<double, 2> x) { return u(x); });
    }
    GridFunction sample_f(const DomainPtr& dom) const { return GridFunction(dom, f_const); }
};

inline OnePhaseOracle oracle_one_phase(double theta, int dim) {
    if (!(theta > 0.0)) throw ConfigError("oracle_one_phase: theta must be > 0");
    if (dim != 1 && dim != 2) throw ConfigError("oracle_one_phase: dim must be 1 or 2");
    OnePhaseOracle o;
    o.theta = theta;
    o.dim = dim;
    o.alpha = 1.0 / (1.0 + theta);
    o.f_const = -std::pow(1.0 + o.alpha, 1.0 + theta) * (o.alpha + dim - 1.0);
    o.u_closed_form = "|x|^(1+" + std::to_string(o.alpha) + ")";
    o.f_closed_form = std::to_string(o.f_const);
    return o;
}

// One-dimensional two-phase profile: u = x^(1+alpha1) on x >= 0 and
// u = -|x|^(1+alpha2) on x < 0, solving the theta1 equation in the positive
// phase and the theta2 equation in the negative phase with piecewise constant
// f. The gradient vanishes at the free boundary x = 0 and its Holder exponent
// there is alpha2 = min(alpha1, alpha2).
struct TwoPhaseOracle {
    double theta1 = 1.0, theta2 = 3.0;
    double alpha1 = 0.5, alpha2 = 0.25;
    double f_plus = 0.0, f_minus = 0.0;
    std::string u_closed_form;
    std::string f_closed_form;

    double u(double x) const {
        return x >= 0.0 ? std::pow(x, 1.0 + alpha1) : -std::pow(-x, 1.0 + alpha2);
    }
    double du(double x) const {
        if (x == 0.0) return 0.0;
        return x > 0.0 ? (1.0 + alpha1) * std::pow(x, alpha1)
                       : (1.0 + alpha2) * std::pow(-x, alpha2);
    }
    double d2u(double x) const {
        if (x == 0.0) return 0.0;
        return x > 0.0 ? (1.0 + alpha1) * alpha1 * std::pow(x, alpha1 - 1.0)
                       : -(1.0 + alpha2) * alpha2 * std::pow(-x, alpha2 - 1.0);
    }
    double f(double x) const {
        if (x > 0.0) return f_plus;
        if (x < 0.0) return f_minus;
        return 0.5 * (f_plus + f_minus);
    }
    // f with the jump smoothed over a width w (for existence-pipeline runs
    // that want continuous data).
    double f_smoothed(double x, double w) const {
        if (x <= -w) return f_minus;
        if (x >= w) return f_plus;
        const double s = 0.5 * (1.0 + std::sin(0.5 * 3.14159265358979323846 * x / w));
        return f_minus + (f_plus - f_minus) * s;
    }
    double f_sup() const { return std::max(std::abs(f_plus), std::abs(f_minus)); }

    GridFunction sample_u(const DomainPtr& dom) const {
        return GridFunction::from_fn(dom, [this](std::array<double, 2> x) { return u(x[0]); });
    }
    GridFunction sample_f(const DomainPtr& dom) const {
        return GridFunction::from_fn(dom, [this](std::array<double, 2> x) { return f(x[0]); });
    }
};

inline TwoPhaseOracle oracle_two_phase(double theta1, double theta2) {
    if (!(theta1 > 0.0 && theta1 < theta2))
        throw ConfigError("oracle_two_phase: requires 0 < theta1 < theta2");
    TwoPhaseOracle o;
    o.theta1 = theta1;
    o.theta2 = theta2;
    o.alpha1 = 1.0 / (1.0 + theta1);
    o.alpha2 = 1.0 / (1.0 + theta2);
    o.f_plus = -std::pow(1.0 + o.alpha1, 1.0 + theta1) * o.alpha1;
    o.f_minus = std::pow(1.0 + o.alpha2, 1.0 + theta2) * o.alpha2;
    o.u_closed_form = "x^(1+a1) for x>=0, -|x|^(1+a2) for x<0";
    o.f_closed_form = std::to_string(o.f_plus) + " on {x>0}, " + std::to_string(o.f_minus) +
                      " on {x<0}";
    return o;
}

} // namespace ftx
