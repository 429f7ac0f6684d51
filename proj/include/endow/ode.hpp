#pragma once

#include <cmath>
#include <memory>
#include <string>

#include <Eigen/Core>

namespace endow {

/// Coefficient functions of the n-equation for fixed (b1, b2, b3, R).
template <class T>
struct Coefficients {
    T b1, b2, b3, R;

    /// sgn(1 - R)
    T s() const { return R < 1 ? T(1) : T(-1); }
    T a(T q) const { return (1 - R) * q + R; }
    T m(T q) const { return (1 - R) * R / b1 * q * q - b3 * (1 - R) / b1 * q + 1; }
    T mp(T q) const { return (1 - R) * (2 * R * q - b3) / b1; }
    T S(T q) const { return (1 - R) * q * (1 - q) + (b2 - 1) * R * (1 - R) * q / a(q); }
    T ell(T q) const { return m(q) + S(q) / b1; }
    T phi(T q, T n) const { return b1 * (n - 1) + (1 - R) * (b3 - 2 * R) * q + (2 - b2) * R * (1 - R); }
    T E2(T q) const { return 4 * R * R * (1 - R) * (1 - R) * (b2 - 1) * (1 - q) * (1 - q); }
    T upsilon(T q, T n) const {
        using std::sqrt;
        const T p = phi(q, n);
        return p - s() * sqrt(p * p + E2(q));
    }
    T Phi(T chi) const {
        return b1 * R * chi * chi + R * (1 - R) * (b3 - b2 - b1 / R) * chi - b3 * (1 - R) * (1 - R);
    }
};

using CoefficientSet = Coefficients<double>;

/// F(q, n) as the bracketed sum with upsilon/(ell - n).
template <class T>
T F_formA(const Coefficients<T>& c, T q, T n) {
    const T R = c.R, d = c.ell(q) - n;
    return n * ((1 - R) / (R * (1 - q)) - (1 - R) * (1 - R) / (c.b1 * R) * q / d +
                (1 - R) * q / (2 * c.b1 * R * (1 - q) * c.a(q)) * c.upsilon(q, n) / d);
}

/// F(q, n) with the square root in the denominator.
template <class T>
T F_formB(const Coefficients<T>& c, T q, T n) {
    using std::sqrt;
    const T R = c.R, p = c.phi(q, n);
    const T den = 2 * (1 - R) * (1 - q) * c.a(q) - p - c.s() * sqrt(p * p + c.E2(q));
    return (1 - R) * n / (R * (1 - q)) - 2 * (1 - R) * (1 - R) * q * n / R / den;
}

/// F(q, n) in the form that vanishes on n = m(q), evaluated literally.
template <class T>
T F_formC(const Coefficients<T>& c, T q, T n) {
    const T R = c.R, a = c.a(q), mm = c.m(q);
    const T num = 2 * c.b1 * a * (n - mm) - q * (c.upsilon(q, n) - c.upsilon(q, mm));
    return -(1 - R) * n * num / (2 * R * (1 - q) * a * (c.S(q) - c.b1 * (n - mm)));
}

/// F at n = m(q) + delta, with the upsilon difference rewritten so that no
/// cancellation occurs for small delta.
template <class T>
T F_delta(const Coefficients<T>& c, T q, T delta) {
    using std::sqrt;
    const T R = c.R, a = c.a(q), n = c.m(q) + delta, u = 1 - q;
    const T pm = R * (1 - R) * (u * u - (c.b2 - 1));
    const T pn = pm + c.b1 * delta, e2 = c.E2(q);
    const T rs = sqrt(pn * pn + e2) + sqrt(pm * pm + e2);
    const T ratio = rs > 0 ? (pn + pm) / rs : T(0);
    const T br = 2 * a - q * (1 - c.s() * ratio);
    return -(1 - R) * n * delta * c.b1 * br / (2 * R * (1 - q) * a * (c.S(q) - c.b1 * delta));
}

/// F with upsilon dropped; equals F_delta when b2 = 1.
template <class T>
T F_simplified(const Coefficients<T>& c, T q, T delta) {
    const T R = c.R, n = c.m(q) + delta;
    return -(1 - R) * n * c.b1 * delta / (R * (1 - q) * (c.S(q) - c.b1 * delta));
}

/// Root of Phi giving n'(0): the smaller one for R < 1, the larger for R > 1.
double initial_slope(const CoefficientSet& cs, bool* double_root = nullptr);

/// n'(q) at an interior point of the band (1-R)(ell - n) > 0.
double n_prime(double q, double n, const CoefficientSet& cs);

enum class Termination { CrossedM, ReachedOne, HitZero };

std::string to_string(Termination t);

struct ToleranceOptions {
    double rtol = 1e-10;
    double atol = 1e-14;
    double q0 = 1e-6;
    double q_end = 1.0 - 1e-9;
    double max_dq = 1e-2;
    double crossing_tol = 1e-12;
    bool simplified = false;  ///< use the upsilon-free right-hand side (b2 = 1 only)
    long max_steps = 2'000'000;
};

/// Trajectory of n(q) from q = 0 to the first terminating event.
class OdeSolution {
public:
    CoefficientSet cs{};
    Eigen::ArrayXd qgrid;   ///< starts at 0
    Eigen::ArrayXd nvals;   ///< n on qgrid
    Eigen::ArrayXd dvals;   ///< n - m on qgrid
    Eigen::ArrayXd fvals;   ///< n' on qgrid
    double slope = 0.0;     ///< n'(0)
    double qstar = 0.0;
    double n_qstar = 1.0;
    Termination terminated_by = Termination::CrossedM;
    double q_stiff = -1.0;  ///< where the implicit stepper took over, or -1
    long steps = 0;
    std::string notes;

    /// Dense n(q) on [0, 1]; beyond the last node the last value is held.
    double n(double q) const;
    /// Dense n(q) - m(q).
    double delta(double q) const;
    /// F(q, n(q)) from the dense solution.
    double F(double q) const;
    double q_end() const { return qgrid[qgrid.size() - 1]; }

    void build_dense();

private:
    struct Dense;
    std::shared_ptr<const Dense> dense_;
};

OdeSolution integrate_n(const CoefficientSet& cs, const ToleranceOptions& opts = {});

/// Threshold in b3 separating a finite crossing from q* = 1.
double find_b3_crit(double b1, double b2, double R, double tol = 1e-6);

/// Writes the q,n,m,ell table.
void write_ode_csv(const OdeSolution& sol, const std::string& path);

}  // namespace endow
