#include "endow/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/interpolators/cubic_hermite.hpp>
#include <boost/numeric/odeint.hpp>

#include "endow/errors.hpp"
#include "endow/io.hpp"
#include "endow/params.hpp"
#include "endow/radau.hpp"

namespace endow {

namespace odeint = boost::numeric::odeint;

std::string to_string(Termination t) {
    switch (t) {
        case Termination::CrossedM: return "CrossedM";
        case Termination::ReachedOne: return "ReachedOne";
        case Termination::HitZero: return "HitZero";
    }
    return "Unknown";
}

double initial_slope(const CoefficientSet& cs, bool* double_root) {
    const double R = cs.R;
    const double A = cs.b1 * R;
    const double B = R * (1 - R) * (cs.b3 - cs.b2 - cs.b1 / R);
    const double C = -cs.b3 * (1 - R) * (1 - R);
    double disc = B * B - 4 * A * C;
    if (double_root) *double_root = false;
    if (disc <= 0) {
        if (disc < -1e-14 * B * B) throw DomainViolation("initial slope: quadratic has no real root");
        if (double_root) *double_root = true;
        return -B / (2 * A);
    }
    const double qq = -0.5 * (B + std::copysign(std::sqrt(disc), B == 0 ? 1.0 : B));
    double r1 = qq / A;
    double r2 = qq != 0 ? C / qq : 0.0;
    if (r1 > r2) std::swap(r1, r2);
    return R < 1 ? r1 : r2;
}

double n_prime(double q, double n, const CoefficientSet& cs) {
    if (!(q > 0 && q < 1)) throw DomainViolation("n_prime: q must lie in (0, 1)");
    if (!((1 - cs.R) * (cs.ell(q) - n) > 0)) throw DomainViolation("n_prime: n outside the band");
    return F_delta(cs, q, n - cs.m(q));
}

struct OdeSolution::Dense {
    boost::math::interpolators::cubic_hermite<std::vector<double>> d;
};

void OdeSolution::build_dense() {
    if (qgrid.size() < 2) {
        dense_.reset();
        return;
    }
    std::vector<double> x(qgrid.data(), qgrid.data() + qgrid.size());
    std::vector<double> y(dvals.data(), dvals.data() + dvals.size());
    std::vector<double> dy(x.size());
    for (size_t i = 0; i < x.size(); ++i) dy[i] = fvals[i] - cs.mp(x[i]);
    dense_ = std::make_shared<const Dense>(Dense{{std::move(x), std::move(y), std::move(dy)}});
}

double OdeSolution::delta(double q) const {
    if (!dense_) return 1.0 - cs.m(q);
    const double qe = q_end();
    if (q >= qe) return nvals[nvals.size() - 1] - cs.m(q);
    return dense_->d(std::max(q, 0.0));
}

double OdeSolution::n(double q) const { return cs.m(q) + delta(q); }

double OdeSolution::F(double q) const {
    if (!dense_ || q <= 0) return slope;
    const Eigen::Index last = qgrid.size() - 1;
    if (q >= qgrid[last]) return fvals[last];
    if (q < qgrid[1]) return slope + (fvals[1] - slope) * q / qgrid[1];
    return F_delta(cs, q, delta(q));
}

namespace {

inline double scalar(const double& x) { return x; }

struct Recorder {
    std::vector<double> q, d, f;
};

enum class Outcome { Continue, Crossed, Zero, End, Stiff };

}  // namespace

OdeSolution integrate_n(const CoefficientSet& cs, const ToleranceOptions& opts) {
    OdeSolution sol;
    sol.cs = cs;
    if (!(cs.b1 > 0)) throw DegenerateMerton("integrate_n requires b1 > 0");
    if (cs.b3 <= 0) {
        sol.qgrid = Eigen::ArrayXd::Zero(1);
        sol.nvals = Eigen::ArrayXd::Ones(1);
        sol.dvals = Eigen::ArrayXd::Zero(1);
        sol.fvals = Eigen::ArrayXd::Zero(1);
        sol.qstar = 0.0;
        sol.n_qstar = 1.0;
        sol.terminated_by = Termination::CrossedM;
        return sol;
    }
    bool dbl = false;
    sol.slope = initial_slope(cs, &dbl);
    if (dbl) sol.notes = "double root of the slope quadratic";

    const double sg = cs.s();
    auto F = [&](double q, double d) {
        return opts.simplified ? F_simplified(cs, q, d) : F_delta(cs, q, d);
    };
    auto rhs = [&](double q, double d) {
        const double v = F(q, d) - cs.mp(q);
        return std::isfinite(v) ? v : 1e100;
    };
    auto dfdd = [&](double q, double d) {
        const double e = std::max(1e-7 * std::abs(d), 1e-30);
        return (rhs(q, d + e) - rhs(q, d - e)) / (2 * e);
    };

    Recorder rec;
    const double q0 = opts.q0;
    const double d0 = (1 + q0 * sol.slope) - cs.m(q0);
    rec.q = {0.0, q0};
    rec.d = {0.0, d0};
    rec.f = {sol.slope, F(q0, d0)};

    double q_hit = 0.0, d_hit = 0.0;
    long steps = 0;

    // Advances a dense-output stepper, checking events after every step.
    auto drive = [&](auto& ds, auto sys, bool detect_stiff) -> Outcome {
        int stiff_count = 0;
        using State = std::decay_t<decltype(ds.current_state())>;
        State probe = ds.current_state();
        while (true) {
            const double t = ds.current_time();
            if (t >= opts.q_end) return Outcome::End;
            if (++steps > opts.max_steps) throw StiffnessFailure("n-ODE exceeded the step budget at q=" + fmt17(t));
            // Geometric steps in 1 - q near the end keep the dense delta accurate.
            const double cap = std::min(opts.q_end - t, 0.5 * (1 - t));
            if (ds.current_time_step() > cap) ds.initialize(ds.current_state(), t, cap);
            if (ds.current_time_step() < 1e-15 * std::max(1.0 - t, 1e-9))
                throw StiffnessFailure("n-ODE step size underflow at q=" + fmt17(t));
            std::pair<double, double> iv;
            try {
                iv = ds.do_step(sys);
            } catch (const std::exception& e) {
                throw StiffnessFailure("n-ODE step failed at q=" + fmt17(t) + ": " + e.what());
            }
            const double t1 = iv.second;
            const double d_prev = rec.d.back();
            const double d1 = scalar(ds.current_state());
            auto dense_at = [&](double tq) {
                ds.calc_state(tq, probe);
                return scalar(probe);
            };
            if (sg * d_prev > 0 && sg * d1 <= 0 && sg * cs.mp(t1) > 0) {
                double lo = iv.first, hi = t1;
                while (hi - lo > opts.crossing_tol) {
                    const double mid = 0.5 * (lo + hi);
                    (sg * dense_at(mid) > 0 ? lo : hi) = mid;
                }
                const double dl = dense_at(lo), dh = dense_at(hi);
                q_hit = (dl != dh) ? lo + (hi - lo) * dl / (dl - dh) : 0.5 * (lo + hi);
                q_hit = std::clamp(q_hit, lo, hi);
                d_hit = dense_at(q_hit);
                return Outcome::Crossed;
            }
            if (cs.m(t1) + d1 <= 1e-12) {
                double lo = iv.first, hi = t1;
                while (hi - lo > opts.crossing_tol) {
                    const double mid = 0.5 * (lo + hi);
                    (cs.m(mid) + dense_at(mid) > 1e-12 ? lo : hi) = mid;
                }
                q_hit = hi;
                d_hit = dense_at(hi);
                return Outcome::Zero;
            }
            rec.q.push_back(t1);
            rec.d.push_back(d1);
            rec.f.push_back(F(t1, d1));
            if (detect_stiff) {
                const double h = t1 - iv.first;
                stiff_count = (h * std::abs(dfdd(t1, d1)) > 2.0) ? stiff_count + 1 : 0;
                if (stiff_count >= 4) return Outcome::Stiff;
            }
        }
    };

    using dp_t = odeint::runge_kutta_dopri5<double, double, double, double, odeint::vector_space_algebra>;
    auto dp = odeint::make_dense_output(opts.atol, opts.rtol, opts.max_dq, dp_t());
    dp.initialize(d0, q0, 1e-3 * q0);
    auto dp_sys = [&](const double& x, double& dxdt, double t) { dxdt = rhs(t, x); };
    Outcome out = drive(dp, dp_sys, true);

    if (out == Outcome::Stiff) {
        sol.q_stiff = rec.q.back();
        RadauScalar rb(opts.atol, opts.rtol, opts.max_dq);
        const double qs = rec.q.back();
        rb.initialize(rec.d.back(), qs, 1e-3 * (1 - qs));
        out = drive(rb, std::make_pair(rhs, dfdd), false);
    }

    sol.steps = steps;
    switch (out) {
        case Outcome::Crossed:
            sol.terminated_by = Termination::CrossedM;
            if (q_hit > rec.q.back()) {
                rec.q.push_back(q_hit);
                rec.d.push_back(d_hit);
                rec.f.push_back(F(q_hit, d_hit));
            }
            sol.qstar = rec.q.back();
            sol.n_qstar = cs.m(sol.qstar) + rec.d.back();
            break;
        case Outcome::Zero:
            sol.terminated_by = Termination::HitZero;
            if (q_hit > rec.q.back()) {
                rec.q.push_back(q_hit);
                rec.d.push_back(d_hit);
                rec.f.push_back(rec.f.back());
            }
            sol.qstar = 1.0;
            sol.n_qstar = std::max(cs.m(rec.q.back()) + rec.d.back(), 0.0);
            break;
        default:
            sol.terminated_by = Termination::ReachedOne;
            sol.qstar = 1.0;
            sol.n_qstar = cs.m(rec.q.back()) + rec.d.back();
            break;
    }

    const Eigen::Index N = static_cast<Eigen::Index>(rec.q.size());
    sol.qgrid = Eigen::Map<Eigen::ArrayXd>(rec.q.data(), N);
    sol.dvals = Eigen::Map<Eigen::ArrayXd>(rec.d.data(), N);
    sol.fvals = Eigen::Map<Eigen::ArrayXd>(rec.f.data(), N);
    sol.nvals.resize(N);
    for (Eigen::Index i = 0; i < N; ++i) sol.nvals[i] = cs.m(sol.qgrid[i]) + sol.dvals[i];
    sol.build_dense();
    return sol;
}

double find_b3_crit(double b1, double b2, double R, double tol) {
    if (!(b1 > 0)) throw DegenerateMerton("find_b3_crit requires b1 > 0");
    if (!(b2 >= 1 - 1e-12)) throw InvalidParams("find_b3_crit requires b2 >= 1");
    if (!(R > 0) || R == 1.0) throw InvalidParams("find_b3_crit requires R > 0, R != 1");
    if (!(tol > 0)) throw InvalidParams("find_b3_crit requires tol > 0");
    ToleranceOptions opts;
    opts.q_end = 1.0 - 1e-6;
    auto crossed = [&](double b3) {
        const auto sol = integrate_n(CoefficientSet{b1, b2, b3, R}, opts);
        return sol.terminated_by == Termination::CrossedM && sol.qstar < 1.0 - 1e-6;
    };
    double lo = R, hi = b3_bar(b1, R);
    if (!crossed(lo) || crossed(hi))
        throw BracketFailure("b3_crit bracket [" + fmt17(lo) + ", " + fmt17(hi) + "] does not change sign");
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (crossed(mid) ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

void write_ode_csv(const OdeSolution& sol, const std::string& path) {
    const auto n = static_cast<size_t>(sol.qgrid.size());
    std::vector<double> q(n), nv(n), m(n), l(n);
    for (size_t i = 0; i < n; ++i) {
        q[i] = sol.qgrid[i];
        nv[i] = sol.nvals[i];
        m[i] = sol.cs.m(q[i]);
        l[i] = sol.cs.ell(q[i]);
    }
    write_atomic(path, csv_table({"q", "n", "m", "ell"}, {q, nv, m, l}));
}

}  // namespace endow
