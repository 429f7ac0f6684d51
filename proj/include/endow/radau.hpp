#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

namespace endow {

/// Adaptive three-stage Radau IIA stepper for a scalar ODE y' = f(t, y).
/// Step size is controlled by step doubling; calc_state re-steps from the
/// start of the last accepted step, so it is as accurate as a step.
class RadauScalar {
public:
    RadauScalar(double atol, double rtol, double max_dt) : atol_(atol), rtol_(rtol), max_dt_(max_dt) {}

    void initialize(double y, double t, double dt) {
        y_ = y;
        t_ = t;
        dt_ = dt;
        t_old_ = t;
        y_old_ = y;
    }

    double current_time() const { return t_; }
    double current_time_step() const { return dt_; }
    const double& current_state() const { return y_; }

    /// sys is a pair (f, dfdy) of callables taking (t, y).
    template <class Sys>
    std::pair<double, double> do_step(const Sys& sys) {
        f_ = [&sys](double t, double y) { return sys.first(t, y); };
        j_ = [&sys](double t, double y) { return sys.second(t, y); };
        for (int attempt = 0; attempt < 60; ++attempt) {
            const double h = dt_;
            double y1, ya, y2;
            if (!step(t_, y_, h, y1) || !step(t_, y_, 0.5 * h, ya) || !step(t_ + 0.5 * h, ya, 0.5 * h, y2)) {
                dt_ *= 0.25;
                continue;
            }
            const double sc = atol_ + rtol_ * std::max(std::abs(y_), std::abs(y2));
            const double err = std::abs(y2 - y1) / 31.0 / sc;
            if (!std::isfinite(err) || err > 1.0) {
                dt_ = h * std::max(0.1, 0.9 * std::pow(std::isfinite(err) ? err : 1e6, -1.0 / 6.0));
                continue;
            }
            t_old_ = t_;
            y_old_ = y_;
            t_ += h;
            y_ = y2;
            const double fac = err > 0 ? 0.9 * std::pow(err, -1.0 / 6.0) : 5.0;
            dt_ = std::min(max_dt_, h * std::min(5.0, std::max(0.2, fac)));
            return {t_old_, t_};
        }
        throw std::runtime_error("Radau step size could not be adapted");
    }

    /// State at t in [t_old, t_new] of the last step.
    void calc_state(double t, double& y) const {
        if (t == t_old_) {
            y = y_old_;
            return;
        }
        double out;
        if (!step(t_old_, y_old_, t - t_old_, out)) {
            const double h = t - t_old_;
            double mid;
            if (!step(t_old_, y_old_, 0.5 * h, mid) || !step(t_old_ + 0.5 * h, mid, 0.5 * h, out))
                throw std::runtime_error("Radau dense evaluation failed");
        }
        y = out;
    }

private:
    bool step(double t, double y, double h, double& out) const {
        static const double s6 = std::sqrt(6.0);
        static const double c[3] = {(4 - s6) / 10, (4 + s6) / 10, 1.0};
        static const Eigen::Matrix3d A = (Eigen::Matrix3d() << (88 - 7 * s6) / 360, (296 - 169 * s6) / 1800,
                                          (-2 + 3 * s6) / 225, (296 + 169 * s6) / 1800, (88 + 7 * s6) / 360,
                                          (-2 - 3 * s6) / 225, (16 - s6) / 36, (16 + s6) / 36, 1.0 / 9)
                                             .finished();
        Eigen::Vector3d Z = Eigen::Vector3d::Zero();
        Eigen::Vector3d Fv, Jv;
        const double sc = atol_ + rtol_ * std::abs(y);
        for (int it = 0; it < 12; ++it) {
            for (int i = 0; i < 3; ++i) {
                Fv[i] = f_(t + c[i] * h, y + Z[i]);
                Jv[i] = j_(t + c[i] * h, y + Z[i]);
            }
            if (!Fv.allFinite() || !Jv.allFinite()) return false;
            const Eigen::Vector3d G = Z - h * A * Fv;
            Eigen::Matrix3d M = Eigen::Matrix3d::Identity() - h * A * Jv.asDiagonal();
            const Eigen::Vector3d dZ = M.partialPivLu().solve(-G);
            if (!dZ.allFinite()) return false;
            Z += dZ;
            if (dZ.cwiseAbs().maxCoeff() <= 1e-3 * sc) {
                out = y + Z[2];
                return std::isfinite(out);
            }
        }
        return false;
    }

    double atol_, rtol_, max_dt_;
    double y_ = 0, t_ = 0, dt_ = 0, t_old_ = 0, y_old_ = 0;
    std::function<double(double, double)> f_, j_;
};

}  // namespace endow
