#include "endow/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/interpolators/cubic_hermite.hpp>
#include <boost/math/interpolators/quintic_hermite.hpp>
// Boost 1.74 pchip calls isnan unqualified.
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>

#include "json.hpp"

#include "endow/errors.hpp"
#include "endow/io.hpp"

namespace endow {

namespace odeint = boost::numeric::odeint;
using boost::math::interpolators::cubic_hermite;
using boost::math::interpolators::pchip;
using boost::math::interpolators::quintic_hermite;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

// ---------------------------------------------------------------- transforms

struct TransformTables::Inverse {
    pchip<std::vector<double>> q_of_logN;
    double lo, hi;  // range of ln N
};

double TransformTables::N_of(double q) const {
    const double n = sol.n(q);
    return std::exp(-R * std::log(n) + (R - 1) * std::log1p(-q));
}

double TransformTables::dlogN(double q) const {
    const double n = sol.n(q);
    return -R * sol.F(q) / n + (1 - R) / (1 - q);
}

void TransformTables::build_inverse() {
    std::vector<double> x(q.size()), y(q.size());
    for (Eigen::Index i = 0; i < q.size(); ++i) {
        x[i] = std::log(N[i]);
        y[i] = q[i];
    }
    if (x.front() > x.back()) {
        std::reverse(x.begin(), x.end());
        std::reverse(y.begin(), y.end());
    }
    const double lo = x.front(), hi = x.back();
    inv_ = std::make_shared<const Inverse>(Inverse{pchip<std::vector<double>>(std::move(x), std::move(y)), lo, hi});
}

double TransformTables::W(double s) const {
    const double ls = std::log(s);
    if (!inv_) throw Error("TransformTables: inverse not built");
    const double q_last = q[q.size() - 1];
    if (ls <= inv_->lo) return R < 1 ? 0.0 : q_last;
    if (ls >= inv_->hi) return R < 1 ? q_last : 0.0;
    // Bracket from the table, start from the monotone cubic, then safeguarded Newton.
    const double sg = R < 1 ? 1.0 : -1.0;
    Eigen::Index lo = 0, hi = q.size() - 1;
    while (hi - lo > 1) {
        const Eigen::Index mid = (lo + hi) / 2;
        (sg * (std::log(N[mid]) - ls) > 0 ? hi : lo) = mid;
    }
    double a = q[lo], b = q[hi];
    double x = std::clamp(inv_->q_of_logN(ls), a, b);
    for (int k = 0; k < 40; ++k) {
        const double r = std::log(N_of(x)) - ls;
        if (std::abs(r) <= 1e-14) break;
        (sg * r > 0 ? b : a) = x;
        double xn = x - r / dlogN(x);
        if (!(xn > a && xn < b)) xn = 0.5 * (a + b);
        if (xn == x) break;
        x = xn;
    }
    return x;
}

double TransformTables::wprime(double s) const {
    const double qq = W(s);
    return (1 - R) * (qq + 1.0 / dlogN(qq));
}

TransformTables build_transforms(const OdeSolution& sol, const AuxParams& /*ap*/, double R) {
    if (sol.qgrid.size() < 2) throw Error("build_transforms: solution has no grid");
    TransformTables tt;
    tt.sol = sol;
    tt.R = R;
    tt.q = sol.qgrid;
    tt.N.resize(tt.q.size());
    for (Eigen::Index i = 0; i < tt.q.size(); ++i)
        tt.N[i] = std::exp(-R * std::log(sol.nvals[i]) + (R - 1) * std::log1p(-tt.q[i]));
    const double sg = R < 1 ? 1.0 : -1.0;
    for (Eigen::Index i = 1; i < tt.N.size(); ++i)
        if (!(sg * (tt.N[i] - tt.N[i - 1]) > 0))
            throw MonotonicityViolation("N is not strictly monotone at q=" + fmt17(tt.q[i]));
    tt.finite_ratio = sol.terminated_by == Termination::CrossedM && sol.qstar > 0 && sol.qstar < 1;
    tt.qstar = sol.qstar;
    if (tt.finite_ratio) {
        tt.hstar = tt.N[tt.N.size() - 1];
        tt.zstar = sol.qstar / (1 - sol.qstar);
        tt.ustar = std::log(tt.zstar);
    } else {
        tt.hstar = tt.N[tt.N.size() - 1];
        tt.zstar = kInf;
        tt.ustar = kInf;
    }
    tt.build_inverse();
    return tt;
}

// ---------------------------------------------------------------- policy

struct Policy::Impl {
    enum class Kind { SellAll, Finite, NoFinite, IllPosed } kind = Kind::SellAll;
    std::shared_ptr<const TransformTables> tt;
    std::vector<double> v, xi;
    std::shared_ptr<quintic_hermite<std::vector<double>>> xi_fn;
    double v_min = 0, xi_min = 0, kappa = 1;
    double v_top = 0, xi_top = 0;
    double F_end = 0;

    const OdeSolution& sol() const { return tt->sol; }

    double Xi(double xi_) const {
        const double q = logistic(xi_), u = logistic(-xi_);
        const double n = sol().n(q), F = sol().F(q), R = tt->R;
        return (1 - R) * n / ((1 - R) * n - R * F * u);
    }

    double xi_at(double v_) const {
        if (v_ <= v_min) return xi_min + kappa * (v_ - v_min);
        if (v_ >= v_top) return v_ + (xi_top - v_top) * std::exp(-(v_ - v_top));
        return (*xi_fn)(v_);
    }

    /// Integral of ((1-R) n - R F (1-q)) / (q n) over [qa, 1], in logit coordinates.
    double tail_integral(double xa) const {
        const double R = tt->R;
        auto f = [&](double x) {
            const double q = logistic(x), u = logistic(-x);
            const double n = sol().n(q), F = sol().F(q);
            return ((1 - R) * n - R * F * u) * u / n;
        };
        const double q_end = sol().q_end();
        const double x_end = std::log(q_end / (1 - q_end));
        double I = 0.0;
        if (xa < x_end) {
            double err = 0;
            I = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, xa, x_end, 20, 1e-14, &err);
            if (!(err < 1e-9)) throw TailEstimateFailure("gamma integral did not converge");
        }
        // Remaining sliver [q_end, 1]: the integrand tends to 1 - R.
        const double n1 = sol().n(q_end), F1 = sol().F(q_end);
        const double tail = ((1 - R) * n1 - R * F1 * (1 - q_end)) / (q_end * n1) * (1 - q_end);
        if (!std::isfinite(tail) || std::abs(tail) > 1e-6) throw TailEstimateFailure("gamma tail too large");
        return I + tail;
    }
};

namespace {

using Kind = Policy::Impl::Kind;

PolicyState sale_state(double z, double n) {
    PolicyState st;
    st.sale = true;
    st.q = z / (1 + z);
    st.u = 1 / (1 + z);
    st.n = n;
    st.F = 0.0;
    st.k_over_u = z > 0 ? 1.0 + 1.0 / z : kInf;
    st.q_over_z = 1 / (1 + z);
    return st;
}

double logN(const PolicyState& st, double R) { return -R * std::log(st.n) + (R - 1) * std::log(st.u); }

double delta_(const PolicyState& st, double R) { return (1 - R) * st.n - R * st.F * st.u; }

/// w'(h) - 1 at the state.
double wp_minus_one(const PolicyState& st, double R) {
    return R * (-st.q * (1 - R) * st.n + (1 - (1 - R) * st.q) * st.F * st.u) / delta_(st, R);
}

/// Numerator and the bracket of the denominator of lambda Psi_g.
std::pair<double, double> lpsi_parts(const Policy& p, const PolicyState& st) {
    const double R = p.R, lam = p.aux.lambda, er = p.market.eta * p.market.rho;
    const double a = (1 - R) * st.q + R;
    const double num = lam * delta_(st, R) - er * st.q * R * (1 - R) * (st.n + st.F * st.u);
    const double den = R * ((1 - R) * st.n - a * st.F);
    return {num, den};
}

Policy make_base(const AuxParams& ap, double R, const MarketParams* market) {
    Policy p;
    p.aux = ap;
    p.R = R;
    p.market = market ? *market : canonical_market(ap, R);
    p.g0 = std::pow(ap.b1 / (ap.b4 * R), -R);
    return p;
}

void integrate_xi(Policy::Impl& im, double v0, double xi0) {
    std::vector<double> vs{v0}, xs{xi0};
    using dp_t = odeint::runge_kutta_dopri5<double, double, double, double, odeint::vector_space_algebra>;
    auto ds = odeint::make_dense_output(1e-13, 1e-12, 0.05, dp_t());
    // Integrate downward in v as forward time t = -v.
    ds.initialize(xi0, -v0, 1e-3);
    auto sys = [&](const double& x, double& dxdt, double) {
        const double r = im.Xi(x);
        dxdt = std::isfinite(r) ? -r : -1e100;
    };
    const double xi_stop = std::log(1e-10);
    long steps = 0;
    while (ds.current_state() > xi_stop) {
        if (++steps > 200000) throw IntegrationFailure("h-ODE exceeded the step budget");
        try {
            ds.do_step(sys);
        } catch (const std::exception& e) {
            throw IntegrationFailure(std::string("h-ODE step failed: ") + e.what());
        }
        if (std::abs(ds.current_time_step()) < 1e-14) throw IntegrationFailure("h-ODE step size underflow");
        vs.push_back(-ds.current_time());
        xs.push_back(ds.current_state());
    }
    std::reverse(vs.begin(), vs.end());
    std::reverse(xs.begin(), xs.end());
    std::vector<double> d1(vs.size()), d2(vs.size());
    for (size_t i = 0; i < vs.size(); ++i) {
        const double e = 1e-5;
        d1[i] = im.Xi(xs[i]);
        d2[i] = d1[i] * (im.Xi(xs[i] + e) - im.Xi(xs[i] - e)) / (2 * e);
    }
    im.v = vs;
    im.xi = xs;
    im.v_min = vs.front();
    im.xi_min = xs.front();
    const auto& s = im.sol();
    im.kappa = (1 - im.tt->R) / ((1 - im.tt->R) - im.tt->R * s.slope);
    im.xi_fn = std::make_shared<quintic_hermite<std::vector<double>>>(std::move(vs), std::move(xs), std::move(d1), std::move(d2));
}

}  // namespace

const OdeSolution* Policy::ode() const { return impl && impl->tt ? &impl->tt->sol : nullptr; }
const TransformTables* Policy::tables() const { return impl ? impl->tt.get() : nullptr; }

std::pair<std::vector<double>, std::vector<double>> Policy::h_nodes() const {
    if (!impl) return {};
    return {impl->v, impl->xi};
}

PolicyState Policy::state(double z) const {
    const auto& im = *impl;
    if (im.kind == Kind::IllPosed) throw IllPosedValue("value function is infinite");
    if (im.kind == Kind::SellAll) return sale_state(z, 1.0);
    if (std::isinf(z)) return state_k(0.0);
    if (!(z >= 0)) throw DomainViolation("policy evaluated at negative z");
    if (z == 0) {
        PolicyState st;
        st.q = 0;
        st.u = 1;
        st.n = 1;
        st.F = im.sol().slope;
        st.k_over_u = kInf;
        st.q_over_z = im.kappa < 1 ? kInf : (im.kappa == 1 ? 1.0 : 0.0);
        return st;
    }
    const double v = std::log(z);
    if (im.kind == Kind::Finite && v >= im.v_top) return sale_state(z, n_limit);
    const double x = im.xi_at(v);
    PolicyState st;
    st.q = logistic(x);
    st.u = logistic(-x);
    st.n = im.sol().n(st.q);
    st.F = im.sol().F(st.q);
    st.k_over_u = std::exp(-v) + std::exp(x - v);
    st.q_over_z = st.q * std::exp(-v);
    return st;
}

PolicyState Policy::state_k(double k) const {
    const auto& im = *impl;
    if (im.kind == Kind::IllPosed) throw IllPosedValue("value function is infinite");
    if (k > 0) return state(1.0 / k);
    PolicyState st;
    st.q = 1;
    st.u = 0;
    st.n = n_limit;
    st.F = im.kind == Kind::NoFinite ? im.F_end : 0.0;
    st.k_over_u = 1.0;
    st.q_over_z = 0.0;
    st.sale = im.kind != Kind::NoFinite;
    return st;
}

double Policy::g(double z) const { return g0 * std::exp(logN(state(z), R)); }

double Policy::zgp(double z) const {
    const auto st = state(z);
    return g0 * (1 - R) * st.q * std::exp(logN(st, R));
}

double Policy::z2gpp(double z) const {
    const auto st = state(z);
    return g0 * (1 - R) * st.q * std::exp(logN(st, R)) * wp_minus_one(st, R);
}

double Policy::gp(double z) const {
    const auto st = state(z);
    if (std::isinf(st.q_over_z)) return std::copysign(kInf, 1 - R);
    return g0 * (1 - R) * st.q_over_z * std::exp(logN(st, R));
}

double Policy::gpp(double z) const {
    if (z == 0) {
        const auto st = state(0.0);
        if (st.sale) return -g0 * R * (1 - R);
        return std::isinf(st.q_over_z) ? std::copysign(kInf, R - 1) : 0.0;
    }
    return z2gpp(z) / (z * z);
}

double Policy::lambda_psi(double z) const {
    const auto st = state(z);
    const auto [num, den] = lpsi_parts(*this, st);
    return num / (st.u * den);
}

double Policy::psi(double z) const {
    if (aux.lambda == 0) return std::numeric_limits<double>::quiet_NaN();
    return lambda_psi(z) / aux.lambda;
}

double Policy::consumption_ratio(double z) const {
    const auto st = state(z);
    const double base = g0 * std::exp(logN(st, R)) * st.u;
    if (!(base > 0)) throw NonpositiveBase("g - z g'/(1-R) is not positive");
    return std::pow(g0, -1.0 / R) * st.n / st.u;
}

double Policy::portfolio_ratio(double z) const { return lambda_psi(z) / market.sigma; }

double Policy::price_ratio(double z) const {
    const auto st = state(z);
    return std::expm1(-R / (1 - R) * std::log(st.n) - std::log(st.u));
}

double Policy::k_consumption(double k) const {
    const auto st = state_k(k);
    return std::pow(g0, -1.0 / R) * st.n * st.k_over_u;
}

double Policy::k_lambda_psi(double k) const {
    const auto st = state_k(k);
    const auto [num, den] = lpsi_parts(*this, st);
    return st.k_over_u * num / den;
}

double Policy::gamma(double v) const {
    const auto& im = *impl;
    if (im.kind != Kind::NoFinite) throw RegimeMismatch("gamma exists only without a finite ratio");
    const double qa = im.tt->W(v);
    const double xa = std::log(qa / (1 - qa));
    const double I = im.tail_integral(xa);
    return (std::log(v) + R * std::log(n_limit) - I) / (1 - R);
}

Policy build_regime1(const AuxParams& ap, double R, const MarketParams* market) {
    Policy p = make_base(ap, R, market);
    auto im = std::make_shared<Policy::Impl>();
    im->kind = Kind::SellAll;
    p.impl = im;
    p.regime.regime = Regime::SellAll;
    p.regime.qstar = 0;
    p.zstar = 0;
    p.n_limit = 1.0;
    return p;
}

Policy build_g_finite_ratio(const TransformTables& tt, const AuxParams& ap, double R, const MarketParams* market) {
    if (!tt.finite_ratio) throw RegimeMismatch("build_g_finite_ratio needs 0 < q* < 1");
    Policy p = make_base(ap, R, market);
    auto im = std::make_shared<Policy::Impl>();
    im->kind = Kind::Finite;
    im->tt = std::make_shared<const TransformTables>(tt);
    im->v_top = tt.ustar;
    im->xi_top = tt.ustar;
    integrate_xi(*im, tt.ustar, tt.ustar);
    p.impl = im;
    p.regime.regime = Regime::FiniteRatio;
    p.regime.qstar = tt.qstar;
    p.zstar = tt.zstar;
    p.n_limit = tt.sol.n_qstar;
    return p;
}

Policy build_g_no_finite_ratio(const OdeSolution& sol, const TransformTables& tt, const AuxParams& ap, double R,
                               const MarketParams* market) {
    if (sol.terminated_by != Termination::ReachedOne)
        throw RegimeMismatch("build_g_no_finite_ratio needs a solution reaching q = 1");
    Policy p = make_base(ap, R, market);
    auto im = std::make_shared<Policy::Impl>();
    im->kind = Kind::NoFinite;
    im->tt = std::make_shared<const TransformTables>(tt);
    p.n_limit = sol.n_qstar;
    if (!(p.n_limit > 0)) throw IntegrationFailure("n(1) is not positive");
    const Eigen::Index last = sol.qgrid.size() - 1;
    im->F_end = sol.fvals[last];
    const double q_end = sol.qgrid[last];
    const double x_end = std::log(q_end / (1 - q_end));
    // gamma at h = N(q_end) fixes where the h-ODE starts.
    const double I = im->tail_integral(x_end);
    const double v_end = (std::log(tt.N[last]) + R * std::log(p.n_limit) - I) / (1 - R);
    im->v_top = v_end;
    im->xi_top = x_end;
    integrate_xi(*im, v_end, x_end);
    p.impl = im;
    p.regime.regime = Regime::NoFiniteRatio;
    p.regime.qstar = 1.0;
    p.zstar = kInf;
    return p;
}

Policy build_policy(const AuxParams& ap, double R, const MarketParams* market, const ToleranceOptions& opts) {
    validate_wellposed(ap, R);
    if (!(R > 0) || R == 1.0) throw InvalidParams("R must be positive and different from 1");
    if (ap.b3 <= 0) return build_regime1(ap, R, market);
    if (R < 1 && ap.b3 >= illposed_threshold(ap.b1, ap.b2, R)) {
        Policy p = make_base(ap, R, market);
        auto im = std::make_shared<Policy::Impl>();
        im->kind = Kind::IllPosed;
        p.impl = im;
        p.regime.regime = Regime::IllPosed;
        p.regime.qstar = 1.0;
        p.regime.notes = "value function is infinite";
        p.zstar = kInf;
        return p;
    }
    std::optional<double> crit;
    if (ap.b3 > R) crit = find_b3_crit(ap.b1, ap.b2, R);
    const Regime reg = regime_from(ap.b1, ap.b2, ap.b3, R, crit);
    const CoefficientSet cs{ap.b1, ap.b2, ap.b3, R};
    OdeSolution sol = integrate_n(cs, opts);
    Policy p;
    if (reg == Regime::FiniteRatio) {
        if (sol.terminated_by != Termination::CrossedM)
            throw IntegrationFailure("finite-ratio regime but the n-ODE did not cross m");
        p = build_g_finite_ratio(build_transforms(sol, ap, R), ap, R, market);
    } else {
        if (sol.terminated_by == Termination::CrossedM)
            throw IntegrationFailure("no-finite-ratio regime but the n-ODE crossed m at q=" + fmt17(sol.qstar));
        p = build_g_no_finite_ratio(sol, build_transforms(sol, ap, R), ap, R, market);
    }
    p.regime.b3_crit = crit;
    p.regime.notes = sol.notes;
    return p;
}

Policy build_policy(const MarketParams& mp, const ToleranceOptions& opts) {
    const AuxParams ap = derive_aux_params(mp);
    return build_policy(ap, mp.R, &mp, opts);
}

// ---------------------------------------------------------------- feedback

namespace {

void check_state(double x, double y, double theta) {
    if (!(x >= 0) || !(y > 0) || !(theta >= 0) || !(x + y * theta > 0))
        throw InvalidParams("state requires x >= 0, y > 0, theta >= 0, x + y theta > 0");
}

}  // namespace

double value(const Policy& pol, double x, double y, double theta) {
    check_state(x, y, theta);
    const double R = pol.R;
    if (pol.regime.regime == Regime::IllPosed) throw IllPosedValue("value function is infinite");
    if (pol.regime.regime == Regime::SellAll) return pol.g0 * std::pow(x + y * theta, 1 - R) / (1 - R);
    const double yt = y * theta;
    if (x > 0 && yt <= x) return std::pow(x, 1 - R) * pol.g(yt / x) / (1 - R);
    const auto st = pol.state_k(x / yt);
    return pol.g0 * std::pow(st.n, -R) * std::pow(yt * st.k_over_u, 1 - R) / (1 - R);
}

double certainty_equivalent(const Policy& pol, double x, double y, double theta) {
    check_state(x, y, theta);
    const double R = pol.R;
    if (pol.regime.regime == Regime::IllPosed) throw IllPosedValue("value function is infinite");
    if (pol.regime.regime == Regime::SellAll) return y * theta;
    const double yt = y * theta;
    if (x > 0 && yt <= x) return x * pol.price_ratio(yt / x);
    const auto st = pol.state_k(x / yt);
    return yt * std::pow(st.n, -R / (1 - R)) * st.k_over_u - x;
}

double feedback_consumption(const Policy& pol, double x, double y, double theta) {
    check_state(x, y, theta);
    const double yt = y * theta;
    if (x > 0 && yt <= x) return x * pol.consumption_ratio(yt / x);
    return yt * pol.k_consumption(x / yt);
}

double feedback_portfolio(const Policy& pol, double x, double y, double theta) {
    check_state(x, y, theta);
    const double yt = y * theta;
    if (x > 0 && yt <= x) return x * pol.portfolio_ratio(yt / x);
    return yt * pol.k_lambda_psi(x / yt) / pol.market.sigma;
}

std::pair<double, double> initial_sale(const Policy& pol, double x, double y, double theta) {
    check_state(x, y, theta);
    if (pol.regime.regime == Regime::SellAll) return {0.0, x + y * theta};
    if (pol.regime.regime != Regime::FiniteRatio) return {theta, x};
    const double zs = pol.zstar;
    if (x > 0 && y * theta / x <= zs) return {theta, x};
    const double z0 = x > 0 ? y * theta / x : kInf;
    const double th = std::isinf(z0) ? theta * zs / (1 + zs) : theta * (zs / (1 + zs)) * ((1 + z0) / z0);
    return {th, x + y * (theta - th)};
}

// ---------------------------------------------------------------- verifiers

double hjb_operator(const Policy& pol, double G, double G1, double G2) {
    const auto& mp = pol.market;
    const double R = pol.R, lam = pol.aux.lambda;
    const double A = G - G1 / (1 - R);
    const double D = -R * G + (2 * R * G1 + G2) / (1 - R);
    const double yGxy = -(R * G1 + G2) / (1 - R);
    const double t = mp.eta * mp.rho * yGxy + lam * A;
    return R / (1 - R) * std::pow(A, (R - 1) / R) + mp.r * A + mp.alpha * G1 / (1 - R) +
           0.5 * mp.eta * mp.eta * G2 / (1 - R) - t * t / (2 * D) - mp.beta * G / (1 - R);
}

std::vector<double> default_zgrid(const Policy& pol, int points) {
    std::vector<double> z;
    double zmax = std::isfinite(pol.zstar) && pol.zstar > 0 ? pol.zstar : 10.0;
    for (int i = 1; i <= points; ++i) z.push_back(zmax * i / points);
    return z;
}

ResidualReport verify_hjb(const Policy& pol, const std::vector<double>& zgrid) {
    ResidualReport rep;
    const double R = pol.R;
    const bool r1 = pol.regime.regime == Regime::SellAll;
    rep.min_sale_op = kInf;
    // Relative to beta G, or to G alone when beta vanishes.
    const bool beta_zero = std::abs(pol.market.beta) < 1e-10;
    auto scale_of = [&](double G) { return std::abs((beta_zero ? 1.0 : pol.market.beta) * G / (1 - R)); };
    for (double z : zgrid) {
        if (!(z > 0) || !std::isfinite(z)) continue;
        const auto st = pol.state(z);
        const double G = pol.g(z), G1 = pol.zgp(z), G2 = pol.z2gpp(z);
        const double res = hjb_operator(pol, G, G1, G2);
        const double zz = z / (1 + z);
        const double sale_op = (st.q - zz) / zz;  // ((1+z) g'/(1-R) - g)/g
        rep.z.push_back(z);
        rep.hjb.push_back(res);
        rep.sale_op.push_back(sale_op);
        if (r1) {
            const double expr = (pol.aux.b3 / pol.aux.b1) * zz - (R / pol.aux.b1) * zz * zz;
            rep.max_regime1 = std::max(rep.max_regime1, std::max(expr, res / scale_of(G)));
        }
        if (!st.sale) {
            rep.max_hjb = std::max(rep.max_hjb, std::abs(res) / scale_of(G));
            rep.min_sale_op = std::min(rep.min_sale_op, sale_op);
        } else {
            rep.max_sale_op_sale = std::max(rep.max_sale_op_sale, std::abs(sale_op));
        }
        // Differenced g against the analytic derivatives, away from z*.
        const double eps = 1e-3;
        if (!(std::abs(std::log(z / pol.zstar)) < 3 * eps)) {
            const double gm = pol.g(z * std::exp(-eps)), gpl = pol.g(z * std::exp(eps));
            const double d1 = (gpl - gm) / (2 * eps), d2 = (gpl - 2 * G + gm) / (eps * eps);
            const double mis = std::max(std::abs(d1 - G1), std::abs(d2 - d1 - G2)) / std::abs(G);
            rep.max_fd_mismatch = std::max(rep.max_fd_mismatch, mis);
        }
    }
    if (rep.min_sale_op == kInf) rep.min_sale_op = 0.0;
    std::ostringstream notes;
    bool ok = rep.max_fd_mismatch <= 1e-5;
    if (r1) {
        ok = ok && rep.max_regime1 <= 1e-12;
    } else {
        ok = ok && rep.max_hjb <= 1e-7 && rep.min_sale_op >= -1e-9 && rep.max_sale_op_sale <= 1e-9;
    }
    if (beta_zero) notes << "beta = 0, residual relative to g; ";
    if (!ok) notes << "residual thresholds exceeded";
    rep.notes = notes.str();
    rep.pass = ok;
    return rep;
}

ShapeReport verify_shape(const Policy& pol, const std::vector<double>& zgrid_in) {
    ShapeReport rep;
    const double R = pol.R;
    std::vector<double> zg;
    for (double z : zgrid_in)
        if (z > 0 && std::isfinite(z)) zg.push_back(z);
    std::sort(zg.begin(), zg.end());
    const double sg = R < 1 ? 1.0 : -1.0;
    std::vector<double> gv(zg.size());
    for (size_t i = 0; i < zg.size(); ++i) gv[i] = pol.g(zg[i]);
    for (size_t i = 0; i < zg.size(); ++i) {
        if (!(gv[i] > 0)) rep.monotone = false;
        if (i > 0 && !(sg * (gv[i] - gv[i - 1]) > 0)) rep.monotone = false;
        if (i > 0 && i + 1 < zg.size()) {
            const double s1 = (gv[i] - gv[i - 1]) / (zg[i] - zg[i - 1]);
            const double s2 = (gv[i + 1] - gv[i]) / (zg[i + 1] - zg[i]);
            if (sg * (s2 - s1) > 1e-9 * std::abs(s1)) rep.curvature = false;
        }
        const double G = gv[i], G1 = pol.zgp(zg[i]), G2 = pol.z2gpp(zg[i]);
        rep.max_hessian = std::max(rep.max_hessian, ((1 - R) * G2 / G + R * (G1 / G) * (G1 / G)));
    }
    auto hess = [&](double z) {
        const double G = pol.g(z), G1 = pol.zgp(z), G2 = pol.z2gpp(z);
        return (1 - R) * G2 / G + R * (G1 / G) * (G1 / G);
    };
    if (pol.regime.regime == Regime::FiniteRatio) {
        const double zs = pol.zstar;
        rep.hessian_at_zstar = std::max(std::abs(hess(zs)), std::abs(hess(zs * (1 - 1e-12))));
    }
    if (const TransformTables* tt = pol.tables()) {
        const auto& q = tt->q;
        const auto& N = tt->N;
        const Eigen::Index last = q.size() - 1;
        for (Eigen::Index i = 2; i < last; ++i) {
            const double s = N[i];
            const double wp = tt->wprime(s);
            const double lo = 1 - R, hi = 1 - R * q[i];
            if (!(wp > lo && wp < hi)) ++rep.wprime_violations;
            const double e = std::min({1e-5 * s, 0.5 * std::abs(s - N[0]), 0.5 * std::abs(N[last] - s)});
            const double fd = (tt->w(s + e) - tt->w(s - e)) / (2 * e);
            if (!(fd > lo && fd < hi)) ++rep.wprime_violations;
            rep.wprime_fd_error = std::max(rep.wprime_fd_error, std::abs(fd - wp));
        }
        if (tt->finite_ratio) {
            const double wp = tt->wprime(tt->hstar);
            rep.wprime_upper_gap_at_hstar = std::abs(wp - (1 - R * tt->qstar));
        }
    }
    rep.pass = rep.monotone && rep.curvature && rep.max_hessian <= 1e-9 && rep.hessian_at_zstar <= 1e-8 &&
               rep.wprime_violations == 0 && rep.wprime_fd_error <= 1e-6 && rep.wprime_upper_gap_at_hstar <= 1e-8;
    if (!rep.pass) rep.notes = "shape checks failed";
    return rep;
}

// ---------------------------------------------------------------- exports

std::string policy_csv(const Policy& pol, const std::vector<double>& zgrid) {
    std::vector<double> z, g, gp, gpp, c, pi, p;
    for (double zz : zgrid) {
        z.push_back(zz);
        g.push_back(pol.g(zz));
        gp.push_back(pol.gp(zz));
        gpp.push_back(pol.gpp(zz));
        c.push_back(pol.consumption_ratio(zz));
        pi.push_back(pol.portfolio_ratio(zz));
        p.push_back(pol.price_ratio(zz));
    }
    return csv_table({"z", "g", "gp", "gpp", "C_over_x", "Pi_over_x", "p_over_x"}, {z, g, gp, gpp, c, pi, p});
}

std::string policy_summary_json(const Policy& pol) {
    nlohmann::ordered_json j;
    j["regime"] = to_string(pol.regime.regime);
    if (pol.regime.b3_crit) j["b3_crit"] = *pol.regime.b3_crit;
    else j["b3_crit"] = nullptr;
    j["qstar"] = pol.regime.qstar;
    if (std::isfinite(pol.zstar)) j["zstar"] = pol.zstar;
    else j["zstar"] = "inf";
    j["n_qstar"] = pol.n_limit;
    j["g0"] = pol.g0;
    return j.dump(2);
}

}  // namespace endow
