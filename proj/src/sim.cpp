#include "endow/sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

#include <boost/random/normal_distribution.hpp>

#include "json.hpp"

#include "endow/errors.hpp"
#include "endow/io.hpp"
#include "endow/philox.hpp"

namespace endow {

namespace {

constexpr int kMaxHalvings = 8;
constexpr int kTableIntervals = 8192;

template <std::size_t N>
std::array<double, N> normals(const Philox4x32& gen, const Philox4x32::Counter& ctr) {
    PhiloxStream st(gen, ctr);
    boost::random::normal_distribution<double> nd;
    std::array<double, N> out;
    for (auto& x : out) x = nd(st);
    return out;
}

double pairwise_sum(const double* a, size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (size_t i = 0; i < n; ++i) s += a[i];
        return s;
    }
    const size_t h = n / 2;
    return pairwise_sum(a, h) + pairwise_sum(a + h, n - h);
}

struct MeanSe {
    double mean, se;
};

MeanSe mean_se(const std::vector<double>& v) {
    const size_t n = v.size();
    const double m = pairwise_sum(v.data(), n) / n;
    std::vector<double> d(n);
    for (size_t i = 0; i < n; ++i) d[i] = (v[i] - m) * (v[i] - m);
    const double var = n > 1 ? pairwise_sum(d.data(), n) / (n - 1) : 0.0;
    return {m, std::sqrt(var / n)};
}

/// Three functions tabulated on a uniform grid over [0, hi], interleaved, with
/// linear interpolation. Returns the interval index.
struct Table {
    double inv_dx = 0.0;
    std::vector<double> v;

    int at(double x, double& a, double& b, double& c) const {
        const double t = x * inv_dx;
        const int i = std::clamp(static_cast<int>(t), 0, kTableIntervals - 1);
        const double w = t - i;
        const double* p = v.data() + 3 * i;
        a = p[0] + w * (p[3] - p[0]);
        b = p[1] + w * (p[4] - p[1]);
        c = p[2] + w * (p[5] - p[2]);
        return i;
    }
};

template <class F, class G, class H>
Table tabulate(double hi, F f, G g, H h) {
    Table t;
    t.inv_dx = kTableIntervals / hi;
    t.v.resize(3 * (kTableIntervals + 1));
    for (int i = 0; i <= kTableIntervals; ++i) {
        const double x = hi * i / kTableIntervals;
        t.v[3 * i] = f(x);
        t.v[3 * i + 1] = g(x);
        t.v[3 * i + 2] = h(x);
    }
    return t;
}

/// Observable quantities at one state.
struct Obs {
    double Y, Theta, X, Z, C, Pi;
};

struct State {
    double lnY;
    double L;
    double s;  ///< Z, K or ln X depending on the model
    double Theta;
    double lnTheta;
    double a = 0.0, b = 0.0;  ///< policy table values at s
    double p = 0.0;           ///< (C / (Y Theta))^(1-R) at s
    double thp = 1.0;         ///< Theta^(1-R)
};

/// Reflection bookkeeping for one step: local time added, the unreflected
/// extreme, and the distance to the boundary where the local time accrued.
struct Accrual {
    double dL = 0.0;
    double pre = 0.0;
    double distance = 0.0;
};

struct Common {
    double r, beta, alpha, eta, rho, rho_perp, sigma, R;

    explicit Common(const MarketParams& mp)
        : r(mp.r), beta(mp.beta), alpha(mp.alpha), eta(mp.eta), rho(mp.rho),
          rho_perp(std::sqrt(1 - mp.rho * mp.rho)), sigma(mp.sigma), R(mp.R) {}

    double lny_next(double lnY, double h, double db2) const { return lnY + (alpha - 0.5 * eta * eta) * h + eta * db2; }
};

/// Liquid wealth only: exact geometric Brownian motion.
struct MertonModel {
    Common cm;
    double c, lnc, pi_ratio, drift, vol, x0, y0;

    MertonModel(const MarketParams& mp, const AuxParams& ap, double g0, double x_init)
        : cm(mp), x0(x_init), y0(mp.y0) {
        const double lam = ap.lambda, R = mp.R;
        c = std::pow(g0, -1.0 / R);
        lnc = std::log(c);
        pi_ratio = lam / (mp.sigma * R);
        drift = mp.r - c + lam * lam / R - lam * lam / (2 * R * R);
        vol = lam / R;
    }

    State init() const { return {std::log(y0), 0.0, std::log(x0), 0.0, -std::numeric_limits<double>::infinity()}; }

    template <class U>
    bool advance(State& st, double h, double db1, double db2, Accrual& acc, U&&) const {
        st.lnY = cm.lny_next(st.lnY, h, db2);
        st.s += drift * h + vol * db1;
        acc = {};
        return std::isfinite(st.s);
    }
    static constexpr bool uses_y = false;
    static constexpr bool exact = true;
    double utility(const State& st, double, double t) const {
        return std::exp((1 - cm.R) * (lnc + st.s) - cm.beta * t) / (1 - cm.R);
    }
    Obs observe(const State& st) const {
        const double X = std::exp(st.s);
        return {std::exp(st.lnY), 0.0, X, 0.0, c * X, pi_ratio * X};
    }
    double z_over(const State&) const { return -std::numeric_limits<double>::infinity(); }
    bool pre_admissible(double) const { return true; }
};

/// Ratio Z = Y Theta / X reflected at z*.
struct FiniteRatioModel {
    Common cm;
    double zstar, zeta, lam, rate;
    bool bridge;
    Table tab;  ///< C/x, lambda Psi and (C/x / z)^(1-R) against z
    State s0;

    FiniteRatioModel(const Policy& pol, const MarketParams& mp, Scheme scheme)
        : cm(mp), bridge(scheme == Scheme::BridgeReflected) {
        zstar = pol.zstar;
        zeta = pol.aux.zeta;
        lam = pol.aux.lambda;
        rate = 1.0 / (zstar * (1 + zstar));
        const double e = 1 - mp.R;
        tab = tabulate(
            zstar, [&](double z) { return pol.consumption_ratio(z); }, [&](double z) { return pol.lambda_psi(z); },
            [&](double z) { return z > 0 ? std::pow(pol.consumption_ratio(z) / z, e) : 0.0; });
        const auto [th, x] = initial_sale(pol, mp.x0, mp.y0, mp.theta0);
        const double z0 = std::min(mp.y0 * th / x, zstar);
        s0 = {std::log(mp.y0), 0.0, th < mp.theta0 ? zstar : z0, th, std::log(th)};
        s0.thp = std::pow(th, e);
        lookup(s0);
    }

    void lookup(State& st) const {
        if (tab.at(st.s, st.a, st.b, st.p) == 0) st.p = std::pow(st.a / st.s, 1 - cm.R);
    }

    State init() const { return s0; }

    template <class U>
    bool advance(State& st, double h, double db1, double db2, Accrual& acc, U&& uniform) const {
        const double z = st.s, c = st.a, l = st.b;
        const double drift = z * (c + zeta * cm.eta - (lam + cm.eta * cm.rho) * l + l * l);
        const double inc = drift * h - z * l * db1 + cm.eta * z * db2;
        double zn = z + inc;
        if (!(zn > 1e-14)) return false;
        acc = {};
        acc.pre = zn;
        double peak = zn;
        if (bridge) {
            const double var = z * z * (l * l + cm.eta * cm.eta - 2 * cm.rho * l * cm.eta) * h;
            const double d = zstar - z;
            if (2 * d * (d - inc) < 40 * var) peak = z + 0.5 * (inc + std::sqrt(inc * inc - 2 * var * std::log(uniform())));
            acc.pre = std::max(peak, zn);
        }
        if (peak > zstar) {
            acc.dL = peak - zstar;
            acc.distance = zstar - (peak - acc.dL);
            zn = std::min(zn - acc.dL, zstar);
        }
        st.lnY = cm.lny_next(st.lnY, h, db2);
        st.s = zn;
        lookup(st);
        if (acc.dL > 0) {
            st.L += acc.dL;
            st.lnTheta = s0.lnTheta - st.L * rate;
            st.Theta = s0.Theta * std::exp(-st.L * rate);
            st.thp = std::exp((1 - cm.R) * st.lnTheta);
        }
        return true;
    }
    static constexpr bool uses_y = true;
    static constexpr bool exact = false;
    double utility(const State& st, double ydisc, double) const { return ydisc * st.thp * st.p / (1 - cm.R); }
    Obs observe(const State& st) const {
        const double Y = std::exp(st.lnY), X = Y * st.Theta / st.s;
        return {Y, st.Theta, X, st.s, X * st.a, X * st.b / cm.sigma};
    }
    double z_over(const State& st) const { return st.s - zstar; }
    bool pre_admissible(double pre) const { return pre <= zstar; }
};

/// Inverse ratio K = X / (Y Theta) reflected at 0.
struct NoFiniteRatioModel {
    Common cm;
    double zeta, lam;
    bool bridge;
    Table tab;  ///< k C/x and k lambda Psi, both divided by 1 + k, and (k C/x)^(1-R), against s = k/(1+k)
    State s0;

    NoFiniteRatioModel(const Policy& pol, const MarketParams& mp, Scheme scheme)
        : cm(mp), bridge(scheme == Scheme::BridgeReflected) {
        zeta = pol.aux.zeta;
        lam = pol.aux.lambda;
        tab = tabulate(
            1.0,
            [&](double s) {
                if (s >= 1.0) return pol.consumption_ratio(0.0);
                const double k = s / (1 - s);
                return pol.k_consumption(k) / (1 + k);
            },
            [&](double s) {
                if (s >= 1.0) return pol.lambda_psi(0.0);
                const double k = s / (1 - s);
                return pol.k_lambda_psi(k) / (1 + k);
            },
            [&](double s) { return s < 1.0 ? std::pow(pol.k_consumption(s / (1 - s)), 1 - mp.R) : 0.0; });
        if (!(mp.theta0 > 0)) throw InvalidParams("the no-finite-ratio simulation needs theta0 > 0");
        s0 = {std::log(mp.y0), 0.0, mp.x0 / (mp.y0 * mp.theta0), mp.theta0, std::log(mp.theta0)};
        s0.thp = std::pow(mp.theta0, 1 - mp.R);
        lookup(s0);
    }

    void lookup(State& st) const {
        const double k = st.s;
        if (tab.at(k / (1 + k), st.a, st.b, st.p) == kTableIntervals - 1) st.p = std::pow((1 + k) * st.a, 1 - cm.R);
    }

    State init() const { return s0; }

    template <class U>
    bool advance(State& st, double h, double db1, double db2, Accrual& acc, U&& uniform) const {
        const double k = st.s;
        const double kc = (1 + k) * st.a, kl = (1 + k) * st.b;
        const double drift = (cm.eta - zeta) * cm.eta * k + (lam - cm.eta * cm.rho) * kl - kc;
        const double inc = drift * h + kl * db1 - cm.eta * k * db2;
        double kn = k + inc;
        if (!std::isfinite(kn)) return false;
        acc = {};
        acc.pre = kn;
        double low = kn;
        if (bridge) {
            const double var = (kl * kl + cm.eta * cm.eta * k * k - 2 * cm.rho * kl * cm.eta * k) * h;
            if (2 * k * (k + inc) < 40 * var) low = k + 0.5 * (inc - std::sqrt(inc * inc - 2 * var * std::log(uniform())));
            acc.pre = std::min(low, kn);
        }
        if (low < 0) {
            acc.dL = -low;
            acc.distance = low + acc.dL;
            kn = std::max(kn + acc.dL, 0.0);
        }
        st.lnY = cm.lny_next(st.lnY, h, db2);
        st.s = kn;
        lookup(st);
        if (acc.dL > 0) {
            st.L += acc.dL;
            st.lnTheta = s0.lnTheta - st.L;
            st.Theta = s0.Theta * std::exp(-st.L);
            st.thp = std::exp((1 - cm.R) * st.lnTheta);
        }
        return true;
    }
    static constexpr bool uses_y = true;
    static constexpr bool exact = false;
    double utility(const State& st, double ydisc, double) const { return ydisc * st.thp * st.p / (1 - cm.R); }
    Obs observe(const State& st) const {
        const double k = st.s, Y = std::exp(st.lnY), yt = Y * st.Theta;
        return {Y, st.Theta, yt * k, k > 0 ? 1 / k : std::numeric_limits<double>::infinity(), yt * (1 + k) * st.a,
                yt * (1 + k) * st.b / cm.sigma};
    }
    double z_over(const State&) const { return -std::numeric_limits<double>::infinity(); }
    bool pre_admissible(double pre) const { return pre >= 0; }
};

/// Drives one model along the shared fine Brownian grid.
template <class Model>
class Runner {
public:
    Runner(const Model& m, const Philox4x32& gen, std::uint32_t path, bool zero_noise, InvariantReport* inv)
        : m_(m), gen_(gen), path_(path), zero_(zero_noise), inv_(inv) {}

    /// One step of size h from increments (db1, dbp); halves through Brownian bridges on failure.
    void step(State& st, double h, double db1, double dbp, std::uint32_t tag, std::uint32_t level, int depth = 0,
              std::uint32_t pos = 0) {
        State trial = st;
        Accrual acc;
        const double db2 = m_.cm.rho * db1 + m_.cm.rho_perp * dbp;
        auto uniform = [&] {
            return philox_uniform(gen_, {tag, path_, 64u + static_cast<std::uint32_t>(depth) + 16u * level, pos});
        };
        if (m_.advance(trial, h, db1, db2, acc, uniform)) {
            if (inv_) record(st, trial, acc);
            st = trial;
            return;
        }
        if (depth >= kMaxHalvings) throw StepRejection("step rejected after " + std::to_string(kMaxHalvings) + " halvings");
        ++halvings;
        std::array<double, 2> n{0.0, 0.0};
        if (!zero_) n = normals<2>(gen_, {tag, path_, 1u + static_cast<std::uint32_t>(depth) + 16u * level, pos << 16});
        const double sd = std::sqrt(h / 4);
        const double a1 = 0.5 * db1 + sd * n[0], ap = 0.5 * dbp + sd * n[1];
        step(st, h / 2, a1, ap, tag, level, depth + 1, 2 * pos);
        step(st, h / 2, db1 - a1, dbp - ap, tag, level, depth + 1, 2 * pos + 1);
    }

    /// Increments of both Brownian motions over fine steps 2i and 2i + 1.
    std::array<double, 4> increments(std::uint32_t i, double sd) const {
        if (zero_) return {0.0, 0.0, 0.0, 0.0};
        auto n = normals<4>(gen_, {i, path_, 0u, 0u});
        for (auto& x : n) x *= sd;
        return n;
    }

    long halvings = 0;

private:
    void record(const State& before, const State& after, const Accrual& acc) {
        auto& r = *inv_;
        ++r.steps;
        if (after.Theta > before.Theta) ++r.theta_increases;
        const Obs o = m_.observe(after);
        r.min_X = std::min(r.min_X, o.X);
        r.min_C = std::min(r.min_C, o.C);
        r.max_Z_over = std::max(r.max_Z_over, m_.z_over(after));
        r.max_complementarity = std::max(r.max_complementarity, std::abs(acc.distance * acc.dL));
        if (acc.dL > 0 && m_.pre_admissible(acc.pre)) ++r.L_off_boundary;
    }

    const Model& m_;
    const Philox4x32& gen_;
    std::uint32_t path_;
    bool zero_;
    InvariantReport* inv_;
};

long step_count(double T, double dt) {
    const double n = std::round(T / dt);
    if (!(n >= 1) || n > 2e9) throw InvalidParams("horizon and step give an invalid number of steps");
    return static_cast<long>(n);
}

void check_config(const SimConfig& cfg) {
    if (!(cfg.dt > 0)) throw InvalidParams("dt must be positive");
    if (!(cfg.npaths >= 1)) throw InvalidParams("npaths must be at least 1");
    if (cfg.T != 0 && !(cfg.T >= cfg.dt)) throw InvalidParams("horizon must be at least dt");
}

template <class Model>
SimPath run_single(const Model& m, const SimConfig& cfg, double T) {
    check_config(cfg);
    const long n = step_count(T, cfg.dt);
    const Philox4x32 gen(cfg.seed);
    Runner<Model> run(m, gen, 0, cfg.zero_noise, nullptr);
    SimPath p;
    auto push = [&](double t, const State& st) {
        const Obs o = m.observe(st);
        p.t.push_back(t);
        p.Y.push_back(o.Y);
        p.Theta.push_back(o.Theta);
        p.X.push_back(o.X);
        p.Z.push_back(o.Z);
        p.C.push_back(o.C);
        p.Pi.push_back(o.Pi);
        p.L.push_back(st.L);
    };
    State st = m.init();
    push(0.0, st);
    const double sd = std::sqrt(cfg.dt / 2);
    for (long i = 0; i < n; ++i) {
        const auto d = run.increments(static_cast<std::uint32_t>(i), sd);
        run.step(st, cfg.dt, d[0] + d[2], d[1] + d[3], static_cast<std::uint32_t>(2 * i), 0);
        push((i + 1) * cfg.dt, st);
    }
    p.halvings = run.halvings;
    return p;
}

struct PathUtility {
    double coarse, fine;
};

template <class Model>
PathUtility run_utility(const Model& m, const Philox4x32& gen, std::uint32_t path, double dt, long n, bool zero,
                        InvariantReport* inv) {
    Runner<Model> run(m, gen, path, zero, inv);
    const double R = m.cm.R, beta = m.cm.beta, h = dt / 2, sd = std::sqrt(h);
    // Y is exogenous and shared by both grids, so its discounted power is computed once.
    auto ydisc = [&](const State& st, double t) {
        return Model::uses_y ? std::exp((1 - R) * st.lnY - beta * t) : 0.0;
    };
    State sc = m.init(), sf = sc;
    const double u0 = m.utility(sc, ydisc(sc, 0.0), 0.0);
    double fc = u0, ff = u0, Ic = 0.0, If = 0.0;
    for (long i = 0; i < n; ++i) {
        const auto tag = static_cast<std::uint32_t>(2 * i);
        const auto d = run.increments(static_cast<std::uint32_t>(i), sd);
        run.step(sf, h, d[0], d[1], tag, 1);
        double t = (2 * i + 1) * h;
        double f = m.utility(sf, ydisc(sf, t), t);
        If += 0.5 * h * (ff + f);
        ff = f;
        run.step(sf, h, d[2], d[3], tag + 1, 1);
        t = (i + 1) * dt;
        const double yd = ydisc(sf, t);
        f = m.utility(sf, yd, t);
        If += 0.5 * h * (ff + f);
        ff = f;
        // An exact scheme puts the coarse path on the fine one at shared times.
        if constexpr (Model::exact) {
            sc = sf;
        } else {
            run.step(sc, dt, d[0] + d[2], d[1] + d[3], tag, 0);
            f = m.utility(sc, yd, t);
        }
        Ic += 0.5 * dt * (fc + f);
        fc = f;
    }
    if (inv) inv->halvings += run.halvings;
    return {Ic, If};
}

template <class Fn>
void parallel_paths(long npaths, Fn fn) {
    const int nt = std::max(1, std::min<int>(worker_threads(), static_cast<int>(npaths)));
    if (nt == 1) {
        fn(0, 0L, npaths);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(nt);
    for (int w = 0; w < nt; ++w) {
        const long lo = npaths * w / nt, hi = npaths * (w + 1) / nt;
        pool.emplace_back([&, w, lo, hi] {
            try {
                fn(w, lo, hi);
            } catch (...) {
                errs[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

void merge(InvariantReport& into, const InvariantReport& r) {
    into.paths += r.paths;
    into.steps += r.steps;
    into.theta_increases += r.theta_increases;
    into.min_X = std::min(into.min_X, r.min_X);
    into.min_C = std::min(into.min_C, r.min_C);
    into.max_Z_over = std::max(into.max_Z_over, r.max_Z_over);
    into.max_complementarity = std::max(into.max_complementarity, r.max_complementarity);
    into.L_off_boundary += r.L_off_boundary;
    into.degeneracy_events += r.degeneracy_events;
    into.halvings += r.halvings;
}

template <class Model>
McSummary mc_with(const Model& m, const Policy& pol, const MarketParams& mp, const SimConfig& cfg) {
    check_config(cfg);
    McSummary s;
    s.regime = pol.regime.regime;
    s.T = cfg.T > 0 ? cfg.T : default_horizon(pol);
    s.dt = cfg.dt;
    s.npaths = cfg.npaths;
    const long n = step_count(s.T, cfg.dt);
    const Philox4x32 gen(cfg.seed);
    std::vector<double> uc(cfg.npaths), uf(cfg.npaths), du(cfg.npaths);
    const int nt = std::max(1, std::min<int>(worker_threads(), static_cast<int>(cfg.npaths)));
    std::vector<InvariantReport> inv(nt);
    for (auto& r : inv) r.min_X = r.min_C = std::numeric_limits<double>::infinity();
    parallel_paths(cfg.npaths, [&](int w, long lo, long hi) {
        for (long p = lo; p < hi; ++p) {
            const auto u = run_utility(m, gen, static_cast<std::uint32_t>(p), cfg.dt, n, cfg.zero_noise,
                                       cfg.track_invariants ? &inv[w] : nullptr);
            uc[p] = u.coarse;
            uf[p] = u.fine;
            du[p] = u.fine - u.coarse;
            ++inv[w].paths;
        }
    });
    s.invariants.min_X = s.invariants.min_C = std::numeric_limits<double>::infinity();
    for (const auto& r : inv) merge(s.invariants, r);
    const auto c = mean_se(uc), f = mean_se(uf), d = mean_se(du);
    s.estimate = c.mean;
    s.stderr_ = c.se;
    s.estimate_half = f.mean;
    s.stderr_half = f.se;
    s.refinement_shift = d.mean;
    s.analytic_value = value(pol, mp.x0, mp.y0, mp.theta0);
    s.z_score = s.stderr_ > 0 ? (s.estimate - s.analytic_value) / s.stderr_ : 0.0;
    const double rate = std::pow(pol.g0, -1.0 / pol.R) * std::min(pol.n_limit, 1.0);
    s.tail_bound = std::exp(-rate * s.T);
    return s;
}

}  // namespace

bool InvariantReport::pass() const {
    return theta_increases == 0 && min_X >= -1e-12 && min_C >= 0 && max_Z_over <= 1e-12 &&
           max_complementarity <= 1e-15 && L_off_boundary == 0;
}

int worker_threads() {
    if (const char* e = std::getenv("ENDOW_THREADS")) {
        const int n = std::atoi(e);
        if (n >= 1) return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

double default_horizon(const Policy& pol) {
    const double rate = std::pow(pol.g0, -1.0 / pol.R) * std::min(pol.n_limit, 1.0);
    return std::log(1e4) / rate;
}

SimPath simulate_regime1(const MarketParams& mp, const AuxParams& ap, const SimConfig& cfg) {
    check_market(mp);
    if (ap.b3 > 0) throw RegimeMismatch("the sell-all simulation needs b3 <= 0");
    const double g0 = std::pow(ap.b1 / (ap.b4 * mp.R), -mp.R);
    const MertonModel m(mp, ap, g0, mp.x0 + mp.y0 * mp.theta0);
    const double T = cfg.T > 0 ? cfg.T : std::log(1e4) / std::pow(g0, -1.0 / mp.R);
    return run_single(m, cfg, T);
}

SimPath simulate_regime2(const Policy& pol, const MarketParams& mp, const SimConfig& cfg) {
    if (pol.regime.regime != Regime::FiniteRatio) throw RegimeMismatch("simulate_regime2 needs a finite critical ratio");
    const double T = cfg.T > 0 ? cfg.T : default_horizon(pol);
    if (mp.theta0 == 0) return run_single(MertonModel(mp, pol.aux, pol.g0, mp.x0), cfg, T);
    return run_single(FiniteRatioModel(pol, mp, cfg.scheme), cfg, T);
}

SimPath simulate_regime3(const Policy& pol, const MarketParams& mp, const SimConfig& cfg) {
    if (pol.regime.regime != Regime::NoFiniteRatio) throw RegimeMismatch("simulate_regime3 needs q* = 1");
    const double T = cfg.T > 0 ? cfg.T : default_horizon(pol);
    return run_single(NoFiniteRatioModel(pol, mp, cfg.scheme), cfg, T);
}

SimPath simulate(const Policy& pol, const MarketParams& mp, const SimConfig& cfg) {
    switch (pol.regime.regime) {
        case Regime::SellAll: return simulate_regime1(mp, pol.aux, cfg);
        case Regime::FiniteRatio: return simulate_regime2(pol, mp, cfg);
        case Regime::NoFiniteRatio: return simulate_regime3(pol, mp, cfg);
        case Regime::IllPosed: break;
    }
    throw IllPosedValue("no optimal strategy to simulate when the value function is infinite");
}

McSummary monte_carlo(const Policy& pol, const MarketParams& mp, const SimConfig& cfg) {
    switch (pol.regime.regime) {
        case Regime::SellAll:
            return mc_with(MertonModel(mp, pol.aux, pol.g0, mp.x0 + mp.y0 * mp.theta0), pol, mp, cfg);
        case Regime::FiniteRatio:
            if (mp.theta0 == 0) return mc_with(MertonModel(mp, pol.aux, pol.g0, mp.x0), pol, mp, cfg);
            return mc_with(FiniteRatioModel(pol, mp, cfg.scheme), pol, mp, cfg);
        case Regime::NoFiniteRatio: return mc_with(NoFiniteRatioModel(pol, mp, cfg.scheme), pol, mp, cfg);
        case Regime::IllPosed: break;
    }
    throw IllPosedValue("no optimal strategy to simulate when the value function is infinite");
}

UtilityGrowthReport demo_illposed(const MarketParams& mp, const AuxParams& ap, const SimConfig& cfg) {
    check_market(mp);
    check_config(cfg);
    const double R = mp.R;
    if (!(R < 1) || ap.b3 < illposed_threshold(ap.b1, ap.b2, R))
        throw RegimeMismatch("demo_illposed needs R < 1 and b3 >= b1/(1-R) + b2 R");
    if (!(ap.lambda > 0)) throw InvalidParams("the explicit strategy consumes at rate lambda eta and needs lambda > 0");
    UtilityGrowthReport rep;
    const double eta = mp.eta, zeta = ap.zeta, lam = ap.lambda;
    rep.exponent = zeta * eta * (1 - R) - 0.5 * eta * eta * R * (1 - R) + mp.r * (1 - R) - mp.beta;
    const double T = cfg.T > 0 ? cfg.T : 10.0;
    rep.horizons = {T, 2 * T, 4 * T};
    const long n1 = step_count(T, cfg.dt);
    const long ntot = 4 * n1;
    const Philox4x32 gen(cfg.seed);
    const double dt = cfg.dt, sd = std::sqrt(dt), rp = std::sqrt(1 - mp.rho * mp.rho);
    const double xdrift = zeta * eta + mp.r - 0.5 * eta * eta;
    std::vector<std::vector<double>> u(3, std::vector<double>(cfg.npaths));
    const int nt = std::max(1, std::min<int>(worker_threads(), static_cast<int>(cfg.npaths)));
    std::vector<double> min_theta(nt, mp.theta0);
    std::vector<char> mono(nt, 1);
    parallel_paths(cfg.npaths, [&](int w, long lo, long hi) {
        for (long p = lo; p < hi; ++p) {
            double X = mp.x0, Y = mp.y0, Th = mp.theta0, B1 = 0.0, I = 0.0;
            auto f = [&](double x, double t) { return std::exp((1 - R) * std::log(lam * eta * x) - mp.beta * t) / (1 - R); };
            double fp = f(X, 0.0);
            for (long i = 0; i < ntot; ++i) {
                std::array<double, 2> z{0.0, 0.0};
                if (!cfg.zero_noise) z = normals<2>(gen, {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(p), 0u, 0u});
                const double db1 = sd * z[0], db2 = mp.rho * db1 + rp * sd * z[1];
                const double th_new = Th - zeta * eta * X / Y * dt;
                if (th_new > Th) mono[w] = 0;
                Th = th_new;
                min_theta[w] = std::min(min_theta[w], Th);
                B1 += db1;
                const double t = (i + 1) * dt;
                X = mp.x0 * std::exp(xdrift * t + eta * B1);
                Y *= std::exp((mp.alpha - 0.5 * eta * eta) * dt + eta * db2);
                const double fn = f(X, t);
                I += 0.5 * dt * (fp + fn);
                fp = fn;
                if (i + 1 == n1) u[0][p] = I;
                if (i + 1 == 2 * n1) u[1][p] = I;
            }
            u[2][p] = I;
        }
    });
    rep.min_theta = *std::min_element(min_theta.begin(), min_theta.end());
    rep.theta_monotone = std::all_of(mono.begin(), mono.end(), [](char c) { return c != 0; });
    const double scale = std::pow(lam * eta * mp.x0, 1 - R) / (1 - R);
    for (int k = 0; k < 3; ++k) {
        const auto ms = mean_se(u[k]);
        rep.estimate.push_back(ms.mean);
        rep.stderr_.push_back(ms.se);
        const double H = rep.horizons[k];
        const double e = rep.exponent;
        rep.analytic.push_back(scale * (std::abs(e * H) < 1e-12 ? H : std::expm1(e * H) / e));
    }
    rep.increasing = rep.estimate[0] < rep.estimate[1] && rep.estimate[1] < rep.estimate[2];
    return rep;
}

std::string path_csv(const SimPath& p) {
    return csv_table({"t", "Y", "Theta", "X", "Z", "C", "Pi", "L"}, {p.t, p.Y, p.Theta, p.X, p.Z, p.C, p.Pi, p.L});
}

namespace {

nlohmann::ordered_json num(double v) {
    if (std::isfinite(v)) return v;
    return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
}

}  // namespace

std::string mc_summary_json(const McSummary& s) {
    nlohmann::ordered_json j;
    j["estimate"] = num(s.estimate);
    j["stderr"] = num(s.stderr_);
    j["npaths"] = s.npaths;
    j["dt"] = s.dt;
    j["T"] = s.T;
    j["analytic_value"] = num(s.analytic_value);
    j["z_score"] = num(s.z_score);
    j["regime"] = to_string(s.regime);
    j["estimate_half_dt"] = num(s.estimate_half);
    j["stderr_half_dt"] = num(s.stderr_half);
    j["refinement_shift"] = num(s.refinement_shift);
    j["tail_bound"] = num(s.tail_bound);
    const auto& iv = s.invariants;
    j["invariants"] = {{"paths", iv.paths},
                       {"steps", iv.steps},
                       {"theta_increases", iv.theta_increases},
                       {"min_X", num(iv.min_X)},
                       {"min_C", num(iv.min_C)},
                       {"max_Z_over", num(iv.max_Z_over)},
                       {"max_complementarity", num(iv.max_complementarity)},
                       {"L_off_boundary", iv.L_off_boundary},
                       {"halvings", iv.halvings},
                       {"pass", iv.pass()}};
    return j.dump(2);
}

std::string growth_report_json(const UtilityGrowthReport& r) {
    nlohmann::ordered_json j;
    j["horizons"] = r.horizons;
    j["estimate"] = r.estimate;
    j["stderr"] = r.stderr_;
    j["analytic"] = r.analytic;
    j["exponent"] = r.exponent;
    j["min_theta"] = r.min_theta;
    j["theta_monotone"] = r.theta_monotone;
    j["increasing"] = r.increasing;
    return j.dump(2);
}

}  // namespace endow
