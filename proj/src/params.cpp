#include "endow/params.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "endow/errors.hpp"
#include "endow/ode.hpp"

namespace endow {

std::string to_string(Regime r) {
    switch (r) {
        case Regime::SellAll: return "SellAll";
        case Regime::FiniteRatio: return "FiniteRatio";
        case Regime::NoFiniteRatio: return "NoFiniteRatio";
        case Regime::IllPosed: return "IllPosed";
    }
    return "Unknown";
}

void check_market(const MarketParams& mp) {
    auto fail = [](const std::string& what) { throw InvalidParams(what); };
    const double vals[] = {mp.r, mp.beta, mp.mu, mp.sigma, mp.alpha, mp.eta,
                           mp.rho, mp.R, mp.x0, mp.y0, mp.theta0};
    for (double v : vals)
        if (!std::isfinite(v)) fail("non-finite market parameter");
    if (!(mp.sigma > 0)) fail("sigma must be positive");
    if (!(mp.eta > 0)) fail("eta must be positive");
    if (!(std::abs(mp.rho) < 1)) fail("rho must lie in (-1, 1)");
    if (!(mp.R > 0) || mp.R == 1.0) fail("R must be positive and different from 1");
    if (!(mp.x0 >= 0)) fail("x0 must be non-negative");
    if (!(mp.y0 > 0)) fail("y0 must be positive");
    if (!(mp.theta0 >= 0)) fail("theta0 must be non-negative");
    if (!(mp.x0 + mp.y0 * mp.theta0 > 0)) fail("total initial wealth must be positive");
}

AuxParams derive_aux_params(const MarketParams& mp) {
    check_market(mp);
    const double R = mp.R, eta = mp.eta, rho = mp.rho;
    const double one_m_rho2 = 1.0 - rho * rho;
    AuxParams ap;
    ap.lambda = (mp.mu - mp.r) / mp.sigma;
    ap.zeta = (mp.alpha - mp.r) / eta;
    const double lam = ap.lambda;
    ap.b4 = 2.0 / (eta * eta * one_m_rho2);
    ap.b1 = ap.b4 * (mp.beta - mp.r * (1 - R) - lam * lam * (1 - R) / (2 * R));
    ap.b2 = (lam * lam - 2 * R * eta * rho * lam + eta * eta * R * R) /
            (eta * eta * R * R * one_m_rho2);
    ap.b3 = 2 * (ap.zeta - lam * rho) / (eta * one_m_rho2);
    return ap;
}

double b2_identity(const MarketParams& mp) {
    const double lam = (mp.mu - mp.r) / mp.sigma;
    const double d = lam / (mp.eta * mp.R) - mp.rho;
    return 1.0 + d * d / (1.0 - mp.rho * mp.rho);
}

void validate_wellposed(const AuxParams& ap, double /*R*/) {
    if (!(ap.b1 > 0))
        throw DegenerateMerton("b1 <= 0: the frictionless problem has no finite certainty equivalent");
}

double b3_bar(double b1, double R) {
    if (R > 1) return 2 * R;
    return std::min(2 * R, R + b1 / (1 - R));
}

double illposed_threshold(double b1, double b2, double R) { return b1 / (1 - R) + b2 * R; }

Regime regime_from(double b1, double b2, double b3, double R, std::optional<double> b3_crit) {
    if (b3 <= 0) return Regime::SellAll;
    if (R < 1 && b3 >= illposed_threshold(b1, b2, R)) return Regime::IllPosed;
    if (b3 <= R) return Regime::FiniteRatio;
    if (!b3_crit) throw Error("regime_from: b3_crit required");
    return b3 < *b3_crit ? Regime::FiniteRatio : Regime::NoFiniteRatio;
}

RegimeReport classify_regime(const AuxParams& ap, double R) {
    validate_wellposed(ap, R);
    if (!(R > 0) || R == 1.0) throw InvalidParams("R must be positive and different from 1");
    if (!(ap.b2 >= 1 - 1e-12)) throw InvalidParams("b2 must be at least 1");
    RegimeReport rep;
    std::optional<double> crit;
    if (ap.b3 > R && !(R < 1 && ap.b3 >= illposed_threshold(ap.b1, ap.b2, R)))
        crit = find_b3_crit(ap.b1, ap.b2, R);
    rep.regime = regime_from(ap.b1, ap.b2, ap.b3, R, crit);
    rep.b3_crit = crit;
    switch (rep.regime) {
        case Regime::SellAll:
            rep.qstar = 0.0;
            break;
        case Regime::IllPosed:
            rep.qstar = 1.0;
            rep.notes = "value function is infinite";
            break;
        case Regime::NoFiniteRatio:
            rep.qstar = 1.0;
            break;
        case Regime::FiniteRatio: {
            auto sol = integrate_n(CoefficientSet{ap.b1, ap.b2, ap.b3, R});
            if (sol.terminated_by != Termination::CrossedM)
                throw IntegrationFailure("finite-ratio regime without a crossing");
            rep.qstar = sol.qstar;
            rep.notes = sol.notes;
            if (!crit) rep.notes += (rep.notes.empty() ? "" : "; ") + std::string("b3 <= R, bisection skipped");
            break;
        }
    }
    return rep;
}

MarketParams canonical_market(const AuxParams& ap, double R, double x0, double y0, double theta0) {
    if (!(ap.b4 > 0)) throw InvalidParams("b4 must be positive");
    if (!(ap.b2 >= 1 - 1e-12)) throw InvalidParams("b2 must be at least 1");
    MarketParams mp;
    mp.R = R;
    mp.r = 0.0;
    mp.sigma = 1.0;
    mp.rho = 0.0;
    mp.eta = std::sqrt(2.0 / ap.b4);
    const double lam = mp.eta * R * std::sqrt(std::max(ap.b2 - 1.0, 0.0));
    mp.mu = lam;
    mp.alpha = ap.b3 * mp.eta * mp.eta / 2.0;
    mp.beta = ap.b1 / ap.b4 + lam * lam * (1 - R) / (2 * R);
    mp.x0 = x0;
    mp.y0 = y0;
    mp.theta0 = theta0;
    return mp;
}

AuxParams aux_from_b(double b1, double b2, double b3, double R, std::optional<double> b4) {
    AuxParams ap;
    ap.b1 = b1;
    ap.b2 = b2;
    ap.b3 = b3;
    ap.b4 = b4 ? *b4 : b1 / R;
    if (!(ap.b4 > 0)) ap.b4 = 1.0 / R;
    const double eta = std::sqrt(2.0 / ap.b4);
    ap.lambda = eta * R * std::sqrt(std::max(b2 - 1.0, 0.0));
    ap.zeta = b3 * eta / 2.0;
    return ap;
}

namespace {
const char* const kKeys[] = {"r", "beta", "mu", "sigma", "alpha", "eta",
                             "rho", "R", "x0", "y0", "theta0"};
}

MarketParams parse_market_params(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidParams(std::string("bad parameter JSON: ") + e.what());
    }
    if (!j.is_object()) throw InvalidParams("parameter JSON must be an object");
    std::set<std::string> known(std::begin(kKeys), std::end(kKeys));
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key())) throw InvalidParams("unknown parameter key: " + it.key());
    auto get = [&](const char* k) {
        if (!j.contains(k)) throw InvalidParams(std::string("missing parameter key: ") + k);
        if (!j[k].is_number()) throw InvalidParams(std::string("parameter is not a number: ") + k);
        return j[k].get<double>();
    };
    MarketParams mp;
    mp.r = get("r");
    mp.beta = get("beta");
    mp.mu = get("mu");
    mp.sigma = get("sigma");
    mp.alpha = get("alpha");
    mp.eta = get("eta");
    mp.rho = get("rho");
    mp.R = get("R");
    mp.x0 = get("x0");
    mp.y0 = get("y0");
    mp.theta0 = get("theta0");
    check_market(mp);
    return mp;
}

std::string market_params_json(const MarketParams& mp) {
    nlohmann::ordered_json j;
    j["r"] = mp.r;
    j["beta"] = mp.beta;
    j["mu"] = mp.mu;
    j["sigma"] = mp.sigma;
    j["alpha"] = mp.alpha;
    j["eta"] = mp.eta;
    j["rho"] = mp.rho;
    j["R"] = mp.R;
    j["x0"] = mp.x0;
    j["y0"] = mp.y0;
    j["theta0"] = mp.theta0;
    return j.dump(2);
}

MarketParams load_market_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidParams("cannot open parameter file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_market_params(ss.str());
}

}  // namespace endow
