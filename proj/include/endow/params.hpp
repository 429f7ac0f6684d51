#pragma once

#include <optional>
#include <string>

namespace endow {

/// Raw market constants and initial state.
struct MarketParams {
    double r = 0.0;
    double beta = 0.0;
    double mu = 0.0;
    double sigma = 1.0;
    double alpha = 0.0;
    double eta = 1.0;
    double rho = 0.0;
    double R = 0.5;
    double x0 = 1.0;
    double y0 = 1.0;
    double theta0 = 0.0;
};

/// Dimensionless parameters the solution depends on.
struct AuxParams {
    double b1 = 0.0;
    double b2 = 1.0;
    double b3 = 0.0;
    double b4 = 1.0;
    double lambda = 0.0;  ///< hedge-asset Sharpe ratio
    double zeta = 0.0;    ///< endowed-asset Sharpe ratio
};

enum class Regime { SellAll, FiniteRatio, NoFiniteRatio, IllPosed };

std::string to_string(Regime r);

struct RegimeReport {
    Regime regime = Regime::SellAll;
    std::optional<double> b3_crit;
    double qstar = 0.0;
    std::string notes;
};

/// Throws InvalidParams when an invariant of MarketParams fails.
void check_market(const MarketParams& mp);

AuxParams derive_aux_params(const MarketParams& mp);

/// b2 through 1 + (lambda/(eta R) - rho)^2 / (1 - rho^2).
double b2_identity(const MarketParams& mp);

/// Throws DegenerateMerton unless b1 > 0.
void validate_wellposed(const AuxParams& ap, double R);

/// Upper end of the bracket holding b3_crit.
double b3_bar(double b1, double R);

/// b1/(1-R) + b2 R; only meaningful for R < 1.
double illposed_threshold(double b1, double b2, double R);

/// Regime tag from (b1, b2, b3, R) given a known b3_crit (not consulted when the
/// tag is decided without it).
Regime regime_from(double b1, double b2, double b3, double R, std::optional<double> b3_crit);

RegimeReport classify_regime(const AuxParams& ap, double R);

/// Market with rho = 0, sigma = 1, r = 0 whose auxiliary parameters are
/// (b1, b2, b3, b4) for the given R. Requires b2 >= 1 and b4 > 0.
MarketParams canonical_market(const AuxParams& ap, double R, double x0 = 1.0, double y0 = 1.0,
                              double theta0 = 0.0);

/// Auxiliary parameters from (b1, b2, b3, R), with b4 defaulting to b1/R.
AuxParams aux_from_b(double b1, double b2, double b3, double R, std::optional<double> b4 = {});

/// Parses a JSON object with exactly the keys r, beta, mu, sigma, alpha, eta,
/// rho, R, x0, y0, theta0. Unknown or missing keys raise InvalidParams.
MarketParams parse_market_params(const std::string& json_text);
std::string market_params_json(const MarketParams& mp);
MarketParams load_market_params(const std::string& path);

}  // namespace endow
