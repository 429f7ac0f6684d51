#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "endow/ode.hpp"
#include "endow/params.hpp"

namespace endow {

/// N(q) = n(q)^(-R) (1-q)^(R-1) on the ODE grid and its inverse W.
class TransformTables {
public:
    OdeSolution sol;
    double R = 0.5;
    Eigen::ArrayXd q;  ///< ODE grid
    Eigen::ArrayXd N;  ///< N on the grid
    double qstar = 0.0;
    double hstar = 1.0;                 ///< N(q*)
    double zstar = 0.0;                 ///< q*/(1-q*), infinite when q* = 1
    double ustar = 0.0;                 ///< ln z*
    bool finite_ratio = false;

    double N_of(double q) const;
    /// N'(q)/N(q)
    double dlogN(double q) const;
    /// Inverse of N: monotone cubic guess polished by safeguarded Newton.
    double W(double s) const;
    double w(double s) const { return (1 - R) * s * W(s); }
    /// w'(s) from the ODE relation.
    double wprime(double s) const;

    void build_inverse();

private:
    struct Inverse;
    std::shared_ptr<const Inverse> inv_;
};

TransformTables build_transforms(const OdeSolution& sol, const AuxParams& ap, double R);

/// Quantities from which g and every feedback rule follow at one z.
struct PolicyState {
    double q = 0.0;      ///< W(h(ln z)), equals z/(1+z) where selling
    double u = 1.0;      ///< 1 - q
    double n = 1.0;
    double F = 0.0;      ///< n'(q); zero on the sale branch
    double k_over_u = 1.0;  ///< (1/z)/(1 - q)
    double q_over_z = 1.0;  ///< q/z
    bool sale = false;
};

/// Value-shape function g with its derivatives and the feedback rules.
class Policy {
public:
    RegimeReport regime;
    AuxParams aux;
    MarketParams market;
    double R = 0.5;
    double zstar = 0.0;     ///< 0 in the sell-all regime, infinity without a finite ratio
    double g0 = 1.0;        ///< (b1/(b4 R))^(-R)
    double n_limit = 1.0;   ///< n(q*), or n(1) without a finite ratio

    PolicyState state(double z) const;
    /// State at k = x/(y theta), valid down to k = 0.
    PolicyState state_k(double k) const;

    double g(double z) const;
    double zgp(double z) const;    ///< z g'(z)
    double z2gpp(double z) const;  ///< z^2 g''(z)
    double gp(double z) const;
    double gpp(double z) const;
    double psi(double z) const;         ///< Psi_g(z)
    double lambda_psi(double z) const;  ///< lambda Psi_g(z), finite also when lambda = 0
    double consumption_ratio(double z) const;  ///< C/x
    double portfolio_ratio(double z) const;    ///< Pi/x
    double price_ratio(double z) const;        ///< p/x
    /// C/(y theta) and lambda Psi_g(1/k) k as functions of k = x/(y theta).
    double k_consumption(double k) const;
    double k_lambda_psi(double k) const;

    /// h(u) = g(e^u)/g0.
    double h(double u) const { return g(std::exp(u)) / g0; }
    /// The inverse of h built from the improper integral (no finite ratio only).
    double gamma(double v) const;

    const OdeSolution* ode() const;
    const TransformTables* tables() const;
    /// Nodes (v, xi) of the logit-coordinate h-ODE solution.
    std::pair<std::vector<double>, std::vector<double>> h_nodes() const;

    struct Impl;
    std::shared_ptr<const Impl> impl;
};

Policy build_regime1(const AuxParams& ap, double R, const MarketParams* market = nullptr);
Policy build_g_finite_ratio(const TransformTables& tt, const AuxParams& ap, double R,
                            const MarketParams* market = nullptr);
Policy build_g_no_finite_ratio(const OdeSolution& sol, const TransformTables& tt, const AuxParams& ap,
                               double R, const MarketParams* market = nullptr);

/// Classifies and builds the matching policy. The market supplies lambda,
/// eta rho and the other raw constants used by the feedback rules and the
/// verifiers; without it the canonical market of the auxiliary parameters is used.
Policy build_policy(const AuxParams& ap, double R, const MarketParams* market = nullptr,
                    const ToleranceOptions& opts = {});
Policy build_policy(const MarketParams& mp, const ToleranceOptions& opts = {});

double value(const Policy& pol, double x, double y, double theta);
double certainty_equivalent(const Policy& pol, double x, double y, double theta);
double feedback_consumption(const Policy& pol, double x, double y, double theta);
double feedback_portfolio(const Policy& pol, double x, double y, double theta);

/// Holdings and cash right after the time-0 sale that brings y theta / x to z*.
std::pair<double, double> initial_sale(const Policy& pol, double x, double y, double theta);

struct ResidualReport {
    std::vector<double> z, hjb, sale_op;
    double max_hjb = 0.0;           ///< max |L G - beta G| / |beta G| where not selling
    double min_sale_op = 0.0;       ///< min M G / g where not selling
    double max_sale_op_sale = 0.0;  ///< max |M G / g| where selling
    double max_regime1 = 0.0;       ///< max of the sell-all inequality expression
    double max_fd_mismatch = 0.0;   ///< analytic vs differenced z g', z^2 g''
    bool pass = false;
    std::string notes;
};

struct ShapeReport {
    bool monotone = true;
    bool curvature = true;
    double max_hessian = 0.0;      ///< max of ((1-R) g z^2 g'' + R (z g')^2)/g^2
    double hessian_at_zstar = 0.0;
    long wprime_violations = 0;
    double wprime_fd_error = 0.0;
    double wprime_upper_gap_at_hstar = 0.0;
    bool pass = false;
    std::string notes;
};

ResidualReport verify_hjb(const Policy& pol, const std::vector<double>& zgrid);
ShapeReport verify_shape(const Policy& pol, const std::vector<double>& zgrid);

/// Raw L G - beta G at x = 1 from market constants.
double hjb_operator(const Policy& pol, double G, double G1, double G2);

/// Grid on (0, zmax] used by verifiers and exports.
std::vector<double> default_zgrid(const Policy& pol, int points);

std::string policy_csv(const Policy& pol, const std::vector<double>& zgrid);
std::string policy_summary_json(const Policy& pol);

}  // namespace endow
