#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "endow/params.hpp"
#include "endow/policy.hpp"

namespace endow {

/// ReflectedEuler projects the end point back onto the boundary. BridgeReflected
/// also reflects excursions inside a step, using the maximum of the Brownian
/// bridge between the end points.
enum class Scheme { ReflectedEuler, BridgeReflected };

struct SimConfig {
    double dt = 1e-3;
    double T = 0.0;  ///< horizon; 0 picks the default truncation
    long npaths = 1;
    std::uint64_t seed = 0;
    Scheme scheme = Scheme::BridgeReflected;
    bool zero_noise = false;  ///< force every Brownian increment to 0
    bool track_invariants = true;  ///< collect InvariantReport during Monte Carlo
};

/// One sampled path on t = 0, dt, ..., T.
struct SimPath {
    std::vector<double> t, Y, Theta, X, Z, C, Pi, L;
    long degeneracy_events = 0;
    long halvings = 0;
};

/// Pathwise admissibility and reflection bookkeeping over many paths.
struct InvariantReport {
    long paths = 0;
    long steps = 0;
    long theta_increases = 0;
    double min_X = 0.0;
    double min_C = 0.0;
    double max_Z_over = 0.0;          ///< max of Z - z* (regime 2)
    double max_complementarity = 0.0; ///< max |boundary distance * dL| where L accrues
    long L_off_boundary = 0;          ///< steps with dL > 0 where the unreflected state stayed admissible
    long degeneracy_events = 0;
    long halvings = 0;
    bool pass() const;
};

struct McSummary {
    Regime regime = Regime::SellAll;
    double estimate = 0.0;
    double stderr_ = 0.0;
    double estimate_half = 0.0;  ///< same paths at dt/2
    double stderr_half = 0.0;
    double refinement_shift = 0.0;  ///< estimate_half - estimate
    long npaths = 0;
    double dt = 0.0;
    double T = 0.0;
    double analytic_value = 0.0;
    double z_score = 0.0;
    double tail_bound = 0.0;  ///< relative size of the truncated tail
    InvariantReport invariants;
};

struct UtilityGrowthReport {
    std::vector<double> horizons;
    std::vector<double> estimate;
    std::vector<double> stderr_;
    std::vector<double> analytic;
    double exponent = 0.0;
    double min_theta = 0.0;
    bool theta_monotone = true;
    bool increasing = false;
};

/// Default horizon ln(1e4)/min(n*, 1), with n* = 1 in the sell-all regime.
double default_horizon(const Policy& pol);

SimPath simulate_regime1(const MarketParams& mp, const AuxParams& ap, const SimConfig& cfg);
SimPath simulate_regime2(const Policy& pol, const MarketParams& mp, const SimConfig& cfg);
SimPath simulate_regime3(const Policy& pol, const MarketParams& mp, const SimConfig& cfg);
/// Dispatches on the policy regime.
SimPath simulate(const Policy& pol, const MarketParams& mp, const SimConfig& cfg);

/// Discounted utility by Monte Carlo at dt and dt/2 on shared Brownian paths.
McSummary monte_carlo(const Policy& pol, const MarketParams& mp, const SimConfig& cfg);

UtilityGrowthReport demo_illposed(const MarketParams& mp, const AuxParams& ap, const SimConfig& cfg);

std::string path_csv(const SimPath& p);
std::string mc_summary_json(const McSummary& s);
std::string growth_report_json(const UtilityGrowthReport& r);

/// Worker count from ENDOW_THREADS, defaulting to the hardware concurrency.
int worker_threads();

}  // namespace endow
