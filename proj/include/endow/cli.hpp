#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "endow/params.hpp"
#include "endow/sim.hpp"

namespace endow {

enum class Command { Classify, Solve, B3Crit, Sweep, Simulate, Verify, Regions };
enum class Format { Csv, Json };

/// Exit codes shared by every command.
enum ExitCode : int {
    kExitOk = 0,
    kExitError = 1,
    kExitInvalid = 2,
    kExitDegenerate = 3,
    kExitVerifier = 4,
    kExitSimulation = 5,
};

/// One axis of a grid spec `name=lo:hi:count`.
struct GridAxis {
    std::string name;
    double lo = 0.0, hi = 0.0;
    int count = 1;
    std::vector<double> values() const;
};

/// Comma-separated axes, e.g. `b2=1:10:19,b3=-0.5:3:36`.
std::vector<GridAxis> parse_grid(const std::string& spec);

/// Either raw market constants or auxiliary parameters, with key=value overrides.
struct ProblemInput {
    bool aux_mode = false;
    std::map<std::string, double> aux;  ///< b1, b2, b3, R and optional b4, x0, y0, theta0
    std::string market_json;            ///< raw mode
};

/// Parses `k=v` tokens into a map; unknown keys raise InvalidParams.
std::map<std::string, double> parse_assignments(const std::vector<std::string>& tokens,
                                                const std::vector<std::string>& allowed);

/// Resolves an input to market and auxiliary parameters, applying overrides first.
struct Problem {
    MarketParams market;
    AuxParams aux;
};
Problem resolve(const ProblemInput& in, const std::map<std::string, double>& overrides = {});

struct RegionCell {
    double b2, b3;
    Regime regime;
};

struct RegionMap {
    double b1 = 0.0, R = 0.5;
    std::vector<double> b2, b3;
    std::vector<std::optional<double>> b3_crit;  ///< per b2 column
    std::vector<RegionCell> cells;               ///< b2-major
    std::string csv() const;
    std::string json() const;
};

/// Regime of every (b2, b3) cell, with b3_crit computed once per b2 column.
RegionMap region_map(double b1, double R, const std::vector<double>& b2, const std::vector<double>& b3);

struct SweepRow {
    std::vector<double> coords;  ///< one value per axis
    AuxParams aux;
    Regime regime = Regime::SellAll;
    double qstar = 0.0, zstar = 0.0, price = 0.0;
};

struct SweepResult {
    std::vector<GridAxis> axes;
    std::vector<SweepRow> rows;  ///< last axis varies fastest
    long qstar_violations = 0;
    long price_violations = 0;
    std::vector<std::string> violations;
    std::string csv() const;
    std::string json() const;
};

/// Expected direction of q* and p along an axis: +1, -1 or 0 when unknown.
int expected_direction(const std::string& axis, bool aux_mode);

/// Cartesian sweep of the input over the axes, with monotonicity checks along
/// every axis whose direction is known.
SweepResult run_sweep(const ProblemInput& in, const std::vector<GridAxis>& axes);

/// Entry point of the command-line tool.
int cli_main(int argc, char** argv);

}  // namespace endow
