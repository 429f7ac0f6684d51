#include "endow/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "endow/errors.hpp"
#include "endow/io.hpp"
#include "endow/ode.hpp"
#include "endow/policy.hpp"

namespace endow {

namespace {

using ojson = nlohmann::ordered_json;

const std::vector<std::string> kAuxKeys = {"b1", "b2", "b3", "b4", "R", "x0", "y0", "theta0"};
const std::vector<std::string> kMarketKeys = {"r", "beta", "mu", "sigma", "alpha", "eta",
                                              "rho", "R", "x0", "y0", "theta0"};

double parse_number(const std::string& s, const std::string& what) {
    try {
        size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw InvalidParams("cannot read a number from '" + s + "' in " + what);
    }
}

ojson num(double v) {
    if (std::isfinite(v)) return v;
    return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
}

std::string text17(double v) {
    if (std::isfinite(v)) return fmt17(v);
    return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
}

double zstar_of(double q) { return q < 1 ? q / (1 - q) : std::numeric_limits<double>::infinity(); }

}  // namespace

std::vector<double> GridAxis::values() const {
    std::vector<double> v(count);
    for (int i = 0; i < count; ++i) v[i] = count == 1 ? lo : lo + (hi - lo) * i / (count - 1);
    return v;
}

std::vector<GridAxis> parse_grid(const std::string& spec) {
    std::vector<GridAxis> axes;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) throw InvalidParams("grid axis '" + item + "' is not name=lo:hi:count");
        GridAxis ax;
        ax.name = item.substr(0, eq);
        std::vector<std::string> parts;
        std::stringstream ps(item.substr(eq + 1));
        std::string part;
        while (std::getline(ps, part, ':')) parts.push_back(part);
        if (parts.size() != 3) throw InvalidParams("grid axis '" + item + "' is not name=lo:hi:count");
        ax.lo = parse_number(parts[0], "grid");
        ax.hi = parse_number(parts[1], "grid");
        const double c = parse_number(parts[2], "grid");
        if (!(c >= 1) || c != std::floor(c) || c > 1e6) throw InvalidParams("grid count must be a positive integer");
        ax.count = static_cast<int>(c);
        for (const auto& a : axes)
            if (a.name == ax.name) throw InvalidParams("grid axis '" + ax.name + "' given twice");
        axes.push_back(ax);
    }
    if (axes.empty()) throw InvalidParams("empty grid spec");
    return axes;
}

std::map<std::string, double> parse_assignments(const std::vector<std::string>& tokens,
                                                const std::vector<std::string>& allowed) {
    std::map<std::string, double> out;
    for (const auto& t : tokens) {
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw InvalidParams("expected key=value, got '" + t + "'");
        const std::string k = t.substr(0, eq);
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
            throw InvalidParams("unknown key '" + k + "'");
        if (out.count(k)) throw InvalidParams("key '" + k + "' given twice");
        out[k] = parse_number(t.substr(eq + 1), k);
    }
    return out;
}

Problem resolve(const ProblemInput& in, const std::map<std::string, double>& overrides) {
    Problem pr;
    if (in.aux_mode) {
        auto a = in.aux;
        for (const auto& [k, v] : overrides) {
            if (std::find(kAuxKeys.begin(), kAuxKeys.end(), k) == kAuxKeys.end())
                throw InvalidParams("'" + k + "' is not an auxiliary parameter");
            a[k] = v;
        }
        for (const char* k : {"b1", "b2", "b3", "R"})
            if (!a.count(k)) throw InvalidParams(std::string("--aux needs ") + k);
        auto get = [&](const char* k, double d) { return a.count(k) ? a.at(k) : d; };
        const double R = a.at("R");
        if (!(R > 0) || R == 1.0) throw InvalidParams("R must be positive and different from 1");
        std::optional<double> b4;
        if (a.count("b4")) b4 = a.at("b4");
        pr.aux = aux_from_b(a.at("b1"), a.at("b2"), a.at("b3"), R, b4);
        pr.market = canonical_market(pr.aux, R, get("x0", 1.0), get("y0", 1.0), get("theta0", 1.0));
        check_market(pr.market);
        return pr;
    }
    ojson j;
    try {
        j = ojson::parse(in.market_json);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidParams(std::string("params file is not valid JSON: ") + e.what());
    }
    for (const auto& [k, v] : overrides) {
        if (std::find(kMarketKeys.begin(), kMarketKeys.end(), k) == kMarketKeys.end())
            throw InvalidParams("'" + k + "' is not a market parameter");
        j[k] = v;
    }
    pr.market = parse_market_params(j.dump());
    pr.aux = derive_aux_params(pr.market);
    return pr;
}

// ---------------------------------------------------------------- regions

RegionMap region_map(double b1, double R, const std::vector<double>& b2, const std::vector<double>& b3) {
    if (!(b1 > 0)) throw DegenerateMerton("region map needs b1 > 0");
    if (!(R > 0) || R == 1.0) throw InvalidParams("R must be positive and different from 1");
    RegionMap m;
    m.b1 = b1;
    m.R = R;
    m.b2 = b2;
    m.b3 = b3;
    for (double c : b2) {
        if (!(c >= 1)) throw InvalidParams("b2 must be at least 1");
        const bool needed = std::any_of(b3.begin(), b3.end(), [&](double v) {
            return v > R && !(R < 1 && v >= illposed_threshold(b1, c, R));
        });
        std::optional<double> crit;
        if (needed) crit = find_b3_crit(b1, c, R);
        m.b3_crit.push_back(crit);
        for (double v : b3) m.cells.push_back({c, v, regime_from(b1, c, v, R, crit)});
    }
    return m;
}

std::string RegionMap::csv() const {
    std::ostringstream os;
    const bool frontier = R < 1;
    os << "b2,b3,regime,b3_crit" << (frontier ? ",illposed_frontier" : "") << '\n';
    for (size_t i = 0; i < cells.size(); ++i) {
        const auto& c = cells[i];
        const auto& crit = b3_crit[i / b3.size()];
        os << fmt17(c.b2) << ',' << fmt17(c.b3) << ',' << to_string(c.regime) << ','
           << (crit ? fmt17(*crit) : std::string("nan"));
        if (frontier) os << ',' << fmt17(illposed_threshold(b1, c.b2, R));
        os << '\n';
    }
    return os.str();
}

std::string RegionMap::json() const {
    ojson j;
    j["b1"] = b1;
    j["R"] = R;
    j["b2"] = b2;
    j["b3"] = b3;
    ojson crit = ojson::array();
    for (const auto& c : b3_crit) crit.push_back(c ? ojson(*c) : ojson(nullptr));
    j["b3_crit"] = crit;
    if (R < 1) {
        std::vector<double> f;
        for (double c : b2) f.push_back(illposed_threshold(b1, c, R));
        j["illposed_frontier"] = f;
    }
    ojson reg = ojson::array();
    for (const auto& c : cells) reg.push_back(to_string(c.regime));
    j["regime"] = reg;
    return j.dump(2);
}

// ---------------------------------------------------------------- sweep

int expected_direction(const std::string& axis, bool aux_mode) {
    if (aux_mode) {
        if (axis == "b1" || axis == "b2") return -1;
        if (axis == "b3") return 1;
        return 0;
    }
    if (axis == "alpha") return 1;
    if (axis == "beta") return -1;
    return 0;
}

SweepResult run_sweep(const ProblemInput& in, const std::vector<GridAxis>& axes) {
    SweepResult res;
    res.axes = axes;
    std::vector<std::vector<double>> vals;
    size_t total = 1;
    for (const auto& a : axes) {
        vals.push_back(a.values());
        total *= vals.back().size();
    }
    std::vector<size_t> idx(axes.size(), 0);
    for (size_t n = 0; n < total; ++n) {
        std::map<std::string, double> ov;
        SweepRow row;
        for (size_t k = 0; k < axes.size(); ++k) {
            ov[axes[k].name] = vals[k][idx[k]];
            row.coords.push_back(vals[k][idx[k]]);
        }
        const Problem pr = resolve(in, ov);
        row.aux = pr.aux;
        const Policy pol = build_policy(pr.aux, pr.market.R, &pr.market);
        row.regime = pol.regime.regime;
        row.qstar = pol.regime.qstar;
        row.zstar = zstar_of(row.qstar);
        row.price = row.regime == Regime::IllPosed
                        ? std::numeric_limits<double>::infinity()
                        : certainty_equivalent(pol, pr.market.x0, pr.market.y0, pr.market.theta0);
        res.rows.push_back(row);
        for (size_t k = axes.size(); k-- > 0;) {
            if (++idx[k] < vals[k].size()) break;
            idx[k] = 0;
        }
    }
    // Row stride of each axis in the row-major layout.
    std::vector<size_t> stride(axes.size(), 1);
    for (size_t k = axes.size(); k-- > 1;) stride[k - 1] = stride[k] * vals[k].size();
    for (size_t k = 0; k < axes.size(); ++k) {
        const int dir = expected_direction(axes[k].name, in.aux_mode);
        if (dir == 0) continue;
        for (size_t n = 0; n < total; ++n) {
            if ((n / stride[k]) % vals[k].size() == vals[k].size() - 1) continue;
            const auto& a = res.rows[n];
            const auto& b = res.rows[n + stride[k]];
            auto bad = [&](double x, double y) {
                const double tol = 1e-9 * std::max(1.0, std::abs(x));
                return dir > 0 ? y < x - tol : y > x + tol;
            };
            auto note = [&](const char* what, double x, double y) {
                res.violations.push_back(std::string(what) + " along " + axes[k].name + " from " + fmt17(a.coords[k]) +
                                         " to " + fmt17(b.coords[k]) + ": " + text17(x) + " -> " + text17(y));
            };
            if (bad(a.qstar, b.qstar)) {
                ++res.qstar_violations;
                note("qstar", a.qstar, b.qstar);
            }
            if (bad(a.price, b.price)) {
                ++res.price_violations;
                note("p", a.price, b.price);
            }
        }
    }
    return res;
}

std::string SweepResult::csv() const {
    std::ostringstream os;
    for (const auto& a : axes) os << a.name << ',';
    os << "b1,b2,b3,regime,qstar,zstar,p\n";
    for (const auto& r : rows) {
        for (double c : r.coords) os << fmt17(c) << ',';
        os << fmt17(r.aux.b1) << ',' << fmt17(r.aux.b2) << ',' << fmt17(r.aux.b3) << ',' << to_string(r.regime) << ','
           << fmt17(r.qstar) << ',' << text17(r.zstar) << ',' << text17(r.price) << '\n';
    }
    return os.str();
}

std::string SweepResult::json() const {
    ojson j;
    ojson ax = ojson::array();
    for (const auto& a : axes) ax.push_back({{"name", a.name}, {"lo", a.lo}, {"hi", a.hi}, {"count", a.count}});
    j["axes"] = ax;
    ojson rs = ojson::array();
    for (const auto& r : rows)
        rs.push_back({{"coords", r.coords},
                      {"b1", r.aux.b1},
                      {"b2", r.aux.b2},
                      {"b3", r.aux.b3},
                      {"regime", to_string(r.regime)},
                      {"qstar", r.qstar},
                      {"zstar", num(r.zstar)},
                      {"p", num(r.price)}});
    j["rows"] = rs;
    j["qstar_violations"] = qstar_violations;
    j["price_violations"] = price_violations;
    j["violations"] = violations;
    return j.dump(2);
}

// ---------------------------------------------------------------- commands

namespace {

struct RunConfig {
    Command command = Command::Classify;
    std::string params_path;
    std::vector<std::string> aux_tokens;
    std::vector<std::string> set_tokens;
    std::string output_dir = ".";
    Format format = Format::Csv;
    std::uint64_t seed = 0;
    double dt = 1e-3;
    double horizon = 0.0;
    long npaths = 0;
    std::string grid;
    bool regime_check = false;
    std::string scheme = "bridge";
};

ProblemInput input_of(const RunConfig& cfg) {
    ProblemInput in;
    if (!cfg.aux_tokens.empty() && !cfg.params_path.empty()) throw InvalidParams("give either --params or --aux");
    if (!cfg.aux_tokens.empty()) {
        in.aux_mode = true;
        in.aux = parse_assignments(cfg.aux_tokens, kAuxKeys);
    } else {
        if (cfg.params_path.empty()) throw InvalidParams("--params or --aux is required");
        std::ifstream f(cfg.params_path);
        if (!f) throw InvalidParams("cannot open " + cfg.params_path);
        std::stringstream ss;
        ss << f.rdbuf();
        in.market_json = ss.str();
    }
    return in;
}

Problem problem_of(const RunConfig& cfg) {
    const ProblemInput in = input_of(cfg);
    return resolve(in, parse_assignments(cfg.set_tokens, in.aux_mode ? kAuxKeys : kMarketKeys));
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
    return (std::filesystem::path(cfg.output_dir) / name).string();
}

std::vector<double> zgrid_of(const RunConfig& cfg, const Policy& pol, int points) {
    if (cfg.grid.empty()) return default_zgrid(pol, points);
    const auto axes = parse_grid(cfg.grid);
    if (axes.size() != 1 || axes[0].name != "z") throw InvalidParams("this command takes --grid z=lo:hi:count");
    auto v = axes[0].values();
    for (double z : v)
        if (!(z > 0)) throw InvalidParams("z grid values must be positive");
    return v;
}

int cmd_classify(const RunConfig& cfg) {
    const Problem pr = problem_of(cfg);
    const RegimeReport rep = classify_regime(pr.aux, pr.market.R);
    const double zs = rep.regime == Regime::SellAll ? 0.0 : zstar_of(rep.qstar);
    if (cfg.format == Format::Json) {
        ojson j;
        j["regime"] = to_string(rep.regime);
        j["b3_crit"] = rep.b3_crit ? ojson(*rep.b3_crit) : ojson(nullptr);
        j["qstar"] = rep.qstar;
        j["zstar"] = num(zs);
        j["b1"] = pr.aux.b1;
        j["b2"] = pr.aux.b2;
        j["b3"] = pr.aux.b3;
        j["b4"] = pr.aux.b4;
        j["R"] = pr.market.R;
        if (!rep.notes.empty()) j["notes"] = rep.notes;
        std::cout << j.dump(2) << '\n';
    } else {
        std::cout << to_string(rep.regime);
        if (rep.b3_crit) std::cout << ", b3_crit=" << fmt17(*rep.b3_crit);
        std::cout << ", qstar=" << fmt17(rep.qstar) << ", zstar=" << text17(zs) << '\n';
    }
    return kExitOk;
}

int cmd_b3crit(const RunConfig& cfg) {
    const Problem pr = problem_of(cfg);
    validate_wellposed(pr.aux, pr.market.R);
    const double c = find_b3_crit(pr.aux.b1, pr.aux.b2, pr.market.R);
    if (cfg.format == Format::Json) {
        ojson j;
        j["b1"] = pr.aux.b1;
        j["b2"] = pr.aux.b2;
        j["R"] = pr.market.R;
        j["b3_crit"] = c;
        j["b3_bar"] = b3_bar(pr.aux.b1, pr.market.R);
        std::cout << j.dump(2) << '\n';
    } else {
        std::cout << fmt17(c) << '\n';
    }
    return kExitOk;
}

int cmd_solve(const RunConfig& cfg) {
    const Problem pr = problem_of(cfg);
    const Policy pol = build_policy(pr.aux, pr.market.R, &pr.market);
    const auto& mp = pr.market;
    ojson j = ojson::parse(policy_summary_json(pol));
    j["x0"] = mp.x0;
    j["y0"] = mp.y0;
    j["theta0"] = mp.theta0;
    if (pol.regime.regime == Regime::IllPosed) {
        j["value"] = "inf";
        j["p"] = "inf";
    } else {
        j["value"] = value(pol, mp.x0, mp.y0, mp.theta0);
        j["p"] = certainty_equivalent(pol, mp.x0, mp.y0, mp.theta0);
        j["consumption"] = feedback_consumption(pol, mp.x0, mp.y0, mp.theta0);
        j["portfolio"] = feedback_portfolio(pol, mp.x0, mp.y0, mp.theta0);
        const auto zg = zgrid_of(cfg, pol, 200);
        if (cfg.format == Format::Json) {
            const std::string csv = policy_csv(pol, zg);
            std::istringstream is(csv);
            std::string line;
            std::getline(is, line);
            std::vector<std::string> names;
            std::stringstream hs(line);
            for (std::string h; std::getline(hs, h, ',');) names.push_back(h);
            std::vector<std::vector<double>> cols(names.size());
            while (std::getline(is, line)) {
                std::stringstream ls(line);
                size_t c = 0;
                for (std::string v; std::getline(ls, v, ',') && c < cols.size(); ++c) cols[c].push_back(std::stod(v));
            }
            ojson t;
            for (size_t c = 0; c < names.size(); ++c) t[names[c]] = cols[c];
            write_atomic(out_path(cfg, "policy.json"), t.dump(2) + "\n");
        } else {
            write_atomic(out_path(cfg, "policy.csv"), policy_csv(pol, zg));
        }
        if (const OdeSolution* sol = pol.ode()) write_ode_csv(*sol, out_path(cfg, "ode.csv"));
    }
    write_atomic(out_path(cfg, "summary.json"), j.dump(2) + "\n");
    std::cout << j.dump(2) << '\n';
    return kExitOk;
}

int cmd_verify(const RunConfig& cfg) {
    const Problem pr = problem_of(cfg);
    const Policy pol = build_policy(pr.aux, pr.market.R, &pr.market);
    ojson j;
    j["regime"] = to_string(pol.regime.regime);
    if (pol.regime.regime == Regime::IllPosed) {
        j["pass"] = false;
        j["notes"] = "value function is infinite; there is no solution to verify";
        write_atomic(out_path(cfg, "verify.json"), j.dump(2) + "\n");
        std::cout << j.dump(2) << '\n';
        return kExitVerifier;
    }
    const auto zg = zgrid_of(cfg, pol, 50);
    const ResidualReport h = verify_hjb(pol, zg);
    const ShapeReport s = verify_shape(pol, zg);
    j["hjb"] = {{"max_residual", num(h.max_hjb)},
                {"min_sale_operator", num(h.min_sale_op)},
                {"max_sale_operator_in_sale_region", num(h.max_sale_op_sale)},
                {"max_sell_all_inequality", num(h.max_regime1)},
                {"max_derivative_mismatch", num(h.max_fd_mismatch)},
                {"pass", h.pass},
                {"notes", h.notes}};
    j["shape"] = {{"monotone", s.monotone},
                  {"curvature", s.curvature},
                  {"max_hessian", num(s.max_hessian)},
                  {"hessian_at_zstar", num(s.hessian_at_zstar)},
                  {"wprime_violations", s.wprime_violations},
                  {"wprime_fd_error", num(s.wprime_fd_error)},
                  {"wprime_upper_gap_at_hstar", num(s.wprime_upper_gap_at_hstar)},
                  {"pass", s.pass},
                  {"notes", s.notes}};
    j["pass"] = h.pass && s.pass;
    write_atomic(out_path(cfg, "verify.json"), j.dump(2) + "\n");
    std::cout << j.dump(2) << '\n';
    return h.pass && s.pass ? kExitOk : kExitVerifier;
}

int cmd_simulate(const RunConfig& cfg) {
    const Problem pr = problem_of(cfg);
    const auto& mp = pr.market;
    SimConfig sc;
    sc.dt = cfg.dt;
    sc.T = cfg.horizon;
    sc.seed = cfg.seed;
    if (cfg.scheme == "bridge") sc.scheme = Scheme::BridgeReflected;
    else if (cfg.scheme == "euler") sc.scheme = Scheme::ReflectedEuler;
    else throw InvalidParams("--scheme must be bridge or euler");
    const long npaths = cfg.npaths > 0 ? cfg.npaths : (cfg.regime_check ? 10000 : 1);
    const Policy pol = build_policy(pr.aux, mp.R, &mp);
    if (pol.regime.regime == Regime::IllPosed) {
        sc.npaths = cfg.npaths > 0 ? cfg.npaths : 1000;
        const auto rep = demo_illposed(mp, pr.aux, sc);
        const std::string js = growth_report_json(rep);
        write_atomic(out_path(cfg, "growth.json"), js + "\n");
        std::cout << js << '\n';
        if (cfg.regime_check && !(rep.increasing && rep.theta_monotone)) return kExitVerifier;
        return kExitOk;
    }
    sc.npaths = 1;
    write_atomic(out_path(cfg, "path.csv"), path_csv(simulate(pol, mp, sc)));
    if (npaths > 1 || cfg.regime_check) {
        sc.npaths = npaths;
        const McSummary s = monte_carlo(pol, mp, sc);
        const std::string js = mc_summary_json(s);
        write_atomic(out_path(cfg, "mc_summary.json"), js + "\n");
        std::cout << js << '\n';
        if (cfg.regime_check) {
            const bool ok = std::abs(s.z_score) < 3 && std::abs(s.refinement_shift) < s.stderr_ && s.invariants.pass();
            if (!ok) return kExitVerifier;
        }
    }
    return kExitOk;
}

int cmd_sweep(const RunConfig& cfg) {
    if (cfg.grid.empty()) throw InvalidParams("sweep needs --grid");
    const ProblemInput in = input_of(cfg);
    const auto res = run_sweep(in, parse_grid(cfg.grid));
    if (cfg.format == Format::Json) write_atomic(out_path(cfg, "sweep.json"), res.json() + "\n");
    else write_atomic(out_path(cfg, "sweep.csv"), res.csv());
    std::cout << "rows=" << res.rows.size() << ", qstar_violations=" << res.qstar_violations
              << ", p_violations=" << res.price_violations << '\n';
    for (const auto& v : res.violations) std::cout << v << '\n';
    return res.violations.empty() ? kExitOk : kExitVerifier;
}

int cmd_regions(const RunConfig& cfg) {
    const Problem pr = problem_of(cfg);
    const double b1 = pr.aux.b1, R = pr.market.R;
    std::vector<double> b2 = GridAxis{"b2", 1.0, 10.0, 10}.values();
    const double top = R < 1 ? illposed_threshold(b1, 10.0, R) + 1.0 : 4 * R;
    std::vector<double> b3 = GridAxis{"b3", -0.5, top, 41}.values();
    if (!cfg.grid.empty()) {
        for (const auto& a : parse_grid(cfg.grid)) {
            if (a.name == "b2") b2 = a.values();
            else if (a.name == "b3") b3 = a.values();
            else throw InvalidParams("regions takes grid axes b2 and b3");
        }
    }
    const RegionMap m = region_map(b1, R, b2, b3);
    if (cfg.format == Format::Json) write_atomic(out_path(cfg, "regions.json"), m.json() + "\n");
    else write_atomic(out_path(cfg, "regions.csv"), m.csv());
    std::map<Regime, long> counts;
    for (const auto& c : m.cells) ++counts[c.regime];
    for (const auto& [r, n] : counts) std::cout << to_string(r) << '=' << n << ' ';
    std::cout << '\n';
    return kExitOk;
}

}  // namespace

int cli_main(int argc, char** argv) {
    CLI::App app{"Optimal consumption, investment and sale of an endowed asset"};
    app.require_subcommand(1);
    RunConfig cfg;
    std::string fmt = "csv";
    auto common = [&](CLI::App* sub) {
        sub->add_option("--params", cfg.params_path, "JSON file of market parameters");
        sub->add_option("--aux", cfg.aux_tokens, "auxiliary parameters b1=.. b2=.. b3=.. R=.. [b4 x0 y0 theta0]");
        sub->add_option("--set", cfg.set_tokens, "key=value overrides");
        sub->add_option("--out", cfg.output_dir, "output directory");
        sub->add_option("--format", fmt, "csv or json")->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--grid", cfg.grid, "name=lo:hi:count[,name=lo:hi:count]");
    };
    const std::pair<const char*, Command> cmds[] = {
        {"classify", Command::Classify}, {"solve", Command::Solve},       {"b3crit", Command::B3Crit},
        {"sweep", Command::Sweep},       {"simulate", Command::Simulate}, {"verify", Command::Verify},
        {"regions", Command::Regions}};
    const char* help[] = {"print the regime, b3_crit, q* and z*",
                          "write the policy table and summary",
                          "print the critical b3 for (b1, b2, R)",
                          "comparative statics over a grid with monotonicity checks",
                          "simulate optimal paths and the Monte Carlo utility",
                          "run the HJB and shape verifiers",
                          "regime map over (b2, b3)"};
    std::map<CLI::App*, Command> which;
    for (size_t i = 0; i < std::size(cmds); ++i) {
        CLI::App* sub = app.add_subcommand(cmds[i].first, help[i]);
        common(sub);
        if (cmds[i].second == Command::Simulate) {
            sub->add_option("--seed", cfg.seed, "RNG seed");
            sub->add_option("--dt", cfg.dt, "time step");
            sub->add_option("--horizon", cfg.horizon, "horizon, 0 for the default truncation");
            sub->add_option("--npaths", cfg.npaths, "Monte Carlo paths");
            sub->add_option("--scheme", cfg.scheme, "bridge or euler");
            sub->add_flag("--regime-check", cfg.regime_check, "compare the Monte Carlo utility with the value function");
        }
        which[sub] = cmds[i].second;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitInvalid;
    }
    for (auto* sub : app.get_subcommands()) cfg.command = which.at(sub);
    cfg.format = fmt == "json" ? Format::Json : Format::Csv;
    try {
        switch (cfg.command) {
            case Command::Classify: return cmd_classify(cfg);
            case Command::Solve: return cmd_solve(cfg);
            case Command::B3Crit: return cmd_b3crit(cfg);
            case Command::Sweep: return cmd_sweep(cfg);
            case Command::Simulate: return cmd_simulate(cfg);
            case Command::Verify: return cmd_verify(cfg);
            case Command::Regions: return cmd_regions(cfg);
        }
    } catch (const InvalidParams& e) {
        std::cerr << "invalid parameters: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const DegenerateMerton& e) {
        std::cerr << "degenerate problem: " << e.what() << '\n';
        return kExitDegenerate;
    } catch (const StepRejection& e) {
        std::cerr << "simulation failed: " << e.what() << '\n';
        return kExitSimulation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cfg.command == Command::Simulate ? kExitSimulation : kExitError;
    }
    return kExitError;
}

}  // namespace endow
