#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "endow/cli.hpp"
#include "endow/errors.hpp"

using namespace endow;

namespace {

struct Run {
    int code;
    std::string out;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "endow");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream cap;
    auto* old = std::cout.rdbuf(cap.rdbuf());
    const int code = cli_main(static_cast<int>(argv.size()), argv.data());
    std::cout.rdbuf(old);
    return {code, cap.str()};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("classify") {
    auto r = run({"classify", "--aux", "b1=1", "b2=1.3", "b3=-0.5", "R=0.5"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.rfind("SellAll", 0) == 0);
    r = run({"classify", "--aux", "b1=1", "b2=1", "b3=0.4", "R=0.5"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.rfind("FiniteRatio", 0) == 0);
    r = run({"classify", "--aux", "b1=1", "b2=1.3", "b3=2.7", "R=0.5"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.rfind("IllPosed", 0) == 0);
}

TEST_CASE("exit codes") {
    CHECK(run({"classify", "--aux", "b1=0", "b2=1", "b3=0.4", "R=0.5", "b4=1"}).code == kExitDegenerate);
    CHECK(run({"classify", "--aux", "b1=1", "b2=1", "b9=0.4", "R=0.5"}).code == kExitInvalid);
    CHECK(run({"classify", "--aux", "b1=1", "b2=0.5", "b3=0.4", "R=0.5"}).code == kExitInvalid);
    const auto dir = std::filesystem::temp_directory_path() / "endow_cli_verify";
    std::filesystem::create_directories(dir);
    CHECK(run({"verify", "--aux", "b1=1", "b2=1.3", "b3=2.7", "R=0.5", "--out", dir.string()}).code == kExitVerifier);
    std::filesystem::remove_all(dir);
}

TEST_CASE("grid parsing") {
    const auto axes = parse_grid("b2=1:3:5,b3=-0.5:0.5:3");
    REQUIRE(axes.size() == 2);
    CHECK(axes[0].values() == std::vector<double>{1, 1.5, 2, 2.5, 3});
    CHECK(axes[1].values().front() == -0.5);
    CHECK_THROWS_AS(parse_grid("b2=1:3"), InvalidParams);
}

TEST_CASE("solve and simulate write their files") {
    const auto dir = std::filesystem::temp_directory_path() / "endow_cli_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const std::string out = dir.string();
    CHECK(run({"solve", "--aux", "b1=1", "b2=1", "b3=0.4", "R=0.5", "--out", out}).code == kExitOk);
    CHECK(std::filesystem::exists(dir / "summary.json"));
    CHECK(std::filesystem::exists(dir / "policy.csv"));
    CHECK(run({"simulate", "--aux", "b1=1", "b2=1", "b3=0.4", "R=0.5", "--out", out, "--horizon", "0.1", "--seed",
               "4"})
              .code == kExitOk);
    CHECK(slurp(dir / "path.csv").rfind("t,Y,Theta,X,Z,C,Pi,L", 0) == 0);
    CHECK(run({"sweep", "--aux", "b1=1", "b2=1", "b3=0.4", "R=0.5", "b4=2", "--out", out, "--grid",
               "b3=0.1:0.9:4"})
              .code == kExitOk);
    CHECK(std::filesystem::exists(dir / "sweep.csv"));
    std::filesystem::remove_all(dir);
}
