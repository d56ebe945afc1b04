#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "cli.hpp"

namespace {

using srk::cli::json;

struct Result {
    int code = 0;
    std::string out;
    std::string err;
    json report() const { return json::parse(out); }
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    Result r;
    r.code = srk::cli::run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string data(const std::string& name) { return std::string(SRKILLING_TEST_DATA) + "/" + name; }
std::string structure(const std::string& name) { return std::string(SRKILLING_STRUCTURES_DIR) + "/" + name; }

std::vector<std::string> keys(const json& j) {
    std::vector<std::string> k;
    for (const auto& [key, v] : j.items()) k.push_back(key);
    return k;
}

TEST(Cli, CheckHeisenberg) {
    auto r = run({"check", "heisenberg:1"});
    ASSERT_EQ(r.code, 0) << r.out;
    auto j = r.report();
    auto k = keys(j);
    ASSERT_GE(k.size(), 5u);
    EXPECT_EQ(std::vector<std::string>(k.begin(), k.begin() + 5),
              (std::vector<std::string>{"tool", "version", "command", "structure", "fingerprint"}));
    EXPECT_EQ(k.back(), "pass");
    EXPECT_EQ(k[k.size() - 2], "checks");
    EXPECT_EQ(j["version"], "0.1.0");
    EXPECT_TRUE(j["special"].get<bool>());
    for (const auto& c : j["checks"]) {
        EXPECT_EQ(keys(c), (std::vector<std::string>{"name", "max_residual", "points", "tol", "pass"}));
        EXPECT_EQ(c["max_residual"].get<double>(), 0.0);
    }
}

TEST(Cli, StructureAsOption) {
    auto a = run({"check", "heisenberg:1"});
    auto b = run({"check", "--structure", "heisenberg:1"});
    EXPECT_EQ(a.out, b.out);
}

TEST(Cli, DimSu2) {
    auto r = run({"dim", "su2", "--at", "0,0,0"});
    ASSERT_EQ(r.code, 0) << r.out;
    auto j = r.report();
    EXPECT_EQ(j["dims"], json::array({4, 4, 4}));
    EXPECT_EQ(j["dim_i"], 4);
    EXPECT_TRUE(j["certified"].get<bool>());
    EXPECT_EQ(j["basis"].size(), 4u);
}

TEST(Cli, DimFixedOrder) {
    auto r = run({"dim", "heisenberg:1", "--at", "x=0.2,y=0,z=1", "--order", "1"});
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(r.report()["dims"], json::array({4, 4}));
    EXPECT_EQ(run({"dim", "heisenberg:1", "--at", "0,0,0", "--order", "two"}).code, 2);
    EXPECT_EQ(run({"dim", "heisenberg:1"}).code, 2);
}

TEST(Cli, MissingFileIsInputError) {
    auto r = run({"check", "--structure", "nosuch.toml"});
    EXPECT_EQ(r.code, 2);
    auto j = r.report();
    EXPECT_EQ(j["error"]["kind"], "input");
    EXPECT_FALSE(j["pass"].get<bool>());
    EXPECT_FALSE(r.err.empty());
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run({"frobnicate", "heisenberg:1"}).code, 2);
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"check"}).code, 2);
    EXPECT_EQ(run({"check", "heisenberg:1", "--tol", "-1"}).code, 2);
    EXPECT_EQ(run({"verify-geometry", "heisenberg:1", "--backend", "gpu"}).code, 2);
}

TEST(Cli, Help) {
    auto r = run({"--help"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("prolong"), std::string::npos);
    auto s = run({"scan", "--help"});
    EXPECT_EQ(s.code, 0);
    EXPECT_NE(s.out.find("--m-max"), std::string::npos);
}

TEST(Cli, NonSpecialStructure) {
    EXPECT_EQ(run({"check", structure("nonspecial.toml")}).code, 3);
    auto r = run({"connection", structure("nonspecial.toml"), "--at", "0,0,0"});
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(r.report()["error"]["kind"], "geometry");
}

TEST(Cli, CurvatureHeisenbergFlat) {
    auto r = run({"curvature", "heisenberg:1"});
    ASSERT_EQ(r.code, 0) << r.out;
    auto j = r.report();
    EXPECT_TRUE(j["R_identically_zero"].get<bool>());
    EXPECT_LT(j["max_abs_R"].get<double>(), 1e-12);
    EXPECT_EQ(j["points"], 100);
}

TEST(Cli, CurvatureSu2AtPoint) {
    auto r = run({"curvature", "su2", "--order", "1"});
    ASSERT_EQ(r.code, 0) << r.out;
    auto R = r.report()["R"];
    // R(e1,e2)e1 = -e2, R(e1,e2)e2 = e1
    EXPECT_EQ(R[1][0][1][0].get<double>(), -1.0);
    EXPECT_EQ(R[0][0][1][1].get<double>(), 1.0);
    EXPECT_EQ(r.report()["nabla_R"].size(), 1u);
}

TEST(Cli, ConnectionSymbolicAndAtPoint) {
    auto s = run({"connection", "heisenberg:1"});
    ASSERT_EQ(s.code, 0) << s.out;
    EXPECT_TRUE(s.report()["gamma"][0][0][0].is_string());
    auto p = run({"connection", "heisenberg:1", "--at", "0.5,0.5,0"});
    ASSERT_EQ(p.code, 0) << p.out;
    EXPECT_TRUE(p.report()["gamma"][0][0][0].is_number());
}

TEST(Cli, VerifyGeometryGridAndSeed) {
    auto a = run({"verify-geometry", "heisenberg:2", "--samples", "10", "--seed", "3"});
    ASSERT_EQ(a.code, 0) << a.out;
    EXPECT_EQ(a.report()["points"], 10);
    auto g = run({"verify-geometry", "heisenberg:1", "--grid", "x:-1:1:2,y:-1:1:2,z:0:1:2"});
    ASSERT_EQ(g.code, 0) << g.out;
    EXPECT_EQ(g.report()["points"], 8);
}

TEST(Cli, ProlongY1) {
    auto r = run({"prolong", "heisenberg:1", "--curve", data("heis_line.curve"), "--gen", data("heis_y1.gen"),
                  "--require-horizontal"});
    ASSERT_EQ(r.code, 0) << r.out;
    auto j = r.report();
    EXPECT_EQ(j["steps"], 1000);
    EXPECT_NEAR(j["end"]["X"][0].get<double>(), 1.0, 1e-12);
    EXPECT_EQ(j["end"]["at"], json::array({1.0, 0.0, 0.0}));
}

TEST(Cli, ProlongRequireHorizontalFails) {
    auto base = std::vector<std::string>{"prolong", "heisenberg:1", "--curve", data("heis_vertical.curve"),
                                         "--gen", data("heis_rotation.gen")};
    EXPECT_EQ(run(base).code, 0);
    base.push_back("--require-horizontal");
    auto r = run(base);
    EXPECT_EQ(r.code, 3);
    EXPECT_GT(r.report()["vertical_speed"].get<double>(), 0.5);
}

TEST(Cli, ProlongIsDeterministic) {
    std::vector<std::string> args{"prolong", "heisenberg:1", "--curve", data("heis_bent.curve"), "--gen",
                                  data("heis_rotation.gen"), "--step", "0.01"};
    EXPECT_EQ(run(args).out, run(args).out);
}

TEST(Cli, PathCheck) {
    auto r = run({"path-check", "heisenberg:1", "--curve", data("heis_line.curve"), "--curve",
                  data("heis_bent.curve"), "--gen", data("heis_rotation.gen")});
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_LT(r.report()["deviation"].get<double>(), 1e-6);
    auto bad = run({"path-check", "heisenberg:1", "--curve", data("heis_line.curve"), "--curve",
                    data("heis_vertical.curve"), "--gen", data("heis_rotation.gen")});
    EXPECT_EQ(bad.code, 2);
    EXPECT_EQ(run({"path-check", "heisenberg:1", "--curve", data("heis_line.curve"), "--gen",
                   data("heis_rotation.gen")})
                  .code,
              2);
}

TEST(Cli, ReconstructWritesField) {
    const std::string path = ::testing::TempDir() + "srk_field.json";
    std::remove(path.c_str());
    auto r = run({"reconstruct", "heisenberg:1", "--gen", data("heis_rotation.gen"), "--grid",
                  "x:-1:1:3,y:-1:1:3,z:-1:1:3", "--out", path});
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(r.report()["field_file"], path);
    std::ifstream f(path);
    ASSERT_TRUE(f.good());
    auto field = json::parse(f);
    ASSERT_EQ(field["points"].size(), 27u);
    for (const auto& p : field["points"]) {
        // Z = (y, -x, 0) for this generator
        const double x = p["at"][0], y = p["at"][1];
        EXPECT_NEAR(p["Z"][0].get<double>(), y, 1e-9);
        EXPECT_NEAR(p["Z"][1].get<double>(), -x, 1e-9);
        EXPECT_NEAR(p["Z"][2].get<double>(), 0.0, 1e-9);
    }
    EXPECT_EQ(run({"reconstruct", "heisenberg:1", "--gen", data("heis_rotation.gen"), "--grid",
                   "x:-3:1:3,y:-1:1:3,z:-1:1:3"})
                  .code,
              2);
}

TEST(Cli, VerifyFields) {
    EXPECT_EQ(run({"verify", "heisenberg:1", "--field", "-y,x,0"}).code, 0);
    auto r = run({"verify", "heisenberg:1", "--field", "1,0,0"});
    EXPECT_EQ(r.code, 3);
    for (const auto& c : r.report()["checks"])
        if (c["name"] == "contact") EXPECT_GE(c["max_residual"].get<double>(), 0.1);
    EXPECT_EQ(run({"verify", "heisenberg:1", "--field", "1,0"}).code, 2);
    EXPECT_EQ(run({"verify", "su2", "--field", "1,0,0"}).code, 2);
}

TEST(Cli, Scan) {
    auto r = run({"scan", "heisenberg:1", "--grid", "x:-1:1:3,y:-1:1:3,z:-1:1:3"});
    ASSERT_EQ(r.code, 0) << r.out;
    auto j = r.report();
    EXPECT_EQ(j["distinct_dims"], json::array({4}));
    EXPECT_EQ(j["interior_regular"], 1);
    EXPECT_EQ(j["semicontinuity_violations"], 0);
    auto lie = run({"scan", "su2"});
    ASSERT_EQ(lie.code, 0) << lie.out;
    EXPECT_TRUE(lie.report()["homogeneous"].get<bool>());
}

TEST(Cli, OutAndPretty) {
    const std::string path = ::testing::TempDir() + "srk_report.json";
    auto r = run({"check", "su2", "--out", path});
    EXPECT_EQ(r.code, 0);
    EXPECT_TRUE(r.out.empty());
    std::ifstream f(path);
    EXPECT_TRUE(json::parse(f)["pass"].get<bool>());
    auto p = run({"check", "su2", "--pretty"});
    EXPECT_NE(p.out.find("overall: PASS"), std::string::npos);
}

TEST(Cli, NumberFormatting) {
    json j = json::array({0.1, -0.0, std::nan(""), 1e300 * 1e300, 3, true, "a\"b"});
    EXPECT_EQ(srk::cli::dump(j), "[0.10000000000000001,0,null,null,3,true,\"a\\\"b\"]");
}

} // namespace
