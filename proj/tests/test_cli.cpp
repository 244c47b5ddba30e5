#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "brl/cli.hpp"

using namespace brl;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = main_entry(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "brl_cli_test";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

} // namespace

TEST(ParseConfig, VerifyExample) {
    const RunConfig c = parse_config({"verify", "--domain", "sphere:r=1", "--target", "sphere:r=1", "--map", "identity",
                                      "--resolution", "64"});
    EXPECT_EQ(c.command, Command::Verify);
    EXPECT_EQ(c.domain, "sphere:r=1");
    EXPECT_EQ(*c.map, "identity");
    EXPECT_EQ(c.resolution, 64);
}

TEST(ParseConfig, SweepHasSevenPoints) {
    const RunConfig c = parse_config({"scan", "--param", "r=0.5:2.0:0.25", "--map", "scaling"});
    ASSERT_TRUE(c.param.has_value());
    const auto pts = c.param->points();
    ASSERT_EQ(pts.size(), 7u);
    EXPECT_EQ(pts.front(), 0.5);
    EXPECT_EQ(pts.back(), 2.0);
}

TEST(ParseConfig, UsageErrors) {
    EXPECT_THROW(parse_config({"verify", "--map", "identity", "--resolution", "4"}), UsageError);
    EXPECT_THROW(parse_config({"report", "--map", "identity", "--load", "f.map"}), UsageError);
    EXPECT_THROW(parse_config({"report"}), UsageError);
    EXPECT_THROW(parse_config({"launch"}), UsageError);
    EXPECT_THROW(parse_config({"verify", "--map", "identity", "--frobnicate", "1"}), UsageError);
    EXPECT_THROW(parse_config({"scan", "--map", "scaling"}), UsageError);
    EXPECT_THROW(parse_config({"scan", "--map", "scaling", "--param", "r=2:1:0.5"}), UsageError);
    EXPECT_THROW(parse_config({"flow", "--init", "cap", "--dt", "-1"}), UsageError);
}

TEST(ParseConfig, DescriptorParseErrorHasPosition) {
    try {
        parse_config({"verify", "--map", "identity", "--domain", "sphere:r"});
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.position(), 8u);
    }
}

TEST(ParseConfig, FileThenFlags) {
    const fs::path cfg = scratch("config.json");
    std::ofstream(cfg) << R"({"domain": "sphere:r=2", "target": "sphere:r=2", "map": "identity", "resolution": 12, "seed": 9})";
    const RunConfig c = parse_config({"report", "--config", cfg.string(), "--resolution", "20"});
    EXPECT_EQ(c.domain, "sphere:r=2");
    EXPECT_EQ(c.resolution, 20);
    EXPECT_EQ(c.seed, 9u);
}

TEST(ParseConfig, FileRejectsUnknownKeys) {
    const fs::path cfg = scratch("bad.json");
    std::ofstream(cfg) << R"({"map": "identity", "colour": "blue"})";
    EXPECT_THROW(parse_config({"report", "--config", cfg.string()}), UsageError);
    const fs::path broken = scratch("broken.json");
    std::ofstream(broken) << R"({"map": )";
    EXPECT_THROW(parse_config({"report", "--config", broken.string()}), ParseError);
}

TEST(Run, VerifyRefinementPasses) {
    const Result r = run_cli({"verify", "--domain", "sphere:r=1", "--target", "sphere:r=1", "--map", "identity",
                              "--resolution", "16", "--levels", "2"});
    EXPECT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    ASSERT_EQ(j["residual_ratios"].size(), 1u);
    const double ratio = j["residual_ratios"][0];
    EXPECT_GE(ratio, 3.0);
    EXPECT_LE(ratio, 5.0);
    EXPECT_TRUE(j["passed"].get<bool>());
}

TEST(Run, ConsistencyPasses) {
    const Result r = run_cli({"consistency", "--resolution", "16"});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(nlohmann::json::parse(r.out)["passed"].get<bool>());
}

TEST(Run, ExitCodes) {
    EXPECT_EQ(run_cli({"verify", "--map", "identity", "--resolution", "4"}).code, 2);
    const Result unknown_map = run_cli({"report", "--map", "bubble", "--target", "sphere:r=1"});
    EXPECT_EQ(unknown_map.code, 2);
    EXPECT_EQ(nlohmann::json::parse(unknown_map.err)["error"]["kind"], "usage");
    const Result strict = run_cli({"report", "--map", "identity", "--target", "sphere:r=1", "--resolution", "16",
                                   "--tol-band", "0.001", "--global-samples", "16"});
    EXPECT_EQ(strict.code, 1);
    const Result unstable = run_cli({"flow", "--domain", "torus:a=1,b=1", "--target", "sphere:r=1", "--init",
                                     "cap:amplitude=1.2", "--resolution", "16", "--dt", "1e9", "--steps", "5"});
    EXPECT_EQ(unstable.code, 3) << unstable.out;
    EXPECT_EQ(nlohmann::json::parse(unstable.err)["error"]["kind"], "numerical");
    EXPECT_EQ(run_cli({"--help"}).code, 0);
}

TEST(Run, FlowSaveAndVerifyLoad) {
    const fs::path map = scratch("cap.map"), trace = scratch("cap.csv");
    const Result f = run_cli({"flow", "--domain", "torus:a=1,b=1", "--target", "sphere:r=1", "--init",
                              "cap:amplitude=0.3", "--resolution", "16", "--save", map.string(), "--trace",
                              trace.string()});
    ASSERT_EQ(f.code, 0) << f.err;
    EXPECT_EQ(nlohmann::json::parse(f.out)["flow"]["outcome"], "collapsed_to_constant");
    std::istringstream csv(slurp(trace));
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "step,energy,sup_tension,image_diameter,e_max");
    double prev = 1e300;
    while (std::getline(csv, line)) {
        const double e = std::stod(line.substr(line.find(',') + 1));
        EXPECT_LE(e, prev + 1e-10);
        prev = e;
    }
    const Result v = run_cli({"verify", "--load", map.string()});
    EXPECT_EQ(v.code, 0) << v.err;
    const Result rep = run_cli({"report", "--load", map.string(), "--global-samples", "64"});
    EXPECT_EQ(rep.code, 0) << rep.err;
    EXPECT_TRUE(nlohmann::json::parse(rep.out)["report"]["constant"].get<bool>());
}

TEST(Run, ScanWritesOneRowPerPoint) {
    const fs::path csv = scratch("scan.csv");
    const Result r = run_cli({"scan", "--domain", "sphere:r=1", "--map", "scaling", "--param", "r=0.5:2.0:0.25",
                              "--resolution", "8", "--global-samples", "16", "--csv", csv.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream in(slurp(csv));
    int rows = 0;
    for (std::string l; std::getline(in, l);) ++rows;
    EXPECT_EQ(rows, 8);
}

TEST(Run, OutputsAreByteIdentical) {
    const std::vector<std::string> args = {"report", "--domain", "torus:a=1,b=1", "--target", "ellipsoid:a=1,b=1.5,c=2",
                                           "--map", "band:height=0.3", "--resolution", "12", "--seed", "4",
                                           "--global-samples", "128"};
    const Result a = run_cli(args), b = run_cli(args);
    EXPECT_EQ(a.code, b.code);
    EXPECT_EQ(a.out, b.out);
    EXPECT_NE(a.out.find("\"seed\": 4"), std::string::npos);
}
