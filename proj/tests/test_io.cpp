#include <cstring>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "brl/catalog.hpp"
#include "brl/io.hpp"

using namespace brl;

namespace {

DiscreteMap sample_map() {
    return catalog::make("holomorphic:k=2", DomainModel::round_sphere(1, 8, 16), TargetModel::sphere(2, 1));
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

} // namespace

TEST(MapFile, RoundTripIsBitExact) {
    const DiscreteMap f = sample_map();
    std::stringstream buf;
    write_map(buf, f);
    const DiscreteMap g = read_map(buf);
    EXPECT_EQ(g.domain().descriptor(), f.domain().descriptor());
    EXPECT_EQ(g.target().descriptor(), f.target().descriptor());
    EXPECT_EQ(g.domain().n1(), 8);
    EXPECT_EQ(g.domain().n2(), 16);
    ASSERT_EQ(g.values().size(), f.values().size());
    EXPECT_EQ(std::memcmp(g.values().data(), f.values().data(), sizeof(double) * f.values().size()), 0);
}

TEST(MapFile, RoundTripOtherTargets) {
    const auto t = DomainModel::flat_torus(1.5, 1, 6, 10);
    for (const DiscreteMap& f : {catalog::make("wrap", t, TargetModel::flat_torus({1.0, 2.0})),
                                 catalog::make("band:height=0.4", t, TargetModel::ellipsoid(1, 1.5, 2))}) {
        std::stringstream buf;
        write_map(buf, f);
        const DiscreteMap g = read_map(buf);
        EXPECT_EQ(g.values(), f.values());
        EXPECT_EQ(g.domain().descriptor(), "torus:a=1.5,b=1");
    }
}

TEST(MapFile, Header) {
    std::stringstream buf;
    write_map(buf, sample_map());
    const auto l = lines(buf.str());
    EXPECT_EQ(l[0], "BRLMAP 1");
    EXPECT_EQ(l[1], "domain sphere:r=1");
    EXPECT_EQ(l[2], "target sphere:r=1");
    EXPECT_EQ(l[3], "grid 8 16");
    EXPECT_EQ(l[4], "ambient 3");
    EXPECT_EQ(l.size(), 5u + 128u);
}

TEST(MapFile, MalformedInputs) {
    std::stringstream good;
    write_map(good, sample_map());
    const std::string text = good.str();
    auto parse = [](const std::string& s) {
        std::istringstream in(s);
        return read_map(in);
    };
    EXPECT_THROW(parse("BRLMAP 2\n"), ParseError);
    EXPECT_THROW(parse(text.substr(0, text.size() / 2)), ParseError);
    std::string wrong_ambient = text;
    wrong_ambient.replace(wrong_ambient.find("ambient 3"), 9, "ambient 4");
    EXPECT_THROW(parse(wrong_ambient), ParseError);
    std::string off = text;
    const auto pos = off.find('\n', off.find("ambient 3")) + 1;
    off.replace(pos, off.find('\n', pos) - pos, "0 0 2");
    EXPECT_THROW(parse(off), DomainError);
    std::string extra = text;
    extra.replace(pos, extra.find('\n', pos) - pos, "0 0 1 7");
    EXPECT_THROW(parse(extra), ParseError);
    EXPECT_THROW(load_map("/nonexistent/dir/x.map"), UsageError);
}

TEST(Csv, NodeTableColumns) {
    const DiscreteMap f = sample_map();
    const BochnerField field = bochner_analysis(f);
    std::ostringstream out;
    write_node_csv(out, f, field, 1.0, 1.0);
    const auto l = lines(out.str());
    EXPECT_EQ(l[0], "i,j,flagged,e,lambda1,lambda2,ricci_term,target_term,Q,hess,lap,residual,slack");
    EXPECT_EQ(l.size(), 1u + f.domain().node_count());
    EXPECT_EQ(std::count(l[5].begin(), l[5].end(), ','), 12);
}

TEST(Csv, TraceColumns) {
    std::ostringstream out;
    write_trace_csv(out, {{0, 1.5, 0.25, 0.5, 0.1}, {10, 1.25, 0.125, 0.375, 0.05}});
    EXPECT_EQ(out.str(), "step,energy,sup_tension,image_diameter,e_max\n0,1.5,0.25,0.5,0.10000000000000001\n"
                         "10,1.25,0.125,0.375,0.050000000000000003\n");
}

TEST(Csv, ScanRowMatchesHeader) {
    ReportOptions o;
    o.global_samples = 64;
    const PinchingReport r = build_report(sample_map(), o);
    std::ostringstream out;
    write_scan_header(out);
    write_scan_row(out, "k", 2, "holomorphic:k=2", r);
    const auto l = lines(out.str());
    ASSERT_EQ(l.size(), 2u);
    EXPECT_EQ(std::count(l[0].begin(), l[0].end(), ','), std::count(l[1].begin(), l[1].end(), ','));
    EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
}

TEST(Json, ReportHasEveryField) {
    ReportOptions o;
    o.global_samples = 64;
    const json j = to_json(build_report(catalog::make("identity", DomainModel::round_sphere(1, 8, 16), TargetModel::sphere(2, 1)), o));
    for (const char* key : {"n", "ric_min", "ric_min_node", "sec_max_image", "sec_max_witness", "sec_max_global_sample",
                            "hypothesis_flag", "S0", "e_max", "threshold_S0", "threshold_e", "margin", "tol",
                            "classification", "prediction", "equality", "tolerances", "seed", "resolution",
                            "sup_tension", "tension_tol", "harmonicity_warning"})
        EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_EQ(j["classification"], "equality");
    EXPECT_TRUE(j["equality"].contains("homothety_factor"));
}

TEST(Json, SeventeenDigitsAndRoundTrip) {
    const double v = 0.1 + 0.2;
    const std::string text = dump_json(json{{"v", v}, {"n", 3}, {"bad", std::nan("")}});
    EXPECT_NE(text.find("0.30000000000000004"), std::string::npos);
    EXPECT_NE(text.find("\"bad\": null"), std::string::npos);
    const auto back = nlohmann::json::parse(text);
    EXPECT_EQ(back["v"].get<double>(), v);
    EXPECT_EQ(back["n"].get<int>(), 3);
}
