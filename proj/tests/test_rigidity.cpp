#include <cmath>
#include <cstring>
#include <vector>

#include <gtest/gtest.h>

#include "brl/catalog.hpp"
#include "brl/flow.hpp"
#include "brl/rigidity.hpp"
#include "oracles.hpp"

using namespace brl;
using oracle::pi;

namespace {

DomainModel sphere(int n) { return DomainModel::round_sphere(1, n, 2 * n); }

DiscreteMap on_sphere(const std::string& spec, int n) {
    const Descriptor d = parse_descriptor(spec);
    std::optional<TargetModel> t;
    if (d.kind != "scaling") t = TargetModel::sphere(2, 1);
    return catalog::make(d, sphere(n), catalog::resolve_target(d, t));
}

ReportOptions fast() {
    ReportOptions o;
    o.global_samples = 256;
    return o;
}

} // namespace

TEST(Report, ConstantMap) {
    for (const DomainModel& d : {sphere(16), DomainModel::flat_torus(1, 1, 16, 16)}) {
        const auto f = catalog::make("constant", d, TargetModel::sphere(2, 1));
        const PinchingReport r = build_report(f, fast());
        EXPECT_EQ(r.S0, 0.0);
        EXPECT_EQ(r.threshold, 0.0);
        EXPECT_EQ(r.margin, r.ric_min);
        EXPECT_EQ(r.classification, d.is_sphere() ? Classification::Strict : Classification::Equality);
        EXPECT_EQ(r.prediction, "constant");
        EXPECT_TRUE(r.constant);
        if (!d.is_sphere()) {
            ASSERT_TRUE(r.equality.has_value());
            EXPECT_TRUE(r.equality->skipped);
        }
    }
}

TEST(Report, IdentityIsEquality) {
    const PinchingReport r = build_report(on_sphere("identity", 32), fast());
    EXPECT_NEAR(r.ric_min, 1.0, 1e-14);
    EXPECT_NEAR(r.sec_max_image, 1.0, 1e-14);
    EXPECT_NEAR(r.S0, 2.0, 2 * r.h * r.h);
    EXPECT_NEAR(r.threshold, 1.0, r.h * r.h);
    EXPECT_EQ(r.classification, Classification::Equality);
    EXPECT_EQ(r.prediction, "constant or homothetic with totally geodesic image");
    EXPECT_TRUE(r.harmonic);
    EXPECT_TRUE(r.hypothesis_flag);
}

TEST(Report, HolomorphicDegreeTwoIsViolated) {
    const PinchingReport r = build_report(on_sphere("holomorphic:k=2", 32), fast());
    EXPECT_LT(r.margin, -r.tol_band);
    EXPECT_EQ(r.classification, Classification::Violated);
    EXPECT_EQ(r.prediction, "no conclusion (hypothesis fails)");
    EXPECT_FALSE(r.equality.has_value());
}

TEST(Report, StoredFieldsRecomputeExactly) {
    for (const char* spec : {"identity", "holomorphic:k=3", "scaling:r=2"}) {
        const PinchingReport r = build_report(on_sphere(spec, 16), fast());
        EXPECT_EQ(r.threshold, (r.n - 1.0) / r.n * r.sec_max_image * r.S0);
        EXPECT_EQ(r.threshold_e, (r.n - 1.0) / r.n * r.sec_max_image * r.e_max);
        EXPECT_EQ(r.margin, r.ric_min - r.threshold);
        EXPECT_EQ(r.S0, 2 * r.e_max);
        EXPECT_EQ(r.tol_band, r.options.tol.band * r.h * r.h);
        EXPECT_EQ(r.classification, classify(r.margin, r.tol_band));
    }
}

TEST(Report, ClassificationRule) {
    EXPECT_EQ(classify(0.2, 0.1), Classification::Strict);
    EXPECT_EQ(classify(0.1, 0.1), Classification::Equality);
    EXPECT_EQ(classify(-0.1, 0.1), Classification::Equality);
    EXPECT_EQ(classify(-0.2, 0.1), Classification::Violated);
}

TEST(Report, HalfCoefficientForSurfaces) {
    const PinchingReport r = build_report(on_sphere("scaling:r=0.5", 16), fast());
    EXPECT_EQ(r.n, 2);
    EXPECT_EQ(r.threshold, 0.5 * r.sec_max_image * r.S0);
}

TEST(Report, NonHarmonicInputIsFlagged) {
    const auto f = catalog::make("band:height=0.3", DomainModel::flat_torus(1, 1, 64, 64), TargetModel::sphere(2, 1));
    const PinchingReport r = build_report(f, fast());
    EXPECT_FALSE(r.harmonic);
    EXPECT_GT(r.sup_tension, r.tension_tol);
}

TEST(Report, Deterministic) {
    const auto f = catalog::make("band:height=0.3", DomainModel::flat_torus(1, 1, 16, 16), TargetModel::ellipsoid(1, 1.5, 2));
    const PinchingReport a = build_report(f, fast()), b = build_report(f, fast());
    for (auto [x, y] : {std::pair{a.sec_max_image, b.sec_max_image}, {a.sec_max_global_sample, b.sec_max_global_sample},
                        {a.S0, b.S0}, {a.margin, b.margin}, {a.sup_tension, b.sup_tension}, {a.energy, b.energy}})
        EXPECT_EQ(std::memcmp(&x, &y, sizeof x), 0);
    EXPECT_EQ(a.sec_max_witness.x, b.sec_max_witness.x);
}

TEST(Equality, ScalingFamily) {
    for (double r : {0.5, 1.0, 2.0}) {
        const auto f = on_sphere("scaling:r=" + format_shortest(r), 32);
        const PinchingReport rep = build_report(f, fast());
        ASSERT_EQ(rep.classification, Classification::Equality);
        const EqualityDiagnostics d = equality_diagnostics(f, rep);
        EXPECT_TRUE(d.passed);
        EXPECT_LT(d.lambda_spread, rep.tol_band);
        EXPECT_NEAR(d.homothety_factor, r * r, r * r * rep.h * rep.h);
        EXPECT_EQ(d.totally_geodesic_residual, d.hess_sup);
    }
}

TEST(Equality, IdentityHessianDecays) {
    auto hess = [](int n) {
        const auto f = on_sphere("identity", n);
        return equality_diagnostics(f, build_report(f, fast())).hess_sup;
    };
    const double a = hess(16), b = hess(32);
    EXPECT_GE(a / b, 3.0);
    EXPECT_LE(a / b, 5.0);
}

TEST(Equality, WrongClassificationIsUsageError) {
    const auto f = on_sphere("holomorphic:k=2", 16);
    EXPECT_THROW(equality_diagnostics(f, build_report(f, fast())), UsageError);
    const auto c = on_sphere("constant", 16);
    EXPECT_THROW(equality_diagnostics(c, build_report(c, fast())), UsageError);
}

TEST(Equality, ConstantOnFlatDomainIsSkipped) {
    const auto c = catalog::make("constant", DomainModel::flat_torus(1, 1, 16, 16), TargetModel::sphere(2, 1));
    const EqualityDiagnostics d = equality_diagnostics(c, build_report(c, fast()));
    EXPECT_TRUE(d.skipped);
    EXPECT_TRUE(d.passed);
}

TEST(Equality, FlatTargetDoesNotForceEqualLambda) {
    const auto f = catalog::make("wrap", DomainModel::flat_torus(1, 1, 16, 16), TargetModel::flat_torus({1.0, 2.0}));
    const PinchingReport r = build_report(f, fast());
    ASSERT_EQ(r.classification, Classification::Equality);
    ASSERT_TRUE(r.equality.has_value());
    EXPECT_FALSE(r.equality->lambda_required);
    EXPECT_GT(r.equality->lambda_spread, 1.0);
    EXPECT_TRUE(r.equality->passed);
}

TEST(Equality, AffineFlatness) {
    const auto s = sphere(16);
    const auto planar = DiscreteMap::sample(s, TargetModel::euclidean(3), [](const Vec2& p) {
        AmbVec q(3);
        q << std::sin(p[0]) * std::cos(p[1]), std::sin(p[0]) * std::sin(p[1]), 0.0;
        return q;
    });
    EXPECT_LT(affine_flatness_residual(planar, 2), 1e-14);
    const auto round = DiscreteMap::sample(s, TargetModel::euclidean(3), [](const Vec2& p) {
        AmbVec q(3);
        q << std::sin(p[0]) * std::cos(p[1]), std::sin(p[0]) * std::sin(p[1]), std::cos(p[0]);
        return q;
    });
    EXPECT_GT(affine_flatness_residual(round, 2), 0.1);
}

TEST(Localization, EllipsoidBand) {
    const auto f = catalog::make("band:height=0.05", DomainModel::flat_torus(1, 1, 16, 16), TargetModel::ellipsoid(1, 1, 2));
    ReportOptions o;
    o.global_samples = 4096;
    const LocalizationGap g = localization_gap(f, o);
    EXPECT_LE(g.sec_max_image, 0.25 + 1e-2);
    EXPECT_GE(g.sec_max_global_sample, 3.9);
    EXPECT_LE(g.sec_max_global_sample, 4.1);
    EXPECT_GT(g.gap, 3.5);
}

TEST(Localization, SphereHasNoGap) {
    const auto f = on_sphere("holomorphic:k=2", 8);
    const LocalizationGap g = localization_gap(f, fast());
    EXPECT_EQ(g.gap, 0.0);
}

TEST(Localization, ConstantAtEllipsoidPole) {
    const auto f = catalog::make("constant", DomainModel::flat_torus(1, 1, 8, 8), TargetModel::ellipsoid(1, 1, 2));
    ReportOptions o;
    o.global_samples = 4096;
    const LocalizationGap g = localization_gap(f, o);
    EXPECT_NEAR(g.sec_max_image, 4.0, 1e-9);
    EXPECT_NEAR(g.gap, 0.0, 0.05);
    EXPECT_GE(g.gap, -1e-9);
}

TEST(Localization, MonotoneInImageSample) {
    const TargetModel e = TargetModel::ellipsoid(1, 1.5, 2);
    const auto pts = e.sample_points(300, 9);
    double prev = -1e300;
    for (std::size_t n : {10u, 50u, 300u}) {
        const double v = sec_max_over_region(e, std::span<const AmbVec>(pts.data(), n)).value;
        EXPECT_GE(v, prev - 1e-9);
        prev = v;
    }
}

TEST(Consistency, CatalogPasses) {
    const ConsistencyTable t = theorem_consistency_scan(default_consistency_catalog(16), fast());
    EXPECT_TRUE(t.all_pass());
    EXPECT_EQ(t.rows.size(), 7u);
    for (const ConsistencyRow& row : t.rows) EXPECT_FALSE(row.skipped) << row.name;
}

TEST(Consistency, FlowedCapIsConstant) {
    const auto cap = catalog::make("cap:amplitude=0.3", DomainModel::flat_torus(1, 1, 16, 16), TargetModel::sphere(2, 1));
    const auto [g, s] = run_flow(cap);
    ASSERT_EQ(s.outcome, FlowOutcome::CollapsedToConstant);
    const ConsistencyTable t = theorem_consistency_scan({{"flowed cap", g}}, fast());
    EXPECT_TRUE(t.rows[0].report.constant);
    EXPECT_TRUE(t.rows[0].passed);
}

TEST(Consistency, NonHarmonicMapIsSkipped) {
    const auto f = catalog::make("band:height=0.3", DomainModel::flat_torus(1, 1, 64, 64), TargetModel::sphere(2, 1));
    const ConsistencyTable t = theorem_consistency_scan({{"band", f}}, fast());
    EXPECT_TRUE(t.rows[0].skipped);
    EXPECT_TRUE(t.rows[0].passed);
}

TEST(Consistency, StrictNonconstantHarmonicMapFails) {
    ReportOptions o = fast();
    o.tol.band = 1e-3;
    const auto f = on_sphere("identity", 16);
    EXPECT_EQ(build_report(f, o).classification, Classification::Strict);
    try {
        theorem_consistency_scan({{"identity", f}}, o);
        FAIL();
    } catch (const ConsistencyFailure& e) {
        EXPECT_NE(std::string(e.what()).find("identity"), std::string::npos);
        EXPECT_EQ(e.exit_code(), 1);
    }
}
