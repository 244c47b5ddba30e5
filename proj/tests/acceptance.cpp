// Acceptance criteria, one PASS/FAIL line each. Exit status is the number of failures.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "brl/brl.hpp"

using namespace brl;

namespace {

constexpr double kPi = std::numbers::pi;

// pinned tolerances
constexpr double kRatioLo = 3.0, kRatioHi = 5.0;
constexpr double kLevelSeconds = 60.0;
constexpr double kIntegralPerVolume = 1e-5;
constexpr int kChainVectors = 10000;
constexpr double kChainSeconds = 1.0;
constexpr double kHomothetyRel = 0.01;
constexpr double kCollapse = 1e-3;
constexpr int kFlowSteps = 50000;
constexpr double kFlowSeconds = 300.0;
constexpr double kImageSecMax = 0.26;
constexpr double kGlobalLo = 3.9, kGlobalHi = 4.1;
constexpr double kGap = 3.5;
constexpr double kProductTol = 1e-6;
constexpr double kProductSeconds = 30.0;
constexpr double kIdentityEnergyRel = 1e-3;
constexpr double kHolomorphicEnergyRel = 5e-3;

int failures = 0;

void line(int id, bool pass, const std::string& what, const std::string& detail) {
    std::printf("[%s] %d %s: %s\n", pass ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

DiscreteMap sphere_map(const std::string& spec, int n1, double r = 1.0) {
    return catalog::make(spec, DomainModel::round_sphere(1, n1, 2 * n1), TargetModel::sphere(2, r));
}

void residual_convergence() {
    std::string detail;
    bool pass = true;
    for (const char* spec : {"identity", "holomorphic:k=2"}) {
        std::vector<double> sup;
        double slowest = 0.0;
        for (int n1 : {64, 128, 256}) {
            const auto t0 = std::chrono::steady_clock::now();
            sup.push_back(bochner_analysis(sphere_map(spec, n1)).sup_residual);
            slowest = std::max(slowest, seconds_since(t0));
        }
        const double r1 = sup[0] / sup[1], r2 = sup[1] / sup[2];
        pass = pass && r1 >= kRatioLo && r1 <= kRatioHi && r2 >= kRatioLo && r2 <= kRatioHi && slowest < kLevelSeconds;
        detail += fmt("%s ratios %.3f %.3f slowest level %.1fs; ", spec, r1, r2, slowest);
    }
    line(1, pass, "residual ratios 64/128/256", detail);
}

void integral_identity() {
    const double vol = 4 * kPi;
    std::string detail;
    bool pass = true;
    for (const char* spec : {"constant", "identity", "holomorphic:k=2", "holomorphic:k=3"}) {
        const double coarse = bochner_analysis(sphere_map(spec, 64)).integral_identity;
        const double fine = bochner_analysis(sphere_map(spec, 128)).integral_identity;
        const double extrapolated = (4 * fine - coarse) / 3;
        pass = pass && std::abs(fine) <= kIntegralPerVolume * vol;
        detail += fmt("%s %.3e (extrapolated %.3e); ", spec, fine, extrapolated);
    }
    for (double r : {0.5, 2.0}) {
        const std::string spec = fmt("scaling:r=%g", r);
        const double fine = bochner_analysis(sphere_map(spec, 128, r)).integral_identity;
        pass = pass && std::abs(fine) <= kIntegralPerVolume * vol;
        detail += fmt("%s %.3e; ", spec.c_str(), fine);
    }
    detail += fmt("bound %.3e", kIntegralPerVolume * vol);
    line(2, pass, "integral identity at 128x256", detail);
}

void lambda_chain() {
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    const auto t0 = std::chrono::steady_clock::now();
    int bad = 0;
    for (int n : {2, 3, 5})
        for (int k = 0; k < kChainVectors; ++k) {
            std::vector<double> lambda(n);
            for (double& v : lambda) v = u(rng);
            const LambdaChain c = lambda_chain_check(lambda);
            if (!c.identity_holds() || !c.bound_holds()) ++bad;
        }
    std::vector<double> equal(5, 1.7);
    const LambdaChain eq = lambda_chain_check(equal);
    const bool tight = std::abs(eq.mid - eq.bound) <= 1e-12 * eq.bound && eq.equality;
    const double t = seconds_since(t0);
    line(3, bad == 0 && tight && t < kChainSeconds, "lambda chain on random vectors",
         fmt("%d violations in %d vectors, equal vector tight %s, %.3fs", bad, 3 * kChainVectors, tight ? "yes" : "no", t));
}

void scaling_family() {
    ReportOptions o;
    o.global_samples = 256;
    std::string detail;
    bool pass = true;
    for (double r : {0.5, 1.0, 2.0}) {
        const std::string spec = fmt("scaling:r=%g", r);
        const PinchingReport coarse = build_report(sphere_map(spec, 64, r), o);
        const PinchingReport fine = build_report(sphere_map(spec, 128, r), o);
        if (fine.classification != Classification::Equality || !fine.equality || !coarse.equality) {
            pass = false;
            detail += fmt("r=%g classified %s; ", r, to_string(fine.classification));
            continue;
        }
        const EqualityDiagnostics& eq = *fine.equality;
        const double factor_err = std::abs(eq.homothety_factor - r * r) / (r * r);
        const double hess_ratio = coarse.equality->hess_sup / eq.hess_sup;
        const bool ok = std::abs(fine.margin) <= fine.tol_band && eq.lambda_spread < eq.spread_tol &&
                        factor_err <= kHomothetyRel && hess_ratio >= kRatioLo && hess_ratio <= kRatioHi;
        pass = pass && ok;
        detail += fmt("r=%g margin %.2e/%.2e spread %.2e/%.2e factor err %.2e hess ratio %.3f; ", r, fine.margin,
                      fine.tol_band, eq.lambda_spread, eq.spread_tol, factor_err, hess_ratio);
    }
    line(4, pass, "scaling family equality at 128x256", detail);
}

void cap_collapse() {
    const auto t0 = std::chrono::steady_clock::now();
    FlowParams p;
    p.collapse_tol = kCollapse;
    p.max_steps = kFlowSteps;
    const DiscreteMap f0 = catalog::make("cap:amplitude=0.3", DomainModel::flat_torus(1, 1, 64, 64), TargetModel::sphere(2, 1));
    const auto [f, summary] = run_flow(f0, p);
    bool monotone = true;
    for (std::size_t i = 1; i < summary.energy_trace.size(); ++i)
        monotone = monotone && summary.energy_trace[i] <= summary.energy_trace[i - 1] + p.energy_slack;
    const double t = seconds_since(t0);
    const bool pass = summary.outcome == FlowOutcome::CollapsedToConstant && summary.final_diameter < kCollapse &&
                      monotone && t < kFlowSeconds;
    line(5, pass, "cap(0.3) flow on the torus collapses",
         fmt("outcome %s after %d steps, diameter %.2e, energy monotone %s, %.1fs", to_string(summary.outcome),
             summary.steps, summary.final_diameter, monotone ? "yes" : "no", t));
}

void consistency() {
    ReportOptions o;
    o.global_samples = 256;
    auto cases = default_consistency_catalog(32);
    const auto torus = DomainModel::flat_torus(1, 1, 32, 32);
    cases.emplace_back("wrap T2 -> torus(1,2)", catalog::make("wrap", torus, TargetModel::flat_torus({1.0, 2.0})));
    cases.emplace_back("band T2 -> ellipsoid(1,1,2)", catalog::make("band", torus, TargetModel::ellipsoid(1, 1, 2)));
    const ConsistencyTable table = consistency_table(cases, o);
    std::string detail;
    int checked = 0;
    for (const auto& row : table.rows) {
        if (!row.skipped) ++checked;
        if (!row.passed) detail += row.name + " failed (" + row.note + "); ";
    }
    detail += fmt("%d rows, %d checked", static_cast<int>(table.rows.size()), checked);
    line(6, table.all_pass(), "rigidity dichotomy on the catalog", detail);
}

void localization() {
    ReportOptions o;
    o.global_samples = 4096;
    const DiscreteMap f = catalog::make("band", DomainModel::flat_torus(1, 1, 32, 32), TargetModel::ellipsoid(1, 1, 2));
    const LocalizationGap g = localization_gap(f, o);
    const bool pass = g.sec_max_image <= kImageSecMax && g.sec_max_global_sample >= kGlobalLo &&
                      g.sec_max_global_sample <= kGlobalHi && g.gap > kGap;
    line(7, pass, "ellipsoid(1,1,2) band localization",
         fmt("image %.6f global %.6f gap %.6f", g.sec_max_image, g.sec_max_global_sample, g.gap));
}

void product_spheres() {
    const auto t0 = std::chrono::steady_clock::now();
    ReportOptions o;
    o.global_samples = 4096;
    const double v = global_sec_max(TargetModel::product_spheres(1, 2), o);
    const double t = seconds_since(t0);
    line(8, std::abs(v - 1.0) <= kProductTol && t < kProductSeconds, "product spheres(1,2) Sec_max",
         fmt("%.12f on 4096 points in %.1fs", v, t));
}

void energies() {
    const double id = total_energy(sphere_map("identity", 128));
    const double id_err = std::abs(id - 4 * kPi) / (4 * kPi);
    bool pass = id_err <= kIdentityEnergyRel;
    std::string detail = fmt("identity rel err %.2e; ", id_err);
    for (int k : {1, 2, 3}) {
        const std::string spec = fmt("holomorphic:k=%d", k);
        const double coarse = total_energy(sphere_map(spec, 64));
        const double fine = total_energy(sphere_map(spec, 128));
        const double extrapolated = (4 * fine - coarse) / 3;
        const double err = std::abs(extrapolated - 4 * kPi * k) / (4 * kPi * k);
        pass = pass && err <= kHolomorphicEnergyRel;
        detail += fmt("k=%d rel err %.2e (raw %.2e); ", k, err, std::abs(fine - 4 * kPi * k) / (4 * kPi * k));
    }
    line(9, pass, "energies 4pi and 4pi k", detail);
}

} // namespace

int main() {
    const std::vector<std::function<void()>> criteria = {residual_convergence, integral_identity, lambda_chain,
                                                         scaling_family,       cap_collapse,      consistency,
                                                         localization,         product_spheres,   energies};
    for (const auto& c : criteria) {
        try {
            c();
        } catch (const std::exception& e) {
            std::printf("[FAIL] criterion threw: %s\n", e.what());
            ++failures;
        }
    }
    std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
