#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "brl/bochner.hpp"
#include "brl/catalog.hpp"
#include "brl/domain.hpp"
#include "brl/error.hpp"
#include "brl/flow.hpp"
#include "brl/grassmann.hpp"
#include "brl/map.hpp"

namespace brl {

/// Tolerances as multiples of h², h = DomainModel::h().
///   band     margin
///   tension  sup|τ| / max(1,S₀)²
///   hessian  sup‖∇df‖ / √(S₀/n)
///   spread   λ- and |df|²-spread / (S₀/n)
struct Tolerances {
    double band = 1.0;
    double tension = 0.5;
    double hessian = 2.0;
    double spread = 1.0;
    double constant = 1e-3;     ///< image diameter below which a map is a point
    double hypothesis = 1e-10;  ///< Sec ≥ −this counts as nonnegative

    double equality_band(double h) const { return band * h * h; }
    double harmonic(double h, double S0) const {
        const double s = std::max(1.0, S0);
        return tension * h * h * s * s;
    }
};

struct ReportOptions {
    Tolerances tol;
    GrassmannOptions planes;
    int global_samples = 4096;  ///< 0 skips the global comparator
};

enum class Classification { Strict, Equality, Violated };

inline const char* to_string(Classification c) {
    switch (c) {
    case Classification::Strict: return "strict";
    case Classification::Equality: return "equality";
    case Classification::Violated: return "violated";
    }
    return "";
}

struct EqualityDiagnostics {
    bool skipped = false;                ///< constant map: nothing to check
    double hess_sup = 0.0;               ///< sup‖∇df‖ over non-flagged nodes
    double hess_tol = 0.0;
    double lambda_spread = 0.0;          ///< sup (λ_max − λ_min)
    double S_spread = 0.0;               ///< max |df|² − min |df|²
    double spread_tol = 0.0;
    bool lambda_required = true;         ///< false when Sec_max(image) = 0
    double homothety_factor = 0.0;       ///< mean λ
    double totally_geodesic_residual = 0.0;
    std::optional<double> affine_residual;  ///< Euclidean targets only
    bool passed = false;
};

struct PinchingReport {
    std::string domain;
    std::string target;
    int n = kDim;
    int n1 = 0, n2 = 0;
    double h = 0.0;

    double ric_min = 0.0;
    std::size_t ric_min_node = 0;
    double sec_max_image = 0.0;
    CurvatureSample sec_max_witness;
    double sec_min_image = 0.0;
    bool hypothesis_flag = true;
    double sec_max_global_sample = std::numeric_limits<double>::quiet_NaN();
    int global_samples = 0;

    double S0 = 0.0;
    double e_max = 0.0;
    double threshold = 0.0;    ///< ((n−1)/n)·Sec_max·S₀, used for classification
    double threshold_e = 0.0;  ///< ((n−1)/n)·Sec_max·e_max, reported alongside
    double margin = 0.0;
    double tol_band = 0.0;
    Classification classification = Classification::Strict;
    std::string prediction;

    double image_diameter = 0.0;
    bool constant = false;
    double sup_tension = 0.0;
    double tension_tol = 0.0;
    bool harmonic = false;
    double sup_bochner_residual = 0.0;
    double integral_identity = 0.0;
    double energy = 0.0;

    std::optional<EqualityDiagnostics> equality;
    ReportOptions options;
};

inline Classification classify(double margin, double tol) {
    if (margin > tol) return Classification::Strict;
    if (margin < -tol) return Classification::Violated;
    return Classification::Equality;
}

/// Unique node values (bitwise), in first-seen order.
inline std::vector<AmbVec> image_points(const DiscreteMap& f) {
    std::vector<std::size_t> order(f.values().cols());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const Eigen::MatrixXd& v = f.values();
    auto less = [&](std::size_t a, std::size_t b) {
        for (Eigen::Index r = 0; r < v.rows(); ++r)
            if (v(r, a) != v(r, b)) return v(r, a) < v(r, b);
        return a < b;
    };
    std::sort(order.begin(), order.end(), less);
    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < order.size(); ++k)
        if (k == 0 || v.col(order[k]) != v.col(order[k - 1])) keep.push_back(order[k]);
    std::sort(keep.begin(), keep.end());
    std::vector<AmbVec> out;
    out.reserve(keep.size());
    for (std::size_t i : keep) out.push_back(v.col(i));
    return out;
}

/// RMS distance of the node values from their best-fitting affine subspace
/// of dimension `dim` (principal components).
inline double affine_flatness_residual(const DiscreteMap& f, int dim) {
    const Eigen::MatrixXd centred = f.values().colwise() - f.values().rowwise().mean();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(centred);
    const Eigen::VectorXd sv = svd.singularValues();
    double tail = 0.0;
    for (Eigen::Index i = dim; i < sv.size(); ++i) tail += sv[i] * sv[i];
    return std::sqrt(tail / static_cast<double>(centred.cols()));
}

/// Sec_max over the fixed-seed quasi-uniform target sample. Callers take the
/// max with the image value, so the comparator always contains the image.
inline double global_sec_max(const TargetModel& target, const ReportOptions& options) {
    const auto sample = target.sample_points(std::max(1, options.global_samples), options.planes.seed);
    return sec_max_over_region(target, sample, options.planes).value;
}

namespace detail {

inline EqualityDiagnostics measure_equality(const DiscreteMap& f, const BochnerField& field, const PinchingReport& r) {
    EqualityDiagnostics d;
    const DomainModel& dom = f.domain();
    double S_min = std::numeric_limits<double>::infinity(), S_max = 0.0, lambda_sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t n = 0; n < dom.node_count(); ++n) {
        const BochnerNode& b = field.nodes[n];
        if (b.flagged) continue;
        d.hess_sup = std::max(d.hess_sup, std::sqrt(std::max(0.0, b.hess)));
        d.lambda_spread = std::max(d.lambda_spread, b.lambda.maxCoeff() - b.lambda.minCoeff());
        const double S = b.lambda.sum();
        S_min = std::min(S_min, S);
        S_max = std::max(S_max, S);
        lambda_sum += b.lambda.mean();
        ++counted;
    }
    const double scale = r.S0 / r.n;
    d.S_spread = counted ? S_max - S_min : 0.0;
    d.homothety_factor = counted ? lambda_sum / counted : 0.0;
    d.totally_geodesic_residual = d.hess_sup;
    d.hess_tol = r.options.tol.hessian * r.h * r.h * std::sqrt(scale);
    d.spread_tol = r.options.tol.spread * r.h * r.h * scale;
    // λ-equality only matters for Sec_max > 0
    d.lambda_required = r.sec_max_image > r.options.tol.hypothesis;
    if (f.target().kind() == TargetKind::Euclidean) d.affine_residual = affine_flatness_residual(f, r.n);
    d.passed = d.hess_sup <= d.hess_tol && d.S_spread <= d.spread_tol &&
               (!d.lambda_required || d.lambda_spread <= d.spread_tol) &&
               (!d.affine_residual || *d.affine_residual <= d.hess_tol);
    return d;
}

} // namespace detail

/// Every quantity of the pinching inequality, the classification against
/// the equality band, and (at equality) the homothety diagnostics.
inline PinchingReport build_report(const DiscreteMap& f, const ReportOptions& options = {}) {
    const DomainModel& dom = f.domain();
    PinchingReport r;
    r.options = options;
    r.domain = dom.descriptor();
    r.target = f.target().descriptor();
    r.n = dom.dim();
    r.n1 = dom.n1();
    r.n2 = dom.n2();
    r.h = dom.h();

    const RicciMin ric = ricci_min(dom);
    r.ric_min = ric.value;
    r.ric_min_node = ric.node;

    const std::vector<AmbVec> image = image_points(f);
    const SecMaxResult sec = sec_max_over_region(f.target(), image, options.planes);
    r.sec_max_image = sec.value;
    r.sec_max_witness = sec.witness;
    r.sec_min_image = sec.min_value;
    r.hypothesis_flag = sec.min_value >= -options.tol.hypothesis;
    if (options.global_samples > 0) {
        r.sec_max_global_sample = std::max(r.sec_max_image, global_sec_max(f.target(), options));
        r.global_samples = options.global_samples;
    }

    const BochnerField field = bochner_analysis(f);
    r.S0 = field.sup_S;
    r.e_max = 0.5 * r.S0;
    const double coeff = (r.n - 1.0) / r.n;
    r.threshold = coeff * r.sec_max_image * r.S0;
    r.threshold_e = coeff * r.sec_max_image * r.e_max;
    r.margin = r.ric_min - r.threshold;
    r.tol_band = options.tol.equality_band(r.h);
    r.classification = classify(r.margin, r.tol_band);

    r.image_diameter = image_diameter(f);
    r.constant = r.image_diameter <= options.tol.constant;
    r.sup_tension = field.sup_tension;
    r.tension_tol = options.tol.harmonic(r.h, r.S0);
    r.harmonic = r.sup_tension <= r.tension_tol;
    r.sup_bochner_residual = field.sup_residual;
    r.integral_identity = field.integral_identity;
    r.energy = field.energy;

    if (r.constant) r.prediction = "constant";
    else if (!r.hypothesis_flag) r.prediction = "no conclusion (negative curvature on the image)";
    else if (r.classification == Classification::Strict) r.prediction = "constant";
    else if (r.classification == Classification::Equality) r.prediction = "constant or homothetic with totally geodesic image";
    else r.prediction = "no conclusion (hypothesis fails)";

    if (r.classification == Classification::Equality) {
        if (r.constant) {
            EqualityDiagnostics d;
            d.skipped = true;
            d.passed = true;
            r.equality = d;
        } else {
            r.equality = detail::measure_equality(f, field, r);
        }
    }
    return r;
}

/// Equality-case diagnostics for a report classified as equality.
inline EqualityDiagnostics equality_diagnostics(const DiscreteMap& f, const PinchingReport& report) {
    if (report.classification != Classification::Equality)
        throw UsageError(std::string("equality diagnostics need an equality report, got ") + to_string(report.classification));
    if (report.constant) {
        EqualityDiagnostics d;
        d.skipped = true;
        d.passed = true;
        return d;
    }
    return detail::measure_equality(f, bochner_analysis(f), report);
}

struct LocalizationGap {
    double sec_max_image = 0.0;
    double sec_max_global_sample = 0.0;
    double gap = 0.0;
};

/// Curvature seen along the image versus a global sample of the target.
inline LocalizationGap localization_gap(const DiscreteMap& f, const ReportOptions& options = {}) {
    LocalizationGap g;
    const std::vector<AmbVec> image = image_points(f);
    g.sec_max_image = sec_max_over_region(f.target(), image, options.planes).value;
    g.sec_max_global_sample = std::max(g.sec_max_image, global_sec_max(f.target(), options));
    g.gap = g.sec_max_global_sample - g.sec_max_image;
    return g;
}

struct ConsistencyRow {
    std::string name;
    PinchingReport report;
    bool skipped = false;  ///< not numerically harmonic
    bool passed = true;
    std::string note;
};

struct ConsistencyTable {
    std::vector<ConsistencyRow> rows;

    bool all_pass() const {
        return std::all_of(rows.begin(), rows.end(), [](const ConsistencyRow& r) { return r.passed; });
    }
};

/// Checks each harmonic map against the rigidity dichotomy: no nonconstant
/// harmonic map may sit strictly above the threshold, and maps inside the
/// equality band must pass the homothety diagnostics. Non-harmonic maps are
/// listed as skipped.
inline ConsistencyTable consistency_table(const std::vector<std::pair<std::string, DiscreteMap>>& maps,
                                          const ReportOptions& options = {}) {
    ConsistencyTable table;
    for (const auto& [name, f] : maps) {
        ConsistencyRow row;
        row.name = name;
        row.report = build_report(f, options);
        const PinchingReport& r = row.report;
        if (!r.harmonic) {
            row.skipped = true;
            row.note = "skipped: sup|tension| " + format_number(r.sup_tension) + " exceeds " + format_number(r.tension_tol);
        } else if (r.constant) {
            row.note = "constant";
        } else if (r.classification == Classification::Strict) {
            row.passed = false;
            row.note = "nonconstant harmonic map strictly above the pinching threshold";
        } else if (r.classification == Classification::Equality) {
            row.passed = r.equality && r.equality->passed;
            row.note = row.passed ? "equality diagnostics pass" : "equality diagnostics fail";
        } else {
            row.note = "below threshold (no assertion)";
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

inline ConsistencyTable theorem_consistency_scan(const std::vector<std::pair<std::string, DiscreteMap>>& maps,
                                                 const ReportOptions& options = {}) {
    ConsistencyTable table = consistency_table(maps, options);
    for (const ConsistencyRow& row : table.rows)
        if (!row.passed) throw ConsistencyFailure("map '" + row.name + "' contradicts the rigidity dichotomy: " + row.note);
    return table;
}

/// The harmonic catalog on S²(1): constant, identity, scaling r ∈ {½, 1, 2},
/// holomorphic degree 2 and 3.
inline std::vector<std::pair<std::string, DiscreteMap>> default_consistency_catalog(int resolution) {
    const DomainModel dom = DomainModel::round_sphere(1.0, resolution, 2 * resolution);
    const TargetModel unit = TargetModel::sphere(2, 1.0);
    std::vector<std::pair<std::string, DiscreteMap>> maps;
    maps.emplace_back("constant", catalog::make("constant", dom, unit));
    maps.emplace_back("identity", catalog::make("identity", dom, unit));
    for (const char* r : {"0.5", "1", "2"}) {
        const Descriptor d = parse_descriptor(std::string("scaling:r=") + r);
        maps.emplace_back(std::string("scaling:r=") + r, catalog::make(d, dom, catalog::resolve_target(d, std::nullopt)));
    }
    maps.emplace_back("holomorphic:k=2", catalog::make("holomorphic:k=2", dom, unit));
    maps.emplace_back("holomorphic:k=3", catalog::make("holomorphic:k=3", dom, unit));
    return maps;
}

} // namespace brl
