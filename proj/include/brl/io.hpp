#pragma once

#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "brl/bochner.hpp"
#include "brl/descriptor.hpp"
#include "brl/domain.hpp"
#include "brl/error.hpp"
#include "brl/flow.hpp"
#include "brl/map.hpp"
#include "brl/rigidity.hpp"
#include "brl/target.hpp"

namespace brl {

using json = nlohmann::ordered_json;

// ---- map files -------------------------------------------------------------
//
//   BRLMAP 1
//   domain <descriptor>
//   target <descriptor>
//   grid <N1> <N2>
//   ambient <m>
//   <one node per line, row-major, m values each>

inline void write_map(std::ostream& out, const DiscreteMap& f) {
    const DomainModel& d = f.domain();
    out << "BRLMAP 1\n"
        << "domain " << d.descriptor() << '\n'
        << "target " << f.target().descriptor() << '\n'
        << "grid " << d.n1() << ' ' << d.n2() << '\n'
        << "ambient " << f.values().rows() << '\n';
    for (Eigen::Index n = 0; n < f.values().cols(); ++n) {
        for (Eigen::Index r = 0; r < f.values().rows(); ++r) out << (r ? " " : "") << format_number(f.values()(r, n));
        out << '\n';
    }
}

inline void save_map(const std::string& path, const DiscreteMap& f) {
    std::ofstream out(path);
    if (!out) throw UsageError("cannot write map file '" + path + "'");
    write_map(out, f);
    if (!out) throw UsageError("failed writing map file '" + path + "'");
}

namespace detail {

inline std::string header_field(std::istream& in, const std::string& key) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("map file ends before '" + key + "'", 0);
    if (line.rfind(key + " ", 0) != 0) throw ParseError("expected '" + key + "' line, got '" + line + "'", 0);
    return line.substr(key.size() + 1);
}

inline DomainModel domain_with_grid(const std::string& text, int n1, int n2) {
    const Descriptor d = parse_descriptor(text);
    if (d.kind == "torus") {
        d.expect_only({"a", "b"});
        return DomainModel::flat_torus(d.number("a", 1.0), d.number("b", 1.0), n1, n2);
    }
    if (d.kind == "sphere") {
        d.expect_only({"r"});
        return DomainModel::round_sphere(d.number("r", 1.0), n1, n2);
    }
    throw UsageError("unknown domain kind '" + d.kind + "'");
}

} // namespace detail

inline DiscreteMap read_map(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "BRLMAP 1") throw ParseError("not a map file (missing 'BRLMAP 1' header)", 0);
    const std::string domain = detail::header_field(in, "domain");
    const TargetModel target = TargetModel::from_descriptor(detail::header_field(in, "target"));
    int n1 = 0, n2 = 0, m = 0;
    {
        std::istringstream grid(detail::header_field(in, "grid"));
        if (!(grid >> n1 >> n2) || n1 < 1 || n2 < 1) throw ParseError("malformed grid line", 0);
        std::istringstream amb(detail::header_field(in, "ambient"));
        if (!(amb >> m) || m != target.ambient_dim()) throw ParseError("ambient dimension does not match the target", 0);
    }
    const DomainModel dom = detail::domain_with_grid(domain, n1, n2);
    Eigen::MatrixXd values(m, static_cast<Eigen::Index>(dom.node_count()));
    for (Eigen::Index n = 0; n < values.cols(); ++n) {
        if (!std::getline(in, line)) throw ParseError("map file truncated at node " + std::to_string(n), 0);
        std::istringstream row(line);
        for (int r = 0; r < m; ++r) {
            std::string tok;
            if (!(row >> tok)) throw ParseError("node " + std::to_string(n) + " has too few values", 0);
            values(r, n) = Descriptor::parse_number("value", tok);
        }
        std::string extra;
        if (row >> extra) throw ParseError("node " + std::to_string(n) + " has too many values", 0);
    }
    return DiscreteMap(dom, target, std::move(values));
}

inline DiscreteMap load_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open map file '" + path + "'");
    return read_map(in);
}

// ---- CSV ---------------------------------------------------------------------

/// Per-node table of the Bochner terms. `slack` is Q minus the pinching
/// lower bound built from the report's Ric_min and Sec_max.
inline void write_node_csv(std::ostream& out, const DiscreteMap& f, const BochnerField& field, double ric_min,
                           double sec_max) {
    const DomainModel& d = f.domain();
    out << "i,j,flagged,e";
    for (int k = 1; k <= d.dim(); ++k) out << ",lambda" << k;
    out << ",ricci_term,target_term,Q,hess,lap,residual,slack\n";
    for (std::size_t n = 0; n < d.node_count(); ++n) {
        const BochnerNode& b = field.nodes[n];
        const double slack =
            pointwise_pinching_check(b.Q, b.lambda.sum(), d.dim(), ric_min, sec_max, false).slack;
        out << d.row(n) << ',' << d.col(n) << ',' << (b.flagged ? 1 : 0) << ',' << format_number(b.e);
        for (int k = 0; k < d.dim(); ++k) out << ',' << format_number(b.lambda[k]);
        for (double v : {b.ricci_term, b.target_term, b.Q, b.hess, b.lap, b.residual, slack}) out << ',' << format_number(v);
        out << '\n';
    }
}

inline void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace) {
    out << "step,energy,sup_tension,image_diameter,e_max\n";
    for (const TraceRow& r : trace)
        out << r.step << ',' << format_number(r.energy) << ',' << format_number(r.sup_tension) << ','
            << format_number(r.image_diameter) << ',' << format_number(r.e_max) << '\n';
}

inline const std::vector<std::string>& scan_columns() {
    static const std::vector<std::string> cols = {
        "param", "value", "domain", "target", "map", "n1", "n2", "ric_min", "sec_max_image", "sec_max_global_sample",
        "S0", "e_max", "threshold", "threshold_e", "margin", "tol", "classification", "hypothesis_flag", "constant",
        "harmonic", "sup_tension", "tension_tol", "lambda_spread", "hess_sup", "homothety_factor", "seed"};
    return cols;
}

inline void write_scan_header(std::ostream& out) {
    const auto& cols = scan_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

inline void write_scan_row(std::ostream& out, const std::string& param, double value, const std::string& map,
                           const PinchingReport& r) {
    auto num = [](double v) { return format_number(v); };
    const bool eq = r.equality && !r.equality->skipped;
    out << csv_field(param) << ',' << num(value) << ',' << csv_field(r.domain) << ',' << csv_field(r.target) << ','
        << csv_field(map) << ',' << r.n1 << ',' << r.n2 << ',' << num(r.ric_min) << ',' << num(r.sec_max_image) << ','
        << num(r.sec_max_global_sample) << ',' << num(r.S0) << ',' << num(r.e_max) << ',' << num(r.threshold) << ','
        << num(r.threshold_e) << ',' << num(r.margin) << ',' << num(r.tol_band) << ',' << to_string(r.classification)
        << ',' << r.hypothesis_flag << ',' << r.constant << ',' << r.harmonic << ',' << num(r.sup_tension) << ','
        << num(r.tension_tol) << ',' << (eq ? num(r.equality->lambda_spread) : "") << ','
        << (eq ? num(r.equality->hess_sup) : "") << ',' << (eq ? num(r.equality->homothety_factor) : "") << ','
        << r.options.planes.seed << '\n';
}

// ---- JSON --------------------------------------------------------------------

/// JSON has no NaN; absent quantities become null.
inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json vec_json(const AmbVec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

inline json to_json(const Tolerances& t) {
    return json{{"band_C", t.band},       {"tension_C", t.tension},     {"hessian_C", t.hessian},
                {"spread_C", t.spread},   {"constant_diameter", t.constant}, {"hypothesis", t.hypothesis}};
}

inline json to_json(const EqualityDiagnostics& d) {
    json j{{"skipped", d.skipped},
           {"passed", d.passed},
           {"hess_sup", d.hess_sup},
           {"hess_tol", d.hess_tol},
           {"lambda_spread", d.lambda_spread},
           {"lambda_required", d.lambda_required},
           {"S_spread", d.S_spread},
           {"spread_tol", d.spread_tol},
           {"homothety_factor", d.homothety_factor},
           {"totally_geodesic_residual", d.totally_geodesic_residual}};
    j["affine_residual"] = d.affine_residual ? json(*d.affine_residual) : json(nullptr);
    return j;
}

inline json to_json(const PinchingReport& r) {
    json j;
    j["domain"] = r.domain;
    j["target"] = r.target;
    j["n"] = r.n;
    j["resolution"] = {{"n1", r.n1}, {"n2", r.n2}, {"h", r.h}};
    j["ric_min"] = r.ric_min;
    j["ric_min_node"] = {{"index", r.ric_min_node}};
    j["sec_max_image"] = r.sec_max_image;
    j["sec_max_witness"] = {{"base", vec_json(r.sec_max_witness.base)},
                            {"x", vec_json(r.sec_max_witness.x)},
                            {"y", vec_json(r.sec_max_witness.y)},
                            {"value", r.sec_max_witness.value}};
    j["sec_min_image"] = r.sec_min_image;
    j["hypothesis_flag"] = r.hypothesis_flag;
    j["sec_max_global_sample"] = number_or_null(r.sec_max_global_sample);
    j["global_samples"] = r.global_samples;
    j["S0"] = r.S0;
    j["e_max"] = r.e_max;
    j["threshold_S0"] = r.threshold;
    j["threshold_e"] = r.threshold_e;
    j["threshold_used"] = "threshold_S0";
    j["margin"] = r.margin;
    j["tol"] = r.tol_band;
    j["classification"] = to_string(r.classification);
    j["prediction"] = r.prediction;
    j["image_diameter"] = r.image_diameter;
    j["constant"] = r.constant;
    j["harmonic"] = r.harmonic;
    j["harmonicity_warning"] = !r.harmonic;
    j["sup_tension"] = r.sup_tension;
    j["tension_tol"] = r.tension_tol;
    j["sup_bochner_residual"] = r.sup_bochner_residual;
    j["integral_identity"] = r.integral_identity;
    j["energy"] = r.energy;
    j["equality"] = r.equality ? to_json(*r.equality) : json(nullptr);
    j["tolerances"] = to_json(r.options.tol);
    j["seed"] = r.options.planes.seed;
    j["grassmann"] = {{"samples", r.options.planes.samples},
                      {"ascent_steps", r.options.planes.ascent_steps},
                      {"ascent_starts", r.options.planes.ascent_starts}};
    return j;
}

inline json to_json(const ConsistencyTable& t) {
    json rows = json::array();
    for (const ConsistencyRow& row : t.rows)
        rows.push_back({{"map", row.name},
                        {"classification", to_string(row.report.classification)},
                        {"margin", row.report.margin},
                        {"tol", row.report.tol_band},
                        {"harmonic", row.report.harmonic},
                        {"constant", row.report.constant},
                        {"skipped", row.skipped},
                        {"passed", row.passed},
                        {"note", row.note}});
    return json{{"rows", rows}, {"all_pass", t.all_pass()}};
}

inline json to_json(const FlowSummary& s) {
    return json{{"outcome", to_string(s.outcome)},
                {"steps", s.steps},
                {"dt", s.dt},
                {"rejections", s.rejections},
                {"initial_energy", s.energy_trace.empty() ? 0.0 : s.energy_trace.front()},
                {"final_energy", s.energy_trace.empty() ? 0.0 : s.energy_trace.back()},
                {"final_sup_tension", s.final_sup_tension},
                {"final_diameter", s.final_diameter},
                {"params",
                 {{"cfl", s.params.cfl},
                  {"max_steps", s.params.max_steps},
                  {"tol", s.params.tol},
                  {"collapse_tol", s.params.collapse_tol},
                  {"stride", s.params.stride},
                  {"energy_slack", s.params.energy_slack}}}};
}

/// JSON rendered with 17 significant digits for every double.
inline std::string dump_json(const json& j, int indent = 2) {
    std::string out;
    const std::function<void(const json&, int)> emit = [&](const json& v, int depth) {
        const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
        const std::string close(static_cast<std::size_t>(indent * depth), ' ');
        if (v.is_object()) {
            if (v.empty()) { out += "{}"; return; }
            out += "{\n";
            bool first = true;
            for (auto it = v.begin(); it != v.end(); ++it) {
                if (!first) out += ",\n";
                first = false;
                out += pad + json(it.key()).dump() + ": ";
                emit(it.value(), depth + 1);
            }
            out += "\n" + close + "}";
        } else if (v.is_array()) {
            if (v.empty()) { out += "[]"; return; }
            out += "[";
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (i) out += ", ";
                emit(v[i], depth + 1);
            }
            out += "]";
        } else if (v.is_number_float()) {
            const double d = v.get<double>();
            out += std::isfinite(d) ? format_number(d) : std::string("null");
        } else {
            out += v.dump();
        }
    };
    emit(j, 0);
    return out + "\n";
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw UsageError("cannot write '" + path + "'");
    out << text;
}

} // namespace brl
