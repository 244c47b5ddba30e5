#pragma once

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "brl/bochner.hpp"
#include "brl/catalog.hpp"
#include "brl/config.hpp"
#include "brl/flow.hpp"
#include "brl/io.hpp"
#include "brl/rigidity.hpp"

namespace brl {

namespace detail {

inline std::string descriptor_text(const Descriptor& d) {
    std::string s = d.kind;
    bool first = true;
    for (const auto& [k, v] : d.params) {
        s += (first ? ":" : ",") + k + "=" + v;
        first = false;
    }
    return s;
}

struct MapInputs {
    Descriptor domain;
    std::optional<Descriptor> target;
    Descriptor map;
};

inline MapInputs map_inputs(const RunConfig& c) {
    MapInputs in{parse_descriptor(c.domain), std::nullopt, parse_descriptor(*c.map)};
    if (c.target) in.target = parse_descriptor(*c.target);
    return in;
}

inline DiscreteMap build_map(const MapInputs& in, int resolution) {
    const DomainModel dom = DomainModel::from_descriptor(in.domain, resolution);
    std::optional<TargetModel> requested;
    if (in.target) requested = TargetModel::from_descriptor(*in.target);
    return catalog::make(in.map, dom, catalog::resolve_target(in.map, requested));
}

inline DiscreteMap source_map(const RunConfig& c, int resolution) {
    if (c.load) return load_map(*c.load);
    return build_map(map_inputs(c), resolution);
}

inline FlowParams flow_params(const RunConfig& c) {
    FlowParams p;
    if (c.dt != "auto") p.dt = Descriptor::parse_number("dt", c.dt);
    p.max_steps = c.steps;
    p.tol = c.flow_tol;
    p.stride = c.stride;
    p.collapse_tol = c.tol.constant;
    return p;
}

inline bool energy_monotone(const FlowSummary& s) {
    for (std::size_t i = 1; i < s.energy_trace.size(); ++i)
        if (s.energy_trace[i] > s.energy_trace[i - 1] + s.params.energy_slack) return false;
    return true;
}

inline void emit(const RunConfig& c, const json& j, std::ostream& out) {
    const std::string text = dump_json(j);
    if (c.json_out) write_text(*c.json_out, text);
    else out << text;
}

inline json assertion(const std::string& name, bool passed, const std::string& detail = "") {
    json a{{"name", name}, {"passed", passed}};
    if (!detail.empty()) a["detail"] = detail;
    return a;
}

inline bool all_passed(const json& assertions) {
    for (const auto& a : assertions)
        if (!a["passed"].get<bool>()) return false;
    return true;
}

inline int run_verify(const RunConfig& c, std::ostream& out) {
    json levels = json::array();
    json assertions = json::array();
    std::vector<double> residuals;
    bool all_harmonic = true;
    std::optional<DiscreteMap> finest;
    std::optional<BochnerField> finest_field;
    std::optional<PinchingReport> finest_report;
    ReportOptions opts = c.report_options();
    opts.global_samples = 0;

    for (int level = 0; level < c.levels; ++level) {
        const int res = c.resolution << level;
        DiscreteMap f = source_map(c, res);
        BochnerField field = bochner_analysis(f);
        PinchingReport r = build_report(f, opts);
        double min_slack = std::numeric_limits<double>::infinity();
        bool chain_ok = true;
        for (std::size_t n = 0; n < f.domain().node_count(); ++n) {
            const BochnerNode& b = field.nodes[n];
            if (b.flagged) continue;
            const double lam[2] = {b.lambda[0], b.lambda[1]};
            const LambdaChain lc = lambda_chain_check(lam);
            chain_ok = chain_ok && lc.identity_holds() && lc.bound_holds();
            min_slack = std::min(min_slack,
                                 pointwise_pinching_check(b.Q, b.lambda.sum(), f.domain().dim(), r.ric_min,
                                                          r.sec_max_image, false).slack);
        }
        all_harmonic = all_harmonic && r.harmonic;
        residuals.emplace_back(field.sup_residual);
        levels.push_back(json{{"n1", f.domain().n1()},
                          {"n2", f.domain().n2()},
                          {"h", f.domain().h()},
                          {"sup_residual", field.sup_residual},
                          {"integral_identity", field.integral_identity},
                          {"integral_identity_per_volume", field.integral_identity / f.domain().volume()},
                          {"sup_path_gap", field.sup_path_gap},
                          {"sup_tension", field.sup_tension},
                          {"tension_tol", r.tension_tol},
                          {"harmonic", r.harmonic},
                          {"energy", field.energy},
                          {"sup_S", field.sup_S},
                          {"min_pinching_slack", min_slack},
                          {"lambda_chain_ok", chain_ok}});
        const std::string at = "@" + std::to_string(f.domain().n1()) + "x" + std::to_string(f.domain().n2());
        assertions.emplace_back(assertion("target_term_paths_agree" + at, field.sup_path_gap <= 1e-10,
                                       format_number(field.sup_path_gap)));
        assertions.emplace_back(assertion("lambda_chain" + at, chain_ok));
        finest.emplace(std::move(f));
        finest_field.emplace(std::move(field));
        finest_report.emplace(std::move(r));
    }

    json ratios = json::array();
    for (std::size_t i = 1; i < residuals.size(); ++i) {
        const double ratio = residuals[i - 1] / residuals[i];
        ratios.emplace_back(number_or_null(ratio));
        if (all_harmonic)
            assertions.emplace_back(assertion("residual_ratio_" + std::to_string(i), ratio >= 3.0 && ratio <= 5.0,
                                           format_number(ratio)));
    }

    if (c.csv_out) {
        std::ofstream csv(*c.csv_out);
        if (!csv) throw UsageError("cannot write '" + *c.csv_out + "'");
        write_node_csv(csv, *finest, *finest_field, finest_report->ric_min, finest_report->sec_max_image);
    }

    json j;
    j["command"] = "verify";
    j["domain"] = finest->domain().descriptor();
    j["target"] = finest->target().descriptor();
    j["map"] = c.load ? *c.load : *c.map;
    j["seed"] = c.seed;
    j["levels"] = levels;
    j["residual_ratios"] = ratios;
    j["ratio_assertion"] = residuals.size() < 2 ? "not applicable (single level)"
                           : all_harmonic    ? "enabled"
                                             : "skipped (map not numerically harmonic)";
    j["tolerances"] = to_json(c.tol);
    j["assertions"] = assertions;
    j["passed"] = all_passed(assertions);
    emit(c, j, out);
    return all_passed(assertions) ? 0 : 1;
}

inline int run_flow_command(const RunConfig& c, std::ostream& out) {
    DiscreteMap f = source_map(c, c.resolution);
    auto [final_map, summary] = run_flow(std::move(f), flow_params(c));
    if (c.trace) {
        std::ofstream t(*c.trace);
        if (!t) throw UsageError("cannot write '" + *c.trace + "'");
        write_trace_csv(t, summary.trace);
    }
    if (c.save) save_map(*c.save, final_map);
    json assertions = json::array();
    assertions.emplace_back(assertion("energy_nonincreasing", energy_monotone(summary)));
    json j;
    j["command"] = "flow";
    j["domain"] = final_map.domain().descriptor();
    j["target"] = final_map.target().descriptor();
    j["init"] = c.load ? *c.load : *c.map;
    j["resolution"] = {{"n1", final_map.domain().n1()}, {"n2", final_map.domain().n2()}};
    j["seed"] = c.seed;
    j["flow"] = to_json(summary);
    j["assertions"] = assertions;
    j["passed"] = all_passed(assertions);
    emit(c, j, out);
    return all_passed(assertions) ? 0 : 1;
}

inline int run_report(const RunConfig& c, std::ostream& out) {
    DiscreteMap f = source_map(c, c.resolution);
    json j;
    j["command"] = "report";
    j["map"] = c.load ? *c.load : *c.map;
    if (c.flow_first) {
        auto [flowed, summary] = run_flow(std::move(f), flow_params(c));
        if (c.trace) {
            std::ofstream t(*c.trace);
            if (!t) throw UsageError("cannot write '" + *c.trace + "'");
            write_trace_csv(t, summary.trace);
        }
        if (c.save) save_map(*c.save, flowed);
        j["flow"] = to_json(summary);
        f = std::move(flowed);
    }
    const ConsistencyTable table = consistency_table({{j["map"].get<std::string>(), f}}, c.report_options());
    j["report"] = to_json(table.rows.front().report);
    json assertions = json::array();
    assertions.emplace_back(assertion("rigidity_dichotomy", table.rows.front().passed, table.rows.front().note));
    j["assertions"] = assertions;
    j["passed"] = all_passed(assertions);
    emit(c, j, out);
    return all_passed(assertions) ? 0 : 1;
}

inline int run_scan(const RunConfig& c, std::ostream& out) {
    const ParamSweep& sweep = *c.param;
    MapInputs base = map_inputs(c);
    std::ostringstream csv;
    write_scan_header(csv);
    json rows = json::array();
    for (double value : sweep.points()) {
        MapInputs in = base;
        const std::string v = format_shortest(value);
        if (sweep.name.rfind("domain.", 0) == 0) in.domain.params[sweep.name.substr(7)] = v;
        else if (sweep.name.rfind("target.", 0) == 0) {
            if (!in.target) throw UsageError("sweep over a target parameter needs --target");
            in.target->params[sweep.name.substr(7)] = v;
        } else in.map.params[sweep.name] = v;
        const DiscreteMap f = build_map(in, c.resolution);
        const PinchingReport r = build_report(f, c.report_options());
        write_scan_row(csv, sweep.name, value, descriptor_text(in.map), r);
        json row = to_json(r);
        row["param"] = sweep.name;
        row["value"] = value;
        row["map"] = descriptor_text(in.map);
        rows.emplace_back(std::move(row));
    }
    if (c.csv_out) write_text(*c.csv_out, csv.str());
    if (c.json_out || !c.csv_out) emit(c, json{{"command", "scan"}, {"seed", c.seed}, {"rows", rows}}, out);
    return 0;
}

inline int run_consistency(const RunConfig& c, std::ostream& out) {
    auto maps = default_consistency_catalog(c.resolution);
    if (c.load) maps.emplace_back(*c.load, load_map(*c.load));
    const ConsistencyTable table = consistency_table(maps, c.report_options());
    json j = to_json(table);
    j = json{{"command", "consistency"}, {"resolution", c.resolution}, {"seed", c.seed}, {"rows", j["rows"]},
             {"passed", table.all_pass()}};
    emit(c, j, out);
    if (!table.all_pass()) {
        for (const ConsistencyRow& row : table.rows)
            if (!row.passed) throw ConsistencyFailure("map '" + row.name + "' contradicts the rigidity dichotomy: " + row.note);
    }
    return 0;
}

} // namespace detail

/// Machine-readable error record written to stderr.
inline std::string error_record(const std::string& kind, const std::string& tag, const std::string& message,
                                std::optional<std::size_t> position = std::nullopt) {
    json e{{"kind", kind}, {"tag", tag}, {"message", message}};
    if (position) e["position"] = *position;
    return json{{"error", e}}.dump() + "\n";
}

inline const char* kind_name(ErrorKind k) {
    switch (k) {
    case ErrorKind::Assertion: return "assertion";
    case ErrorKind::Usage: return "usage";
    case ErrorKind::Numerical: return "numerical";
    }
    return "";
}

/// Executes one configured command. Exit status: 0 all assertions pass,
/// 1 assertion failure, 2 usage error, 3 numerical error.
inline int run(const RunConfig& c, std::ostream& out, std::ostream& err) {
    try {
        switch (c.command) {
        case Command::Verify: return detail::run_verify(c, out);
        case Command::Flow: return detail::run_flow_command(c, out);
        case Command::Report: return detail::run_report(c, out);
        case Command::Scan: return detail::run_scan(c, out);
        case Command::Consistency: return detail::run_consistency(c, out);
        }
    } catch (const ParseError& e) {
        err << error_record(kind_name(e.kind()), e.tag(), e.what(), e.position());
        return e.exit_code();
    } catch (const Error& e) {
        err << error_record(kind_name(e.kind()), e.tag(), e.what());
        return e.exit_code();
    } catch (const std::exception& e) {
        err << error_record("numerical", "internal", e.what());
        return static_cast<int>(ErrorKind::Numerical);
    }
    return 2;
}

/// Parse and run; the whole command-line entry point.
inline int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    RunConfig c;
    try {
        c = parse_config(args);
    } catch (const HelpRequested& h) {
        out << h.text;
        return 0;
    } catch (const ParseError& e) {
        err << error_record("usage", e.tag(), e.what(), e.position());
        return 2;
    } catch (const Error& e) {
        err << error_record(kind_name(e.kind()), e.tag(), e.what());
        return e.exit_code();
    }
    return run(c, out, err);
}

} // namespace brl
