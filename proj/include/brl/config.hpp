#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "brl/descriptor.hpp"
#include "brl/error.hpp"
#include "brl/rigidity.hpp"

namespace brl {

enum class Command { Verify, Flow, Report, Scan, Consistency };

inline const char* to_string(Command c) {
    switch (c) {
    case Command::Verify: return "verify";
    case Command::Flow: return "flow";
    case Command::Report: return "report";
    case Command::Scan: return "scan";
    case Command::Consistency: return "consistency";
    }
    return "";
}

inline Command parse_command(const std::string& s) {
    if (s == "verify") return Command::Verify;
    if (s == "flow") return Command::Flow;
    if (s == "report") return Command::Report;
    if (s == "scan") return Command::Scan;
    if (s == "consistency") return Command::Consistency;
    throw UsageError("unknown command '" + s + "'");
}

/// `name=lo:hi:step`, inclusive of hi up to rounding.
struct ParamSweep {
    std::string name;
    double lo = 0.0, hi = 0.0, step = 0.0;

    std::vector<double> points() const {
        const int count = static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
        std::vector<double> out;
        for (int i = 0; i < count; ++i) out.push_back(lo + i * step);
        return out;
    }
};

inline ParamSweep parse_sweep(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) throw ParseError("sweep must look like name=lo:hi:step", 0);
    ParamSweep s;
    s.name = text.substr(0, eq);
    std::vector<double> parts;
    std::size_t pos = eq + 1;
    while (true) {
        const auto colon = text.find(':', pos);
        const std::string tok = text.substr(pos, colon == std::string::npos ? std::string::npos : colon - pos);
        if (tok.empty()) throw ParseError("empty sweep bound", pos);
        parts.push_back(Descriptor::parse_number(s.name, tok));
        if (colon == std::string::npos) break;
        pos = colon + 1;
    }
    if (parts.size() != 3) throw ParseError("sweep needs exactly lo:hi:step", eq + 1);
    s.lo = parts[0];
    s.hi = parts[1];
    s.step = parts[2];
    if (!(s.step > 0)) throw UsageError("sweep step must be positive");
    if (s.hi < s.lo) throw UsageError("sweep upper bound is below the lower bound");
    return s;
}

struct RunConfig {
    Command command = Command::Verify;
    std::string domain = "sphere:r=1";
    std::optional<std::string> target;
    std::optional<std::string> map;   ///< catalog entry
    std::optional<std::string> load;  ///< saved map file
    int resolution = 32;
    int levels = 1;
    std::uint64_t seed = 0;
    Tolerances tol;
    int global_samples = 4096;
    int planes = 512;

    std::string dt = "auto";
    int steps = 50000;
    int stride = 10;
    double flow_tol = 1e-6;
    bool flow_first = false;

    std::optional<ParamSweep> param;

    std::optional<std::string> json_out;
    std::optional<std::string> csv_out;
    std::optional<std::string> save;
    std::optional<std::string> trace;

    ReportOptions report_options() const {
        ReportOptions o;
        o.tol = tol;
        o.planes.seed = seed;
        o.planes.samples = planes;
        o.global_samples = global_samples;
        return o;
    }
};

/// Thrown for --help; carries the help text.
struct HelpRequested {
    std::string text;
};

namespace detail {

using config_json = nlohmann::json;

inline std::string as_string(const std::string& key, const config_json& v) {
    if (!v.is_string()) throw UsageError("config key '" + key + "' must be a string");
    return v.get<std::string>();
}

inline double as_number(const std::string& key, const config_json& v) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) return Descriptor::parse_number(key, v.get<std::string>());
    throw UsageError("config key '" + key + "' must be a number");
}

inline long long as_integer(const std::string& key, const config_json& v) {
    const double d = as_number(key, v);
    if (d != std::floor(d) || std::abs(d) > 9e15) throw UsageError("config key '" + key + "' must be an integer");
    return static_cast<long long>(d);
}

inline bool as_bool(const std::string& key, const config_json& v) {
    if (v.is_boolean()) return v.get<bool>();
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s == "true" || s == "1") return true;
        if (s == "false" || s == "0") return false;
    }
    throw UsageError("config key '" + key + "' must be a boolean");
}

inline std::string checked_descriptor(const std::string& key, const config_json& v) {
    const std::string s = as_string(key, v);
    parse_descriptor(s);
    return s;
}

/// Single setter shared by the config file and the command line.
inline void apply_setting(RunConfig& c, const std::string& key, const config_json& v) {
    if (key == "command") c.command = parse_command(as_string(key, v));
    else if (key == "domain") c.domain = checked_descriptor(key, v);
    else if (key == "target") c.target = checked_descriptor(key, v);
    else if (key == "map" || key == "init") c.map = checked_descriptor(key, v);
    else if (key == "load") c.load = as_string(key, v);
    else if (key == "resolution") c.resolution = static_cast<int>(as_integer(key, v));
    else if (key == "levels") c.levels = static_cast<int>(as_integer(key, v));
    else if (key == "seed") {
        const long long s = as_integer(key, v);
        if (s < 0) throw UsageError("seed must be nonnegative");
        c.seed = static_cast<std::uint64_t>(s);
    }
    else if (key == "global-samples") c.global_samples = static_cast<int>(as_integer(key, v));
    else if (key == "planes") c.planes = static_cast<int>(as_integer(key, v));
    else if (key == "tol-band") c.tol.band = as_number(key, v);
    else if (key == "tol-tension") c.tol.tension = as_number(key, v);
    else if (key == "tol-hessian") c.tol.hessian = as_number(key, v);
    else if (key == "tol-spread") c.tol.spread = as_number(key, v);
    else if (key == "tol-constant") c.tol.constant = as_number(key, v);
    else if (key == "dt") {
        const std::string s = v.is_string() ? v.get<std::string>() : format_number(as_number(key, v));
        if (s != "auto" && !(Descriptor::parse_number(key, s) > 0)) throw UsageError("dt must be 'auto' or positive");
        c.dt = s;
    }
    else if (key == "steps") c.steps = static_cast<int>(as_integer(key, v));
    else if (key == "stride") c.stride = static_cast<int>(as_integer(key, v));
    else if (key == "tol") c.flow_tol = as_number(key, v);
    else if (key == "flow") c.flow_first = as_bool(key, v);
    else if (key == "param") c.param = parse_sweep(as_string(key, v));
    else if (key == "json") c.json_out = as_string(key, v);
    else if (key == "csv") c.csv_out = as_string(key, v);
    else if (key == "save") c.save = as_string(key, v);
    else if (key == "trace") c.trace = as_string(key, v);
    else throw UsageError("unknown config key '" + key + "'");
}

inline void apply_file(RunConfig& c, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file '" + path + "'");
    config_json doc;
    try {
        doc = config_json::parse(in);
    } catch (const config_json::parse_error& e) {
        throw ParseError(std::string("config file: ") + e.what(), e.byte);
    }
    if (!doc.is_object()) throw UsageError("config file must hold a JSON object");
    for (auto it = doc.begin(); it != doc.end(); ++it) apply_setting(c, it.key(), it.value());
}

inline void validate(const RunConfig& c) {
    if (c.resolution < 8) throw UsageError("resolution must be at least 8 per axis");
    if (c.levels < 1 || c.levels > 5) throw UsageError("levels must be between 1 and 5");
    if (c.map && c.load) throw UsageError("give either a catalog map or a saved map, not both");
    if (c.load && c.levels > 1) throw UsageError("a saved map cannot be refined; use levels = 1");
    if (c.steps < 0) throw UsageError("steps must be nonnegative");
    if (c.stride < 1) throw UsageError("stride must be positive");
    if (!(c.flow_tol > 0)) throw UsageError("tol must be positive");
    if (c.global_samples < 0) throw UsageError("global-samples must be nonnegative");
    if (c.planes < 1) throw UsageError("planes must be positive");
    for (double t : {c.tol.band, c.tol.tension, c.tol.hessian, c.tol.spread, c.tol.constant})
        if (!(t > 0)) throw UsageError("tolerance constants must be positive");
    switch (c.command) {
    case Command::Verify:
    case Command::Report:
        if (!c.map && !c.load) throw UsageError(std::string(to_string(c.command)) + " needs --map or --load");
        break;
    case Command::Flow:
        if (!c.map && !c.load) throw UsageError("flow needs --init or --load");
        break;
    case Command::Scan:
        if (!c.map) throw UsageError("scan needs a catalog --map");
        if (!c.param) throw UsageError("scan needs --param name=lo:hi:step");
        break;
    case Command::Consistency:
        if (c.map) throw UsageError("consistency runs the fixed catalog; use --load to add a saved map");
        break;
    }
}

} // namespace detail

/// Parses `<command> [flags]` (argv without the program name). `--config
/// file.json` supplies defaults; explicit flags override it.
inline RunConfig parse_config(const std::vector<std::string>& args) {
    CLI::App app{"Bochner rigidity lab", "brl"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    struct Key {
        const char* name;
        const char* type;
        const char* help;
    };
    static const Key kKeys[] = {
        {"domain", "DESC", "domain descriptor (sphere:r=R or torus:a=A,b=B)"},
        {"target", "DESC", "target descriptor"},
        {"map", "DESC", "catalog map"},
        {"init", "DESC", "catalog map (alias of --map)"},
        {"load", "FILE", "map file written by --save"},
        {"resolution", "INT", "grid N1 (>= 8)"},
        {"levels", "INT", "refinement levels for verify (1..5)"},
        {"seed", "INT", "seed for plane sampling"},
        {"global-samples", "INT", "target points for the global Sec_max comparator (0 skips)"},
        {"planes", "INT", "random 2-planes per point"},
        {"tol-band", "C", "equality band constant"},
        {"tol-tension", "C", "harmonicity constant"},
        {"tol-hessian", "C", "totally geodesic constant"},
        {"tol-spread", "C", "lambda spread constant"},
        {"tol-constant", "X", "image diameter counted as a point"},
        {"dt", "X|auto", "flow time step"},
        {"steps", "INT", "flow step budget"},
        {"stride", "INT", "trace row every N steps"},
        {"tol", "X", "flow convergence tolerance on sup|tau|"},
        {"param", "NAME=LO:HI:STEP", "scan sweep"},
        {"json", "FILE", "write JSON here instead of stdout"},
        {"csv", "FILE", "CSV output"},
        {"save", "FILE", "save the final map"},
        {"trace", "FILE", "flow trace CSV"},
    };
    struct Sub {
        CLI::App* app;
        std::map<std::string, CLI::Option*> opts;
        CLI::Option* flow = nullptr;
        CLI::Option* config = nullptr;
    };
    std::vector<Sub> subs;
    std::map<std::string, std::string> storage;
    static const std::pair<const char*, const char*> kCommands[] = {
        {"verify", "Bochner identity and pinching checks under refinement"},
        {"flow", "harmonic map heat flow"},
        {"report", "pinching report and rigidity classification"},
        {"scan", "reports over a parameter sweep"},
        {"consistency", "rigidity dichotomy over the harmonic catalog"},
    };
    for (const auto& [name, about] : kCommands) {
        Sub s;
        s.app = app.add_subcommand(name, about);
        for (const Key& k : kKeys)
            s.opts[k.name] = s.app->add_option(std::string("--") + k.name, storage[std::string(name) + "/" + k.name], k.help)
                                 ->type_name(k.type);
        s.flow = s.app->add_flag("--flow", "run the heat flow before reporting");
        s.config = s.app->add_option("--config", storage[std::string(name) + "/config"], "JSON config file");
        subs.push_back(s);
    }

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        throw HelpRequested{app.help()};
    } catch (const CLI::CallForAllHelp&) {
        throw HelpRequested{app.help("", CLI::AppFormatMode::All)};
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }

    RunConfig c;
    for (const Sub& s : subs) {
        if (!s.app->parsed()) continue;
        const std::string name = s.app->get_name();
        if (s.config->count()) detail::apply_file(c, storage[name + "/config"]);
        c.command = parse_command(name);
        for (const auto& [key, opt] : s.opts)
            if (opt->count()) detail::apply_setting(c, key, detail::config_json(storage[name + "/" + key]));
        if (s.flow->count()) c.flow_first = true;
    }
    detail::validate(c);
    return c;
}

inline RunConfig parse_config(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return parse_config(args);
}

} // namespace brl
