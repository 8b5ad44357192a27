#include "synthwave/scenario.hpp"

#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace synthwave::io {

using nlohmann::json;

namespace {

constexpr long builtin_dimension_cap = 4'000'000;

[[noreturn]] void fail_at_byte(const std::string& text, size_t byte, const std::string& what) {
    int line = 1, column = 1;
    for (size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') { ++line; column = 1; }
        else ++column;
    }
    std::ostringstream os;
    os << "scenario syntax error at line " << line << ", column " << column << ": " << what;
    throw ParseError(os.str(), line, column);
}

void require_keys(const json& object, const std::string& where,
                  const std::set<std::string>& allowed, bool allow_unknown) {
    if (allow_unknown) return;
    for (auto it = object.begin(); it != object.end(); ++it)
        if (!allowed.count(it.key()))
            throw ParseError("unknown key '" + it.key() + "' in " + where +
                             " (pass --allow-unknown to keep going)");
}

double get_number(const json& object, const std::string& where, const std::string& key) {
    if (!object.contains(key))
        throw ParseError("missing key '" + key + "' in " + where);
    if (!object[key].is_number())
        throw ParseError("key '" + key + "' in " + where + " must be a number");
    return object[key].get<double>();
}

double get_number_or(const json& object, const std::string& key, double fallback) {
    if (!object.contains(key)) return fallback;
    return object[key].get<double>();
}

Complex get_complex(const json& value, const std::string& where) {
    if (value.is_number()) return Complex(value.get<double>(), 0.0);
    if (value.is_array() && value.size() == 2 && value[0].is_number() && value[1].is_number())
        return Complex(value[0].get<double>(), value[1].get<double>());
    throw ParseError("complex value in " + where + " must be a number or [re, im]");
}

json complex_to_json(Complex v) {
    if (v.imag() == 0.0) return json(v.real());
    return json::array({v.real(), v.imag()});
}

Leg parse_leg(const json& value, const std::string& where) {
    if (!value.is_string())
        throw ParseError("legs in " + where + " must be strings like \"a0\" or \"bm2+\"");
    std::string s = value.get<std::string>();
    bool dagger = false;
    if (!s.empty() && s.back() == '+') {
        dagger = true;
        s.pop_back();
    }
    if (s.empty())
        throw ParseError("empty mode label in a leg of " + where);
    return Leg{s, dagger};
}

std::string leg_to_string(const Leg& leg) { return leg.mode + (leg.dagger ? "+" : ""); }

counting::DetectorModel parse_detector(const json& object, const std::string& where,
                                       bool allow_unknown) {
    require_keys(object, where, {"efficiency", "dark_rate", "jitter_sigma", "dead_time"},
                 allow_unknown);
    counting::DetectorModel d;
    d.efficiency = get_number_or(object, "efficiency", 1.0);
    d.dark_rate = get_number_or(object, "dark_rate", 0.0);
    d.jitter_sigma = get_number_or(object, "jitter_sigma", 0.0);
    d.dead_time = get_number_or(object, "dead_time", 0.0);
    d.validate();
    return d;
}

json detector_to_json(const counting::DetectorModel& d) {
    return json{{"efficiency", d.efficiency},
                {"dark_rate", d.dark_rate},
                {"jitter_sigma", d.jitter_sigma},
                {"dead_time", d.dead_time}};
}

Scenario from_json(const json& root, const ParseOptions& options) {
    require_keys(root, "the scenario",
                 {"modes", "vertices", "pump", "probe", "virtual_modes", "pair_modes",
                  "detectors", "source", "franson", "conserve", "sweep", "settings", "seed"},
                 options.allow_unknown);

    Scenario sc;

    if (!root.contains("modes") || !root["modes"].is_array() || root["modes"].empty())
        throw ParseError("scenario needs a non-empty 'modes' array");
    for (const json& jm : root["modes"]) {
        require_keys(jm, "a mode", {"label", "m", "omega", "kappa", "kappa_ext", "delta"},
                     options.allow_unknown);
        Mode m;
        if (!jm.contains("label") || !jm["label"].is_string())
            throw ParseError("every mode needs a string 'label'");
        m.label = jm["label"].get<std::string>();
        if (m.label.find('+') != std::string::npos)
            throw ParseError("mode label '" + m.label +
                             "' may not contain '+', it marks creation legs");
        m.m = int(get_number_or(jm, "m", 0.0));
        m.omega = get_number(jm, "mode '" + m.label + "'", "omega");
        m.kappa = get_number(jm, "mode '" + m.label + "'", "kappa");
        m.kappa_ext = get_number_or(jm, "kappa_ext", 0.5 * m.kappa);
        m.delta = get_number_or(jm, "delta", 0.0);
        try {
            sc.graph.add(m);
        } catch (const Error& e) {
            throw ParseError(std::string("invalid mode: ") + e.what());
        }
    }

    if (root.contains("vertices")) {
        for (const json& jv : root["vertices"]) {
            require_keys(jv, "a vertex", {"g", "legs"}, options.allow_unknown);
            InteractionVertex v;
            if (!jv.contains("legs") || !jv["legs"].is_array())
                throw ParseError("every vertex needs a 'legs' array");
            for (const json& jl : jv["legs"]) v.legs.push_back(parse_leg(jl, "a vertex"));
            v.order = int(v.legs.size()) - 1;
            if (!jv.contains("g"))
                throw ParseError("every vertex needs a coupling 'g'");
            v.g = get_complex(jv["g"], "vertex coupling 'g'");
            try {
                v.validate();
                for (const Leg& leg : v.legs) sc.graph.at(leg.mode);
            } catch (const Error& e) {
                throw ParseError(std::string("invalid vertex: ") + e.what());
            }
            sc.vertices.push_back(std::move(v));
        }
    }

    if (root.contains("pump")) {
        const json& jp = root["pump"];
        require_keys(jp, "'pump'", {"mode", "powers_watt", "photon_numbers"},
                     options.allow_unknown);
        PumpSection pump;
        if (!jp.contains("mode") || !jp["mode"].is_string())
            throw ParseError("'pump' needs a mode label");
        pump.mode = jp["mode"].get<std::string>();
        sc.graph.at(pump.mode);
        const bool has_power = jp.contains("powers_watt");
        const bool has_photons = jp.contains("photon_numbers");
        if (has_power == has_photons)
            throw ParseError("'pump' needs exactly one of 'powers_watt' or 'photon_numbers'");
        const json& list = has_power ? jp["powers_watt"] : jp["photon_numbers"];
        if (!list.is_array() || list.empty())
            throw ParseError("the pump level list must be a non-empty array");
        for (const json& v : list)
            (has_power ? pump.powers_watt : pump.photon_numbers).push_back(v.get<double>());
        sc.pump = pump;
    }

    if (root.contains("probe")) {
        const json& jp = root["probe"];
        require_keys(jp, "'probe'", {"mode", "power_watt"}, options.allow_unknown);
        ProbeSection probe;
        probe.mode = jp["mode"].get<std::string>();
        sc.graph.at(probe.mode);
        probe.power_watt = get_number(jp, "'probe'", "power_watt");
        sc.probe = probe;
    }

    if (root.contains("virtual_modes")) {
        for (const json& jv : root["virtual_modes"]) {
            require_keys(jv, "'virtual_modes'", {"mode", "lambda"}, options.allow_unknown);
            VirtualModeSection v;
            v.mode = jv["mode"].get<std::string>();
            sc.graph.at(v.mode);
            if (jv.contains("lambda")) v.lambda = get_complex(jv["lambda"], "'virtual_modes'");
            sc.virtual_modes.push_back(std::move(v));
        }
    }

    if (root.contains("pair_modes")) {
        const json& jp = root["pair_modes"];
        require_keys(jp, "'pair_modes'", {"signal", "idler"}, options.allow_unknown);
        PairModesSection pm;
        pm.signal = jp["signal"].get<std::string>();
        pm.idler = jp["idler"].get<std::string>();
        sc.graph.at(pm.signal);
        sc.graph.at(pm.idler);
        sc.pair_modes = pm;
    }

    if (root.contains("detectors")) {
        const json& jd = root["detectors"];
        require_keys(jd, "'detectors'", {"signal", "idler"}, options.allow_unknown);
        if (jd.contains("signal"))
            sc.detector_signal = parse_detector(jd["signal"], "detectors.signal",
                                                options.allow_unknown);
        if (jd.contains("idler"))
            sc.detector_idler = parse_detector(jd["idler"], "detectors.idler",
                                               options.allow_unknown);
    }

    if (root.contains("source")) {
        const json& js = root["source"];
        require_keys(js, "'source'",
                     {"pair_rate", "tau_left", "tau_right", "background_rates",
                      "heralding_loss"},
                     options.allow_unknown);
        counting::PairSource s;
        s.pair_rate = get_number_or(js, "pair_rate", 0.0);
        s.profile.tau_left = get_number_or(js, "tau_left", 1e-9);
        s.profile.tau_right = get_number_or(js, "tau_right", 1e-9);
        if (js.contains("background_rates")) {
            const json& b = js["background_rates"];
            if (!b.is_array() || b.size() != 2)
                throw ParseError("'background_rates' must be [signal, idler]");
            s.background_rates = {b[0].get<double>(), b[1].get<double>()};
        }
        if (js.contains("heralding_loss")) {
            const json& b = js["heralding_loss"];
            if (!b.is_array() || b.size() != 2)
                throw ParseError("'heralding_loss' must be [signal, idler]");
            s.heralding_loss = {b[0].get<double>(), b[1].get<double>()};
        }
        try {
            s.validate();
        } catch (const Error& e) {
            throw ParseError(std::string("invalid source: ") + e.what());
        }
        sc.source = s;
    }

    if (root.contains("franson")) {
        const json& jf = root["franson"];
        require_keys(jf, "'franson'", {"phi1", "phi2", "delta_t", "v0", "phase_steps"},
                     options.allow_unknown);
        FransonSection f;
        f.setup.phi1 = get_number_or(jf, "phi1", 0.0);
        f.setup.phi2 = get_number_or(jf, "phi2", 0.0);
        f.setup.delta_t = get_number(jf, "'franson'", "delta_t");
        f.setup.v0 = get_number_or(jf, "v0", 1.0);
        f.phase_steps = int(get_number_or(jf, "phase_steps", 16.0));
        if (f.phase_steps < 4)
            throw ParseError("'franson.phase_steps' must be at least 4");
        try {
            f.setup.validate();
        } catch (const Error& e) {
            throw ParseError(std::string("invalid franson section: ") + e.what());
        }
        sc.franson = f;
    }

    if (root.contains("conserve")) {
        for (const json& jc : root["conserve"]) {
            require_keys(jc, "'conserve'", {"name", "legs"}, options.allow_unknown);
            NamedLegs cand;
            cand.name = jc.contains("name") ? jc["name"].get<std::string>() : "candidate";
            if (!jc.contains("legs") || !jc["legs"].is_array())
                throw ParseError("each conserve candidate needs a 'legs' array");
            for (const json& jl : jc["legs"]) {
                Leg leg = parse_leg(jl, "conserve candidate '" + cand.name + "'");
                sc.graph.at(leg.mode);
                cand.legs.push_back(std::move(leg));
            }
            sc.conserve_candidates.push_back(std::move(cand));
        }
    }

    if (root.contains("sweep")) {
        const json& js = root["sweep"];
        require_keys(js, "'sweep'", {"observable", "signal_mode"}, options.allow_unknown);
        SweepSection sweep;
        sweep.observable = js.contains("observable") ? js["observable"].get<std::string>()
                                                     : "output_power";
        static const std::set<std::string> known{"output_power", "photon_number", "pair_flux"};
        if (!known.count(sweep.observable))
            throw ParseError("unknown sweep observable '" + sweep.observable + "'");
        if (js.contains("signal_mode")) {
            sweep.signal_mode = js["signal_mode"].get<std::string>();
            sc.graph.at(sweep.signal_mode);
        }
        sc.sweep = sweep;
    }

    long hard_cap = options.dimension_hard_cap;
    if (hard_cap <= 0) {
        if (const char* env = std::getenv("SYNTHWAVE_DIM_LIMIT"))
            hard_cap = std::atol(env);
        if (hard_cap <= 0) hard_cap = builtin_dimension_cap;
    }

    if (root.contains("settings")) {
        const json& js = root["settings"];
        require_keys(js, "'settings'",
                     {"cutoff", "dimension_limit", "convergence_tolerance", "duration",
                      "bin_width", "delay_range", "energy_tolerance", "max_order", "tau_span",
                      "tau_points", "lambda_scan"},
                     options.allow_unknown);
        Settings& s = sc.settings;
        s.cutoff = int(get_number_or(js, "cutoff", 5.0));
        s.dimension_limit = long(get_number_or(js, "dimension_limit", 1e6));
        s.convergence_tolerance = get_number_or(js, "convergence_tolerance", 0.01);
        s.duration = get_number_or(js, "duration", 1.0);
        s.bin_width = get_number_or(js, "bin_width", 100e-12);
        if (js.contains("delay_range")) s.delay_range = js["delay_range"].get<double>();
        if (js.contains("energy_tolerance"))
            s.energy_tolerance = js["energy_tolerance"].get<double>();
        s.max_order = int(get_number_or(js, "max_order", 4.0));
        s.tau_span = get_number_or(js, "tau_span", 10.0);
        s.tau_points = int(get_number_or(js, "tau_points", 81.0));
        if (js.contains("lambda_scan"))
            for (const json& v : js["lambda_scan"]) s.lambda_scan.push_back(v.get<double>());
        if (s.cutoff < 1) throw ParseError("'settings.cutoff' must be >= 1");
        if (s.tau_points < 3) throw ParseError("'settings.tau_points' must be >= 3");
        if (s.max_order < 3) throw ParseError("'settings.max_order' must be >= 3");
        if (!(s.duration > 0.0)) throw ParseError("'settings.duration' must be > 0");
        if (!(s.bin_width > 0.0)) throw ParseError("'settings.bin_width' must be > 0");
    }
    if (sc.settings.dimension_limit > hard_cap) {
        std::ostringstream os;
        os << "'settings.dimension_limit' (" << sc.settings.dimension_limit
           << ") exceeds the hard cap " << hard_cap << " (SYNTHWAVE_DIM_LIMIT)";
        throw ParseError(os.str());
    }

    if (root.contains("seed")) sc.seed = root["seed"].get<uint64_t>();
    return sc;
}

json to_json(const Scenario& sc) {
    json root;
    root["modes"] = json::array();
    for (const Mode& m : sc.graph.modes())
        root["modes"].push_back(json{{"label", m.label},
                                     {"m", m.m},
                                     {"omega", m.omega},
                                     {"kappa", m.kappa},
                                     {"kappa_ext", m.kappa_ext},
                                     {"delta", m.delta}});
    root["vertices"] = json::array();
    for (const InteractionVertex& v : sc.vertices) {
        json legs = json::array();
        for (const Leg& l : v.legs) legs.push_back(leg_to_string(l));
        root["vertices"].push_back(json{{"g", complex_to_json(v.g)}, {"legs", legs}});
    }
    if (sc.pump) {
        json jp{{"mode", sc.pump->mode}};
        if (!sc.pump->powers_watt.empty()) jp["powers_watt"] = sc.pump->powers_watt;
        else jp["photon_numbers"] = sc.pump->photon_numbers;
        root["pump"] = jp;
    }
    if (sc.probe)
        root["probe"] = json{{"mode", sc.probe->mode}, {"power_watt", sc.probe->power_watt}};
    if (!sc.virtual_modes.empty()) {
        root["virtual_modes"] = json::array();
        for (const auto& v : sc.virtual_modes) {
            json jv{{"mode", v.mode}};
            if (v.lambda) jv["lambda"] = complex_to_json(*v.lambda);
            root["virtual_modes"].push_back(jv);
        }
    }
    if (sc.pair_modes)
        root["pair_modes"] =
            json{{"signal", sc.pair_modes->signal}, {"idler", sc.pair_modes->idler}};
    if (sc.detector_signal || sc.detector_idler) {
        json jd;
        if (sc.detector_signal) jd["signal"] = detector_to_json(*sc.detector_signal);
        if (sc.detector_idler) jd["idler"] = detector_to_json(*sc.detector_idler);
        root["detectors"] = jd;
    }
    if (sc.source) {
        const auto& s = *sc.source;
        root["source"] = json{{"pair_rate", s.pair_rate},
                              {"tau_left", s.profile.tau_left},
                              {"tau_right", s.profile.tau_right},
                              {"background_rates", {s.background_rates[0], s.background_rates[1]}},
                              {"heralding_loss", {s.heralding_loss[0], s.heralding_loss[1]}}};
    }
    if (sc.franson)
        root["franson"] = json{{"phi1", sc.franson->setup.phi1},
                               {"phi2", sc.franson->setup.phi2},
                               {"delta_t", sc.franson->setup.delta_t},
                               {"v0", sc.franson->setup.v0},
                               {"phase_steps", sc.franson->phase_steps}};
    if (!sc.conserve_candidates.empty()) {
        root["conserve"] = json::array();
        for (const auto& c : sc.conserve_candidates) {
            json legs = json::array();
            for (const Leg& l : c.legs) legs.push_back(leg_to_string(l));
            root["conserve"].push_back(json{{"name", c.name}, {"legs", legs}});
        }
    }
    if (sc.sweep) {
        json js{{"observable", sc.sweep->observable}};
        if (!sc.sweep->signal_mode.empty()) js["signal_mode"] = sc.sweep->signal_mode;
        root["sweep"] = js;
    }
    json js{{"cutoff", sc.settings.cutoff},
            {"dimension_limit", sc.settings.dimension_limit},
            {"convergence_tolerance", sc.settings.convergence_tolerance},
            {"duration", sc.settings.duration},
            {"bin_width", sc.settings.bin_width},
            {"max_order", sc.settings.max_order},
            {"tau_span", sc.settings.tau_span},
            {"tau_points", sc.settings.tau_points}};
    if (sc.settings.delay_range) js["delay_range"] = *sc.settings.delay_range;
    if (sc.settings.energy_tolerance) js["energy_tolerance"] = *sc.settings.energy_tolerance;
    if (!sc.settings.lambda_scan.empty()) js["lambda_scan"] = sc.settings.lambda_scan;
    root["settings"] = js;
    root["seed"] = sc.seed;
    return root;
}

}  // namespace

Scenario parse_scenario_text(const std::string& text, const ParseOptions& options) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        fail_at_byte(text, e.byte ? e.byte - 1 : 0, e.what());
    }
    if (!root.is_object())
        throw ParseError("scenario must be a JSON object");
    return from_json(root, options);
}

Scenario parse_scenario(const std::string& path, const ParseOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError("cannot open scenario file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario_text(buffer.str(), options);
}

std::string serialize_scenario(const Scenario& scenario) {
    return to_json(scenario).dump(2) + "\n";
}

}  // namespace synthwave::io
