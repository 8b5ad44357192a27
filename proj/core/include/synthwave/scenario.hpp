#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "synthwave/counting.hpp"
#include "synthwave/modes.hpp"

namespace synthwave::io {

/// Scenario parse failure with the file location when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line = 0, int column = 0)
        : Error(what), line(line), column(column) {}
    int line, column;
};

struct PumpSection {
    std::string mode;
    std::vector<double> powers_watt;     // exactly one of the two lists is set
    std::vector<double> photon_numbers;
};

struct ProbeSection {
    std::string mode;
    double power_watt = 0.0;
};

struct VirtualModeSection {
    std::string mode;
    std::optional<Complex> lambda;  // default: delta - i kappa/2 of the mode
};

struct PairModesSection {
    std::string signal;
    std::string idler;
};

struct NamedLegs {
    std::string name;
    std::vector<Leg> legs;
};

struct SweepSection {
    std::string observable;   // output_power | photon_number | pair_flux
    std::string signal_mode;  // mode whose output is swept (CME observables)
};

struct FransonSection {
    counting::FransonSetup setup;
    int phase_steps = 16;
};

struct Settings {
    int cutoff = 5;
    long dimension_limit = 1'000'000;
    double convergence_tolerance = 0.01;
    double duration = 1.0;            // counting acquisition [s]
    double bin_width = 100e-12;       // [s]
    std::optional<double> delay_range;       // [s]; default from source profile
    std::optional<double> energy_tolerance;  // [rad/s]
    int max_order = 4;
    double tau_span = 10.0;           // g2 grid half-width in units of 1/min kappa
    int tau_points = 81;
    std::vector<double> lambda_scan;  // |Lambda| multipliers for the convergence scan
};

struct Scenario {
    ModeGraph graph;
    std::vector<InteractionVertex> vertices;
    std::optional<PumpSection> pump;
    std::optional<ProbeSection> probe;
    std::vector<VirtualModeSection> virtual_modes;
    std::optional<PairModesSection> pair_modes;
    std::optional<counting::DetectorModel> detector_signal;
    std::optional<counting::DetectorModel> detector_idler;
    std::optional<counting::PairSource> source;
    std::optional<FransonSection> franson;
    std::vector<NamedLegs> conserve_candidates;
    std::optional<SweepSection> sweep;
    Settings settings;
    uint64_t seed = 1;

    /// Resolve a virtual-mode section to its elimination denominator.
    Elimination elimination_for(const VirtualModeSection& section) const {
        return Elimination{section.mode,
                           section.lambda.value_or(default_lambda(graph.at(section.mode)))};
    }
};

struct ParseOptions {
    bool allow_unknown = false;  // strict unknown-key rejection by default
    long dimension_hard_cap = 0; // 0: take SYNTHWAVE_DIM_LIMIT or the built-in cap
};

Scenario parse_scenario(const std::string& path, const ParseOptions& options = {});
Scenario parse_scenario_text(const std::string& text, const ParseOptions& options = {});

/// Canonical serialization: sorted keys, all defaults made explicit.
/// parse(serialize(s)) == s.
std::string serialize_scenario(const Scenario& scenario);

}  // namespace synthwave::io
