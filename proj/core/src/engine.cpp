#include "synthwave/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "synthwave/counting.hpp"
#include "synthwave/digest.hpp"
#include "synthwave/fock.hpp"
#include "synthwave/gaussian.hpp"
#include "synthwave/process_algebra.hpp"
#include "synthwave/semiclassical.hpp"

namespace synthwave::io {

namespace {

std::string legs_string(const std::vector<Leg>& legs) {
    std::vector<std::string> parts;
    parts.reserve(legs.size());
    for (const Leg& l : legs) parts.push_back(l.mode + (l.dagger ? "+" : ""));
    std::sort(parts.begin(), parts.end());
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) out += (i ? " " : "") + parts[i];
    return out;
}

double pump_level(const Scenario& sc, size_t index) {
    if (!sc.pump)
        throw StructuralError("this command needs a 'pump' section");
    if (!sc.pump->photon_numbers.empty()) return sc.pump->photon_numbers.at(index);
    return intracavity_photon_number(sc.pump->powers_watt.at(index),
                                     sc.graph.at(sc.pump->mode));
}

size_t pump_level_count(const Scenario& sc) {
    if (!sc.pump) return 0;
    return std::max(sc.pump->powers_watt.size(), sc.pump->photon_numbers.size());
}

/// Pump-reduced terms at n intracavity photons, and the Hilbert modes they
/// act on (every non-pump mode that still carries a leg).
struct ReducedModel {
    std::vector<EffectiveProcess> terms;
    std::vector<Mode> modes;
};

ReducedModel reduce_at_pump(const Scenario& sc, double n_pump) {
    if (!sc.pump)
        throw StructuralError("this command needs a 'pump' section");
    ReducedModel model;
    std::set<std::string> used;
    for (const InteractionVertex& v : sc.vertices) {
        EffectiveProcess reduced = classical_pump_reduce(v, sc.pump->mode, n_pump);
        for (const Leg& leg : reduced.legs) used.insert(leg.mode);
        model.terms.push_back(std::move(reduced));
    }
    for (const Mode& m : sc.graph.modes())
        if (used.count(m.label)) model.modes.push_back(m);
    if (model.modes.empty())
        throw StructuralError("no modes left after pump reduction; nothing to simulate");
    return model;
}

std::vector<EffectiveProcess> eliminate_virtuals(const Scenario& sc,
                                                 const std::vector<EffectiveProcess>& terms) {
    if (sc.virtual_modes.empty()) return terms;
    std::vector<Elimination> elims;
    elims.reserve(sc.virtual_modes.size());
    for (const auto& v : sc.virtual_modes) elims.push_back(sc.elimination_for(v));
    return {synthesize_effective(terms, elims)};
}

std::vector<Mode> modes_of_terms(const Scenario& sc,
                                 const std::vector<EffectiveProcess>& terms) {
    std::set<std::string> used;
    for (const auto& t : terms)
        for (const Leg& leg : t.legs) used.insert(leg.mode);
    std::vector<Mode> modes;
    for (const Mode& m : sc.graph.modes())
        if (used.count(m.label)) modes.push_back(m);
    return modes;
}

fock::LindbladOptions lindblad_options(const Scenario& sc) {
    fock::LindbladOptions opt;
    return opt;
}

fock::ConvergedSteady steady_of(const Scenario& sc, const std::vector<Mode>& modes,
                                const std::vector<EffectiveProcess>& terms) {
    fock::HilbertSpace space(modes, std::vector<int>(modes.size(), sc.settings.cutoff),
                             sc.settings.dimension_limit);
    return fock::converged_steady_state(space, terms, sc.settings.convergence_tolerance,
                                        lindblad_options(sc));
}

counting::PairSource source_or_fail(const Scenario& sc) {
    if (!sc.source)
        throw StructuralError("this command needs a 'source' section");
    return *sc.source;
}

counting::DetectorModel detector(const std::optional<counting::DetectorModel>& d) {
    return d.value_or(counting::DetectorModel{});
}

// ---------------------------------------------------------------- synthesize

void run_synthesize(const Scenario& sc, RunReport& report) {
    EnumerationOptions opt;
    opt.max_order = sc.settings.max_order;
    opt.energy_tolerance = sc.settings.energy_tolerance;
    auto found = enumerate_syntheses(sc.graph, sc.vertices, opt);

    // explicitly requested contraction, reported first when present
    if (!sc.virtual_modes.empty() && !sc.vertices.empty()) {
        std::vector<EffectiveProcess> terms;
        for (const auto& v : sc.vertices) terms.push_back(to_effective(v));
        std::vector<Elimination> elims;
        for (const auto& v : sc.virtual_modes) elims.push_back(sc.elimination_for(v));
        found.insert(found.begin(), synthesize_effective(terms, elims));
    }

    Table table{"syntheses",
                {"legs", "order", "g_eff_re", "g_eff_im", "g_eff_abs", "eliminated",
                 "momentum_sum", "energy_mismatch", "passes", "non_hermitian"},
                {}};
    std::set<std::string> seen;
    for (const EffectiveProcess& p : found) {
        if (!seen.insert(legs_string(p.legs)).second) continue;
        auto conservation = check_conservation(sc.graph, p, sc.settings.energy_tolerance);
        std::string elims;
        for (size_t i = 0; i < p.eliminated.size(); ++i)
            elims += (i ? " " : "") + p.eliminated[i].mode;
        const bool non_hermitian =
            std::abs(p.g_eff.imag()) > 1e-12 * std::max(1.0, std::abs(p.g_eff));
        table.add_row({legs_string(p.legs), long(p.order()), p.g_eff.real(), p.g_eff.imag(),
                       std::abs(p.g_eff), elims, long(conservation.momentum_sum),
                       conservation.energy_mismatch, std::string(conservation.passes ? "yes" : "no"),
                       std::string(non_hermitian ? "yes" : "no")});
    }
    report.tables.push_back(std::move(table));

    if (sc.pump && pump_level_count(sc) > 0 && !sc.virtual_modes.empty() && !found.empty()) {
        // parametric coupling of the first listed synthesis at each pump level
        Table param{"parametric_coupling", {"n_pump", "g_parametric_abs"}, {}};
        for (size_t i = 0; i < pump_level_count(sc); ++i) {
            const double n = pump_level(sc, i);
            auto reduced = classical_pump_reduce(found.front(), sc.pump->mode, n);
            param.add_row({n, std::abs(reduced.g_eff)});
        }
        report.tables.push_back(std::move(param));
    }
    report.diagnostics["syntheses_found"] = std::to_string(report.tables.front().rows.size());
}

// ------------------------------------------------------------------ conserve

void run_conserve(const Scenario& sc, RunReport& report) {
    Table table{"conservation",
                {"name", "legs", "momentum_sum", "energy_mismatch", "tolerance", "passes"},
                {}};
    for (size_t i = 0; i < sc.vertices.size(); ++i) {
        auto r = check_conservation(sc.graph, sc.vertices[i], sc.settings.energy_tolerance);
        table.add_row({"vertex_" + std::to_string(i), legs_string(sc.vertices[i].legs),
                       long(r.momentum_sum), r.energy_mismatch, r.tolerance,
                       std::string(r.passes ? "yes" : "excluded")});
    }
    for (const NamedLegs& cand : sc.conserve_candidates) {
        auto r = check_conservation(sc.graph, cand.legs, sc.settings.energy_tolerance);
        table.add_row({cand.name, legs_string(cand.legs), long(r.momentum_sum),
                       r.energy_mismatch, r.tolerance,
                       std::string(r.passes ? "yes" : "excluded")});
    }
    if (table.rows.empty())
        throw StructuralError("nothing to check: no vertices and no conserve candidates");
    report.tables.push_back(std::move(table));
}

// ------------------------------------------------------------------ simulate

void run_simulate(const Scenario& sc, RunReport& report) {
    const double n_pump = pump_level(sc, 0);
    ReducedModel full = reduce_at_pump(sc, n_pump);
    report.diagnostics["pump_photons"] = std::to_string(n_pump);

    auto steady = steady_of(sc, full.modes, full.terms);
    Table occ{"occupations", {"model", "mode", "n", "cutoff"}, {}};
    for (size_t k = 0; k < steady.space.mode_count(); ++k)
        occ.add_row({std::string("full"), steady.space.mode(k).label,
                     fock::occupation_expectation(steady.space, steady.state, k),
                     long(steady.cutoffs[k])});

    std::optional<fock::ConvergedSteady> effective;
    if (!sc.virtual_modes.empty()) {
        auto eff_terms = eliminate_virtuals(sc, full.terms);
        auto eff_modes = modes_of_terms(sc, eff_terms);
        effective = steady_of(sc, eff_modes, eff_terms);
        for (size_t k = 0; k < effective->space.mode_count(); ++k)
            occ.add_row({std::string("effective"), effective->space.mode(k).label,
                         fock::occupation_expectation(effective->space, effective->state, k),
                         long(effective->cutoffs[k])});
        const EffectiveProcess& p = eff_terms.front();
        report.diagnostics["g_effective_abs"] = std::to_string(std::abs(p.g_eff));
    }
    report.tables.push_back(std::move(occ));

    if (sc.pair_modes) {
        Table flux{"pair_flux",
                   {"model", "signal_flux", "idler_flux", "relative_mismatch"},
                   {}};
        auto f = fock::pair_flux(steady.space, steady.state, sc.pair_modes->signal,
                                 sc.pair_modes->idler);
        flux.add_row({std::string("full"), f.flux_x, f.flux_y, f.relative_mismatch});
        if (effective) {
            auto fe = fock::pair_flux(effective->space, effective->state, sc.pair_modes->signal,
                                      sc.pair_modes->idler);
            flux.add_row({std::string("effective"), fe.flux_x, fe.flux_y, fe.relative_mismatch});
            report.diagnostics["flux_full_over_effective"] =
                std::to_string(fe.flux_y != 0.0 ? f.flux_y / fe.flux_y : 0.0);
        }
        report.tables.push_back(std::move(flux));

        // two-time correlation of the pair on the full model
        const Mode& ms = steady.space.mode(steady.space.index_of(sc.pair_modes->signal));
        const Mode& mi = steady.space.mode(steady.space.index_of(sc.pair_modes->idler));
        const double kappa_min = std::min(ms.kappa, mi.kappa);
        const double span = sc.settings.tau_span / kappa_min;
        std::vector<double> taus(sc.settings.tau_points);
        for (int i = 0; i < sc.settings.tau_points; ++i)
            taus[i] = -span + 2.0 * span * double(i) / double(sc.settings.tau_points - 1);
        const auto h = fock::build_hamiltonian(steady.space, full.terms);
        auto grid = fock::cross_correlation(steady.space, h, {}, sc.pair_modes->signal,
                                            sc.pair_modes->idler, taus, lindblad_options(sc));
        Table corr{"correlation", {"tau", "g2"}, {}};
        for (size_t i = 0; i < grid.tau.size(); ++i)
            corr.add_row({grid.tau[i], grid.g2[i]});
        report.tables.push_back(std::move(corr));

        try {
            auto wings = fock::fit_exponential_wings(grid);
            report.diagnostics["wing_tau_left"] = std::to_string(wings.tau_left);
            report.diagnostics["wing_tau_right"] = std::to_string(wings.tau_right);
        } catch (const Error&) {
            // flat correlation: no wings to fit
        }
    }

    // lambda convergence scan when a virtual mode and scan points are given
    if (!sc.settings.lambda_scan.empty() && sc.virtual_modes.size() == 1 && sc.pair_modes) {
        const std::string& virt = sc.virtual_modes.front().mode;
        std::vector<int> cutoffs(full.modes.size(), sc.settings.cutoff);
        ModeGraph graph(full.modes);
        auto scan = fock::virtual_mode_convergence(graph, full.terms, virt,
                                                   sc.pair_modes->idler,
                                                   sc.settings.lambda_scan, cutoffs,
                                                   lindblad_options(sc));
        Table table{"lambda_scan",
                    {"lambda_abs", "flux_full", "flux_effective", "ratio"},
                    {}};
        for (const auto& p : scan)
            table.add_row({p.lambda_magnitude, p.flux_full, p.flux_effective, p.ratio});
        report.tables.push_back(std::move(table));
    }
}

// --------------------------------------------------------------------- sweep

void run_sweep(const Scenario& sc, RunReport& report) {
    if (!sc.sweep)
        throw StructuralError("'sweep' command needs a 'sweep' section");
    if (!sc.pump || sc.pump->powers_watt.empty())
        throw StructuralError("'sweep' needs pump powers in watts");
    const SweepSection& sw = *sc.sweep;

    std::function<double(double)> observable;
    if (sw.observable == "pair_flux") {
        if (sc.virtual_modes.empty() || !sc.pair_modes)
            throw StructuralError(
                "the pair_flux sweep needs 'virtual_modes' and 'pair_modes'");
        observable = [&](double power) {
            const double n = intracavity_photon_number(power, sc.graph.at(sc.pump->mode));
            ReducedModel full = reduce_at_pump(sc, n);
            auto eff_terms = eliminate_virtuals(sc, full.terms);
            auto eff_modes = modes_of_terms(sc, eff_terms);
            auto steady = steady_of(sc, eff_modes, eff_terms);
            auto f = fock::pair_flux(steady.space, steady.state, sc.pair_modes->signal,
                                     sc.pair_modes->idler);
            return f.flux_y;  // idler side: photons only from the synthesized pair process
        };
    } else {
        if (sw.signal_mode.empty())
            throw StructuralError("this sweep observable needs 'sweep.signal_mode'");
        observable = [&](double power) {
            const Mode& pump_mode = sc.graph.at(sc.pump->mode);
            std::vector<cme::Drive> drives{
                cme::Drive{sc.pump->mode, std::sqrt(power / (hbar * pump_mode.omega))}};
            if (sc.probe) {
                const Mode& probe_mode = sc.graph.at(sc.probe->mode);
                drives.push_back(cme::Drive{
                    sc.probe->mode,
                    std::sqrt(sc.probe->power_watt / (hbar * probe_mode.omega))});
            }
            std::vector<EffectiveProcess> terms;
            for (const auto& v : sc.vertices) terms.push_back(to_effective(v));
            auto state = cme::cme_steady_state(sc.graph, terms, drives);
            const size_t k = *sc.graph.find(sw.signal_mode);
            const Mode& signal = sc.graph.modes()[k];
            const double n = std::norm(state.alpha[k]);
            if (sw.observable == "photon_number") return n;
            return signal.kappa_ext * n * hbar * signal.omega;  // output power [W]
        };
    }

    auto points = cme::sweep_power(sc.pump->powers_watt, observable);
    Table table{"sweep", {"pump_power_watt", "value", "ok", "error"}, {}};
    std::vector<std::pair<double, double>> good;
    for (const auto& p : points) {
        table.add_row({p.pump_power, p.value, std::string(p.ok ? "yes" : "no"), p.error});
        if (p.ok && p.value > 0.0) good.emplace_back(p.pump_power, p.value);
    }
    report.tables.push_back(std::move(table));

    auto fit = cme::power_law_fit(good);
    Table fit_table{"power_law", {"prefactor", "exponent", "sigma_exponent"}, {}};
    fit_table.add_row({fit.prefactor, fit.exponent, fit.sigma_exponent});
    report.tables.push_back(std::move(fit_table));
    report.diagnostics["fit_exponent"] = std::to_string(fit.exponent);
}

// -------------------------------------------------------------------- counts

struct CarWindows {
    counting::Window peak;
    std::vector<counting::Window> background;
    double range;
};

CarWindows car_windows(const Scenario& sc, const counting::PairSource& source) {
    const double tau = std::max(source.profile.tau_left, source.profile.tau_right);
    CarWindows w;
    w.peak = {-3.0 * tau, 3.0 * tau};  // +-3x the larger correlation constant
    w.range = sc.settings.delay_range.value_or(
        std::max(40.0 * tau, 100.0 * sc.settings.bin_width));
    const double guard = 5.0 * tau;
    w.background = {{-w.range + sc.settings.bin_width, -guard},
                    {guard, w.range - sc.settings.bin_width}};
    return w;
}

void run_counts(const Scenario& sc, RunReport& report, const EngineOptions& options,
                uint64_t seed) {
    const counting::PairSource source = source_or_fail(sc);
    auto [s1, s2] = counting::simulate_streams(source, detector(sc.detector_signal),
                                               detector(sc.detector_idler),
                                               sc.settings.duration, seed);
    const CarWindows w = car_windows(sc, source);
    auto hist = counting::histogram(s1, s2, sc.settings.bin_width, w.range);

    Table ht{"histogram", {"delay_s", "counts"}, {}};
    for (size_t i = 0; i < hist.counts.size(); ++i)
        ht.add_row({hist.bin_center(i), long(hist.counts[i])});
    report.tables.push_back(std::move(ht));

    Table summary{"car", {"car", "sigma_car", "peak_counts", "accidental", "singles_1", "singles_2"}, {}};
    try {
        auto r = counting::car(hist, w.peak, w.background);
        const double sigma =
            r.peak_counts > 0.0 ? counting::car_uncertainty(r.car, r.peak_counts) : 0.0;
        summary.add_row({r.car, sigma, r.peak_counts, r.accidental, long(s1.ticks.size()),
                         long(s2.ticks.size())});
    } catch (const counting::UndefinedCarError& e) {
        report.diagnostics["car_undefined"] = e.what();
    }
    report.tables.push_back(std::move(summary));

    if (options.write_streams) {
        std::filesystem::create_directories(options.out_dir);
        auto dump = [&](const std::string& name, const counting::TimestampStream& stream) {
            const std::string path = options.out_dir + "/stream_" + name + ".bin";
            std::ostringstream buffer;
            counting::write_stream(buffer, stream);
            write_file_atomic(path, buffer.str());
            report.diagnostics["stream_" + name] = path;
        };
        dump("signal", s1);
        dump("idler", s2);
    }
}

// ------------------------------------------------------------------- franson

void run_franson(const Scenario& sc, RunReport& report, uint64_t seed) {
    if (!sc.franson)
        throw StructuralError("'franson' command needs a 'franson' section");
    const counting::PairSource source = source_or_fail(sc);
    const FransonSection& fr = *sc.franson;
    const double range = std::max(sc.settings.delay_range.value_or(0.0),
                                  2.0 * fr.setup.delta_t);

    Table phases{"franson_phases",
                 {"phi_sum", "center_counts", "center_car", "center_ratio", "sigma_car"},
                 {}};
    std::vector<double> phi_sums, ratios, counts;
    for (int step = 0; step < fr.phase_steps; ++step) {
        counting::FransonSetup setup = fr.setup;
        setup.phi1 = 2.0 * M_PI * double(step) / double(fr.phase_steps);
        auto hist = counting::franson_simulate(setup, source, detector(sc.detector_signal),
                                               detector(sc.detector_idler),
                                               sc.settings.duration, seed + uint64_t(step),
                                               sc.settings.bin_width, range);
        auto r = counting::center_peak_car(hist, fr.setup.delta_t);
        const double ratio = r.peak_counts / r.accidental;
        const double sigma =
            r.peak_counts > 0.0 ? counting::car_uncertainty(r.car, r.peak_counts) : 0.0;
        const double phi_sum = setup.phi1 + setup.phi2;
        phases.add_row({phi_sum, r.peak_counts, r.car, ratio, sigma});
        phi_sums.push_back(phi_sum);
        ratios.push_back(ratio);
        counts.push_back(r.peak_counts);
    }
    report.tables.push_back(std::move(phases));

    // least squares of the center-peak counts on {1, cos phi}: the model
    // a0 (1 + V cos phi) with V the signal-to-noise limited visibility
    double s1 = 0, sc_ = 0, scc = 0, sy = 0, syc = 0;
    for (size_t i = 0; i < phi_sums.size(); ++i) {
        const double c = std::cos(phi_sums[i]);
        s1 += 1.0;
        sc_ += c;
        scc += c * c;
        sy += counts[i];
        syc += counts[i] * c;
    }
    const double det = s1 * scc - sc_ * sc_;
    const double a0 = (scc * sy - sc_ * syc) / det;
    const double a1 = (s1 * syc - sc_ * sy) / det;
    const double fit_v = a0 != 0.0 ? a1 / a0 : 0.0;
    double ss = 0.0;
    for (size_t i = 0; i < phi_sums.size(); ++i) {
        const double model = a0 + a1 * std::cos(phi_sums[i]);
        ss += (counts[i] - model) * (counts[i] - model);
    }
    const double fit_residual = std::sqrt(ss / double(phi_sums.size())) / std::abs(a0);

    const auto [min_it, max_it] = std::minmax_element(ratios.begin(), ratios.end());
    const size_t imax = size_t(max_it - ratios.begin());
    const size_t imin = size_t(min_it - ratios.begin());
    const auto& max_row = report.tables.back().rows[imax];
    const auto& min_row = report.tables.back().rows[imin];
    const double n_max = std::get<double>(max_row[1]);
    const double n_min = std::get<double>(min_row[1]);
    auto vis = counting::visibility(
        *max_it, *min_it, n_max > 0 ? *max_it / std::sqrt(n_max) : 0.0,
        n_min > 0 ? *min_it / std::sqrt(n_min) : 0.0);

    Table summary{"franson_summary",
                  {"visibility", "sigma", "bell_violation", "fit_visibility", "fit_residual"},
                  {}};
    summary.add_row({vis.value, vis.sigma, std::string(vis.bell_violation ? "yes" : "no"),
                     fit_v, fit_residual});
    report.tables.push_back(std::move(summary));
    report.diagnostics["visibility"] = std::to_string(vis.value);
}

}  // namespace

int exit_code_for(const std::exception& error) {
    if (dynamic_cast<const ThresholdError*>(&error)) return 3;
    if (dynamic_cast<const ConvergenceError*>(&error)) return 3;
    if (dynamic_cast<const ParseError*>(&error)) return 2;
    if (dynamic_cast<const StructuralError*>(&error)) return 2;
    if (dynamic_cast<const DomainError*>(&error)) return 2;
    if (dynamic_cast<const SynthesisError*>(&error)) return 2;
    if (dynamic_cast<const SingularityError*>(&error)) return 2;
    if (dynamic_cast<const NormalizationError*>(&error)) return 2;
    return 4;
}

RunReport run_command(const std::string& command, const Scenario& scenario,
                      const EngineOptions& options) {
    const auto t0 = std::chrono::steady_clock::now();

    RunReport report;
    report.command = command;
    report.scenario_echo = serialize_scenario(scenario);
    report.scenario_digest = git_blob_hash(report.scenario_echo);
    const uint64_t seed = options.seed_override.value_or(scenario.seed);
    report.diagnostics["seed"] = std::to_string(seed);

    if (command == "synthesize") {
        run_synthesize(scenario, report);
    } else if (command == "conserve") {
        run_conserve(scenario, report);
    } else if (command == "simulate") {
        run_simulate(scenario, report);
    } else if (command == "sweep") {
        run_sweep(scenario, report);
    } else if (command == "counts") {
        run_counts(scenario, report, options, seed);
    } else if (command == "franson") {
        run_franson(scenario, report, seed);
    } else if (command == "report") {
        // merged bundle: run every section the scenario supports
        if (!scenario.vertices.empty()) run_synthesize(scenario, report);
        if (!scenario.vertices.empty() || !scenario.conserve_candidates.empty())
            run_conserve(scenario, report);
        if (scenario.pump) run_simulate(scenario, report);
        if (scenario.sweep && scenario.pump && !scenario.pump->powers_watt.empty())
            run_sweep(scenario, report);
        if (scenario.source) run_counts(scenario, report, options, seed);
        if (scenario.franson && scenario.source) run_franson(scenario, report, seed);
    } else {
        throw StructuralError("unknown command '" + command + "'");
    }

    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

}  // namespace synthwave::io
