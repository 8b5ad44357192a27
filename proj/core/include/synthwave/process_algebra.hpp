#pragma once

#include <optional>
#include <vector>

#include "synthwave/modes.hpp"

namespace synthwave {

/**
 * Synthesis of effective high-order mixing processes from declared low-order
 * vertices: conservation (phase-matching) checks, virtual-mode contraction,
 * classical pump reduction, and exhaustive enumeration of syntheses on a
 * mode graph.
 */

/// Momentum and energy bookkeeping for one term. Momentum is exact integer
/// arithmetic; energy passes within `tolerance` (default: half the smallest
/// kappa among participating modes).
ConservationReport check_conservation(const ModeGraph& graph,
                                      const std::vector<Leg>& legs,
                                      std::optional<double> tolerance = {});

inline ConservationReport check_conservation(const ModeGraph& graph,
                                             const InteractionVertex& vertex,
                                             std::optional<double> tolerance = {}) {
    vertex.validate();
    return check_conservation(graph, vertex.legs, tolerance);
}

inline ConservationReport check_conservation(const ModeGraph& graph,
                                             const EffectiveProcess& process,
                                             std::optional<double> tolerance = {}) {
    return check_conservation(graph, process.legs, tolerance);
}

/// Contract the given terms over the eliminated virtual modes. Every
/// creation leg on a virtual mode must pair with an annihilation leg across
/// the composition; each pair contributes one 1/Lambda factor, so
///   g_eff = (prod g_i) / (prod Lambda_j).
/// The returned legs are the multiset union of the non-virtual legs, with
/// hermitian_pair implied. Terms are taken at their given orientation.
EffectiveProcess synthesize_effective(const std::vector<EffectiveProcess>& terms,
                                      const std::vector<Elimination>& eliminations);

inline EffectiveProcess synthesize_effective(const std::vector<InteractionVertex>& vertices,
                                             const std::vector<Elimination>& eliminations) {
    std::vector<EffectiveProcess> terms;
    terms.reserve(vertices.size());
    for (const auto& v : vertices) terms.push_back(to_effective(v));
    return synthesize_effective(terms, eliminations);
}

/// Replace every leg on `pump` by the classical amplitude sqrt(n_pump):
/// k removed legs multiply the coupling by n_pump^{k/2}. The pump must enter
/// the stored orientation with a single dagger-orientation.
EffectiveProcess classical_pump_reduce(const EffectiveProcess& term,
                                       const std::string& pump_label,
                                       double n_pump);

inline EffectiveProcess classical_pump_reduce(const InteractionVertex& vertex,
                                              const std::string& pump_label,
                                              double n_pump) {
    return classical_pump_reduce(to_effective(vertex), pump_label, n_pump);
}

/// Reference point fixing the proportionality constant of the mode-volume
/// scaling law g_n ~ chi^(n) / V_m^{(n-1)/2}.
struct CouplingReference {
    int order = 2;        // n0
    double g0 = 0.0;      // [rad/s]
    double chi0 = 1.0;    // susceptibility at the reference order
    double volume0 = 1.0; // mode volume the reference was taken at [m^3]
};

/// Intrinsic (n+1)-wave coupling rate from the scaling law, anchored to a
/// measured reference:
///   g_n = g0 * (chi_n/chi0) * volume0^{(n0-1)/2} / V_m^{(n-1)/2},
/// which reduces to g0 * (chi_n/chi0) * V_m^{(n0-n)/2} when evaluated at the
/// reference volume.
double estimate_intrinsic_coupling(int order, double chi_n, double mode_volume_m3,
                                   const CouplingReference& reference);

struct EnumerationOptions {
    int max_order = 4;                       // highest effective order returned
    std::optional<double> energy_tolerance;  // forwarded to check_conservation
};

/// All conservation-passing effective processes obtainable from the vertex
/// list by eliminating one or more shared modes, each vertex used at most
/// once, deduplicated up to leg ordering and hermitian duality. Virtual-mode
/// denominators default to delta - i*kappa/2 of the eliminated mode.
std::vector<EffectiveProcess> enumerate_syntheses(const ModeGraph& graph,
                                                  const std::vector<InteractionVertex>& vertices,
                                                  const EnumerationOptions& options = {});

}  // namespace synthwave
