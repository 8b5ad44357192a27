#include "synthwave/process_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace synthwave {

double intracavity_photon_number(double power_watt, const Mode& mode) {
    if (power_watt < 0.0)
        throw DomainError("optical power must be >= 0");
    mode.validate();
    if (!(mode.omega > 0.0))
        throw DomainError("mode '" + mode.label + "': omega must be > 0 to convert power");
    return 4.0 * mode.kappa_ext * power_watt / (hbar * mode.omega * mode.kappa * mode.kappa);
}

ConservationReport check_conservation(const ModeGraph& graph,
                                      const std::vector<Leg>& legs,
                                      std::optional<double> tolerance) {
    ConservationReport report;
    double min_kappa = std::numeric_limits<double>::infinity();
    for (const Leg& leg : legs) {
        const Mode& mode = graph.at(leg.mode);
        const int sign = leg.dagger ? -1 : +1;
        report.momentum_sum += sign * mode.m;
        report.energy_mismatch += sign * mode.omega;
        min_kappa = std::min(min_kappa, mode.kappa);
    }
    report.tolerance = tolerance.value_or(legs.empty() ? 0.0 : 0.5 * min_kappa);
    report.passes = report.momentum_sum == 0 &&
                    std::abs(report.energy_mismatch) <= report.tolerance;
    return report;
}

namespace {

struct LegCount {
    int creations = 0;
    int annihilations = 0;
    int touched_terms = 0;
};

}  // namespace

EffectiveProcess synthesize_effective(const std::vector<EffectiveProcess>& terms,
                                      const std::vector<Elimination>& eliminations) {
    if (terms.empty())
        throw SynthesisError("no terms to compose");
    if (eliminations.empty())
        throw SynthesisError("at least one virtual mode required");

    std::map<std::string, Complex> lambda_of;
    for (const Elimination& e : eliminations) {
        if (e.lambda == Complex(0.0, 0.0))
            throw SingularityError("Lambda = 0 for virtual mode '" + e.mode + "'");
        lambda_of[e.mode] = e.lambda;
    }

    std::map<std::string, LegCount> counts;
    for (const EffectiveProcess& term : terms) {
        std::set<std::string> seen;
        for (const Leg& leg : term.legs) {
            auto it = lambda_of.find(leg.mode);
            if (it == lambda_of.end()) continue;
            LegCount& c = counts[leg.mode];
            (leg.dagger ? c.creations : c.annihilations)++;
            if (seen.insert(leg.mode).second) c.touched_terms++;
        }
    }

    EffectiveProcess result;
    result.g_eff = Complex(1.0, 0.0);
    result.hermitian_pair = true;

    for (const auto& [label, lambda] : lambda_of) {
        auto it = counts.find(label);
        if (it == counts.end() || it->second.creations + it->second.annihilations == 0)
            throw SynthesisError("virtual mode '" + label + "' has no legs to contract");
        const LegCount& c = it->second;
        if (c.creations != c.annihilations) {
            std::ostringstream os;
            os << "dangling virtual leg on '" << label << "': " << c.creations
               << " creation vs " << c.annihilations << " annihilation legs";
            throw SynthesisError(os.str());
        }
        if (c.touched_terms < 2)
            throw SynthesisError("virtual mode '" + label +
                                 "' must be shared by at least two terms");
        for (int pair = 0; pair < c.creations; ++pair) {
            result.g_eff /= lambda;
            result.eliminated.push_back(Elimination{label, lambda});
        }
    }

    for (const EffectiveProcess& term : terms) {
        result.g_eff *= term.g_eff;
        for (const Leg& leg : term.legs)
            if (!lambda_of.count(leg.mode)) result.legs.push_back(leg);
        // accumulated provenance: earlier eliminations and intrinsic sources
        result.eliminated.insert(result.eliminated.end(), term.eliminated.begin(),
                                 term.eliminated.end());
        result.source_vertices.insert(result.source_vertices.end(),
                                      term.source_vertices.begin(),
                                      term.source_vertices.end());
    }
    return result;
}

EffectiveProcess classical_pump_reduce(const EffectiveProcess& term,
                                       const std::string& pump_label,
                                       double n_pump) {
    if (n_pump < 0.0)
        throw DomainError("pump photon number must be >= 0");

    int creations = 0, annihilations = 0;
    for (const Leg& leg : term.legs)
        (leg.dagger ? creations : annihilations) += leg.mode == pump_label ? 1 : 0;
    if (creations > 0 && annihilations > 0)
        throw StructuralError("pump '" + pump_label +
                              "' appears with both dagger orientations; reduce the "
                              "hermitian partner instead");

    const int k = creations + annihilations;
    EffectiveProcess reduced = term;
    reduced.legs.clear();
    for (const Leg& leg : term.legs)
        if (leg.mode != pump_label) reduced.legs.push_back(leg);
    reduced.g_eff = term.g_eff * std::pow(n_pump, 0.5 * k);
    return reduced;
}

double estimate_intrinsic_coupling(int order, double chi_n, double mode_volume_m3,
                                   const CouplingReference& reference) {
    if (order < 2)
        throw DomainError("wave-mixing order must be >= 2");
    if (!(mode_volume_m3 > 0.0))
        throw DomainError("mode volume must be > 0");
    if (reference.chi0 == 0.0)
        throw DomainError("reference susceptibility must be nonzero");
    if (!(reference.volume0 > 0.0))
        throw DomainError("reference mode volume must be > 0");
    return reference.g0 * (chi_n / reference.chi0) *
           std::pow(reference.volume0, 0.5 * (reference.order - 1)) /
           std::pow(mode_volume_m3, 0.5 * (order - 1));
}

namespace {

// Canonical key identifying a process up to leg ordering and hermitian
// duality, for deduplication.
std::string dedup_key(const EffectiveProcess& p) {
    auto key_of = [](const std::vector<Leg>& legs, bool flip) {
        std::vector<std::string> parts;
        parts.reserve(legs.size());
        for (const Leg& l : legs)
            parts.push_back(l.mode + ((l.dagger != flip) ? "+" : "-"));
        std::sort(parts.begin(), parts.end());
        std::string key;
        for (const auto& s : parts) key += s + "|";
        return key;
    };
    return std::min(key_of(p.legs, false), key_of(p.legs, true));
}

}  // namespace

std::vector<EffectiveProcess> enumerate_syntheses(const ModeGraph& graph,
                                                  const std::vector<InteractionVertex>& vertices,
                                                  const EnumerationOptions& options) {
    if (options.max_order < 3)
        throw DomainError("max_order must be >= 3");
    for (const auto& v : vertices) {
        v.validate();
        for (const Leg& leg : v.legs) graph.at(leg.mode);
    }

    const size_t n = vertices.size();
    std::vector<EffectiveProcess> found;
    std::set<std::string> seen;
    if (n < 2) return found;

    for (unsigned subset = 1; subset < (1u << n); ++subset) {
        std::vector<size_t> members;
        for (size_t i = 0; i < n; ++i)
            if (subset & (1u << i)) members.push_back(i);
        if (members.size() < 2) continue;

        // Modes appearing in at least two member vertices are candidates for
        // elimination (dagger orientation is settled per-orientation below).
        std::map<std::string, int> touch;
        for (size_t i : members) {
            std::set<std::string> labels;
            for (const Leg& leg : vertices[i].legs) labels.insert(leg.mode);
            for (const auto& label : labels) touch[label]++;
        }
        std::vector<std::string> shared;
        for (const auto& [label, count] : touch)
            if (count >= 2) shared.push_back(label);
        if (shared.empty()) continue;

        for (unsigned orient = 0; orient < (1u << members.size()); ++orient) {
            std::vector<EffectiveProcess> terms;
            terms.reserve(members.size());
            for (size_t j = 0; j < members.size(); ++j) {
                const InteractionVertex& v = vertices[members[j]];
                terms.push_back(to_effective(orient & (1u << j) ? v.adjoint() : v));
            }

            for (unsigned emask = 1; emask < (1u << shared.size()); ++emask) {
                std::vector<Elimination> elims;
                bool singular = false;
                for (size_t k = 0; k < shared.size(); ++k) {
                    if (!(emask & (1u << k))) continue;
                    Complex lambda = default_lambda(graph.at(shared[k]));
                    if (lambda == Complex(0.0, 0.0)) { singular = true; break; }
                    elims.push_back(Elimination{shared[k], lambda});
                }
                if (singular || elims.empty()) continue;

                EffectiveProcess candidate;
                try {
                    candidate = synthesize_effective(terms, elims);
                } catch (const SynthesisError&) {
                    continue;
                }
                if (candidate.legs.size() < 2) continue;
                if (candidate.order() > options.max_order) continue;
                if (!check_conservation(graph, candidate, options.energy_tolerance).passes)
                    continue;
                if (seen.insert(dedup_key(candidate)).second)
                    found.push_back(std::move(candidate));
            }
        }
    }
    return found;
}

}  // namespace synthwave
