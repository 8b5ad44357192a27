#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "synthwave/errors.hpp"

namespace synthwave {

using Complex = std::complex<double>;

/// One cavity resonance. All rates are angular frequencies [rad/s]; `m` is
/// the azimuthal (relative angular momentum) index and `delta` the detuning
/// of the mode from its rotating-frame reference.
struct Mode {
    std::string label;
    int m = 0;
    double omega = 0.0;       // resonance angular frequency
    double kappa = 0.0;       // total linewidth
    double kappa_ext = 0.0;   // external (waveguide) coupling rate
    double delta = 0.0;       // rotating-frame detuning

    void validate() const {
        if (!(kappa > 0.0))
            throw DomainError("mode '" + label + "': kappa must be > 0");
        if (kappa_ext < 0.0 || kappa_ext > kappa)
            throw DomainError("mode '" + label + "': require 0 <= kappa_ext <= kappa");
    }
};

/// One operator factor of a multilinear interaction term.
struct Leg {
    std::string mode;     // label of the referenced mode
    bool dagger = false;  // creation operator if true

    friend bool operator==(const Leg&, const Leg&) = default;
};

inline Leg annihilate(std::string mode) { return Leg{std::move(mode), false}; }
inline Leg create(std::string mode) { return Leg{std::move(mode), true}; }

/// Intrinsic chi^(2) / chi^(3) interaction term  g * (leg_1 ... leg_{n+1}),
/// with the hermitian partner implied. Repeated legs encode degenerate
/// processes; the coefficient is exactly the written one, no symmetry factor.
struct InteractionVertex {
    int order = 2;  // 2 = three-wave, 3 = four-wave
    Complex g{0.0, 0.0};
    std::vector<Leg> legs;

    void validate() const {
        if (order != 2 && order != 3)
            throw StructuralError("intrinsic vertex order must be 2 or 3");
        if (legs.size() != static_cast<size_t>(order) + 1)
            throw StructuralError("vertex needs order+1 legs, got " +
                                  std::to_string(legs.size()));
    }

    /// Hermitian-conjugate orientation: conjugated coupling, flipped daggers.
    InteractionVertex adjoint() const {
        InteractionVertex v = *this;
        v.g = std::conj(g);
        for (Leg& l : v.legs) l.dagger = !l.dagger;
        return v;
    }
};

/// One eliminated virtual excitation: the mode and its complex effective
/// detuning Lambda (one entry per contracted creation/annihilation pair).
struct Elimination {
    std::string mode;
    Complex lambda{0.0, 0.0};
};

/// A synthesized (or pump-reduced) multilinear term. `g_eff` is carried
/// exactly as computed, complex values included; non-Hermitian couplings are
/// flagged downstream, never silently hermitized.
struct EffectiveProcess {
    Complex g_eff{0.0, 0.0};
    std::vector<Leg> legs;
    std::vector<Elimination> eliminated;
    std::vector<InteractionVertex> source_vertices;
    bool hermitian_pair = true;

    int order() const { return static_cast<int>(legs.size()) - 1; }

    EffectiveProcess adjoint() const {
        EffectiveProcess p = *this;
        p.g_eff = std::conj(g_eff);
        for (Leg& l : p.legs) l.dagger = !l.dagger;
        return p;
    }
};

/// Promote an intrinsic vertex to a (trivially) effective term so the two
/// kinds compose uniformly.
inline EffectiveProcess to_effective(const InteractionVertex& v) {
    v.validate();
    return EffectiveProcess{v.g, v.legs, {}, {v}, true};
}

struct ConservationReport {
    int momentum_sum = 0;        // signed azimuthal sum, creation legs negative
    double energy_mismatch = 0;  // [rad/s]
    double tolerance = 0;        // energy tolerance used
    bool passes = false;
};

/// Registry of modes with unique labels. Pure value type.
class ModeGraph {
public:
    ModeGraph() = default;
    explicit ModeGraph(std::vector<Mode> modes) {
        for (Mode& m : modes) add(std::move(m));
    }

    const Mode& add(Mode mode) {
        mode.validate();
        if (find(mode.label))
            throw StructuralError("duplicate mode label '" + mode.label + "'");
        modes_.push_back(std::move(mode));
        return modes_.back();
    }

    std::optional<size_t> find(const std::string& label) const {
        for (size_t i = 0; i < modes_.size(); ++i)
            if (modes_[i].label == label) return i;
        return std::nullopt;
    }

    const Mode& at(const std::string& label) const {
        auto idx = find(label);
        if (!idx)
            throw StructuralError("unknown mode reference '" + label + "'");
        return modes_[*idx];
    }

    const std::vector<Mode>& modes() const { return modes_; }
    size_t size() const { return modes_.size(); }

private:
    std::vector<Mode> modes_;
};

/// Default elimination denominator: Lambda = delta - i*kappa/2 in the
/// rotating frame of the drive. Overridable per elimination.
inline Complex default_lambda(const Mode& mode) {
    return Complex(mode.delta, -0.5 * mode.kappa);
}

/// Intracavity photon number of a resonantly driven linear cavity:
/// n = 4*kappa_ext*P / (hbar*omega*kappa^2).
double intracavity_photon_number(double power_watt, const Mode& mode);

inline constexpr double hbar = 1.054571817e-34;  // [J*s]

}  // namespace synthwave
