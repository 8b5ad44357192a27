#pragma once

#include <functional>
#include <string>
#include <vector>

#include "synthwave/modes.hpp"

namespace synthwave::cme {

/**
 * Classical coupled-mode equations for intracavity amplitudes, normalized so
 * |alpha|^2 is the intracavity photon number:
 *
 *   d alpha_k/dt = (i delta_k - kappa_k/2) alpha_k - i dH/d alpha_k^*
 *                  + sqrt(kappa_ext_k) s_k
 *
 * with H the vertex polynomial (operators -> amplitudes) and s_k the input
 * drive amplitude in sqrt(photons/s).
 */

struct Drive {
    std::string mode;
    Complex amplitude{0.0, 0.0};  // sqrt(photons/s)
};

struct AmplitudeState {
    std::vector<Complex> alpha;  // per mode, graph order
    double residual = 0.0;       // relative steady-state residual
    bool converged = false;
    bool multistable = false;    // restarts disagreed
};

struct SteadyOptions {
    double damping = 0.5;          // fixed-point relaxation factor
    double newton_switch = 1e-3;   // relative residual to hand over to Newton
    double residual_tol = 1e-10;   // convergence target (relative)
    int max_iterations = 5000;
    bool detect_multistability = true;
};

AmplitudeState cme_steady_state(const ModeGraph& graph,
                                const std::vector<EffectiveProcess>& terms,
                                const std::vector<Drive>& drives,
                                const SteadyOptions& options = {});

/// Normalized power transmission past a side-coupled resonance:
/// T(delta) = |1 - kappa_ext / (i delta + kappa/2)|^2.
std::vector<double> transmission_spectrum(const Mode& mode,
                                          const std::vector<double>& detunings);

/// Photon-rate bookkeeping of a steady state; `converted[k]` is the net
/// nonlinear conversion rate into mode k [photons/s], `port_in[k]` the net
/// flux absorbed from its waveguide port.
struct FluxLedger {
    std::vector<double> port_in;
    std::vector<double> dissipated_internal;
    std::vector<double> emitted_external;
    std::vector<double> converted;
};

FluxLedger photon_flux_ledger(const ModeGraph& graph,
                              const std::vector<EffectiveProcess>& terms,
                              const std::vector<Drive>& drives,
                              const AmplitudeState& state);

struct SweepPoint {
    double pump_power = 0.0;  // [W]
    double value = 0.0;
    bool ok = false;
    std::string error;
};

/// Evaluate an observable across pump powers; per-point failures are
/// recorded and the sweep continues. Output order follows the input order.
std::vector<SweepPoint> sweep_power(const std::vector<double>& pump_powers,
                                    const std::function<double(double)>& observable);

struct PowerLawFit {
    double prefactor = 0.0;      // A in value = A * P^N
    double exponent = 0.0;       // N
    double sigma_exponent = 0.0; // one standard deviation of N
};

/// Least squares in log-log coordinates. Requires >= 3 strictly positive
/// points spanning at least half a decade in P.
PowerLawFit power_law_fit(const std::vector<std::pair<double, double>>& points);

}  // namespace synthwave::cme
