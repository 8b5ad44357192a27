#pragma once

#include <Eigen/Dense>
#include <vector>

#include "synthwave/modes.hpp"

namespace synthwave::gaussian {

/**
 * Steady-state second moments of purely quadratic (at most bilinear)
 * problems by direct solution of the Lyapunov equation A C + C A^+ + D = 0.
 * No time stepping and no Fock truncation: this is the independent oracle
 * against which the master-equation engine is checked.
 */

/// Coefficients of H = sum F_ij a^+_i a_j + 1/2 sum (G_ij a^+_i a^+_j + h.c.)
/// with F Hermitian and G symmetric. Mode detunings are folded into F.
struct QuadraticForm {
    Eigen::MatrixXcd F;
    Eigen::MatrixXcd G;
};

/// Extract the quadratic form from effective terms over `modes` (order given
/// by the vector). Throws StructuralError if a term is not bilinear.
QuadraticForm quadratic_form(const std::vector<Mode>& modes,
                             const std::vector<EffectiveProcess>& terms);

struct SteadyState {
    Eigen::MatrixXcd correlations;    ///< 2M x 2M matrix <v v^+>, v = (a_1..a_M, a^+_1..a^+_M)
    std::vector<double> occupations;  ///< <a^+_i a_i>
    std::vector<double> pair_flux;    ///< kappa_ext_i * <n_i>  [photons/s]
    double spectral_abscissa = 0.0;   ///< max Re eigenvalue of the drift matrix
};

/// Pair-creation gain relative to threshold: 1.0 exactly at the oscillation
/// threshold of a symmetric two-mode squeezer, >1 above.
double gain_ratio(const std::vector<Mode>& modes, const QuadraticForm& form);

/// Solve the steady state. Throws ThresholdError (with the offending gain
/// ratio) when the drift matrix is not strictly stable.
SteadyState steady_state(const std::vector<Mode>& modes,
                         const std::vector<EffectiveProcess>& terms);

SteadyState steady_state(const std::vector<Mode>& modes, const QuadraticForm& form);

}  // namespace synthwave::gaussian
