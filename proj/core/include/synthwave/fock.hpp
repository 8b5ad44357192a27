#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <string>
#include <vector>

#include "synthwave/modes.hpp"

namespace synthwave::fock {

using SparseOp = Eigen::SparseMatrix<Complex>;
using DenseOp = Eigen::MatrixXcd;

/**
 * Truncated multi-mode Fock space. Basis states are multi-indices
 * (n_1 .. n_M) with 0 <= n_k <= cutoff_k, flattened row-major (mode 0
 * slowest). Pure value type.
 */
class HilbertSpace {
public:
    HilbertSpace(std::vector<Mode> modes, std::vector<int> cutoffs,
                 long dimension_limit = 1'000'000);

    long dimension() const { return dimension_; }
    size_t mode_count() const { return modes_.size(); }
    const std::vector<Mode>& modes() const { return modes_; }
    const Mode& mode(size_t i) const { return modes_.at(i); }
    int cutoff(size_t i) const { return cutoffs_.at(i); }
    const std::vector<int>& cutoffs() const { return cutoffs_; }
    long stride(size_t i) const { return strides_.at(i); }

    size_t index_of(const std::string& label) const;
    int occupation(long basis_index, size_t mode) const;

    HilbertSpace with_cutoffs(std::vector<int> cutoffs) const {
        return HilbertSpace(modes_, std::move(cutoffs), dimension_limit_);
    }
    long dimension_limit() const { return dimension_limit_; }

private:
    std::vector<Mode> modes_;
    std::vector<int> cutoffs_;
    std::vector<long> strides_;
    long dimension_ = 1;
    long dimension_limit_;
};

SparseOp annihilator(const HilbertSpace& space, size_t mode);
SparseOp creator(const HilbertSpace& space, size_t mode);
SparseOp number_operator(const HilbertSpace& space, size_t mode);

struct HamiltonianOptions {
    bool include_detunings = true;     ///< add sum_k delta_k n_k
    bool allow_non_hermitian = false;  ///< opt-in for representation only
    double hermiticity_tol = 1e-9;     ///< relative tolerance of the check
};

/// Assemble sum of term couplings times ladder-operator products (+ h.c.
/// when flagged) plus the rotating-frame detuning terms. Rejects a
/// non-Hermitian result unless explicitly allowed.
SparseOp build_hamiltonian(const HilbertSpace& space,
                           const std::vector<EffectiveProcess>& terms,
                           const HamiltonianOptions& options = {});

/// Density matrix with a timestamp. Trace 1, Hermitian within tolerance.
struct QuantumState {
    DenseOp rho;
    double time = 0.0;
};

QuantumState vacuum_state(const HilbertSpace& space);
QuantumState fock_state(const HilbertSpace& space, const std::vector<int>& occupation);

double occupation_expectation(const HilbertSpace& space, const QuantumState& state,
                              size_t mode);
/// Population of basis states with any mode at its cutoff; a saturation guard.
double top_layer_population(const HilbertSpace& space, const QuantumState& state);

struct LindbladOptions {
    double step_factor = 0.01;        ///< dt = step_factor / spectral scale
    double steady_residual = 1e-8;    ///< relative residual target
    double max_time_factor = 400.0;   ///< integration horizon in units of 1/kappa_min
    long direct_solve_limit = 50'000; ///< max superoperator dimension for sparse LU
    double top_layer_tol = 0.02;      ///< cutoff saturation guard for steady states
};

/// Integrate d rho/dt = -i[H,rho] + sum_j kappa_j D[a_j] rho with fixed-step
/// RK4, returning the state at each requested time (strictly increasing,
/// starting at or after initial.time).
std::vector<QuantumState> lindblad_evolve(const HilbertSpace& space, const SparseOp& hamiltonian,
                                          const std::vector<double>& kappa,
                                          const QuantumState& initial,
                                          const std::vector<double>& times,
                                          const LindbladOptions& options = {});

/// Steady state of the master equation: sparse direct null-space solve (with
/// the trace constraint) when the superoperator fits below
/// `direct_solve_limit`, long-time integration with residual check otherwise.
QuantumState lindblad_steady_state(const HilbertSpace& space, const SparseOp& hamiltonian,
                                   const std::vector<double>& kappa,
                                   const LindbladOptions& options = {});

/// Relative residual ||L rho|| / scale of a candidate steady state.
double steady_state_residual(const HilbertSpace& space, const SparseOp& hamiltonian,
                             const std::vector<double>& kappa, const QuantumState& state);

struct CorrelationGrid {
    std::vector<double> tau;  ///< strictly increasing [s]
    std::vector<double> g2;   ///< normalized cross-correlation
    std::string mode_x, mode_y;
};

/// Normalized two-time cross-correlation g2_xy(tau) from the steady state
/// via the quantum regression theorem. The tau < 0 branch swaps the roles of
/// x and y (correct for asymmetric losses).
CorrelationGrid cross_correlation(const HilbertSpace& space, const SparseOp& hamiltonian,
                                  const std::vector<double>& kappa, const std::string& mode_x,
                                  const std::string& mode_y, const std::vector<double>& tau_grid,
                                  const LindbladOptions& options = {});

struct PairFlux {
    double flux_x = 0.0;  ///< kappa_ext_x * <n_x>  [pairs/s]
    double flux_y = 0.0;
    double relative_mismatch = 0.0;
};

/// kappa_ext-weighted output fluxes of a mode pair, with their mismatch.
PairFlux pair_flux(const HilbertSpace& space, const QuantumState& steady,
                   const std::string& mode_x, const std::string& mode_y);

struct ConvergedSteady {
    QuantumState state;
    std::vector<int> cutoffs;      ///< cutoffs the accepted solve used
    double max_relative_change;    ///< observable change at the last refinement
    HilbertSpace space;
};

/// Steady state with automatic cutoff refinement: raise cutoffs until the
/// per-mode occupations change by less than `tolerance` (doubling when the
/// refined problem still fits the direct solver, else stepping by one).
ConvergedSteady converged_steady_state(const HilbertSpace& space,
                                       const std::vector<EffectiveProcess>& terms,
                                       double tolerance = 0.01,
                                       const LindbladOptions& options = {},
                                       const HamiltonianOptions& ham_options = {});

struct ConvergenceScanPoint {
    double lambda_magnitude = 0.0;
    double flux_full = 0.0;
    double flux_effective = 0.0;
    double ratio = 0.0;
};

/**
 * Flux ratio between the full model (explicit virtual mode) and its
 * adiabatically eliminated two-mode reduction, over a sweep of |Lambda|
 * realized by detuning the virtual mode. The compared flux is the
 * kappa_ext-weighted occupation of `flux_mode` (the conversion-side mode,
 * which receives photons only through the synthesized process); the
 * directly squeezed mode also carries signal-virtual pairs and would not
 * converge. Ratio -> 1 as |Lambda| grows.
 */
std::vector<ConvergenceScanPoint> virtual_mode_convergence(
    const ModeGraph& graph, const std::vector<EffectiveProcess>& full_terms,
    const std::string& virtual_mode, const std::string& flux_mode,
    const std::vector<double>& lambda_magnitudes, const std::vector<int>& cutoffs,
    const LindbladOptions& options = {});

struct WingFit {
    double tau_left = 0.0;   ///< intensity decay constant of the tau < 0 wing [s]
    double tau_right = 0.0;  ///< same for tau > 0
};

/// Exponential time constants of the two g2 wings, from a linear fit of
/// ln(g2 - 1) against |tau| on each side of the peak.
WingFit fit_exponential_wings(const CorrelationGrid& grid);

}  // namespace synthwave::fock
