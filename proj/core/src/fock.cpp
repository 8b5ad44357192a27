#include "synthwave/fock.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "synthwave/gaussian.hpp"
#include "synthwave/process_algebra.hpp"

namespace synthwave::fock {

HilbertSpace::HilbertSpace(std::vector<Mode> modes, std::vector<int> cutoffs,
                           long dimension_limit)
    : modes_(std::move(modes)), cutoffs_(std::move(cutoffs)),
      dimension_limit_(dimension_limit) {
    if (modes_.empty())
        throw StructuralError("Hilbert space needs at least one mode");
    if (cutoffs_.size() != modes_.size())
        throw StructuralError("one cutoff per mode required");
    for (int c : cutoffs_)
        if (c < 1) throw DomainError("Fock cutoffs must be >= 1");

    strides_.assign(modes_.size(), 1);
    for (size_t k = modes_.size(); k-- > 0;) {
        if (k + 1 < modes_.size())
            strides_[k] = strides_[k + 1] * (cutoffs_[k + 1] + 1);
    }
    dimension_ = strides_[0] * (cutoffs_[0] + 1);
    if (dimension_ > dimension_limit_) {
        std::ostringstream os;
        os << "truncated dimension " << dimension_ << " exceeds the configured limit "
           << dimension_limit_;
        throw DomainError(os.str());
    }
}

size_t HilbertSpace::index_of(const std::string& label) const {
    for (size_t i = 0; i < modes_.size(); ++i)
        if (modes_[i].label == label) return i;
    throw StructuralError("unknown mode reference '" + label + "'");
}

int HilbertSpace::occupation(long basis_index, size_t mode) const {
    return static_cast<int>((basis_index / strides_.at(mode)) % (cutoffs_[mode] + 1));
}

SparseOp annihilator(const HilbertSpace& space, size_t mode) {
    const long dim = space.dimension();
    const long stride = space.stride(mode);
    std::vector<Eigen::Triplet<Complex>> trips;
    trips.reserve(dim);
    for (long i = 0; i < dim; ++i) {
        const int n = space.occupation(i, mode);
        if (n > 0) trips.emplace_back(i - stride, i, std::sqrt(double(n)));
    }
    SparseOp a(dim, dim);
    a.setFromTriplets(trips.begin(), trips.end());
    return a;
}

SparseOp creator(const HilbertSpace& space, size_t mode) {
    return SparseOp(annihilator(space, mode).adjoint());
}

SparseOp number_operator(const HilbertSpace& space, size_t mode) {
    const long dim = space.dimension();
    std::vector<Eigen::Triplet<Complex>> trips;
    trips.reserve(dim);
    for (long i = 0; i < dim; ++i) {
        const int n = space.occupation(i, mode);
        if (n > 0) trips.emplace_back(i, i, double(n));
    }
    SparseOp op(dim, dim);
    op.setFromTriplets(trips.begin(), trips.end());
    return op;
}

namespace {

double inf_norm(const SparseOp& op) {
    std::vector<double> row_sum(op.rows(), 0.0);
    for (int k = 0; k < op.outerSize(); ++k)
        for (SparseOp::InnerIterator it(op, k); it; ++it)
            row_sum[it.row()] += std::abs(it.value());
    double best = 0.0;
    for (double r : row_sum) best = std::max(best, r);
    return best;
}

std::vector<double> resolve_losses(const HilbertSpace& space, const std::vector<double>& kappa) {
    if (kappa.empty()) {
        std::vector<double> k(space.mode_count());
        for (size_t i = 0; i < k.size(); ++i) k[i] = space.mode(i).kappa;
        return k;
    }
    if (kappa.size() != space.mode_count())
        throw StructuralError("one loss rate per mode required");
    for (double k : kappa)
        if (k < 0.0) throw DomainError("loss rates must be >= 0");
    return kappa;
}

// Step-control scale per the fixed-step rule dt <= 0.01 / max(|H|, kappa).
// The extra cutoff term keeps RK4 inside its stability region when the
// dissipator spectrum (~ kappa * n at the top of the truncated ladder)
// dwarfs the accuracy scale; it is inactive for ordinary cutoffs.
double spectral_scale(const HilbertSpace& space, const SparseOp& hamiltonian,
                      const std::vector<double>& kappa) {
    double scale = inf_norm(hamiltonian);
    int max_cutoff = 0;
    for (size_t j = 0; j < space.mode_count(); ++j)
        max_cutoff = std::max(max_cutoff, space.cutoff(j));
    for (double k : kappa)
        scale = std::max(scale, std::max(k, k * double(max_cutoff) / 50.0));
    return std::max(scale, 1e-300);
}

// Precomputed right-hand side of the master equation. apply() assumes a
// Hermitian argument (density matrices and the RK4 stages built from them)
// and uses adjoints instead of right-side products.
class MasterEquation {
public:
    MasterEquation(const HilbertSpace& space, const SparseOp& hamiltonian,
                   const std::vector<double>& kappa)
        : hamiltonian_(hamiltonian) {
        for (size_t j = 0; j < kappa.size(); ++j) {
            if (kappa[j] == 0.0) continue;
            SparseOp a = annihilator(space, j);
            channels_.push_back({kappa[j], a, number_operator(space, j)});
        }
        scale_ = spectral_scale(space, hamiltonian, kappa);
        const long d = space.dimension();
        buf1_.resize(d, d);
        buf2_.resize(d, d);
    }

    DenseOp apply(const DenseOp& rho) const {
        buf1_.noalias() = hamiltonian_ * rho;
        DenseOp out = Complex(0, -1) * (buf1_ - buf1_.adjoint());
        for (const auto& ch : channels_) {
            buf1_.noalias() = ch.a * rho;
            buf2_.noalias() = ch.a * buf1_.adjoint();  // a (a rho)^+ = a rho a^+
            out.noalias() += ch.rate * buf2_;
            buf1_.noalias() = ch.n * rho;
            out.noalias() -= (0.5 * ch.rate) * (buf1_ + buf1_.adjoint());
        }
        return out;
    }

    double scale() const { return scale_; }

private:
    struct Channel {
        double rate;
        SparseOp a, n;
    };
    SparseOp hamiltonian_;
    std::vector<Channel> channels_;
    double scale_;
    mutable DenseOp buf1_, buf2_;
};

void rk4_step(const MasterEquation& eq, DenseOp& rho, double h) {
    DenseOp k1 = eq.apply(rho);
    DenseOp k2 = eq.apply(rho + (0.5 * h) * k1);
    DenseOp k3 = eq.apply(rho + (0.5 * h) * k2);
    DenseOp k4 = eq.apply(rho + h * k3);
    rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

double relative_residual(const MasterEquation& eq, const DenseOp& rho) {
    const double nrm = rho.norm();
    if (nrm == 0.0) return 0.0;
    return eq.apply(rho).norm() / (eq.scale() * nrm);
}

}  // namespace

SparseOp build_hamiltonian(const HilbertSpace& space,
                           const std::vector<EffectiveProcess>& terms,
                           const HamiltonianOptions& options) {
    const long dim = space.dimension();
    SparseOp h(dim, dim);

    if (options.include_detunings) {
        for (size_t j = 0; j < space.mode_count(); ++j) {
            const double delta = space.mode(j).delta;
            if (delta != 0.0) h = h + SparseOp(delta * number_operator(space, j));
        }
    }

    for (const EffectiveProcess& term : terms) {
        if (term.legs.empty())
            throw StructuralError("term with no legs cannot enter the Hamiltonian");
        SparseOp product(dim, dim);
        product.setIdentity();
        for (const Leg& leg : term.legs) {
            const size_t j = space.index_of(leg.mode);
            product = product * (leg.dagger ? creator(space, j) : annihilator(space, j));
        }
        h = h + SparseOp(term.g_eff * product);
        if (term.hermitian_pair)
            h = h + SparseOp(std::conj(term.g_eff) * SparseOp(product.adjoint()));
    }

    const double asym = inf_norm(SparseOp(h - SparseOp(h.adjoint())));
    if (asym > options.hermiticity_tol * (1.0 + inf_norm(h)) && !options.allow_non_hermitian)
        throw StructuralError(
            "assembled Hamiltonian is non-Hermitian; pass allow_non_hermitian to represent it");
    h.makeCompressed();
    return h;
}

QuantumState vacuum_state(const HilbertSpace& space) {
    QuantumState s;
    s.rho = DenseOp::Zero(space.dimension(), space.dimension());
    s.rho(0, 0) = 1.0;
    return s;
}

QuantumState fock_state(const HilbertSpace& space, const std::vector<int>& occupation) {
    if (occupation.size() != space.mode_count())
        throw StructuralError("one occupation number per mode required");
    long index = 0;
    for (size_t k = 0; k < occupation.size(); ++k) {
        if (occupation[k] < 0 || occupation[k] > space.cutoff(k))
            throw DomainError("occupation outside the truncated space");
        index += occupation[k] * space.stride(k);
    }
    QuantumState s;
    s.rho = DenseOp::Zero(space.dimension(), space.dimension());
    s.rho(index, index) = 1.0;
    return s;
}

double occupation_expectation(const HilbertSpace& space, const QuantumState& state,
                              size_t mode) {
    double value = 0.0;
    for (long i = 0; i < space.dimension(); ++i)
        value += space.occupation(i, mode) * state.rho(i, i).real();
    return value;
}

double top_layer_population(const HilbertSpace& space, const QuantumState& state) {
    double value = 0.0;
    for (long i = 0; i < space.dimension(); ++i) {
        bool top = false;
        for (size_t k = 0; k < space.mode_count() && !top; ++k)
            top = space.occupation(i, k) == space.cutoff(k);
        if (top) value += state.rho(i, i).real();
    }
    return value;
}

std::vector<QuantumState> lindblad_evolve(const HilbertSpace& space, const SparseOp& hamiltonian,
                                          const std::vector<double>& kappa,
                                          const QuantumState& initial,
                                          const std::vector<double>& times,
                                          const LindbladOptions& options) {
    const std::vector<double> losses = resolve_losses(space, kappa);
    MasterEquation eq(space, hamiltonian, losses);
    const double dt_max = options.step_factor / eq.scale();

    std::vector<QuantumState> out;
    out.reserve(times.size());
    DenseOp rho = initial.rho;
    double t = initial.time;
    for (double target : times) {
        if (target < t)
            throw DomainError("requested times must be increasing and start at the initial time");
        const double span = target - t;
        if (span > 0.0) {
            const long steps = std::max<long>(1, static_cast<long>(std::ceil(span / dt_max)));
            const double h = span / double(steps);
            for (long s = 0; s < steps; ++s) rk4_step(eq, rho, h);
        }
        t = target;
        out.push_back(QuantumState{rho, t});
    }
    return out;
}

namespace {

// Assemble the superoperator L with vec column stacking and replace row 0 by
// the trace functional, so that L x = e_0 yields the trace-one null vector.
Eigen::SparseMatrix<Complex> assemble_liouvillian(const HilbertSpace& space,
                                                  const SparseOp& hamiltonian,
                                                  const std::vector<double>& kappa,
                                                  bool trace_row) {
    const long d = space.dimension();
    const long n = d * d;
    std::vector<Eigen::Triplet<Complex>> trips;
    const Complex im(0.0, 1.0);

    auto add = [&](long row, long col, Complex v) {
        if (trace_row && row == 0) return;
        trips.emplace_back(row, col, v);
    };

    // -i (I (x) H) and +i (H^T (x) I)
    for (int k = 0; k < hamiltonian.outerSize(); ++k)
        for (SparseOp::InnerIterator it(hamiltonian, k); it; ++it) {
            const long r = it.row(), c = it.col();
            for (long b = 0; b < d; ++b) {
                add(b * d + r, b * d + c, -im * it.value());
                add(c * d + b, r * d + b, im * it.value());
            }
        }

    for (size_t j = 0; j < kappa.size(); ++j) {
        if (kappa[j] == 0.0) continue;
        const double rate = kappa[j];
        SparseOp a = annihilator(space, j);
        // conj(a) (x) a
        std::vector<std::pair<long, std::pair<long, Complex>>> entries;
        for (int k = 0; k < a.outerSize(); ++k)
            for (SparseOp::InnerIterator it(a, k); it; ++it)
                entries.push_back({it.row(), {it.col(), it.value()}});
        for (const auto& ea : entries)
            for (const auto& eb : entries)
                add(ea.first * d + eb.first, ea.second.first * d + eb.second.first,
                    rate * std::conj(ea.second.second) * eb.second.second);
        // -rate/2 (I (x) n + n^T (x) I), n diagonal
        for (long i = 0; i < d; ++i) {
            const double occ = space.occupation(i, j);
            if (occ == 0.0) continue;
            for (long b = 0; b < d; ++b) add(b * d + i, b * d + i, -0.5 * rate * occ);
            for (long b = 0; b < d; ++b) add(i * d + b, i * d + b, -0.5 * rate * occ);
        }
    }

    if (trace_row)
        for (long i = 0; i < d; ++i) trips.emplace_back(0, i * d + i, Complex(1.0, 0.0));

    Eigen::SparseMatrix<Complex> liouvillian(n, n);
    liouvillian.setFromTriplets(trips.begin(), trips.end());
    liouvillian.makeCompressed();
    return liouvillian;
}

QuantumState steady_by_direct_solve(const HilbertSpace& space, const SparseOp& hamiltonian,
                                    const std::vector<double>& kappa) {
    const long d = space.dimension();
    auto lhs = assemble_liouvillian(space, hamiltonian, kappa, true);
    Eigen::SparseLU<Eigen::SparseMatrix<Complex>> lu;
    lu.analyzePattern(lhs);
    lu.factorize(lhs);
    if (lu.info() != Eigen::Success)
        throw ConvergenceError("sparse factorization of the Liouvillian failed", 1.0);
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(d * d);
    rhs[0] = 1.0;
    Eigen::VectorXcd x = lu.solve(rhs);

    QuantumState state;
    state.rho = DenseOp(d, d);
    for (long c = 0; c < d; ++c)
        for (long r = 0; r < d; ++r) state.rho(r, c) = x[c * d + r];
    state.rho = 0.5 * (state.rho + state.rho.adjoint().eval());
    const Complex tr = state.rho.trace();
    if (std::abs(tr) < 1e-300)
        throw ConvergenceError("direct steady-state solve returned a traceless solution", 1.0);
    state.rho /= tr;
    return state;
}

QuantumState steady_by_integration(const HilbertSpace& space, const SparseOp& hamiltonian,
                                   const std::vector<double>& kappa,
                                   const LindbladOptions& options) {
    double kappa_min = std::numeric_limits<double>::infinity();
    for (double k : kappa)
        if (k > 0.0) kappa_min = std::min(kappa_min, k);
    if (!std::isfinite(kappa_min))
        throw DomainError("steady state undefined for a lossless system");

    MasterEquation eq(space, hamiltonian, kappa);
    const double dt_max = options.step_factor / eq.scale();
    const double chunk = 1.0 / kappa_min;
    const long chunk_steps = std::max<long>(1, static_cast<long>(std::ceil(chunk / dt_max)));
    const double h = chunk / double(chunk_steps);

    DenseOp rho = vacuum_state(space).rho;
    double occ_prev = 0.0;
    int growth_streak = 0;
    const long max_chunks = static_cast<long>(options.max_time_factor);
    for (long c = 0; c < max_chunks; ++c) {
        for (long s = 0; s < chunk_steps; ++s) rk4_step(eq, rho, h);
        const double res = relative_residual(eq, rho);
        if (res <= options.steady_residual) {
            QuantumState state{rho, (c + 1) * chunk};
            state.rho /= state.rho.trace();
            return state;
        }
        double occ = 0.0;
        for (long i = 0; i < space.dimension(); ++i) {
            double tot = 0.0;
            for (size_t k = 0; k < space.mode_count(); ++k) tot += space.occupation(i, k);
            occ += tot * rho(i, i).real();
        }
        if (occ > occ_prev * 1.1 && c > 2) ++growth_streak;
        else growth_streak = 0;
        if (growth_streak >= 5) {
            const double gamma = std::log(occ / std::max(occ_prev, 1e-300)) / chunk;
            throw ThresholdError("photon number grows without settling: drive above threshold",
                                 1.0 + gamma / kappa_min);
        }
        if (c > 4 && top_layer_population(space, QuantumState{rho, 0.0}) >
                         std::max(options.top_layer_tol, 0.05)) {
            throw ThresholdError(
                "population piles up at the Fock cutoff during relaxation: above threshold",
                1.0 + occ / std::max(occ_prev, 1e-300));
        }
        occ_prev = occ;
    }
    throw ConvergenceError("steady-state integration did not reach the residual target",
                           relative_residual(eq, rho));
}

}  // namespace

double steady_state_residual(const HilbertSpace& space, const SparseOp& hamiltonian,
                             const std::vector<double>& kappa, const QuantumState& state) {
    MasterEquation eq(space, hamiltonian, resolve_losses(space, kappa));
    return relative_residual(eq, state.rho);
}

QuantumState lindblad_steady_state(const HilbertSpace& space, const SparseOp& hamiltonian,
                                   const std::vector<double>& kappa,
                                   const LindbladOptions& options) {
    const std::vector<double> losses = resolve_losses(space, kappa);
    const long superop_dim = space.dimension() * space.dimension();

    QuantumState state = superop_dim <= options.direct_solve_limit
                             ? steady_by_direct_solve(space, hamiltonian, losses)
                             : steady_by_integration(space, hamiltonian, losses, options);

    const double res = steady_state_residual(space, hamiltonian, losses, state);
    if (res > options.steady_residual)
        throw ConvergenceError("steady state residual above target", res);
    return state;
}

CorrelationGrid cross_correlation(const HilbertSpace& space, const SparseOp& hamiltonian,
                                  const std::vector<double>& kappa, const std::string& mode_x,
                                  const std::string& mode_y, const std::vector<double>& tau_grid,
                                  const LindbladOptions& options) {
    for (size_t i = 1; i < tau_grid.size(); ++i)
        if (!(tau_grid[i] > tau_grid[i - 1]))
            throw DomainError("tau grid must be strictly increasing");

    const std::vector<double> losses = resolve_losses(space, kappa);
    const QuantumState steady = lindblad_steady_state(space, hamiltonian, losses, options);

    const size_t ix = space.index_of(mode_x);
    const size_t iy = space.index_of(mode_y);

    const double mean_x = occupation_expectation(space, steady, ix);
    const double mean_y = occupation_expectation(space, steady, iy);
    if (!(mean_x > 0.0) || !(mean_y > 0.0))
        throw NormalizationError("zero steady photon number; g2 normalization undefined");
    const double norm = mean_x * mean_y;

    CorrelationGrid grid;
    grid.mode_x = mode_x;
    grid.mode_y = mode_y;
    grid.tau = tau_grid;
    grid.g2.assign(tau_grid.size(), 0.0);

    auto run_branch = [&](size_t collapse_mode, size_t observe_mode,
                          const std::vector<double>& taus, std::vector<double>& values) {
        if (taus.empty()) return;
        const SparseOp collapse = annihilator(space, collapse_mode);
        QuantumState collapsed;
        collapsed.rho = collapse * steady.rho * SparseOp(collapse.adjoint());
        collapsed.time = 0.0;
        const auto states = lindblad_evolve(space, hamiltonian, losses, collapsed, taus, options);
        values.resize(states.size());
        for (size_t i = 0; i < states.size(); ++i)
            values[i] = occupation_expectation(space, states[i], observe_mode) / norm;
    };

    // tau >= 0: collapse with x, watch y; tau < 0: roles swapped.
    std::vector<double> pos_taus, neg_taus;
    for (double t : tau_grid) (t >= 0.0 ? pos_taus : neg_taus).push_back(t);
    std::vector<double> neg_abs(neg_taus.size());
    for (size_t i = 0; i < neg_taus.size(); ++i)
        neg_abs[i] = -neg_taus[neg_taus.size() - 1 - i];

    std::vector<double> pos_vals, neg_vals;
    run_branch(ix, iy, pos_taus, pos_vals);
    run_branch(iy, ix, neg_abs, neg_vals);

    for (size_t i = 0; i < neg_taus.size(); ++i)
        grid.g2[i] = neg_vals[neg_vals.size() - 1 - i];
    for (size_t i = 0; i < pos_taus.size(); ++i)
        grid.g2[neg_taus.size() + i] = pos_vals[i];
    return grid;
}

PairFlux pair_flux(const HilbertSpace& space, const QuantumState& steady,
                   const std::string& mode_x, const std::string& mode_y) {
    const size_t ix = space.index_of(mode_x);
    const size_t iy = space.index_of(mode_y);
    PairFlux out;
    out.flux_x = space.mode(ix).kappa_ext * occupation_expectation(space, steady, ix);
    out.flux_y = space.mode(iy).kappa_ext * occupation_expectation(space, steady, iy);
    const double big = std::max(std::abs(out.flux_x), std::abs(out.flux_y));
    out.relative_mismatch = big > 0.0 ? std::abs(out.flux_x - out.flux_y) / big : 0.0;
    return out;
}

ConvergedSteady converged_steady_state(const HilbertSpace& space,
                                       const std::vector<EffectiveProcess>& terms,
                                       double tolerance, const LindbladOptions& options,
                                       const HamiltonianOptions& ham_options) {
    // fast pre-flight for purely quadratic problems: the drift-matrix
    // stability test catches above-threshold drives before any Fock solve
    bool all_bilinear = !terms.empty();
    for (const EffectiveProcess& t : terms)
        if (t.legs.size() != 2) all_bilinear = false;
    if (all_bilinear) {
        try {
            gaussian::steady_state(space.modes(), terms);
        } catch (const ThresholdError&) {
            throw;
        } catch (const Error&) {
            // not representable as a quadratic form; fall through
        }
    }

    auto solve_at = [&](const HilbertSpace& sp) {
        const SparseOp h = build_hamiltonian(sp, terms, ham_options);
        return lindblad_steady_state(sp, h, {}, options);
    };
    auto occupations = [&](const HilbertSpace& sp, const QuantumState& st) {
        std::vector<double> occ(sp.mode_count());
        for (size_t k = 0; k < sp.mode_count(); ++k)
            occ[k] = occupation_expectation(sp, st, k);
        return occ;
    };

    HilbertSpace current = space;
    QuantumState state = solve_at(current);
    std::vector<double> occ = occupations(current, state);
    int saturated_rounds = top_layer_population(current, state) > options.top_layer_tol ? 1 : 0;
    double change = std::numeric_limits<double>::infinity();

    for (int round = 0; round < 8; ++round) {
        // refinement: double when the refined superoperator still fits the
        // direct solver, otherwise step cutoffs by one
        std::vector<int> refined = current.cutoffs();
        long dim = 1;
        for (int& c : refined) {
            c *= 2;
            dim *= c + 1;
        }
        if (dim * dim > options.direct_solve_limit) {
            refined = current.cutoffs();
            dim = 1;
            for (int& c : refined) {
                c += 1;
                dim *= c + 1;
            }
        }
        if (dim > space.dimension_limit())
            throw ConvergenceError(
                "cutoff refinement exceeded the dimension limit before converging", change);

        HilbertSpace next = current.with_cutoffs(refined);
        QuantumState refined_state = solve_at(next);
        std::vector<double> refined_occ = occupations(next, refined_state);

        double max_occ = 0.0;
        for (double o : refined_occ) max_occ = std::max(max_occ, o);
        change = 0.0;
        for (size_t k = 0; k < occ.size(); ++k) {
            const double denom = std::max({std::abs(refined_occ[k]), 1e-9 * max_occ, 1e-300});
            change = std::max(change, std::abs(refined_occ[k] - occ[k]) / denom);
        }

        const bool saturated = top_layer_population(next, refined_state) > options.top_layer_tol;
        if (change <= tolerance && !saturated)
            return ConvergedSteady{refined_state, refined, change, next};

        // persistent cutoff saturation means the photon number tracks the
        // truncation instead of settling: an above-threshold drive
        saturated_rounds = saturated ? saturated_rounds + 1 : 0;
        if (saturated_rounds >= 3) {
            const double occ_tot = std::accumulate(refined_occ.begin(), refined_occ.end(), 0.0);
            const double occ_prev = std::accumulate(occ.begin(), occ.end(), 0.0);
            throw ThresholdError("occupations track every cutoff increase: above threshold",
                                 occ_tot / std::max(occ_prev, 1e-300));
        }
        current = next;
        state = refined_state;
        occ = refined_occ;
    }
    throw ConvergenceError("cutoff refinement did not converge", change);
}

std::vector<ConvergenceScanPoint> virtual_mode_convergence(
    const ModeGraph& graph, const std::vector<EffectiveProcess>& full_terms,
    const std::string& virtual_mode, const std::string& flux_mode,
    const std::vector<double>& lambda_magnitudes, const std::vector<int>& cutoffs,
    const LindbladOptions& options) {
    const Mode& vm = graph.at(virtual_mode);
    graph.at(flux_mode);
    if (cutoffs.size() != graph.size())
        throw StructuralError("one cutoff per graph mode required");

    std::vector<ConvergenceScanPoint> table;
    table.reserve(lambda_magnitudes.size());
    for (double magnitude : lambda_magnitudes) {
        if (!(magnitude > 0.5 * vm.kappa))
            throw DomainError("|Lambda| must exceed kappa/2 of the virtual mode");
        const double delta = std::sqrt(magnitude * magnitude - 0.25 * vm.kappa * vm.kappa);

        // full model: explicit virtual mode at the swept detuning
        std::vector<Mode> full_modes = graph.modes();
        std::vector<int> full_cutoffs = cutoffs;
        for (Mode& m : full_modes)
            if (m.label == virtual_mode) m.delta = delta;
        HilbertSpace full_space(full_modes, full_cutoffs);
        ConvergedSteady full = converged_steady_state(full_space, full_terms, 0.01, options);
        const size_t fx = full.space.index_of(flux_mode);
        const double flux_full =
            full.space.mode(fx).kappa_ext * occupation_expectation(full.space, full.state, fx);

        // effective model: contract the virtual mode with Lambda = delta - i kappa/2
        const Complex lambda(delta, -0.5 * vm.kappa);
        EffectiveProcess effective =
            synthesize_effective(full_terms, {Elimination{virtual_mode, lambda}});
        std::vector<Mode> eff_modes;
        std::vector<int> eff_cutoffs;
        for (size_t i = 0; i < full_modes.size(); ++i) {
            if (full_modes[i].label == virtual_mode) continue;
            Mode m = graph.modes()[i];
            eff_modes.push_back(m);
            eff_cutoffs.push_back(cutoffs[i]);
        }
        HilbertSpace eff_space(eff_modes, eff_cutoffs);
        ConvergedSteady eff = converged_steady_state(eff_space, {effective}, 0.01, options);
        const size_t ex = eff.space.index_of(flux_mode);
        const double flux_eff =
            eff.space.mode(ex).kappa_ext * occupation_expectation(eff.space, eff.state, ex);

        ConvergenceScanPoint point;
        point.lambda_magnitude = magnitude;
        point.flux_full = flux_full;
        point.flux_effective = flux_eff;
        point.ratio = flux_eff != 0.0 ? flux_full / flux_eff
                                      : std::numeric_limits<double>::quiet_NaN();
        table.push_back(point);
    }
    return table;
}

WingFit fit_exponential_wings(const CorrelationGrid& grid) {
    if (grid.tau.size() < 5)
        throw DomainError("too few correlation points for a wing fit");
    double peak = 0.0;
    for (double v : grid.g2) peak = std::max(peak, v - 1.0);
    if (!(peak > 0.0))
        throw DomainError("no correlation peak above the uncorrelated floor");
    const double floor = 1e-3 * peak;

    auto fit_side = [&](bool right) {
        std::vector<double> xs, ys;
        for (size_t i = 0; i < grid.tau.size(); ++i) {
            const double t = grid.tau[i];
            if (right && t <= 0.0) continue;
            if (!right && t >= 0.0) continue;
            const double excess = grid.g2[i] - 1.0;
            if (excess < floor) continue;
            xs.push_back(std::abs(t));
            ys.push_back(std::log(excess));
        }
        if (xs.size() < 3)
            throw DomainError("too few usable points on one correlation wing");
        const double n = double(xs.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (size_t i = 0; i < xs.size(); ++i) {
            sx += xs[i];
            sy += ys[i];
            sxx += xs[i] * xs[i];
            sxy += xs[i] * ys[i];
        }
        const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        if (!(slope < 0.0))
            throw DomainError("correlation wing does not decay");
        return -1.0 / slope;
    };

    WingFit fit;
    fit.tau_right = fit_side(true);
    fit.tau_left = fit_side(false);
    return fit;
}

}  // namespace synthwave::fock
