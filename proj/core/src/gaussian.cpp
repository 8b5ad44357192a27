#include "synthwave/gaussian.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace synthwave::gaussian {

namespace {

size_t mode_index(const std::vector<Mode>& modes, const std::string& label) {
    for (size_t i = 0; i < modes.size(); ++i)
        if (modes[i].label == label) return i;
    throw StructuralError("unknown mode reference '" + label + "'");
}

// Accumulate one monomial g * op(i) * op(j) into (F, G). The G blocks of
// the parametrization 1/2 (G a+a+ + G* aa) already carry the conjugate, so
// dagger-homogeneous monomials must be added exactly once.
void add_bilinear(QuadraticForm& q, Complex g, size_t i, bool dag_i, size_t j, bool dag_j) {
    if (dag_i && !dag_j) {                 // a+_i a_j
        q.F(i, j) += g;
    } else if (!dag_i && dag_j) {          // a_i a+_j = a+_j a_i + const
        q.F(j, i) += g;
    } else if (dag_i && dag_j) {           // a+_i a+_j
        if (i == j) q.G(i, i) += 2.0 * g;
        else { q.G(i, j) += g; q.G(j, i) += g; }
    } else {                               // a_i a_j: conjugate orientation of the above
        if (i == j) q.G(i, i) += 2.0 * std::conj(g);
        else { q.G(i, j) += std::conj(g); q.G(j, i) += std::conj(g); }
    }
}

}  // namespace

QuadraticForm quadratic_form(const std::vector<Mode>& modes,
                             const std::vector<EffectiveProcess>& terms) {
    const long m = static_cast<long>(modes.size());
    QuadraticForm q{Eigen::MatrixXcd::Zero(m, m), Eigen::MatrixXcd::Zero(m, m)};
    for (long i = 0; i < m; ++i) q.F(i, i) += modes[i].delta;

    for (const EffectiveProcess& term : terms) {
        if (term.legs.size() != 2)
            throw StructuralError("gaussian oracle requires bilinear terms; got a term with " +
                                  std::to_string(term.legs.size()) + " legs");
        const size_t i = mode_index(modes, term.legs[0].mode);
        const size_t j = mode_index(modes, term.legs[1].mode);
        const bool homogeneous = term.legs[0].dagger == term.legs[1].dagger;
        add_bilinear(q, term.g_eff, i, term.legs[0].dagger, j, term.legs[1].dagger);
        if (homogeneous) {
            // pair terms without the implied partner cannot form a
            // Hermitian quadratic problem
            if (!term.hermitian_pair)
                throw StructuralError(
                    "a lone pair-creation/annihilation term is non-Hermitian; "
                    "the gaussian oracle cannot represent it");
        } else if (term.hermitian_pair) {
            add_bilinear(q, std::conj(term.g_eff), i, !term.legs[0].dagger, j,
                         !term.legs[1].dagger);
        }
    }

    if ((q.F - q.F.adjoint()).norm() > 1e-9 * (1.0 + q.F.norm()))
        throw StructuralError("quadratic form is not Hermitian; check term orientations");
    return q;
}

double gain_ratio(const std::vector<Mode>& modes, const QuadraticForm& form) {
    double ratio = 0.0;
    const long m = static_cast<long>(modes.size());
    for (long i = 0; i < m; ++i)
        for (long j = i; j < m; ++j) {
            // G(i,i) = 2c for a single-mode squeezing coefficient c; the
            // factor works out so that ratio = 1 at threshold in both cases.
            const double g = std::abs(form.G(i, j));
            if (g == 0.0) continue;
            ratio = std::max(ratio, 2.0 * g / std::sqrt(modes[i].kappa * modes[j].kappa));
        }
    return ratio;
}

SteadyState steady_state(const std::vector<Mode>& modes, const QuadraticForm& form) {
    const long m = static_cast<long>(modes.size());
    const long n = 2 * m;

    // Drift of v = (a, a+):  dv/dt = A v + noise.
    Eigen::MatrixXcd drift = Eigen::MatrixXcd::Zero(n, n);
    const Complex im(0.0, 1.0);
    drift.topLeftCorner(m, m) = -im * form.F;
    drift.topRightCorner(m, m) = -im * form.G;
    drift.bottomLeftCorner(m, m) = im * form.G.conjugate();
    drift.bottomRightCorner(m, m) = im * form.F.conjugate();
    for (long i = 0; i < m; ++i) {
        drift(i, i) -= 0.5 * modes[i].kappa;
        drift(m + i, m + i) -= 0.5 * modes[i].kappa;
    }

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> eig(drift, false);
    double abscissa = -std::numeric_limits<double>::infinity();
    for (long i = 0; i < n; ++i) abscissa = std::max(abscissa, eig.eigenvalues()[i].real());
    if (abscissa >= 0.0)
        throw ThresholdError("drift matrix unstable: drive above parametric threshold",
                             gain_ratio(modes, form));

    // Vacuum-input diffusion: D = diag(kappa_1..kappa_M, 0..0).
    Eigen::MatrixXcd diffusion = Eigen::MatrixXcd::Zero(n, n);
    for (long i = 0; i < m; ++i) diffusion(i, i) = modes[i].kappa;

    // Vectorized Lyapunov solve (column stacking): (I (x) A + conj(A) (x) I) vec C = -vec D.
    Eigen::MatrixXcd sys = Eigen::MatrixXcd::Zero(n * n, n * n);
    for (long c = 0; c < n; ++c)
        sys.block(c * n, c * n, n, n) += drift;
    for (long c = 0; c < n; ++c)
        for (long r = 0; r < n; ++r)
            for (long k = 0; k < n; ++k)
                sys(c * n + r, k * n + r) += std::conj(drift(c, k));
    Eigen::VectorXcd rhs(n * n);
    for (long c = 0; c < n; ++c)
        for (long r = 0; r < n; ++r) rhs[c * n + r] = -diffusion(r, c);

    Eigen::VectorXcd x = sys.partialPivLu().solve(rhs);

    SteadyState out;
    out.correlations = Eigen::MatrixXcd(n, n);
    for (long c = 0; c < n; ++c)
        for (long r = 0; r < n; ++r) out.correlations(r, c) = x[c * n + r];
    out.spectral_abscissa = abscissa;
    out.occupations.resize(m);
    out.pair_flux.resize(m);
    for (long i = 0; i < m; ++i) {
        out.occupations[i] = out.correlations(m + i, m + i).real();
        out.pair_flux[i] = modes[i].kappa_ext * out.occupations[i];
    }
    return out;
}

SteadyState steady_state(const std::vector<Mode>& modes,
                         const std::vector<EffectiveProcess>& terms) {
    return steady_state(modes, quadratic_form(modes, terms));
}

}  // namespace synthwave::gaussian
