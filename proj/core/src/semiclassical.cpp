#include "synthwave/semiclassical.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace synthwave::cme {

namespace {

struct Workspace {
    std::vector<size_t> leg_modes;       // flattened across terms
    std::vector<bool> leg_daggers;
    std::vector<size_t> term_offsets;    // into the flat leg arrays
    std::vector<Complex> couplings;
    std::vector<bool> hermitian;
    std::vector<Complex> drive;          // sqrt(kappa_ext) * s per mode
    std::vector<Complex> linear;         // i*delta - kappa/2 per mode
};

Workspace prepare(const ModeGraph& graph, const std::vector<EffectiveProcess>& terms,
                  const std::vector<Drive>& drives) {
    Workspace w;
    const size_t m = graph.size();
    w.drive.assign(m, Complex(0, 0));
    w.linear.resize(m);
    for (size_t k = 0; k < m; ++k) {
        const Mode& mode = graph.modes()[k];
        mode.validate();
        w.linear[k] = Complex(0.0, mode.delta) - 0.5 * mode.kappa;
    }
    for (const Drive& d : drives) {
        if (!std::isfinite(d.amplitude.real()) || !std::isfinite(d.amplitude.imag()))
            throw DomainError("drive amplitudes must be finite");
        const size_t k = *([&] {
            auto idx = graph.find(d.mode);
            if (!idx) throw StructuralError("drive on unknown mode '" + d.mode + "'");
            return idx;
        }());
        w.drive[k] += std::sqrt(graph.modes()[k].kappa_ext) * d.amplitude;
    }
    w.term_offsets.push_back(0);
    for (const EffectiveProcess& t : terms) {
        for (const Leg& leg : t.legs) {
            auto idx = graph.find(leg.mode);
            if (!idx) throw StructuralError("leg on unknown mode '" + leg.mode + "'");
            w.leg_modes.push_back(*idx);
            w.leg_daggers.push_back(leg.dagger);
        }
        w.term_offsets.push_back(w.leg_modes.size());
        w.couplings.push_back(t.g_eff);
        w.hermitian.push_back(t.hermitian_pair);
    }
    return w;
}

// dH/d alpha_k^* accumulated over all terms (and hermitian partners).
void polynomial_gradient(const Workspace& w, const std::vector<Complex>& alpha,
                         std::vector<Complex>& grad) {
    grad.assign(alpha.size(), Complex(0, 0));
    const size_t nterms = w.couplings.size();
    for (size_t t = 0; t < nterms; ++t) {
        const size_t lo = w.term_offsets[t], hi = w.term_offsets[t + 1];
        for (int orientation = 0; orientation < (w.hermitian[t] ? 2 : 1); ++orientation) {
            const bool flip = orientation == 1;
            const Complex g = flip ? std::conj(w.couplings[t]) : w.couplings[t];
            // derivative w.r.t. alpha_k^*: pick each dagger leg in turn
            for (size_t j = lo; j < hi; ++j) {
                const bool dag = w.leg_daggers[j] != flip;
                if (!dag) continue;
                Complex prod = g;
                for (size_t i = lo; i < hi; ++i) {
                    if (i == j) continue;
                    const bool dag_i = w.leg_daggers[i] != flip;
                    const Complex& a = alpha[w.leg_modes[i]];
                    prod *= dag_i ? std::conj(a) : a;
                }
                grad[w.leg_modes[j]] += prod;
            }
        }
    }
}

// d alpha/dt at the candidate point.
void rhs(const Workspace& w, const std::vector<Complex>& alpha, std::vector<Complex>& out) {
    std::vector<Complex> grad;
    polynomial_gradient(w, alpha, grad);
    out.resize(alpha.size());
    for (size_t k = 0; k < alpha.size(); ++k)
        out[k] = w.linear[k] * alpha[k] - Complex(0, 1) * grad[k] + w.drive[k];
}

double rate_scale(const ModeGraph& graph) {
    double s = 0.0;
    for (const Mode& m : graph.modes()) s = std::max({s, m.kappa, std::abs(m.delta)});
    return std::max(s, 1e-300);
}

double relative_residual(const Workspace& w, const ModeGraph& graph,
                         const std::vector<Complex>& alpha) {
    std::vector<Complex> r;
    rhs(w, alpha, r);
    double rn = 0.0, an = 0.0, dn = 0.0;
    for (size_t k = 0; k < alpha.size(); ++k) {
        rn += std::norm(r[k]);
        an += std::norm(alpha[k]);
        dn += std::norm(w.drive[k]);
    }
    const double scale = rate_scale(graph) * std::sqrt(an) + std::sqrt(dn);
    return scale > 0.0 ? std::sqrt(rn) / scale : std::sqrt(rn);
}

std::vector<Complex> solve_from(const Workspace& w, const ModeGraph& graph,
                                std::vector<Complex> alpha, const SteadyOptions& options,
                                double& residual_out, bool& converged_out) {
    const size_t m = alpha.size();
    std::vector<Complex> grad, next(m);

    auto finite = [](const std::vector<Complex>& a) {
        for (const Complex& v : a)
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
        return true;
    };

    double residual = relative_residual(w, graph, alpha);
    int iter = 0;
    // damped fixed point until the Newton basin, then Newton on the
    // real/imaginary split with a finite-difference Jacobian
    while (residual > options.newton_switch && iter < options.max_iterations) {
        polynomial_gradient(w, alpha, grad);
        for (size_t k = 0; k < m; ++k) {
            const Complex target = (Complex(0, 1) * grad[k] - w.drive[k]) / w.linear[k];
            next[k] = (1.0 - options.damping) * alpha[k] + options.damping * target;
        }
        alpha.swap(next);
        if (!finite(alpha))
            throw ConvergenceError(
                "coupled-mode iteration diverged (drive beyond the basin of the fixed point)",
                std::numeric_limits<double>::infinity());
        residual = relative_residual(w, graph, alpha);
        ++iter;
    }

    auto pack = [&](const std::vector<Complex>& a) {
        Eigen::VectorXd x(2 * m);
        for (size_t k = 0; k < m; ++k) {
            x[2 * k] = a[k].real();
            x[2 * k + 1] = a[k].imag();
        }
        return x;
    };
    auto unpack = [&](const Eigen::VectorXd& x) {
        std::vector<Complex> a(m);
        for (size_t k = 0; k < m; ++k) a[k] = Complex(x[2 * k], x[2 * k + 1]);
        return a;
    };
    auto residual_vec = [&](const Eigen::VectorXd& x) {
        std::vector<Complex> r;
        rhs(w, unpack(x), r);
        Eigen::VectorXd f(2 * m);
        for (size_t k = 0; k < m; ++k) {
            f[2 * k] = r[k].real();
            f[2 * k + 1] = r[k].imag();
        }
        return f;
    };

    Eigen::VectorXd x = pack(alpha);
    while (residual > options.residual_tol && iter < options.max_iterations) {
        Eigen::VectorXd f = residual_vec(x);
        Eigen::MatrixXd jac(2 * m, 2 * m);
        const double base = std::max(x.norm(), 1.0);
        for (long c = 0; c < long(2 * m); ++c) {
            const double h = 1e-7 * base;
            Eigen::VectorXd xp = x;
            xp[c] += h;
            jac.col(c) = (residual_vec(xp) - f) / h;
        }
        const Eigen::VectorXd step = jac.partialPivLu().solve(-f);
        x += step;
        if (!x.allFinite())
            throw ConvergenceError("Newton step diverged",
                                   std::numeric_limits<double>::infinity());
        residual = relative_residual(w, graph, unpack(x));
        ++iter;
    }

    residual_out = residual;
    converged_out = residual <= options.residual_tol;
    return unpack(x);
}

}  // namespace

AmplitudeState cme_steady_state(const ModeGraph& graph,
                                const std::vector<EffectiveProcess>& terms,
                                const std::vector<Drive>& drives,
                                const SteadyOptions& options) {
    Workspace w = prepare(graph, terms, drives);
    const size_t m = graph.size();

    AmplitudeState state;
    state.alpha = solve_from(w, graph, std::vector<Complex>(m, Complex(0, 0)), options,
                             state.residual, state.converged);
    if (!state.converged)
        throw ConvergenceError("coupled-mode steady state did not converge", state.residual);

    if (options.detect_multistability) {
        // restart from the bare-cavity response; disagreement flags multistability
        std::vector<Complex> linear_guess(m);
        for (size_t k = 0; k < m; ++k) linear_guess[k] = -w.drive[k] / w.linear[k];
        double res2 = 0.0;
        bool conv2 = false;
        std::vector<Complex> other = solve_from(w, graph, linear_guess, options, res2, conv2);
        if (conv2) {
            double diff = 0.0, norm = 0.0;
            for (size_t k = 0; k < m; ++k) {
                diff += std::norm(other[k] - state.alpha[k]);
                norm += std::norm(state.alpha[k]) + std::norm(other[k]);
            }
            if (norm > 0.0 && std::sqrt(diff / norm) > 1e-6) state.multistable = true;
        }
    }
    return state;
}

std::vector<double> transmission_spectrum(const Mode& mode,
                                          const std::vector<double>& detunings) {
    mode.validate();
    std::vector<double> transmission;
    transmission.reserve(detunings.size());
    for (double delta : detunings) {
        const Complex t = 1.0 - mode.kappa_ext / (Complex(0.0, delta) + 0.5 * mode.kappa);
        transmission.push_back(std::norm(t));
    }
    return transmission;
}

FluxLedger photon_flux_ledger(const ModeGraph& graph,
                              const std::vector<EffectiveProcess>& terms,
                              const std::vector<Drive>& drives,
                              const AmplitudeState& state) {
    Workspace w = prepare(graph, terms, drives);
    const size_t m = graph.size();
    std::vector<Complex> grad;
    polynomial_gradient(w, state.alpha, grad);

    FluxLedger ledger;
    ledger.port_in.resize(m);
    ledger.dissipated_internal.resize(m);
    ledger.emitted_external.resize(m);
    ledger.converted.resize(m);
    for (size_t k = 0; k < m; ++k) {
        const Mode& mode = graph.modes()[k];
        const double n = std::norm(state.alpha[k]);
        // w.drive already carries sqrt(kappa_ext)
        ledger.port_in[k] =
            2.0 * std::real(std::conj(state.alpha[k]) * w.drive[k]) - mode.kappa_ext * n;
        ledger.dissipated_internal[k] = (mode.kappa - mode.kappa_ext) * n;
        ledger.emitted_external[k] = mode.kappa_ext * n;
        ledger.converted[k] =
            2.0 * std::real(std::conj(state.alpha[k]) * (Complex(0, -1) * grad[k]));
    }
    return ledger;
}

std::vector<SweepPoint> sweep_power(const std::vector<double>& pump_powers,
                                    const std::function<double(double)>& observable) {
    if (pump_powers.size() < 3)
        throw DomainError("a power sweep needs at least 3 points");
    for (double p : pump_powers)
        if (!(p > 0.0)) throw DomainError("pump powers must be > 0");

    std::vector<SweepPoint> out;
    out.reserve(pump_powers.size());
    for (double p : pump_powers) {
        SweepPoint pt;
        pt.pump_power = p;
        try {
            pt.value = observable(p);
            pt.ok = true;
        } catch (const Error& e) {
            pt.error = e.what();
        }
        out.push_back(pt);
    }
    return out;
}

PowerLawFit power_law_fit(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 3)
        throw DomainError("power-law fit needs at least 3 points");
    double xmin = std::numeric_limits<double>::infinity(), xmax = 0.0;
    for (const auto& [p, v] : points) {
        if (!(p > 0.0) || !(v > 0.0))
            throw DomainError("power-law fit requires strictly positive data");
        xmin = std::min(xmin, p);
        xmax = std::max(xmax, p);
    }
    if (std::log10(xmax / xmin) < 0.5)
        throw DomainError("power-law fit requires at least half a decade of span");

    const double n = double(points.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [p, v] : points) {
        const double x = std::log(p), y = std::log(v);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double det = n * sxx - sx * sx;
    PowerLawFit fit;
    fit.exponent = (n * sxy - sx * sy) / det;
    const double intercept = (sy - fit.exponent * sx) / n;
    fit.prefactor = std::exp(intercept);

    double ss_res = 0.0;
    for (const auto& [p, v] : points) {
        const double r = std::log(v) - (intercept + fit.exponent * std::log(p));
        ss_res += r * r;
    }
    if (points.size() > 2) {
        const double var = ss_res / (n - 2.0);
        fit.sigma_exponent = std::sqrt(std::max(0.0, var * n / det));
    }
    return fit;
}

}  // namespace synthwave::cme
