#pragma once

#include "qsde/deriv.hpp"

namespace qsde {

/// Trace-level diffusion generator data: the coefficient matrix Psi, the
/// drift coefficients xi, and the trace functional (with its moment growth
/// bound r0). Two drift variants are shipped: `ito` contracts the first
/// quotients of the argument against xi and satisfies the stationarity
/// identity; `literal` multiplies xi against the argument directly and is
/// kept for the coefficient-magnitude estimates, where only majorants
/// matter (its stationarity defect is documented in the tests).
struct GeneratorSpec {
    int N = 1;
    std::vector<std::vector<Tensor2Series>> psi;  // psi[j-1][k-1]
    std::vector<NCPolynomial> xi;
    TraceFn<Complex> trace;
    double r0 = 1.0;
    DriftVariant drift = DriftVariant::ito;

    const Tensor2Series& psi_at(int j, int k) const {
        return psi[static_cast<size_t>(j - 1)][static_cast<size_t>(k - 1)];
    }
    const NCPolynomial& xi_at(int j) const { return xi[static_cast<size_t>(j - 1)]; }

    /// Ornstein-Uhlenbeck data: unit diagonal diffusion, linear drift.
    static GeneratorSpec ornstein_uhlenbeck(int n, TraceFn<Complex> tau, double r0,
                                            DriftVariant variant = DriftVariant::ito) {
        GeneratorSpec spec;
        spec.N = n;
        spec.drift = variant;
        spec.trace = std::move(tau);
        spec.r0 = r0;
        spec.psi.assign(static_cast<size_t>(n),
                        std::vector<Tensor2Series>(static_cast<size_t>(n), Tensor2Series(n)));
        for (int j = 1; j <= n; ++j) {
            Tensor2Series unit(n);
            unit.add_term({Word{}, Word{}}, Complex(1.0));
            spec.psi[static_cast<size_t>(j - 1)][static_cast<size_t>(j - 1)] = unit;
            spec.xi.push_back(monomial(n, Word{j}, Complex(1.0)));
        }
        return spec;
    }

    /// Diagonal spec from a truncated kernel expansion, with the conjugate
    /// drift computed from the same truncation (explicit route; suitable for
    /// small cutoffs).
    static GeneratorSpec from_xi_expansion(const XiExpansion& xiexp, const QContext& ctx,
                                           DriftVariant variant = DriftVariant::ito) {
        DerivationSpec deriv = DerivationSpec::from_xi_expansion(xiexp);
        GeneratorSpec spec;
        spec.N = deriv.N;
        spec.drift = variant;
        spec.trace = ctx.trace_fn();
        spec.r0 = ctx.r0();
        spec.psi = deriv.values;
        spec.xi = conjugate_from_zeta(deriv, spec.trace).xi;
        return spec;
    }
};

/// Applies the generator to a polynomial:
///   L f = (1 (x) tau) sum_{ijk} Psi_{jk} #in ( Psi_{ki} #out D_{ij} f ) - drift,
/// with the drift given by the selected variant.
inline NCPolynomial apply_generator(const GeneratorSpec& spec, const NCPolynomial& f) {
    NCPolynomial out(spec.N);
    for (int i = 1; i <= spec.N; ++i)
        for (int j = 1; j <= spec.N; ++j) {
            Tensor2Series d = second_quotient(f, i, j);
            if (d.is_zero()) continue;
            for (int k = 1; k <= spec.N; ++k) {
                Tensor2Series inner = hash_out(spec.psi_at(k, i), d);
                if (inner.is_zero()) continue;
                out += partial_trace_right(hash_in(spec.psi_at(j, k), inner), spec.trace);
            }
        }
    if (spec.drift == DriftVariant::literal) {
        for (int j = 1; j <= spec.N; ++j) out -= Complex(0.5) * (spec.xi_at(j) * f);
    } else {
        for (int j = 1; j <= spec.N; ++j)
            out -= Complex(0.5) * sandwich_m(first_quotient(f, j), spec.xi_at(j));
    }
    return out;
}

/// max_f |tau(L f)| over monomials of degree <= degree (explicit route).
inline StationarityResult stationarity_residual(const GeneratorSpec& spec, int degree) {
    StationarityResult res;
    for (const Word& w : enumerate_words(spec.N, degree, 1)) {
        NCPolynomial f = monomial(spec.N, w, Complex(1.0));
        Complex t = 0.0;
        for (const auto& [k, c] : apply_generator(spec, f).terms()) t += c * spec.trace(k.legs[0]);
        double r = std::abs(t);
        res.residuals.emplace(w, r);
        res.max_residual = std::max(res.max_residual, r);
    }
    return res;
}

/// Stationarity certificate for the diagonal kernel derivation, evaluated
/// structurally (no explicit kernel expansion); valid at any cutoff.
inline StationarityResult stationarity_residual(QModel& model, int degree,
                                                DriftVariant variant) {
    return model.stationarity(degree, variant);
}

/// One-variable majorant of the generator: L-hat phi = alpha1 phi'' +
/// alpha2 phi, built from the coefficient majorants of Psi and xi with the
/// second variable of the Psi majorants pinned at N r0.
struct MajorantGenerator {
    MajorantSeries<> alpha1{1};
    MajorantSeries<> alpha2{1};
    int N = 1;
    double r0 = 1.0;
    double rho = 2.0;
    double radius = std::numeric_limits<double>::infinity();  // declared convergence radius

    static MajorantGenerator from_spec(const GeneratorSpec& spec, double rho,
                                       double radius = std::numeric_limits<double>::infinity()) {
        MajorantGenerator mg;
        mg.N = spec.N;
        mg.r0 = spec.r0;
        mg.rho = rho;
        mg.radius = radius;
        double x = spec.N * spec.r0;
        MajorantSeries<> a1(1);
        bool first = true;
        for (int i = 1; i <= spec.N; ++i)
            for (int j = 1; j <= spec.N; ++j)
                for (int k = 1; k <= spec.N; ++k) {
                    auto term = coefficient_majorant(spec.psi_at(j, k)).substitute(1, x) *
                                coefficient_majorant(spec.psi_at(k, i)).substitute(0, x);
                    a1 = first ? term : a1 + term;
                    first = false;
                }
        mg.alpha1 = a1;
        MajorantSeries<> a2(1);
        bool first2 = true;
        for (int j = 1; j <= spec.N; ++j) {
            auto term = coefficient_majorant(spec.xi_at(j));
            a2 = first2 ? term : a2 + term;
            first2 = false;
        }
        mg.alpha2 = a2 * 0.5;
        return mg;
    }

    /// sup of max(|alpha1|, |alpha2|) on the circle |z| = rho; positive
    /// coefficients make this the value at rho.
    double envelope() const {
        if (rho >= radius) throw NumericalGuard("majorant envelope diverges at rho");
        return std::max(alpha1.evaluate(rho), alpha2.evaluate(rho));
    }
};

inline MajorantSeries<> majorant_apply(const MajorantGenerator& mg, const MajorantSeries<>& phi) {
    return mg.alpha1 * phi.second_derivative() + mg.alpha2 * phi;
}

/// L-hat iterated n times and evaluated at N r0.
inline double iterated_bound(const MajorantGenerator& mg, MajorantSeries<> phi, int n) {
    for (int i = 0; i < n; ++i) phi = majorant_apply(mg, phi);
    return phi.evaluate(mg.N * mg.r0);
}

/// Contour estimate C n! (2K / (rho - r0))^n for the n-th iterate, with
/// K the envelope and C = sup|phi| / (2 pi (rho - r0)).
inline double cauchy_bound(const MajorantGenerator& mg, const MajorantSeries<>& phi, int n) {
    if (mg.rho <= mg.r0) throw std::invalid_argument("rho must exceed r0");
    double k = mg.envelope();
    double c = phi.evaluate(mg.rho) / (2.0 * M_PI * (mg.rho - mg.r0));
    double factor = 2.0 * k / (mg.rho - mg.r0);
    double nf = 1.0;
    for (int i = 2; i <= n; ++i) nf *= i;
    return c * nf * std::pow(factor, n);
}

/// Largest time with a contracting geometric factor: (rho - r0) / (2K).
inline double stationarity_time(const MajorantGenerator& mg) {
    if (mg.rho <= mg.r0) throw std::invalid_argument("rho must exceed r0");
    return (mg.rho - mg.r0) / (2.0 * mg.envelope());
}

}  // namespace qsde
