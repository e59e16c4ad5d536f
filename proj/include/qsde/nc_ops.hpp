#pragma once

#include <functional>

#include "qsde/majorant.hpp"
#include "qsde/series.hpp"

namespace qsde {

template <class T> using TraceFn = std::function<T(const Word&)>;

namespace detail {
inline std::optional<int> combine_caps(std::optional<int> a, std::optional<int> b) {
    if (a && b) return std::min(*a, *b);
    return a ? a : b;
}
}  // namespace detail

/// Cyclic second quotient: for each monomial and each ordered pair of
/// positions k < l carrying letters (i, j), emits
///   (letters strictly between k and l)  (X)  (letters after l, then letters
///   before k).
/// The right leg wraps around the end of the word.
template <class T>
TensorSeries<T, 2> second_quotient(const TensorSeries<T, 1>& f, int i, int j) {
    if (i < 1 || i > f.alphabet() || j < 1 || j > f.alphabet())
        throw std::invalid_argument("second_quotient: index out of range");
    TensorSeries<T, 2> out(f.alphabet(), f.degree_cap());
    if (f.truncated()) out.mark_truncated();
    for (const auto& [key, c] : f.terms()) {
        const Word& w = key.legs[0];
        int n = w.size();
        for (int k = 0; k < n; ++k) {
            if (w[k] != i) continue;
            for (int l = k + 1; l < n; ++l) {
                if (w[l] != j) continue;
                Word left = w.sub(k + 1, l);
                Word right = w.sub(l + 1, n) + w.sub(0, k);
                out.add_term({left, right}, c);
            }
        }
    }
    return out;
}

/// Leibniz first quotient: splits each monomial at every occurrence of the
/// letter j into (prefix) (X) (suffix).
template <class T>
TensorSeries<T, 2> first_quotient(const TensorSeries<T, 1>& f, int j) {
    if (j < 1 || j > f.alphabet())
        throw std::invalid_argument("first_quotient: index out of range");
    TensorSeries<T, 2> out(f.alphabet(), f.degree_cap());
    if (f.truncated()) out.mark_truncated();
    for (const auto& [key, c] : f.terms()) {
        const Word& w = key.legs[0];
        for (int k = 0; k < w.size(); ++k) {
            if (w[k] != j) continue;
            out.add_term({w.sub(0, k), w.sub(k + 1, w.size())}, c);
        }
    }
    return out;
}

/// Inside multiplication: on elementary tensors (A (X) B) #in (P (X) Q) = PA (X) BQ.
template <class T>
TensorSeries<T, 2> hash_in(const TensorSeries<T, 2>& psi, const TensorSeries<T, 2>& theta) {
    psi.require_same_alphabet(theta);
    TensorSeries<T, 2> out(psi.alphabet(),
                           detail::combine_caps(psi.degree_cap(), theta.degree_cap()));
    if (psi.truncated() || theta.truncated()) out.mark_truncated();
    for (const auto& [kp, cp] : psi.terms())
        for (const auto& [kt, ct] : theta.terms())
            out.add_term({kt.legs[0] + kp.legs[0], kp.legs[1] + kt.legs[1]}, cp * ct);
    return out;
}

/// Outside multiplication: on elementary tensors (A (X) B) #out (P (X) Q) = BP (X) QA.
template <class T>
TensorSeries<T, 2> hash_out(const TensorSeries<T, 2>& psi, const TensorSeries<T, 2>& theta) {
    psi.require_same_alphabet(theta);
    TensorSeries<T, 2> out(psi.alphabet(),
                           detail::combine_caps(psi.degree_cap(), theta.degree_cap()));
    if (psi.truncated() || theta.truncated()) out.mark_truncated();
    for (const auto& [kp, cp] : psi.terms())
        for (const auto& [kt, ct] : theta.terms())
            out.add_term({kp.legs[1] + kt.legs[0], kt.legs[1] + kp.legs[0]}, cp * ct);
    return out;
}

/// (1 (X) tau): contracts the right leg with the trace functional.
template <class T>
TensorSeries<T, 1> partial_trace_right(const TensorSeries<T, 2>& theta, const TraceFn<T>& tau) {
    TensorSeries<T, 1> out(theta.alphabet(), theta.degree_cap());
    if (theta.truncated()) out.mark_truncated();
    for (const auto& [k, c] : theta.terms()) out.add_term({k.legs[0]}, c * tau(k.legs[1]));
    return out;
}

/// (tau (X) 1): contracts the left leg with the trace functional.
template <class T>
TensorSeries<T, 1> partial_trace_left(const TensorSeries<T, 2>& theta, const TraceFn<T>& tau) {
    TensorSeries<T, 1> out(theta.alphabet(), theta.degree_cap());
    if (theta.truncated()) out.mark_truncated();
    for (const auto& [k, c] : theta.terms()) out.add_term({k.legs[1]}, c * tau(k.legs[0]));
    return out;
}

// --------------------------------------------------------------------------
// Rank-3 operations used by the conjugate-variable construction.
// --------------------------------------------------------------------------

/// Splits the first leg at every occurrence of the letter s:
/// (u (X) v) -> sum (u-prefix (X) u-suffix (X) v).
template <class T>
TensorSeries<T, 3> first_leg_quotient(const TensorSeries<T, 2>& psi, int s) {
    if (s < 1 || s > psi.alphabet())
        throw std::invalid_argument("first_leg_quotient: index out of range");
    TensorSeries<T, 3> out(psi.alphabet(), psi.degree_cap());
    if (psi.truncated()) out.mark_truncated();
    for (const auto& [k, c] : psi.terms()) {
        const Word& u = k.legs[0];
        for (int p = 0; p < u.size(); ++p) {
            if (u[p] != s) continue;
            out.add_term({u.sub(0, p), u.sub(p + 1, u.size()), k.legs[1]}, c);
        }
    }
    return out;
}

/// Splits the second leg at every occurrence of the letter s:
/// (u (X) v) -> sum (u (X) v-prefix (X) v-suffix).
template <class T>
TensorSeries<T, 3> second_leg_quotient(const TensorSeries<T, 2>& psi, int s) {
    if (s < 1 || s > psi.alphabet())
        throw std::invalid_argument("second_leg_quotient: index out of range");
    TensorSeries<T, 3> out(psi.alphabet(), psi.degree_cap());
    if (psi.truncated()) out.mark_truncated();
    for (const auto& [k, c] : psi.terms()) {
        const Word& v = k.legs[1];
        for (int p = 0; p < v.size(); ++p) {
            if (v[p] != s) continue;
            out.add_term({k.legs[0], v.sub(0, p), v.sub(p + 1, v.size())}, c);
        }
    }
    return out;
}

/// Multiplies around the first tensor sign:
/// (P (X) Q) # (u (X) v (X) w) = uP (X) Qv (X) w.
template <class T>
TensorSeries<T, 3> hash_in_first(const TensorSeries<T, 2>& psi, const TensorSeries<T, 3>& theta) {
    psi.require_same_alphabet(theta);
    TensorSeries<T, 3> out(psi.alphabet(),
                           detail::combine_caps(psi.degree_cap(), theta.degree_cap()));
    if (psi.truncated() || theta.truncated()) out.mark_truncated();
    for (const auto& [kp, cp] : psi.terms())
        for (const auto& [kt, ct] : theta.terms())
            out.add_term({kt.legs[0] + kp.legs[0], kp.legs[1] + kt.legs[1], kt.legs[2]}, cp * ct);
    return out;
}

/// Multiplies around the second tensor sign:
/// (P (X) Q) # (u (X) v (X) w) = u (X) vP (X) Qw.
template <class T>
TensorSeries<T, 3> hash_in_second(const TensorSeries<T, 2>& psi, const TensorSeries<T, 3>& theta) {
    psi.require_same_alphabet(theta);
    TensorSeries<T, 3> out(psi.alphabet(),
                           detail::combine_caps(psi.degree_cap(), theta.degree_cap()));
    if (psi.truncated() || theta.truncated()) out.mark_truncated();
    for (const auto& [kp, cp] : psi.terms())
        for (const auto& [kt, ct] : theta.terms())
            out.add_term({kt.legs[0], kt.legs[1] + kp.legs[0], kp.legs[1] + kt.legs[2]}, cp * ct);
    return out;
}

/// Contraction keeping the first leg and tracing the concatenation of the
/// other two: (u (X) v (X) w) -> u * tau(vw).
template <class T>
TensorSeries<T, 1> contract_m2(const TensorSeries<T, 3>& theta, const TraceFn<T>& tau) {
    TensorSeries<T, 1> out(theta.alphabet(), theta.degree_cap());
    if (theta.truncated()) out.mark_truncated();
    for (const auto& [k, c] : theta.terms())
        out.add_term({k.legs[0]}, c * tau(k.legs[1] + k.legs[2]));
    return out;
}

/// Traces the middle leg alone and rejoins the outer legs:
/// (u (X) v (X) w) -> u * tau(v) * w. This is the contraction the adjoint
/// identity requires; contract_m2 keeps the outer factor inside the trace
/// and fails adjointness (see the derivation tests).
template <class T>
TensorSeries<T, 1> trace_mid_join(const TensorSeries<T, 3>& theta, const TraceFn<T>& tau) {
    TensorSeries<T, 1> out(theta.alphabet(), theta.degree_cap());
    if (theta.truncated()) out.mark_truncated();
    for (const auto& [k, c] : theta.terms())
        out.add_term({k.legs[0] + k.legs[2]}, c * tau(k.legs[1]));
    return out;
}

/// Sandwich map: (u (X) v) -> u * zeta * v.
template <class T>
TensorSeries<T, 1> sandwich_m(const TensorSeries<T, 2>& theta, const TensorSeries<T, 1>& zeta) {
    theta.require_same_alphabet(zeta);
    TensorSeries<T, 1> out(theta.alphabet(),
                           detail::combine_caps(theta.degree_cap(), zeta.degree_cap()));
    if (theta.truncated() || zeta.truncated()) out.mark_truncated();
    for (const auto& [kt, ct] : theta.terms())
        for (const auto& [kz, cz] : zeta.terms())
            out.add_term({kt.legs[0] + kz.legs[0] + kt.legs[1]}, ct * cz);
    return out;
}

/// Contracts a 2-tensor against a scalar element: sum (a (X) b) -> a * g * b.
template <class T>
TensorSeries<T, 1> contract_sandwich(const TensorSeries<T, 2>& theta,
                                     const TensorSeries<T, 1>& g) {
    return sandwich_m(theta, g);
}

/// Two-sided module action (l (X) r) . theta, multiplying the left leg from
/// the left and the right leg from the right; equals hash_in(theta, l (X) r).
template <class T>
TensorSeries<T, 2> elementary_hash(const TensorSeries<T, 2>& value, const Word& left,
                                   const Word& right, const T& coeff) {
    TensorSeries<T, 2> out(value.alphabet(), value.degree_cap());
    if (value.truncated()) out.mark_truncated();
    for (const auto& [k, c] : value.terms())
        out.add_term({left + k.legs[0], k.legs[1] + right}, coeff * c);
    return out;
}

}  // namespace qsde
