#pragma once

#include <array>
#include <limits>
#include <map>
#include <stdexcept>

#include "qsde/series.hpp"

namespace qsde {

/// Power series in 1..3 commuting variables with non-negative coefficients,
/// used for coefficient-wise domination arguments. `truncation_degree() < 0`
/// means the series is known completely (a polynomial); otherwise
/// coefficients are only trusted up to that total degree.
template <class Real = double> class MajorantSeries {
public:
    using Key = std::array<int, 3>;

    MajorantSeries() = default;
    explicit MajorantSeries(int arity, int truncation_degree = -1)
        : arity_(arity), trunc_(truncation_degree) {
        if (arity < 1 || arity > 3) throw std::invalid_argument("majorant arity must be 1..3");
    }

    int arity() const { return arity_; }
    int truncation_degree() const { return trunc_; }
    const std::map<Key, Real>& terms() const { return coeff_; }

    static int key_degree(const Key& k) { return k[0] + k[1] + k[2]; }

    Real coefficient(const Key& k) const {
        auto it = coeff_.find(k);
        return it == coeff_.end() ? Real(0) : it->second;
    }
    Real coefficient(int a, int b = 0, int c = 0) const { return coefficient(Key{a, b, c}); }

    void add(const Key& k, const Real& v) {
        if (v < 0) throw std::invalid_argument("majorant coefficients must be >= 0");
        if (v == 0) return;
        if (trunc_ >= 0 && key_degree(k) > trunc_) return;
        coeff_[k] += v;
    }
    void add(int a, const Real& v) { add(Key{a, 0, 0}, v); }
    void add(int a, int b, const Real& v) { add(Key{a, b, 0}, v); }

    /// Keeps the pointwise maximum of the stored and supplied coefficient.
    void take_max(const Key& k, const Real& v) {
        if (v < 0) throw std::invalid_argument("majorant coefficients must be >= 0");
        if (v == 0) return;
        if (trunc_ >= 0 && key_degree(k) > trunc_) return;
        auto [it, inserted] = coeff_.try_emplace(k, v);
        if (!inserted && it->second < v) it->second = v;
    }

    int degree() const {
        int d = 0;
        for (const auto& [k, v] : coeff_) d = std::max(d, key_degree(k));
        return d;
    }

    friend MajorantSeries operator+(const MajorantSeries& a, const MajorantSeries& b) {
        if (a.arity_ != b.arity_) throw std::invalid_argument("majorant arity mismatch");
        MajorantSeries out(a.arity_, combine_trunc(a.trunc_, b.trunc_));
        for (const auto& [k, v] : a.coeff_) out.add(k, v);
        for (const auto& [k, v] : b.coeff_) out.add(k, v);
        return out;
    }

    friend MajorantSeries operator*(const MajorantSeries& a, const MajorantSeries& b) {
        if (a.arity_ != b.arity_) throw std::invalid_argument("majorant arity mismatch");
        MajorantSeries out(a.arity_, combine_trunc(a.trunc_, b.trunc_));
        for (const auto& [ka, va] : a.coeff_)
            for (const auto& [kb, vb] : b.coeff_)
                out.add(Key{ka[0] + kb[0], ka[1] + kb[1], ka[2] + kb[2]}, va * vb);
        return out;
    }

    MajorantSeries& operator*=(const Real& s) {
        if (s < 0) throw std::invalid_argument("negative majorant scale");
        for (auto& [k, v] : coeff_) v *= s;
        return *this;
    }
    friend MajorantSeries operator*(MajorantSeries a, const Real& s) { return a *= s; }
    friend MajorantSeries operator*(const Real& s, MajorantSeries a) { return a *= s; }

    /// d/dz_i as a formal series.
    MajorantSeries derivative(int var = 0) const {
        MajorantSeries out(arity_, trunc_ < 0 ? -1 : trunc_ - 1);
        for (const auto& [k, v] : coeff_) {
            if (k[var] == 0) continue;
            Key kk = k;
            kk[var] -= 1;
            out.add(kk, v * Real(k[var]));
        }
        return out;
    }

    MajorantSeries second_derivative(int var = 0) const { return derivative(var).derivative(var); }

    /// Substitutes z_var := x, reducing the arity by one.
    MajorantSeries substitute(int var, const Real& x) const {
        if (x < 0) throw std::invalid_argument("substitution point must be >= 0");
        MajorantSeries out(arity_ - 1, trunc_);
        for (const auto& [k, v] : coeff_) {
            Real p = v;
            for (int i = 0; i < k[var]; ++i) p *= x;
            Key kk{0, 0, 0};
            int slot = 0;
            for (int i = 0; i < arity_; ++i)
                if (i != var) kk[slot++] = k[i];
            out.add(kk, p);
        }
        return out;
    }

    MajorantSeries swap_vars() const {
        if (arity_ != 2) throw std::invalid_argument("swap_vars needs arity 2");
        MajorantSeries out(2, trunc_);
        for (const auto& [k, v] : coeff_) out.add(Key{k[1], k[0], 0}, v);
        return out;
    }

    Real evaluate(const Real& x, const Real& y = Real(0), const Real& z = Real(0)) const {
        Real total(0);
        for (const auto& [k, v] : coeff_) {
            Real t = v;
            for (int i = 0; i < k[0]; ++i) t *= x;
            for (int i = 0; i < k[1]; ++i) t *= y;
            for (int i = 0; i < k[2]; ++i) t *= z;
            total += t;
        }
        return total;
    }

private:
    static int combine_trunc(int a, int b) {
        if (a < 0) return b;
        if (b < 0) return a;
        return std::min(a, b);
    }

    int arity_ = 1;
    int trunc_ = -1;
    std::map<Key, Real> coeff_;
};

/// phi <= psi coefficient-wise, compared up to the common truncation degree.
template <class Real>
bool majorant_dominates(const MajorantSeries<Real>& phi, const MajorantSeries<Real>& psi) {
    if (phi.arity() != psi.arity()) throw std::invalid_argument("majorant arity mismatch");
    int limit = std::numeric_limits<int>::max();
    if (phi.truncation_degree() >= 0) limit = phi.truncation_degree();
    if (psi.truncation_degree() >= 0) limit = std::min(limit, psi.truncation_degree());
    for (const auto& [k, v] : phi.terms()) {
        if (MajorantSeries<Real>::key_degree(k) > limit) continue;
        if (v > psi.coefficient(k)) return false;
    }
    return true;
}

/// Maximal coefficient modulus per (multi-)degree: arity 1 for scalar
/// series, arity 2 for 2-tensor series (bidegree of the two legs).
template <class T>
MajorantSeries<typename scalar_traits<T>::real_type> coefficient_majorant(
    const TensorSeries<T, 1>& f) {
    using Real = typename scalar_traits<T>::real_type;
    MajorantSeries<Real> phi(1, f.degree_cap() && f.truncated() ? *f.degree_cap() : -1);
    for (const auto& [k, c] : f.terms())
        phi.take_max({k.legs[0].size(), 0, 0}, scalar_traits<T>::abs_upper(c));
    return phi;
}

template <class T>
MajorantSeries<typename scalar_traits<T>::real_type> coefficient_majorant(
    const TensorSeries<T, 2>& f) {
    using Real = typename scalar_traits<T>::real_type;
    MajorantSeries<Real> phi(2, f.degree_cap() && f.truncated() ? *f.degree_cap() : -1);
    for (const auto& [k, c] : f.terms())
        phi.take_max({k.legs[0].size(), k.legs[1].size(), 0}, scalar_traits<T>::abs_upper(c));
    return phi;
}

template <class T>
MajorantSeries<typename scalar_traits<T>::real_type> coefficient_majorant(
    const TensorSeries<T, 3>& f) {
    using Real = typename scalar_traits<T>::real_type;
    MajorantSeries<Real> phi(3, f.degree_cap() && f.truncated() ? *f.degree_cap() : -1);
    for (const auto& [k, c] : f.terms())
        phi.take_max({k.legs[0].size(), k.legs[1].size(), k.legs[2].size()},
                     scalar_traits<T>::abs_upper(c));
    return phi;
}

/// The weighted coefficient sum sum_n c(n) N^n rho^n for scalar series and
/// its two-variable analogue phi(N rho, N rho) for 2-tensor series. Exact on
/// the stored (finite) terms; callers combine with tail certificates when
/// the series was truncated.
template <class Real>
Real seminorm_rho(const MajorantSeries<Real>& phi, int alphabet, const Real& rho) {
    Real x = rho * Real(alphabet);
    if (phi.arity() == 1) return phi.evaluate(x);
    if (phi.arity() == 2) return phi.evaluate(x, x);
    return phi.evaluate(x, x, x);
}

template <class T, int R>
typename scalar_traits<T>::real_type seminorm_rho(
    const TensorSeries<T, R>& f, const typename scalar_traits<T>::real_type& rho) {
    return seminorm_rho(coefficient_majorant(f), f.alphabet(), rho);
}

/// Geometric tail certificate: bound = head_term * ratio / (1 - ratio) with
/// +infinity flagged when the measured ratio reaches 1.
struct GeometricTail {
    double ratio = 0.0;
    double head_term = 0.0;

    bool diverged() const { return !(ratio < 1.0); }
    double bound() const {
        if (diverged()) return std::numeric_limits<double>::infinity();
        return head_term * ratio / (1.0 - ratio);
    }
};

/// The transform sending phi_f to the two-variable series whose (m, n)
/// coefficient is (n+1) c_f(n+m+2); it dominates the coefficient majorant of
/// every cyclic second quotient of f.
template <class Real>
MajorantSeries<Real> hat_transform(const MajorantSeries<Real>& phi) {
    if (phi.arity() != 1) throw std::invalid_argument("hat_transform needs arity 1");
    int trunc = phi.truncation_degree() < 0 ? -1 : std::max(0, phi.truncation_degree() - 2);
    MajorantSeries<Real> out(2, trunc);
    for (const auto& [k, v] : phi.terms()) {
        int d = k[0];
        if (d < 2) continue;
        for (int n = 0; n + 2 <= d; ++n) {
            int m = d - 2 - n;
            out.take_max({m, n, 0}, Real(n + 1) * v);
        }
    }
    return out;
}

}  // namespace qsde
