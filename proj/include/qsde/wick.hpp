#pragma once

#include <Eigen/Dense>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "qsde/qfock.hpp"

namespace qsde {

/// Largest |q| for which the analytic expansion of the level-weighted
/// kernel is certified: 1 / (4 N^3 + 2).
inline double q_threshold(int n_alphabet) {
    if (n_alphabet < 1) throw std::invalid_argument("N must be >= 1");
    return 1.0 / (4.0 * n_alphabet * n_alphabet * n_alphabet + 2.0);
}

/// Wick polynomials W_w, the unique polynomials with W_w(X) applied to the
/// vacuum giving the basis tensor e_w. Built from the deletion recursion
///   W_w = X_{w_0} W_{w_1..} - sum_{k>=1} q^{k-1} [w_0 = w_k] W_{w_1.. minus w_k}
/// and memoized per word.
class WickTable {
public:
    explicit WickTable(QParams params, int max_len = 10)
        : params_(params), max_len_(max_len) {}

    const QParams& params() const { return params_; }

    RealPolynomial poly(const Word& w) const {
        if (w.size() > max_len_)
            throw std::invalid_argument("wick polynomial length guard exceeded");
        std::lock_guard<std::mutex> lock(mutex_);
        return poly_unlocked(w);
    }

private:
    const RealPolynomial& poly_unlocked(const Word& w) const {
        auto it = cache_.find(w);
        if (it != cache_.end()) return it->second;
        RealPolynomial result(params_.N);
        if (w.empty()) {
            result.add_term({Word{}}, 1.0);
        } else {
            Word tail = w.sub(1, w.size());
            result = monomial(params_.N, Word{w[0]}, 1.0) * poly_unlocked(tail);
            double qp = 1.0;
            for (int k = 1; k < w.size(); ++k) {
                if (w[k] == w[0]) {
                    Word omitted = tail.sub(0, k - 1) + tail.sub(k, tail.size());
                    result -= qp * poly_unlocked(omitted);
                }
                qp *= params_.q;
            }
        }
        auto [ins, ok] = cache_.emplace(w, std::move(result));
        return ins->second;
    }

    QParams params_;
    int max_len_;
    mutable std::mutex mutex_;
    mutable std::unordered_map<Word, RealPolynomial, WordHash> cache_;
};

inline RealPolynomial wick_poly(const Word& w, const QParams& params) {
    return WickTable(params, std::max(10, w.size())).poly(w);
}

enum class GramMethod { brute, recursive };

/// Gram matrix of the length-n Wick basis, words in lexicographic order.
struct GramMatrix {
    int n = 0;
    int N = 1;
    Eigen::MatrixXd entries;
};

namespace detail {
/// Index image of the cycle that moves the j-th letter to the front
/// (1-based j), acting on the lexicographic word index.
inline long move_to_front(long idx, int j, int n, int N) {
    std::vector<int> digits(static_cast<size_t>(n));
    for (int p = n - 1; p >= 0; --p) {
        digits[static_cast<size_t>(p)] = static_cast<int>(idx % N);
        idx /= N;
    }
    std::vector<int> moved(static_cast<size_t>(n));
    moved[0] = digits[static_cast<size_t>(j - 1)];
    for (int p = 1; p < j; ++p) moved[static_cast<size_t>(p)] = digits[static_cast<size_t>(p - 1)];
    for (int p = j; p < n; ++p) moved[static_cast<size_t>(p)] = digits[static_cast<size_t>(p)];
    long out = 0;
    for (int p = 0; p < n; ++p) out = out * N + moved[static_cast<size_t>(p)];
    return out;
}
}  // namespace detail

inline GramMatrix gram(int n, const QParams& params, GramMethod method) {
    int N = params.N;
    long dim = 1;
    for (int i = 0; i < n; ++i) dim *= N;

    GramMatrix out{n, N, Eigen::MatrixXd(dim, dim)};
    if (method == GramMethod::brute) {
        if (n > 5) throw std::invalid_argument("brute gram limited to n <= 5");
        auto words = enumerate_words(N, n, n);
        for (long i = 0; i < dim; ++i)
            for (long j = 0; j < dim; ++j)
                out.entries(i, j) =
                    q_inner_brute(words[static_cast<size_t>(i)], words[static_cast<size_t>(j)],
                                  params);
        return out;
    }

    if (dim > 8192) throw std::invalid_argument("recursive gram size guard exceeded");
    if (n == 0) {
        out.entries(0, 0) = 1.0;
        return out;
    }
    // Gamma_1 = I; Gamma_n = (1 (x) Gamma_{n-1}) M_n with
    // M_n = sum_j q^{j-1} (1 -> j) acting on word indices.
    Eigen::MatrixXd prev = gram(n - 1, params, GramMethod::recursive).entries;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
    for (long v = 0; v < dim; ++v) {
        double qp = 1.0;
        for (int j = 1; j <= n; ++j) {
            m(detail::move_to_front(v, j, n, N), v) += qp;
            qp *= params.q;
        }
    }
    Eigen::MatrixXd lifted = Eigen::MatrixXd::Zero(dim, dim);
    long block = dim / N;
    for (int b = 0; b < N; ++b)
        lifted.block(b * block, b * block, block, block) = prev;
    out.entries = lifted * m;
    return out;
}

enum class EigBoundForm { theta, simplified };

/// Lower bound for the smallest Gram eigenvalue at level n. The theta form
/// is the product (1-|q|)^{-1} prod_k (1-|q|^k)/(1+|q|^k), raised to the
/// n-th power; the simplified closed form ((1-2|q|)/(1-|q|)^2)^n is kept for
/// reporting only, since it can exceed the true smallest eigenvalue (see
/// the tests for a witness at q = 0.02, N = 2).
inline double min_eig_bound(int n, const QParams& params, EigBoundForm form) {
    double aq = std::abs(params.q);
    if (form == EigBoundForm::simplified) {
        if (aq >= 0.5) throw std::invalid_argument("simplified bound needs |q| < 1/2");
        return std::pow((1.0 - 2.0 * aq) / ((1.0 - aq) * (1.0 - aq)), n);
    }
    double prod = 1.0;
    double qk = aq;
    while (qk > 0.0) {
        double factor = (1.0 - qk) / (1.0 + qk);
        prod *= factor;
        if (1.0 - factor < 1e-16) break;
        qk *= aq;
    }
    return std::pow(prod / (1.0 - aq), n);
}

/// Inverse square root of the level-n Gram matrix. Eigenvalues are clamped
/// at 1e-12; anything below 1e-10 counts as numerically singular.
inline Eigen::MatrixXd gram_inverse_sqrt(const Eigen::MatrixXd& g) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    if (es.info() != Eigen::Success) throw NumericalGuard("gram eigendecomposition failed");
    double min_eig = es.eigenvalues().minCoeff();
    if (min_eig < 1e-10)
        throw NumericalGuard("gram matrix numerically singular: min eigenvalue " +
                             std::to_string(min_eig));
    Eigen::VectorXd inv_sqrt = es.eigenvalues().cwiseMax(1e-12).cwiseSqrt().cwiseInverse();
    return es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose();
}

/// Orthonormal basis of degree-n polynomials spanning the Wick level:
/// p_i = sum_j B_{j,i} W_j with B the inverse square root of the Gram.
inline std::vector<RealPolynomial> onb_polys(int n, const QParams& params,
                                             const WickTable& wick) {
    Eigen::MatrixXd b = gram_inverse_sqrt(gram(n, params, GramMethod::recursive).entries);
    auto words = enumerate_words(params.N, n, n);
    std::vector<RealPolynomial> out;
    out.reserve(words.size());
    for (size_t i = 0; i < words.size(); ++i) {
        RealPolynomial p(params.N);
        for (size_t j = 0; j < words.size(); ++j) {
            double c = b(static_cast<long>(j), static_cast<long>(i));
            if (c != 0.0) p += c * wick.poly(words[j]);
        }
        out.push_back(std::move(p));
    }
    return out;
}

inline std::vector<RealPolynomial> onb_polys(int n, const QParams& params) {
    WickTable wick(params, std::max(10, n));
    return onb_polys(n, params, wick);
}

/// Level-weighted kernel sum_{n <= D} q^n sum_i p_i (x) p_i, kept in
/// factored form: per level the orthonormalizing matrix B_n and the ONB
/// polynomials. Acting on a level-n vector it multiplies by q^n; the
/// explicit 2-tensor expansion is only materialized on request.
struct XiExpansion {
    QParams params;
    int cutoff = 0;  // highest retained tensor level
    std::vector<Eigen::MatrixXd> onb;                  // onb[n] = B_n
    std::vector<std::vector<RealPolynomial>> polys;    // polys[n][i]

    double tail_bound = 0.0;      // L2 (Hilbert-Schmidt) tail of dropped levels
    double hs_ratio = 0.0;        // measured geometric ratio of the L2 level norms
    double majorant_ratio = 0.0;  // measured ratio of the rho-seminorm level bounds
    double majorant_tail = 0.0;   // geometric rho-seminorm tail (inf when diverged)
    double rho = 0.0;             // evaluation point of the majorant certificate
    bool diverged = false;        // majorant ratio reached 1

    /// Applies the kernel: the level-n component is scaled by q^n, routed
    /// through B_n so the orthonormalization is exercised, levels beyond the
    /// cutoff are annihilated up to tail_bound.
    FockVector apply(const QContext& ctx, const FockVector& v) const {
        FockVector out(v.alphabet());
        double qn = 1.0;
        for (int n = 0; n <= std::min(cutoff, v.depth()); ++n) {
            const auto& lv = v.level(n);
            if (!lv.empty()) {
                Eigen::Map<const Eigen::VectorXd> x(lv.data(), static_cast<long>(lv.size()));
                Eigen::VectorXd weights = onb[static_cast<size_t>(n)].transpose() *
                                          (ctx.gram(n) * x);
                Eigen::VectorXd proj = onb[static_cast<size_t>(n)] * weights;
                auto& dst = out.level_mut(n);
                for (size_t i = 0; i < dst.size(); ++i)
                    dst[i] = qn * proj(static_cast<long>(i));
            }
            qn *= params.q;
        }
        return out;
    }

    /// Explicit 2-tensor form; memory-guarded since the term count grows
    /// quickly with the cutoff.
    RealTensor2 as_tensor2(size_t max_terms = 2'000'000) const {
        RealTensor2 out(params.N);
        double qn = 1.0;
        for (int n = 0; n <= cutoff; ++n) {
            for (const auto& p : polys[static_cast<size_t>(n)]) {
                for (const auto& [ku, cu] : p.terms())
                    for (const auto& [kv, cv] : p.terms()) {
                        out.add_term({ku.legs[0], kv.legs[0]}, qn * cu * cv);
                        if (out.term_count() > max_terms)
                            throw NumericalGuard("xi expansion term budget exceeded");
                    }
            }
            qn *= params.q;
        }
        if (cutoff >= 0) out.mark_truncated();
        return out;
    }

    Tensor2Series as_tensor2_complex(size_t max_terms = 2'000'000) const {
        return to_complex(as_tensor2(max_terms));
    }
};

/// Builds the truncated kernel expansion together with measured tail
/// certificates: an L2 (Hilbert-Schmidt) tail driving the projector
/// tolerance and a rho-seminorm ratio certifying convergence of the series.
inline XiExpansion xi_expansion(const QContext& ctx, int cutoff, const WickTable& wick) {
    if (cutoff < 0) throw std::invalid_argument("cutoff must be >= 0");
    const QParams& params = ctx.params();
    XiExpansion xi;
    xi.params = params;
    xi.cutoff = cutoff;
    xi.rho = params.r0();

    double aq = std::abs(params.q);
    std::vector<double> hs_norm, maj_norm;
    for (int n = 0; n <= cutoff; ++n) {
        xi.onb.push_back(gram_inverse_sqrt(ctx.gram(n)));
        xi.polys.push_back(onb_polys(n, params, wick));

        // L2 norm of sum_i p_i (x) p_i: Frobenius norm of the ONB Gram,
        // computed from the assembled matrices rather than assumed identity.
        const Eigen::MatrixXd& b = xi.onb.back();
        Eigen::MatrixXd overlap = b.transpose() * ctx.gram(n) * b;
        hs_norm.push_back(overlap.norm());

        double m = 0.0;
        for (const auto& p : xi.polys.back()) {
            double s = seminorm_rho(p, xi.rho);
            m += s * s;
        }
        maj_norm.push_back(m);
    }

    auto measured_ratio = [&](const std::vector<double>& a) {
        double r = 0.0;
        for (size_t n = 1; n < a.size(); ++n)
            if (a[n - 1] > 0.0) r = std::max(r, aq * a[n] / a[n - 1]);
        return r;
    };
    xi.hs_ratio = measured_ratio(hs_norm);
    xi.majorant_ratio = measured_ratio(maj_norm);
    xi.diverged = cutoff > 0 && xi.majorant_ratio >= 1.0;

    double head_hs = std::pow(aq, cutoff) * hs_norm.back();
    xi.tail_bound = GeometricTail{xi.hs_ratio, head_hs}.bound();
    double head_maj = std::pow(aq, cutoff) * maj_norm.back();
    xi.majorant_tail = GeometricTail{xi.majorant_ratio, head_maj}.bound();
    if (aq == 0.0) {
        xi.tail_bound = 0.0;
        xi.majorant_tail = 0.0;
        xi.diverged = false;
    }
    return xi;
}

inline XiExpansion xi_expansion(const QContext& ctx, int cutoff) {
    WickTable wick(ctx.params(), std::max(10, cutoff));
    return xi_expansion(ctx, cutoff, wick);
}

}  // namespace qsde
