#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <mutex>
#include <numeric>
#include <unordered_map>
#include <vector>

#include "qsde/nc_ops.hpp"
#include "qsde/series.hpp"

namespace qsde {

/// Deformation parameter and alphabet size of a q-Gaussian family.
struct QParams {
    double q = 0.0;
    int N = 1;

    QParams() = default;
    QParams(double q_, int n_) : q(q_), N(n_) {
        if (!(std::abs(q) < 1.0)) throw std::invalid_argument("|q| must be < 1");
        if (n_ < 1) throw std::invalid_argument("N must be >= 1");
    }

    /// Default norm bound for the generators: 2 (1-|q|)^{-1}.
    double r0() const { return 2.0 / (1.0 - std::abs(q)); }
};

/// Number of pairs (i, j) with i < j and pi[i] > pi[j].
inline int inversions(const std::vector<int>& pi) {
    int count = 0;
    for (size_t i = 0; i < pi.size(); ++i)
        for (size_t j = i + 1; j < pi.size(); ++j)
            if (pi[i] > pi[j]) ++count;
    return count;
}

/// Brute-force q-inner product of two basis tensors: the sum over all
/// permutations matching the letters, weighted q^inversions. Kept as an
/// independent oracle; factorial cost restricts it to |u| <= 8.
inline double q_inner_brute(const Word& u, const Word& v, const QParams& params) {
    if (u.size() != v.size()) return 0.0;
    int n = u.size();
    if (n > 8) throw std::invalid_argument("q_inner_brute limited to words of length <= 8");
    if (n == 0) return 1.0;
    std::vector<int> perm(static_cast<size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    double total = 0.0;
    do {
        bool match = true;
        for (int i = 0; i < n && match; ++i) match = u[i] == v[perm[static_cast<size_t>(i)]];
        if (match) total += std::pow(params.q, inversions(perm));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return total;
}

/// Truncated Fock-space element: one dense coefficient block per tensor
/// level, the level-k block indexed lexicographically by {1..N}^k.
class FockVector {
public:
    FockVector() = default;
    explicit FockVector(int alphabet) : alphabet_(alphabet) {}

    static FockVector vacuum(int alphabet) {
        FockVector v(alphabet);
        v.level_mut(0)[0] = 1.0;
        return v;
    }

    static FockVector basis(int alphabet, const Word& w) {
        FockVector v(alphabet);
        v.level_mut(w.size())[static_cast<size_t>(word_index(w, alphabet))] = 1.0;
        return v;
    }

    int alphabet() const { return alphabet_; }
    int depth() const { return static_cast<int>(levels_.size()) - 1; }
    bool truncated() const { return truncated_; }
    void mark_truncated() { truncated_ = true; }

    long level_size(int k) const {
        long s = 1;
        for (int i = 0; i < k; ++i) s *= alphabet_;
        return s;
    }

    const std::vector<double>& level(int k) const {
        static const std::vector<double> empty;
        if (k < 0 || k > depth()) return empty;
        return levels_[static_cast<size_t>(k)];
    }

    std::vector<double>& level_mut(int k) {
        if (k > depth()) {
            size_t old = levels_.size();
            levels_.resize(static_cast<size_t>(k) + 1);
            for (size_t i = old; i < levels_.size(); ++i)
                levels_[i].assign(static_cast<size_t>(level_size(static_cast<int>(i))), 0.0);
        }
        return levels_[static_cast<size_t>(k)];
    }

    FockVector& operator+=(const FockVector& o) {
        truncated_ = truncated_ || o.truncated_;
        for (int k = 0; k <= o.depth(); ++k) {
            if (o.level(k).empty()) continue;
            auto& dst = level_mut(k);
            const auto& src = o.level(k);
            for (size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
        }
        return *this;
    }
    FockVector& operator*=(double s) {
        for (auto& lv : levels_)
            for (double& x : lv) x *= s;
        return *this;
    }
    friend FockVector operator+(FockVector a, const FockVector& b) { return a += b; }
    friend FockVector operator*(double s, FockVector a) { return a *= s; }

    double norm_sup() const {
        double m = 0;
        for (const auto& lv : levels_)
            for (double x : lv) m = std::max(m, std::abs(x));
        return m;
    }

    /// Drops all levels above `cap`.
    void truncate_levels(int cap) {
        if (depth() <= cap) return;
        for (int k = cap + 1; k <= depth(); ++k)
            for (double x : level(k))
                if (x != 0.0) {
                    truncated_ = true;
                    break;
                }
        levels_.resize(static_cast<size_t>(std::max(cap, -1)) + 1);
    }

private:
    int alphabet_ = 1;
    bool truncated_ = false;
    std::vector<std::vector<double>> levels_;
};

/// Creation operator for generator j. A `depth_cap >= 0` drops the
/// component that would exceed the cap and records the truncation.
inline FockVector create(const QParams& params, int j, const FockVector& v, int depth_cap = -1) {
    if (j < 1 || j > params.N) throw std::invalid_argument("create: index out of range");
    FockVector out(v.alphabet());
    if (v.truncated()) out.mark_truncated();
    for (int k = 0; k <= v.depth(); ++k) {
        const auto& src = v.level(k);
        if (src.empty()) continue;
        bool any = false;
        for (double x : src)
            if (x != 0.0) {
                any = true;
                break;
            }
        if (!any) continue;
        if (depth_cap >= 0 && k + 1 > depth_cap) {
            out.mark_truncated();
            continue;
        }
        auto& dst = out.level_mut(k + 1);
        long block = v.level_size(k);
        long offset = static_cast<long>(j - 1) * block;
        for (long i = 0; i < block; ++i) dst[static_cast<size_t>(offset + i)] += src[static_cast<size_t>(i)];
    }
    return out;
}

/// Annihilation operator for generator j: removes the p-th tensor factor
/// with weight q^p when its letter equals j (p counted from 0). This is the
/// adjoint of `create` for the q-inner product, which the tests verify.
inline FockVector annihilate(const QParams& params, int j, const FockVector& v) {
    if (j < 1 || j > params.N) throw std::invalid_argument("annihilate: index out of range");
    FockVector out(v.alphabet());
    if (v.truncated()) out.mark_truncated();
    int N = params.N;
    for (int k = 1; k <= v.depth(); ++k) {
        const auto& src = v.level(k);
        if (src.empty()) continue;
        auto& dst = out.level_mut(k - 1);
        // stride[p] = N^{k-1-p}: weight of the digit at position p.
        std::vector<long> stride(static_cast<size_t>(k));
        stride[static_cast<size_t>(k - 1)] = 1;
        for (int p = k - 2; p >= 0; --p)
            stride[static_cast<size_t>(p)] = stride[static_cast<size_t>(p + 1)] * N;
        double qenpow = 1.0;
        for (int p = 0; p < k; ++p) {
            long st = stride[static_cast<size_t>(p)];
            for (long idx = 0; idx < static_cast<long>(src.size()); ++idx) {
                double x = src[static_cast<size_t>(idx)];
                if (x == 0.0) continue;
                int letter = static_cast<int>((idx / st) % N) + 1;
                if (letter != j) continue;
                long high = idx / (st * N);
                long low = idx % st;
                dst[static_cast<size_t>(high * st + low)] += qenpow * x;
            }
            qenpow *= params.q;
        }
    }
    return out;
}

/// The generator X_j = creation + annihilation.
inline FockVector apply_generator(const QParams& params, int j, const FockVector& v,
                                  int depth_cap = -1) {
    FockVector out = create(params, j, v, depth_cap);
    out += annihilate(params, j, v);
    return out;
}

/// Applies the word X_{w_1} ... X_{w_n} (rightmost letter first).
inline FockVector apply_word(const QParams& params, const Word& w, const FockVector& v,
                             int depth_cap = -1) {
    FockVector out = v;
    for (int i = w.size() - 1; i >= 0; --i) out = apply_generator(params, w[i], out, depth_cap);
    return out;
}

/// Applies a polynomial with real coefficients.
inline FockVector apply_poly(const QParams& params, const RealPolynomial& f, const FockVector& v,
                             int depth_cap = -1) {
    FockVector out(v.alphabet());
    for (const auto& [k, c] : f.terms()) {
        FockVector t = apply_word(params, k.legs[0], v, depth_cap);
        t *= c;
        out += t;
    }
    return out;
}

/// Independent moment oracle: sum over pair partitions whose blocks carry
/// equal letters, weighted q^{number of crossings}; zero in odd degree.
inline double moment_oracle(const Word& w, const QParams& params) {
    int n = w.size();
    if (n % 2 == 1) return 0.0;
    if (n > 16) throw std::invalid_argument("moment_oracle limited to words of length <= 16");
    if (n == 0) return 1.0;

    std::vector<std::pair<int, int>> pairs;
    std::vector<bool> used(static_cast<size_t>(n), false);
    double total = 0.0;
    double q = params.q;

    auto crossings = [&]() {
        int c = 0;
        for (size_t a = 0; a < pairs.size(); ++a)
            for (size_t b = a + 1; b < pairs.size(); ++b) {
                auto [i, j] = pairs[a];
                auto [k, l] = pairs[b];
                if (k < i) std::swap(i, k), std::swap(j, l);
                if (k < j && j < l) ++c;
            }
        return c;
    };

    auto rec = [&](auto&& self, int remaining) -> void {
        if (remaining == 0) {
            total += std::pow(q, crossings());
            return;
        }
        int first = 0;
        while (used[static_cast<size_t>(first)]) ++first;
        used[static_cast<size_t>(first)] = true;
        for (int second = first + 1; second < n; ++second) {
            if (used[static_cast<size_t>(second)] || w[second] != w[first]) continue;
            used[static_cast<size_t>(second)] = true;
            pairs.emplace_back(first, second);
            self(self, remaining - 2);
            pairs.pop_back();
            used[static_cast<size_t>(second)] = false;
        }
        used[static_cast<size_t>(first)] = false;
    };
    rec(rec, n);
    return total;
}

/// Shared evaluation context for one (q, N): Gram matrices per level and a
/// word-trace cache, both filled on demand. Reads are cheap; inserts are
/// serialized behind a mutex so concurrent evaluation stays safe.
class QContext {
public:
    explicit QContext(QParams params) : params_(params) {}

    const QParams& params() const { return params_; }
    double q() const { return params_.q; }
    int alphabet() const { return params_.N; }
    double r0() const { return params_.r0(); }

    /// Gram matrix of the level-n basis tensors, words ordered
    /// lexicographically. Built by deleting the leading factor of the left
    /// word against every matching factor of the right word.
    const Eigen::MatrixXd& gram(int n) const {
        std::lock_guard<std::mutex> lock(mutex_);
        return gram_unlocked(n);
    }

    /// q-inner product of two truncated Fock vectors.
    double q_inner(const FockVector& a, const FockVector& b) const {
        double total = 0.0;
        int d = std::min(a.depth(), b.depth());
        for (int k = 0; k <= d; ++k) {
            const auto& la = a.level(k);
            const auto& lb = b.level(k);
            if (la.empty() || lb.empty()) continue;
            Eigen::Map<const Eigen::VectorXd> va(la.data(), static_cast<long>(la.size()));
            Eigen::Map<const Eigen::VectorXd> vb(lb.data(), static_cast<long>(lb.size()));
            total += va.dot(gram(k) * vb);
        }
        return total;
    }

    double norm_l2(const FockVector& a) const { return std::sqrt(std::max(0.0, q_inner(a, a))); }

    /// Exact vacuum expectation of a word: repeated generator application
    /// with the level cap that components unable to return to the vacuum
    /// impose. Memoized.
    double trace_word(const Word& w) const {
        if (w.empty()) return 1.0;
        if (w.size() % 2 == 1) return 0.0;
        {
            std::lock_guard<std::mutex> lock(mutex_);
            auto it = trace_cache_.find(w);
            if (it != trace_cache_.end()) return it->second;
        }
        FockVector v = FockVector::vacuum(params_.N);
        int n = w.size();
        for (int i = n - 1; i >= 0; --i) {
            // After this application, i letters remain to bring us back to
            // the vacuum, so levels above i cannot contribute.
            v = apply_generator(params_, w[i], v, i);
        }
        double t = v.level(0).empty() ? 0.0 : v.level(0)[0];
        std::lock_guard<std::mutex> lock(mutex_);
        trace_cache_.emplace(w, t);
        return t;
    }

    template <class T> T trace_poly(const TensorSeries<T, 1>& f) const {
        T total{};
        for (const auto& [k, c] : f.terms()) total += c * T(trace_word(k.legs[0]));
        return total;
    }

    /// L2(tau) norm of a polynomial, computed from exact word traces.
    template <class T> double l2_norm(const TensorSeries<T, 1>& f) const {
        using Traits = scalar_traits<T>;
        T total{};
        for (const auto& [ku, cu] : f.terms())
            for (const auto& [kv, cv] : f.terms())
                total +=
                    Traits::conj(cv) * cu * T(trace_word(kv.legs[0].reversed() + ku.legs[0]));
        double re = std::abs(total);
        return std::sqrt(std::max(0.0, re));
    }

    TraceFn<Complex> trace_fn() const {
        return [this](const Word& w) { return Complex(trace_word(w)); };
    }
    TraceFn<double> trace_fn_real() const {
        return [this](const Word& w) { return trace_word(w); };
    }

private:
    const Eigen::MatrixXd& gram_unlocked(int n) const {
        auto it = gram_.find(n);
        if (it != gram_.end()) return it->second;
        long dim = 1;
        for (int i = 0; i < n; ++i) dim *= params_.N;
        Eigen::MatrixXd g(dim, dim);
        if (n == 0) {
            g(0, 0) = 1.0;
        } else {
            const Eigen::MatrixXd& prev = gram_unlocked(n - 1);
            int N = params_.N;
            long tail_dim = dim / N;
            std::vector<long> stride(static_cast<size_t>(n));
            stride[static_cast<size_t>(n - 1)] = 1;
            for (int p = n - 2; p >= 0; --p)
                stride[static_cast<size_t>(p)] = stride[static_cast<size_t>(p + 1)] * N;
            for (long u = 0; u < dim; ++u) {
                int u0 = static_cast<int>(u / tail_dim);  // leading letter - 1
                long utail = u % tail_dim;
                for (long v = 0; v < dim; ++v) {
                    double sum = 0.0;
                    double qp = 1.0;
                    for (int p = 0; p < n; ++p) {
                        long st = stride[static_cast<size_t>(p)];
                        int letter = static_cast<int>((v / st) % N);
                        if (letter == u0) {
                            long high = v / (st * N);
                            long low = v % st;
                            sum += qp * prev(utail, high * st + low);
                        }
                        qp *= params_.q;
                    }
                    g(u, v) = sum;
                }
            }
        }
        auto [ins, ok] = gram_.emplace(n, std::move(g));
        return ins->second;
    }

    QParams params_;
    mutable std::mutex mutex_;
    mutable std::map<int, Eigen::MatrixXd> gram_;
    mutable std::unordered_map<Word, double, WordHash> trace_cache_;
};

}  // namespace qsde
