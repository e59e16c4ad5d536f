#pragma once

#include <map>
#include <tuple>

#include "qsde/wick.hpp"

namespace qsde {

/// Matrix pack of Fock vectors sharing the level structure: level k holds an
/// N^k x cols block whose columns are the level-k components of the pack.
struct LevelPack {
    int alphabet = 1;
    long cols = 0;
    std::vector<Eigen::MatrixXd> levels;

    long level_dim(int k) const {
        long d = 1;
        for (int i = 0; i < k; ++i) d *= alphabet;
        return d;
    }

    Eigen::MatrixXd& level_mut(int k) {
        if (k >= static_cast<int>(levels.size())) {
            size_t old = levels.size();
            levels.resize(static_cast<size_t>(k) + 1);
            for (size_t i = old; i < levels.size(); ++i)
                levels[i] = Eigen::MatrixXd::Zero(level_dim(static_cast<int>(i)), cols);
        }
        return levels[static_cast<size_t>(k)];
    }

    bool has_level(int k) const {
        return k >= 0 && k < static_cast<int>(levels.size()) &&
               levels[static_cast<size_t>(k)].size() > 0;
    }
};

namespace detail {

inline LevelPack pack_apply_generator(const QParams& params, int j, const LevelPack& src,
                                      int level_cap) {
    LevelPack out;
    out.alphabet = src.alphabet;
    out.cols = src.cols;
    int N = params.N;
    for (int k = 0; k < static_cast<int>(src.levels.size()); ++k) {
        if (!src.has_level(k)) continue;
        const Eigen::MatrixXd& block = src.levels[static_cast<size_t>(k)];
        long dim = block.rows();
        if (k + 1 <= level_cap) {
            auto& up = out.level_mut(k + 1);
            up.middleRows(static_cast<long>(j - 1) * dim, dim) += block;
        }
        if (k >= 1) {
            auto& down = out.level_mut(k - 1);
            long stride = dim / N;  // weight of the leading digit
            double qp = 1.0;
            long st = stride;
            for (int p = 0; p < k; ++p) {
                for (long idx = 0; idx < dim; ++idx) {
                    int letter = static_cast<int>((idx / st) % N) + 1;
                    if (letter == j) {
                        long high = idx / (st * N);
                        long low = idx % st;
                        down.row(high * st + low) += qp * block.row(idx);
                    }
                }
                qp *= params.q;
                st /= N;
            }
        }
    }
    return out;
}

inline LevelPack pack_apply_word(const QParams& params, const Word& w, LevelPack pack,
                                 int max_final_level) {
    for (int i = w.size() - 1; i >= 0; --i) {
        int remaining = i;  // letters still to apply after this one
        pack = pack_apply_generator(params, w[i], pack, max_final_level + remaining);
    }
    return pack;
}

}  // namespace detail

/// Per-monomial stationarity defects of the trace-level generator.
struct StationarityResult {
    std::map<Word, double> residuals;
    double max_residual = 0.0;
    double tail_budget = 0.0;  // certified error of the internal level-pair cutoff
};

enum class DriftVariant { literal, ito };

/// Evaluation engine for the diagonal derivation whose value is the
/// level-weighted kernel truncated at `cutoff`. Everything is contracted
/// through the per-level orthonormal bases, so no explicit 2-tensor
/// expansion of the kernel is ever materialized: traces of the form
/// tau(p_a w p_b) become Gram-weighted matrix elements between packed
/// basis vectors, and conjugate variables are assembled from their
/// components against the orthonormal polynomials.
///
/// Sums over level pairs carry the weight q^{n_a + n_b}; pairs beyond an
/// internal cap are dropped with a certified geometric bound that the
/// result structs report as `tail_budget`.
class QModel {
public:
    QModel(const QContext& ctx, int cutoff, int poly_level_cap = 6, double pair_eps = 1e-10,
           int max_word_degree = 6)
        : ctx_(ctx),
          params_(ctx.params()),
          cutoff_(cutoff),
          wick_(params_, std::max(10, std::max(cutoff, poly_level_cap))) {
        if (cutoff < 0) throw std::invalid_argument("cutoff must be >= 0");
        for (int n = 0; n <= cutoff_; ++n) {
            onb_.push_back(gram_inverse_sqrt(ctx_.gram(n)));
            rev_perm_.push_back(reversal_permutation(n));
        }
        poly_cap_ = poly_level_cap;
        for (int n = 0; n <= poly_cap_; ++n) onb_polys_.push_back(onb_polys(n, params_, wick_));
        choose_pair_cap(pair_eps, max_word_degree);
    }

    const QContext& context() const { return ctx_; }
    const QParams& params() const { return params_; }
    int cutoff() const { return cutoff_; }
    int pair_cap() const { return pair_cap_; }

    /// Certified bound for one dropped-pair contraction whose word degrees
    /// sum to deg_sum.
    double cut_budget(int deg_sum) const { return cut_geo_ * std::pow(params_.r0(), deg_sum); }

    const Eigen::MatrixXd& onb_matrix(int level) const {
        return onb_[static_cast<size_t>(level)];
    }
    const std::vector<RealPolynomial>& onb_level_polys(int level) const {
        return onb_polys_[static_cast<size_t>(level)];
    }

    /// Reversed-word basis combination: the vacuum image of the adjoint of
    /// the level ONB polynomials (adjoint reverses every word).
    Eigen::MatrixXd onb_rev_matrix(int level) const {
        const auto& perm = rev_perm_[static_cast<size_t>(level)];
        const auto& b = onb_[static_cast<size_t>(level)];
        Eigen::MatrixXd out(b.rows(), b.cols());
        for (long r = 0; r < b.rows(); ++r) out.row(perm[static_cast<size_t>(r)]) = b.row(r);
        return out;
    }

    const FockVector& word_vector(const Word& w) {
        auto it = word_vec_.find(w);
        if (it != word_vec_.end()) return it->second;
        FockVector v = apply_word(params_, w, FockVector::vacuum(params_.N));
        return word_vec_.emplace(w, std::move(v)).first->second;
    }

    /// Overlaps of X_w applied to the vacuum with the level ONB vectors.
    Eigen::VectorXd onb_overlaps(int level, const Word& w) {
        const FockVector& v = word_vector(w);
        const auto& lv = v.level(level);
        long dim = onb_[static_cast<size_t>(level)].rows();
        if (lv.empty()) return Eigen::VectorXd::Zero(dim);
        Eigen::Map<const Eigen::VectorXd> x(lv.data(), dim);
        return onb_[static_cast<size_t>(level)].transpose() * (ctx_.gram(level) * x);
    }

    /// <Z_j, del_j p> for Z_j the vacuum-projection unit in slot j: the
    /// pairing of the derivation of p against the rank-one vacuum kernel.
    double vacuum_kernel_pairing(int j, const RealPolynomial& p) {
        double total = 0.0;
        for (const auto& [key, c] : p.terms()) {
            const Word& w = key.legs[0];
            for (int pos = 0; pos < w.size(); ++pos) {
                if (w[pos] != j) continue;
                Word l = w.sub(0, pos), r = w.sub(pos + 1, w.size());
                double qn = 1.0;
                for (int n = 0; n <= std::min({cutoff_, l.size(), r.size()}); ++n) {
                    Eigen::VectorXd sl = onb_overlaps(n, l.reversed());
                    Eigen::VectorXd sr = onb_overlaps(n, r.reversed());
                    total += c * qn * sl.dot(sr);
                    qn *= params_.q;
                }
            }
        }
        return total;
    }

    /// Component of the conjugate variable xi_j against an ONB polynomial:
    /// <xi_j, p> = <Xi, del_j p>, evaluated by pairing the kernel against
    /// the Leibniz expansion of p.
    double conjugate_component(int j, const RealPolynomial& p) {
        double total = 0.0;
        for (const auto& [key, c] : p.terms()) {
            const Word& w = key.legs[0];
            for (int pos = 0; pos < w.size(); ++pos) {
                if (w[pos] != j) continue;
                total += c * kernel_pairing(w.sub(0, pos), w.sub(pos + 1, w.size()));
            }
        }
        return total;
    }

    /// The conjugate variable xi_j = del_j^*(Xi) as a Fock vector, exact on
    /// levels <= level_cap (components beyond the cap are not assembled).
    FockVector conjugate_vector(int j, int level_cap, double* budget = nullptr) {
        if (level_cap > poly_cap_)
            throw std::invalid_argument("conjugate level cap above the ONB polynomial cap");
        FockVector out(params_.N);
        for (int level = 1; level <= level_cap; ++level) {
            const auto& polys = onb_polys_[static_cast<size_t>(level)];
            Eigen::VectorXd comps(static_cast<long>(polys.size()));
            for (size_t c = 0; c < polys.size(); ++c) {
                comps(static_cast<long>(c)) = conjugate_component(j, polys[c]);
                if (budget != nullptr)
                    for (const auto& [key, coeff] : polys[c].terms())
                        *budget += std::abs(coeff) * key.legs[0].size() *
                                   cut_budget(key.legs[0].size() - 1);
            }
            Eigen::VectorXd dense = onb_[static_cast<size_t>(level)] * comps;
            auto& lv = out.level_mut(level);
            for (size_t i = 0; i < lv.size(); ++i) lv[i] = dense(static_cast<long>(i));
        }
        return out;
    }

    /// Free Fisher information sum_j |xi_j|_2^2 with the component mass
    /// accumulated level by level; *ratio reports the measured decay of the
    /// per-level mass, from which callers can form a tail estimate.
    double phi_star(int level_cap, double* ratio = nullptr, double* tail = nullptr) {
        std::vector<double> level_mass(static_cast<size_t>(level_cap) + 1, 0.0);
        for (int j = 1; j <= params_.N; ++j) {
            FockVector xi = conjugate_vector(j, level_cap);
            for (int level = 1; level <= level_cap; ++level) {
                const auto& lv = xi.level(level);
                if (lv.empty()) continue;
                Eigen::Map<const Eigen::VectorXd> x(lv.data(), static_cast<long>(lv.size()));
                level_mass[static_cast<size_t>(level)] += x.dot(ctx_.gram(level) * x);
            }
        }
        double total = 0.0;
        for (double m : level_mass) total += m;
        double r = 0.0;
        for (size_t l = 2; l < level_mass.size(); ++l)
            if (level_mass[l - 1] > 1e-30) r = std::max(r, level_mass[l] / level_mass[l - 1]);
        if (ratio != nullptr) *ratio = r;
        if (tail != nullptr) *tail = GeometricTail{r, level_mass.back()}.bound();
        return total;
    }

    /// Trace-level stationarity defect max_f |tau(L f)| over monomials of
    /// degree <= degree, for the diagonal kernel derivation with honest
    /// conjugate drift.
    StationarityResult stationarity(int degree, DriftVariant variant) {
        StationarityResult res;
        int xi_cap = std::min(poly_cap_, degree);
        std::vector<FockVector> xi;
        double budget = 0.0;
        for (int j = 1; j <= params_.N; ++j)
            xi.push_back(conjugate_vector(j, xi_cap, &budget));

        for (const Word& f : enumerate_words(params_.N, degree, 1)) {
            double second = 0.0;
            for (int i = 1; i <= params_.N; ++i) {
                for (int k = 0; k < f.size(); ++k) {
                    if (f[k] != i) continue;
                    for (int l = k + 1; l < f.size(); ++l) {
                        if (f[l] != i) continue;
                        Word a = f.sub(k + 1, l);
                        Word b = f.sub(l + 1, f.size()) + f.sub(0, k);
                        second += sandwich_pair(a, b);
                        budget += cut_budget(a.size() + b.size());
                    }
                }
            }
            double drift = 0.0;
            if (variant == DriftVariant::ito) {
                for (int j = 1; j <= params_.N; ++j)
                    for (int pos = 0; pos < f.size(); ++pos) {
                        if (f[pos] != j) continue;
                        Word rl = f.sub(pos + 1, f.size()) + f.sub(0, pos);
                        drift += ctx_.q_inner(xi[static_cast<size_t>(j - 1)],
                                              word_vector(rl.reversed()));
                    }
            } else {
                for (int j = 1; j <= params_.N; ++j)
                    drift += ctx_.q_inner(xi[static_cast<size_t>(j - 1)],
                                          word_vector(f.reversed()));
            }
            double r = std::abs(second - 0.5 * drift);
            res.residuals.emplace(f, r);
            res.max_residual = std::max(res.max_residual, r);
        }
        res.tail_budget = budget;
        return res;
    }

    /// sum_{a,b} q^{n_a+n_b} tau(p_a A p_b) tau(p_b B p_a): the trace-level
    /// second-order contraction for the cyclic quotient pair (A, B).
    double sandwich_pair(const Word& a, const Word& b) {
        auto key = std::pair<Word, Word>(a, b);
        auto it = sandwich_cache_.find(key);
        if (it != sandwich_cache_.end()) return it->second;
        const BlockSet& ma = blocks(Fam::u, Fam::zeta, a);
        const BlockSet& mb = blocks(Fam::u, Fam::zeta, b);
        double total = 0.0;
        for (const auto& [lv, blk] : ma.blocks) {
            auto [la, lb] = lv;
            auto jt = mb.blocks.find({lb, la});
            if (jt == mb.blocks.end()) continue;
            double w = std::pow(params_.q, la + lb);
            total += w * (blk.array() * jt->second.transpose().array()).sum();
        }
        sandwich_cache_.emplace(key, total);
        return total;
    }

    /// <Xi, hash_in(Xi, l (x) r)>: the kernel paired against one Leibniz
    /// split, summed over both kernel levels.
    double kernel_pairing(const Word& l, const Word& r) {
        auto key = std::pair<Word, Word>(l, r);
        auto it = pairing_cache_.find(key);
        if (it != pairing_cache_.end()) return it->second;
        const BlockSet& zz = blocks(Fam::zeta, Fam::zeta, l.reversed());
        const BlockSet& uu = blocks(Fam::u, Fam::u, r.reversed());
        // sum_{a,b} q^{n_a+n_b} zz[b,a] uu[a,b]
        double total = 0.0;
        for (const auto& [lv, zblk] : zz.blocks) {
            auto [lb, la] = lv;
            auto jt = uu.blocks.find({la, lb});
            if (jt == uu.blocks.end()) continue;
            double w = std::pow(params_.q, la + lb);
            total += w * (zblk.array() * jt->second.transpose().array()).sum();
        }
        pairing_cache_.emplace(key, total);
        return total;
    }

private:
    enum class Fam { zeta = 0, u = 1 };

    struct BlockSet {
        std::map<std::pair<int, int>, Eigen::MatrixXd> blocks;  // (dst level, src level)
    };

    std::vector<long> reversal_permutation(int n) const {
        long dim = 1;
        for (int i = 0; i < n; ++i) dim *= params_.N;
        std::vector<long> perm(static_cast<size_t>(dim));
        for (long idx = 0; idx < dim; ++idx)
            perm[static_cast<size_t>(idx)] =
                word_index(word_from_index(idx, n, params_.N).reversed(), params_.N);
        return perm;
    }

    void choose_pair_cap(double eps, int max_word_degree) {
        double nq = params_.N * std::abs(params_.q);
        double r0 = params_.r0();
        pair_cap_ = 2 * cutoff_;
        cut_geo_ = 0.0;
        if (nq >= 1.0 || params_.q == 0.0) return;  // no cut (q=0: pairs beyond (0,0) vanish)
        double scale = std::pow(r0, 2 * max_word_degree);
        for (int cap = 0; cap < 2 * cutoff_; ++cap) {
            // sum_{s > cap} (s+1) (N|q|)^s <= (cap+2) (N|q|)^{cap+1} / (1-N|q|)^2
            double geo = (cap + 2) * std::pow(nq, cap + 1) / ((1.0 - nq) * (1.0 - nq));
            if (geo * scale <= eps) {
                pair_cap_ = cap;
                cut_geo_ = geo;
                return;
            }
        }
    }

    Eigen::MatrixXd basis_matrix(Fam fam, int level) const {
        return fam == Fam::zeta ? onb_[static_cast<size_t>(level)] : onb_rev_matrix(level);
    }

    const BlockSet& blocks(Fam dst, Fam src, const Word& w) {
        auto key = std::make_tuple(static_cast<int>(dst), static_cast<int>(src), w);
        auto it = block_cache_.find(key);
        if (it != block_cache_.end()) return it->second;

        BlockSet set;
        for (int m = 0; m <= cutoff_; ++m) {
            int max_dst = -1;
            std::vector<int> dst_levels;
            for (int n = 0; n <= cutoff_; ++n) {
                if (n + m > pair_cap_) continue;
                if (std::abs(n - m) > w.size()) continue;
                if ((n - m + w.size()) % 2 != 0) continue;
                dst_levels.push_back(n);
                max_dst = std::max(max_dst, n);
            }
            if (dst_levels.empty()) continue;

            LevelPack pack;
            pack.alphabet = params_.N;
            long dim = 1;
            for (int i = 0; i < m; ++i) dim *= params_.N;
            pack.cols = dim;
            pack.level_mut(m) = basis_matrix(src, m);
            pack = detail::pack_apply_word(params_, w, std::move(pack), max_dst);

            for (int n : dst_levels) {
                if (!pack.has_level(n)) continue;
                Eigen::MatrixXd tmp = ctx_.gram(n) * pack.levels[static_cast<size_t>(n)];
                set.blocks[{n, m}] = basis_matrix(dst, n).transpose() * tmp;
            }
        }
        return block_cache_.emplace(std::move(key), std::move(set)).first->second;
    }

    const QContext& ctx_;
    QParams params_;
    int cutoff_;
    int poly_cap_;
    int pair_cap_ = 0;
    double cut_geo_ = 0.0;
    WickTable wick_;
    std::vector<Eigen::MatrixXd> onb_;
    std::vector<std::vector<long>> rev_perm_;
    std::vector<std::vector<RealPolynomial>> onb_polys_;
    std::unordered_map<Word, FockVector, WordHash> word_vec_;
    std::map<std::tuple<int, int, Word>, BlockSet> block_cache_;
    std::map<std::pair<Word, Word>, double> sandwich_cache_;
    std::map<std::pair<Word, Word>, double> pairing_cache_;
};

}  // namespace qsde
