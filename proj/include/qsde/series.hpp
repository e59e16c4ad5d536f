#pragma once

#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

#include "qsde/scalar.hpp"
#include "qsde/word.hpp"

namespace qsde {

/// Sparse non-commutative series with coefficients in T and monomials
/// indexed by R-tuples of words (scalar, 2-tensor and 3-tensor series).
/// Zero coefficients are never stored. An optional total-degree cap makes
/// every mutating operation truncate; dropped terms raise the `truncated`
/// flag so downstream tail accounting can see it.
template <class T, int R> class TensorSeries {
public:
    using Key = TensorKey<R>;
    using Map = std::map<Key, T>;
    using Traits = scalar_traits<T>;

    TensorSeries() = default;
    explicit TensorSeries(int alphabet, std::optional<int> degree_cap = std::nullopt)
        : alphabet_(alphabet), cap_(degree_cap) {
        if (alphabet < 1) throw std::invalid_argument("alphabet size must be >= 1");
    }

    int alphabet() const { return alphabet_; }
    std::optional<int> degree_cap() const { return cap_; }
    bool truncated() const { return truncated_; }
    void mark_truncated() { truncated_ = true; }

    const Map& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    size_t term_count() const { return terms_.size(); }

    int degree() const {
        return terms_.empty() ? 0 : terms_.rbegin()->first.total_degree();
    }

    T coefficient(const Key& k) const {
        auto it = terms_.find(k);
        return it == terms_.end() ? T{} : it->second;
    }

    /// Adds `c` to the coefficient of `k`, pruning negligible results.
    void add_term(const Key& k, const T& c) {
        if (Traits::is_negligible(c)) return;
        for (const auto& leg : k.legs)
            if (!leg.in_alphabet(alphabet_)) throw std::invalid_argument("letter out of range");
        if (cap_ && k.total_degree() > *cap_) {
            truncated_ = true;
            return;
        }
        auto [it, inserted] = terms_.try_emplace(k, c);
        if (!inserted) {
            it->second += c;
            if (Traits::is_negligible(it->second)) terms_.erase(it);
        }
    }

    void set_term(const Key& k, const T& c) {
        terms_.erase(k);
        add_term(k, c);
    }

    TensorSeries& operator+=(const TensorSeries& o) {
        require_same_alphabet(o);
        truncated_ = truncated_ || o.truncated_;
        for (const auto& [k, c] : o.terms_) add_term(k, c);
        return *this;
    }
    TensorSeries& operator-=(const TensorSeries& o) {
        require_same_alphabet(o);
        truncated_ = truncated_ || o.truncated_;
        for (const auto& [k, c] : o.terms_) add_term(k, -c);
        return *this;
    }
    TensorSeries& operator*=(const T& s) {
        Map scaled;
        for (auto& [k, c] : terms_) {
            T v = c * s;
            if (!Traits::is_negligible(v)) scaled.emplace(k, std::move(v));
        }
        terms_ = std::move(scaled);
        return *this;
    }

    friend TensorSeries operator+(TensorSeries a, const TensorSeries& b) { return a += b; }
    friend TensorSeries operator-(TensorSeries a, const TensorSeries& b) { return a -= b; }
    friend TensorSeries operator*(TensorSeries a, const T& s) { return a *= s; }
    friend TensorSeries operator*(const T& s, TensorSeries a) { return a *= s; }

    friend bool operator==(const TensorSeries& a, const TensorSeries& b) {
        return a.alphabet_ == b.alphabet_ && a.terms_ == b.terms_;
    }

    /// Drops all terms of total degree > cap and records the new cap.
    void truncate(int cap) {
        auto it = terms_.begin();
        while (it != terms_.end()) {
            if (it->first.total_degree() > cap) {
                it = terms_.erase(it);
                truncated_ = true;
            } else {
                ++it;
            }
        }
        cap_ = cap_ ? std::min(*cap_, cap) : cap;
    }

    template <class U, int S>
    void require_same_alphabet(const TensorSeries<U, S>& o) const {
        if (alphabet_ != o.alphabet()) throw std::invalid_argument("alphabet mismatch");
    }

private:
    int alphabet_ = 1;
    std::optional<int> cap_;
    bool truncated_ = false;
    Map terms_;
};

template <class T = Complex> using PolynomialT = TensorSeries<T, 1>;
template <class T = Complex> using Tensor2T = TensorSeries<T, 2>;
template <class T = Complex> using Tensor3T = TensorSeries<T, 3>;

using NCPolynomial = PolynomialT<Complex>;
using Tensor2Series = Tensor2T<Complex>;
using Tensor3Series = Tensor3T<Complex>;
using RealPolynomial = PolynomialT<double>;
using RealTensor2 = Tensor2T<double>;

template <class T> TensorSeries<T, 1> monomial(int alphabet, const Word& w, const T& c) {
    TensorSeries<T, 1> f(alphabet);
    f.add_term({w}, c);
    return f;
}

template <class T = Complex> TensorSeries<T, 1> constant(int alphabet, const T& c) {
    return monomial<T>(alphabet, Word{}, c);
}

/// Concatenation-convolution product; degrees add, caps are honored.
template <class T>
TensorSeries<T, 1> multiply(const TensorSeries<T, 1>& f, const TensorSeries<T, 1>& g) {
    f.require_same_alphabet(g);
    std::optional<int> cap;
    if (f.degree_cap() && g.degree_cap()) cap = std::min(*f.degree_cap(), *g.degree_cap());
    else if (f.degree_cap()) cap = f.degree_cap();
    else if (g.degree_cap()) cap = g.degree_cap();
    TensorSeries<T, 1> out(f.alphabet(), cap);
    if (f.truncated() || g.truncated()) out.mark_truncated();
    for (const auto& [ku, cu] : f.terms())
        for (const auto& [kv, cv] : g.terms())
            out.add_term({ku.legs[0] + kv.legs[0]}, cu * cv);
    return out;
}

template <class T>
TensorSeries<T, 1> operator*(const TensorSeries<T, 1>& f, const TensorSeries<T, 1>& g) {
    return multiply(f, g);
}

/// Formal adjoint: reverses each word and conjugates each coefficient.
template <class T> TensorSeries<T, 1> adjoint(const TensorSeries<T, 1>& f) {
    TensorSeries<T, 1> out(f.alphabet(), f.degree_cap());
    if (f.truncated()) out.mark_truncated();
    for (const auto& [k, c] : f.terms())
        out.add_term({k.legs[0].reversed()}, scalar_traits<T>::conj(c));
    return out;
}

/// Involution on 2-tensors: (a (X) b)* = b* (X) a*.
template <class T> TensorSeries<T, 2> involution(const TensorSeries<T, 2>& f) {
    TensorSeries<T, 2> out(f.alphabet(), f.degree_cap());
    if (f.truncated()) out.mark_truncated();
    for (const auto& [k, c] : f.terms())
        out.add_term({k.legs[1].reversed(), k.legs[0].reversed()}, scalar_traits<T>::conj(c));
    return out;
}

template <class S, class T, int R>
TensorSeries<S, R> convert_scalar(const TensorSeries<T, R>& f) {
    TensorSeries<S, R> out(f.alphabet(), f.degree_cap());
    if (f.truncated()) out.mark_truncated();
    for (const auto& [k, c] : f.terms()) {
        TensorKey<R> key = k;
        out.add_term(key, S(c));
    }
    return out;
}

inline NCPolynomial to_complex(const RealPolynomial& f) {
    return convert_scalar<Complex>(f);
}
inline Tensor2Series to_complex(const RealTensor2& f) {
    return convert_scalar<Complex>(f);
}

// ---------------------------------------------------------------------------
// Text serialization. One term per line in canonical key order:
//     <re> <im> : i1 i2 ... | j1 j2 ... | ...
// preceded by a single header line carrying rank, alphabet, cap and scalar
// kind. Rational coefficients print exactly; doubles use 17 significant
// digits so the round trip is value-exact.
// ---------------------------------------------------------------------------

template <class T, int R> void write_series(std::ostream& os, const TensorSeries<T, R>& f) {
    os << "qsde-series rank " << R << " N " << f.alphabet() << " cap ";
    if (f.degree_cap()) os << *f.degree_cap();
    else os << "-";
    os << " scalar " << scalar_traits<T>::tag << "\n";
    for (const auto& [k, c] : f.terms()) {
        os << scalar_traits<T>::print(c) << " :";
        for (int leg = 0; leg < R; ++leg) {
            if (leg) os << " |";
            for (int l : k.legs[static_cast<size_t>(leg)]) os << ' ' << l;
        }
        os << "\n";
    }
}

template <class T, int R> std::string to_text(const TensorSeries<T, R>& f) {
    std::ostringstream os;
    write_series(os, f);
    return os.str();
}

template <class T, int R> TensorSeries<T, R> read_series(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("empty series input");
    std::istringstream hs(line);
    std::string magic, kw_rank, kw_n, kw_cap, kw_scalar, cap_tok, scalar_tok;
    int rank = 0, alphabet = 0;
    hs >> magic >> kw_rank >> rank >> kw_n >> alphabet >> kw_cap >> cap_tok >> kw_scalar >>
        scalar_tok;
    if (magic != "qsde-series" || kw_rank != "rank" || kw_n != "N" || kw_cap != "cap" ||
        kw_scalar != "scalar")
        throw std::invalid_argument("malformed series header: " + line);
    if (rank != R) throw std::invalid_argument("series rank mismatch");
    if (scalar_tok != scalar_traits<T>::tag)
        throw std::invalid_argument("series scalar kind mismatch");
    std::optional<int> cap;
    if (cap_tok != "-") cap = std::stoi(cap_tok);
    TensorSeries<T, R> out(alphabet, cap);

    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string re, im, colon;
        ls >> re >> im >> colon;
        if (colon != ":") throw std::invalid_argument("malformed series term: " + line);
        T coeff{};
        if (!scalar_io<T>::read(re, im, coeff))
            throw std::invalid_argument("bad coefficient: " + line);
        TensorKey<R> key;
        int leg = 0;
        std::string tok;
        while (ls >> tok) {
            if (tok == "|") {
                if (++leg >= R) throw std::invalid_argument("too many tensor legs: " + line);
                continue;
            }
            std::vector<int> letters = key.legs[static_cast<size_t>(leg)].letters();
            letters.push_back(std::stoi(tok));
            key.legs[static_cast<size_t>(leg)] = Word(std::move(letters));
        }
        out.add_term(key, coeff);
    }
    return out;
}

template <class T, int R> TensorSeries<T, R> series_from_text(const std::string& text) {
    std::istringstream is(text);
    return read_series<T, R>(is);
}

}  // namespace qsde
