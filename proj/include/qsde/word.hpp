#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace qsde {

/// A finite word over the generator alphabet {1, ..., N}; the empty word
/// indexes the unit monomial. Ordering is graded: length first, then
/// lexicographic on letters, which fixes the canonical serialization order.
class Word {
public:
    Word() = default;
    Word(std::initializer_list<int> letters) : letters_(letters) {}
    explicit Word(std::vector<int> letters) : letters_(std::move(letters)) {}

    static Word single(int letter) { return Word{letter}; }

    int size() const { return static_cast<int>(letters_.size()); }
    bool empty() const { return letters_.empty(); }
    int operator[](int i) const { return letters_[static_cast<size_t>(i)]; }
    const std::vector<int>& letters() const { return letters_; }

    auto begin() const { return letters_.begin(); }
    auto end() const { return letters_.end(); }

    bool in_alphabet(int n) const {
        return std::all_of(begin(), end(), [n](int l) { return l >= 1 && l <= n; });
    }

    /// Letters at positions [a, b) as a new word.
    Word sub(int a, int b) const {
        return Word(std::vector<int>(letters_.begin() + a, letters_.begin() + b));
    }

    Word reversed() const {
        return Word(std::vector<int>(letters_.rbegin(), letters_.rend()));
    }

    friend Word operator+(const Word& a, const Word& b) {
        std::vector<int> l = a.letters_;
        l.insert(l.end(), b.letters_.begin(), b.letters_.end());
        return Word(std::move(l));
    }

    friend bool operator==(const Word& a, const Word& b) = default;
    friend std::strong_ordering operator<=>(const Word& a, const Word& b) {
        if (auto c = a.size() <=> b.size(); c != 0) return c;
        return a.letters_ <=> b.letters_;
    }

    std::string str() const {
        std::string s;
        for (size_t i = 0; i < letters_.size(); ++i) {
            if (i) s += ' ';
            s += std::to_string(letters_[i]);
        }
        return s;
    }

    /// Compact digit form, e.g. "121"; "e" for the empty word.
    std::string digits() const {
        if (letters_.empty()) return "e";
        std::string s;
        for (int l : letters_) s += std::to_string(l);
        return s;
    }

private:
    std::vector<int> letters_;
};

struct WordHash {
    size_t operator()(const Word& w) const {
        size_t h = 0x9e3779b97f4a7c15ull;
        for (int l : w) h = h * 1099511628211ull + static_cast<size_t>(l);
        return h;
    }
};

/// Index of a length-n word in the lexicographic enumeration of {1..N}^n.
inline long word_index(const Word& w, int n_alphabet) {
    long idx = 0;
    for (int l : w) idx = idx * n_alphabet + (l - 1);
    return idx;
}

inline Word word_from_index(long idx, int length, int n_alphabet) {
    std::vector<int> letters(static_cast<size_t>(length));
    for (int i = length - 1; i >= 0; --i) {
        letters[static_cast<size_t>(i)] = static_cast<int>(idx % n_alphabet) + 1;
        idx /= n_alphabet;
    }
    return Word(std::move(letters));
}

/// All words over {1..N} with length in [min_len, max_len], in graded order.
inline std::vector<Word> enumerate_words(int n_alphabet, int max_len, int min_len = 0) {
    std::vector<Word> out;
    for (int len = min_len; len <= max_len; ++len) {
        long count = 1;
        for (int i = 0; i < len; ++i) count *= n_alphabet;
        for (long idx = 0; idx < count; ++idx) out.push_back(word_from_index(idx, len, n_alphabet));
    }
    return out;
}

/// Key of a rank-R tensor monomial: R words, one per tensor leg.
template <int R> struct TensorKey {
    std::array<Word, R> legs;

    int total_degree() const {
        int d = 0;
        for (const auto& w : legs) d += w.size();
        return d;
    }
    friend bool operator==(const TensorKey&, const TensorKey&) = default;
    friend std::strong_ordering operator<=>(const TensorKey& a, const TensorKey& b) {
        if (auto c = a.total_degree() <=> b.total_degree(); c != 0) return c;
        return a.legs <=> b.legs;
    }
};

}  // namespace qsde
