#pragma once

#include <random>

#include "qsde/nc_ops.hpp"
#include "qsde/series.hpp"

namespace qsde::testing {

inline Word random_word(std::mt19937_64& rng, int alphabet, int max_len, int min_len = 0) {
    std::uniform_int_distribution<int> len(min_len, max_len);
    std::uniform_int_distribution<int> letter(1, alphabet);
    std::vector<int> letters(static_cast<size_t>(len(rng)));
    for (auto& l : letters) l = letter(rng);
    return Word(std::move(letters));
}

template <class T>
TensorSeries<T, 1> random_poly(std::mt19937_64& rng, int alphabet, int max_deg, int terms) {
    std::uniform_int_distribution<int> coeff(-5, 5);
    TensorSeries<T, 1> f(alphabet);
    for (int t = 0; t < terms; ++t)
        f.add_term({random_word(rng, alphabet, max_deg)}, T(coeff(rng)));
    return f;
}

template <class T>
TensorSeries<T, 2> random_tensor2(std::mt19937_64& rng, int alphabet, int max_deg, int terms) {
    std::uniform_int_distribution<int> coeff(-5, 5);
    TensorSeries<T, 2> f(alphabet);
    for (int t = 0; t < terms; ++t)
        f.add_term({random_word(rng, alphabet, max_deg), random_word(rng, alphabet, max_deg)},
                   T(coeff(rng)));
    return f;
}

}  // namespace qsde::testing
