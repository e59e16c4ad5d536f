#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "qsde/qfock.hpp"

using namespace qsde;
using Catch::Matchers::WithinAbs;

namespace {

FockVector random_fock(std::mt19937_64& rng, int alphabet, int max_level) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    FockVector v(alphabet);
    for (int k = 0; k <= max_level; ++k) {
        auto& lv = v.level_mut(k);
        for (auto& x : lv) x = u(rng);
    }
    return v;
}

double catalan(int n) {
    double c = 1;
    for (int i = 0; i < n; ++i) c = c * 2 * (2 * i + 1) / (i + 2);
    return c;
}

}  // namespace

TEST_CASE("inversion counts") {
    CHECK(inversions({1, 2, 3}) == 0);
    CHECK(inversions({2, 1}) == 1);
    CHECK(inversions({2, 1, 3}) == 1);
    CHECK(inversions({4, 3, 2, 1}) == 6);
}

TEST_CASE("brute-force q-inner product") {
    QParams p(0.3, 2);
    CHECK_THAT(q_inner_brute(Word{1, 1}, Word{1, 1}, p), WithinAbs(1.3, 1e-15));
    CHECK_THAT(q_inner_brute(Word{1, 2}, Word{2, 1}, p), WithinAbs(0.3, 1e-15));
    CHECK_THAT(q_inner_brute(Word{1, 2}, Word{1, 2}, p), WithinAbs(1.0, 1e-15));
    CHECK(q_inner_brute(Word{1}, Word{2}, p) == 0.0);
    CHECK(q_inner_brute(Word{1}, Word{1, 1}, p) == 0.0);
    CHECK(q_inner_brute(Word{}, Word{}, p) == 1.0);
    CHECK_THROWS_AS(q_inner_brute(Word{1, 1, 1, 1, 1, 1, 1, 1, 1},
                                  Word{1, 1, 1, 1, 1, 1, 1, 1, 1}, p),
                    std::invalid_argument);
}

TEST_CASE("creation and annihilation") {
    QParams p(0.4, 2);
    auto omega = FockVector::vacuum(2);

    auto h1 = create(p, 1, omega);
    CHECK(h1.level(1)[0] == 1.0);
    CHECK(h1.level(1)[1] == 0.0);

    auto h11 = create(p, 1, h1);
    auto down = annihilate(p, 1, h11);
    CHECK_THAT(down.level(1)[0], WithinAbs(1.4, 1e-15));

    CHECK(annihilate(p, 2, h1).level(0)[0] == 0.0);

    SECTION("depth cap records truncation") {
        auto capped = create(p, 1, h11, 2);
        CHECK(capped.truncated());
        CHECK(capped.depth() <= 2);
    }
}

TEST_CASE("generators act as creation plus annihilation") {
    QParams p(0.2, 2);
    auto omega = FockVector::vacuum(2);

    auto x1 = apply_generator(p, 1, omega);
    CHECK(x1.level(1)[0] == 1.0);

    auto x1sq = apply_generator(p, 1, x1);
    CHECK(x1sq.level(0)[0] == 1.0);
    CHECK(x1sq.level(2)[0] == 1.0);

    auto x1x2 = apply_word(p, Word{1, 2}, omega);
    CHECK(x1x2.level(2)[1] == 1.0);  // index of (1,2) in {1,2}^2
    CHECK(x1x2.level(0)[0] == 0.0);
}

TEST_CASE("creation is adjoint to annihilation") {
    std::mt19937_64 rng(71);
    for (double q : {0.0, 0.35, -0.5}) {
        QParams p(q, 2);
        QContext ctx(p);
        for (int trial = 0; trial < 10; ++trial) {
            auto u = random_fock(rng, 2, 3);
            auto v = random_fock(rng, 2, 4);
            for (int j = 1; j <= 2; ++j) {
                double lhs = ctx.q_inner(create(p, j, u), v);
                double rhs = ctx.q_inner(u, annihilate(p, j, v));
                CHECK_THAT(lhs - rhs, WithinAbs(0.0, 1e-12));
            }
        }
    }
}

TEST_CASE("generators are self-adjoint within truncation") {
    std::mt19937_64 rng(72);
    QParams p(0.25, 2);
    QContext ctx(p);
    for (int trial = 0; trial < 8; ++trial) {
        auto u = random_fock(rng, 2, 3);
        auto v = random_fock(rng, 2, 3);
        for (int j = 1; j <= 2; ++j)
            CHECK_THAT(ctx.q_inner(apply_generator(p, j, u), v) -
                           ctx.q_inner(u, apply_generator(p, j, v)),
                       WithinAbs(0.0, 1e-12));
    }
}

TEST_CASE("trace examples") {
    QParams p(0.37, 1);
    QContext ctx(p);
    CHECK_THAT(ctx.trace_word(Word{1, 1}), WithinAbs(1.0, 1e-15));
    CHECK(ctx.trace_word(Word{1}) == 0.0);
    CHECK_THAT(ctx.trace_word(Word{1, 1, 1, 1}), WithinAbs(2.0 + 0.37, 1e-14));

    QParams p2(-0.2, 2);
    QContext ctx2(p2);
    CHECK_THAT(ctx2.trace_word(Word{1, 2, 1, 2}), WithinAbs(-0.2, 1e-14));
    CHECK_THAT(ctx2.trace_word(Word{1, 2, 2, 1}), WithinAbs(1.0, 1e-14));
}

TEST_CASE("moment oracle examples") {
    QParams p(0.37, 2);
    CHECK(moment_oracle(Word{1, 1}, p) == 1.0);
    CHECK(moment_oracle(Word{1, 2}, p) == 0.0);
    CHECK(moment_oracle(Word{1}, p) == 0.0);
    CHECK_THAT(moment_oracle(Word{1, 1, 1, 1}, p), WithinAbs(2.37, 1e-14));

    QParams free0(0.0, 1);
    for (int n = 1; n <= 6; ++n) {
        std::vector<int> letters(static_cast<size_t>(2 * n), 1);
        CHECK_THAT(moment_oracle(Word(letters), free0), WithinAbs(catalan(n), 1e-12));
    }
}

TEST_CASE("trace agrees with the pair-partition oracle") {
    for (double q : {0.0, -0.3, 0.45}) {
        for (int N : {1, 2}) {
            QParams p(q, N);
            QContext ctx(p);
            for (const Word& w : enumerate_words(N, 6))
                CHECK_THAT(ctx.trace_word(w) - moment_oracle(w, p), WithinAbs(0.0, 1e-12));
        }
    }
}

TEST_CASE("traciality") {
    QParams p(0.3, 2);
    QContext ctx(p);
    std::mt19937_64 rng(73);
    std::uniform_int_distribution<int> len(0, 4), letter(1, 2);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<int> a(static_cast<size_t>(len(rng))), b(static_cast<size_t>(len(rng)));
        for (auto& l : a) l = letter(rng);
        for (auto& l : b) l = letter(rng);
        Word u(a), v(b);
        CHECK_THAT(ctx.trace_word(u + v) - ctx.trace_word(v + u), WithinAbs(0.0, 1e-12));
    }
}

TEST_CASE("cached gram matrices") {
    SECTION("match the brute-force inner product") {
        for (double q : {0.0, 0.3, -0.45}) {
            for (int N : {1, 2, 3}) {
                QParams p(q, N);
                QContext ctx(p);
                for (int n = 0; n <= 4; ++n) {
                    const auto& g = ctx.gram(n);
                    auto words = enumerate_words(N, n, n);
                    for (size_t i = 0; i < words.size(); ++i)
                        for (size_t j = 0; j < words.size(); ++j)
                            CHECK_THAT(g(static_cast<long>(i), static_cast<long>(j)) -
                                           q_inner_brute(words[i], words[j], p),
                                       WithinAbs(0.0, 1e-13));
                }
            }
        }
    }

    SECTION("symmetric positive definite") {
        for (double q : {0.45, -0.45}) {
            for (int N : {1, 2, 3}) {
                QContext ctx(QParams(q, N));
                for (int n = 1; n <= 5; ++n) {
                    if (std::pow(N, n) > 300) continue;
                    const auto& g = ctx.gram(n);
                    CHECK((g - g.transpose()).cwiseAbs().maxCoeff() < 1e-13);
                    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
                    CHECK(es.eigenvalues().minCoeff() > 0.0);
                }
            }
        }
    }
}

TEST_CASE("context inner product matches brute force on basis tensors") {
    QParams p(0.3, 2);
    QContext ctx(p);
    for (const Word& u : enumerate_words(2, 3))
        for (const Word& v : enumerate_words(2, 3))
            CHECK_THAT(ctx.q_inner(FockVector::basis(2, u), FockVector::basis(2, v)) -
                           q_inner_brute(u, v, p),
                       WithinAbs(0.0, 1e-13));
}

TEST_CASE("trace of a polynomial and L2 norms") {
    QParams p(0.0, 1);
    QContext ctx(p);
    // tau((X^2 - 1)^2) = tau(X^4) - 2 tau(X^2) + 1 = 2 - 2 + 1 = 1.
    RealPolynomial w2(1);
    w2.add_term({Word{1, 1}}, 1.0);
    w2.add_term({Word{}}, -1.0);
    CHECK_THAT(ctx.l2_norm(w2), WithinAbs(1.0, 1e-13));
    CHECK_THAT(ctx.trace_poly(w2), WithinAbs(0.0, 1e-13));

    QParams pq(0.2, 1);
    QContext cq(pq);
    CHECK_THAT(cq.l2_norm(w2), WithinAbs(std::sqrt(1.0 + 0.2), 1e-13));
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(QParams(1.0, 2), std::invalid_argument);
    CHECK_THROWS_AS(QParams(0.5, 0), std::invalid_argument);
    QParams p(0.5, 2);
    CHECK_THAT(p.r0(), WithinAbs(4.0, 1e-15));
    auto v = FockVector::vacuum(2);
    CHECK_THROWS_AS(create(p, 3, v), std::invalid_argument);
    CHECK_THROWS_AS(annihilate(p, 0, v), std::invalid_argument);
}
