#include <catch2/catch_amalgamated.hpp>

#include "qsde/generator.hpp"

using namespace qsde;
using Catch::Matchers::WithinAbs;

namespace {

NCPolynomial xpow(int n) {
    std::vector<int> letters(static_cast<size_t>(n), 1);
    return monomial(1, Word(letters), Complex(1.0));
}

double max_abs_coeff(const NCPolynomial& f) {
    double m = 0.0;
    for (const auto& [k, c] : f.terms()) m = std::max(m, std::abs(c));
    return m;
}

}  // namespace

TEST_CASE("generator on single-variable examples") {
    QContext ctx(QParams(0.0, 1));
    auto spec = GeneratorSpec::ornstein_uhlenbeck(1, ctx.trace_fn(), ctx.r0());

    SECTION("constants are annihilated") {
        CHECK(apply_generator(spec, constant<Complex>(1, Complex(1.0))).is_zero());
    }

    SECTION("X^2 under the contracted drift") {
        auto lf = apply_generator(spec, xpow(2));
        auto expect = constant<Complex>(1, Complex(1.0)) - xpow(2);
        CHECK(max_abs_coeff(lf - expect) < 1e-13);
        CHECK_THAT(std::abs(ctx.trace_poly(lf)), WithinAbs(0.0, 1e-13));
    }

    SECTION("X^2 under the literal drift") {
        auto lit = spec;
        lit.drift = DriftVariant::literal;
        auto lf = apply_generator(lit, xpow(2));
        auto expect = constant<Complex>(1, Complex(1.0)) - Complex(0.5) * xpow(3);
        CHECK(max_abs_coeff(lf - expect) < 1e-13);
        CHECK_THAT(std::abs(ctx.trace_poly(lf)), WithinAbs(1.0, 1e-13));
    }

    SECTION("X^4 balances second order against drift") {
        auto lf = apply_generator(spec, xpow(4));
        // second-order part 3 + X^2, drift part -2 X^4.
        auto expect = constant<Complex>(1, Complex(3.0)) + xpow(2) - Complex(2.0) * xpow(4);
        CHECK(max_abs_coeff(lf - expect) < 1e-13);
        CHECK_THAT(std::abs(ctx.trace_poly(lf)), WithinAbs(0.0, 1e-13));
    }
}

TEST_CASE("generator is linear") {
    QContext ctx(QParams(0.0, 2));
    auto spec = GeneratorSpec::ornstein_uhlenbeck(2, ctx.trace_fn(), ctx.r0());
    auto f = monomial(2, Word{1, 2}, Complex(1.0));
    auto g = monomial(2, Word{2, 2, 1}, Complex(1.0));
    Complex a(0.5, 1.0), b(-2.0, 0.25);
    auto lhs = apply_generator(spec, a * f + b * g);
    auto rhs = a * apply_generator(spec, f) + b * apply_generator(spec, g);
    CHECK(max_abs_coeff(lhs - rhs) < 1e-13);
}

TEST_CASE("stationarity certificates") {
    SECTION("free case, explicit route") {
        for (int n : {1, 2}) {
            QContext ctx(QParams(0.0, n));
            auto spec = GeneratorSpec::ornstein_uhlenbeck(n, ctx.trace_fn(), ctx.r0());
            auto res = stationarity_residual(spec, 6);
            CHECK(res.max_residual < 1e-12);

            auto lit = spec;
            lit.drift = DriftVariant::literal;
            auto bad = stationarity_residual(lit, 2);
            CHECK(bad.max_residual >= 0.5);
        }
    }

    SECTION("free case, structural route") {
        QContext ctx(QParams(0.0, 2));
        QModel model(ctx, 0, 6);
        auto res = model.stationarity(6, DriftVariant::ito);
        CHECK(res.max_residual < 1e-12);
        CHECK(res.tail_budget == 0.0);

        auto lit = model.stationarity(2, DriftVariant::literal);
        CHECK(lit.max_residual >= 0.5);
    }

    SECTION("deformed case: structural matches explicit per monomial") {
        double q = 0.3;
        QContext ctx(QParams(q, 2));
        auto xiexp = xi_expansion(ctx, 2);
        auto spec = GeneratorSpec::from_xi_expansion(xiexp, ctx);
        auto explicit_res = stationarity_residual(spec, 4);

        QModel model(ctx, 2, 4);
        auto structural = model.stationarity(4, DriftVariant::ito);

        for (const auto& [w, r] : explicit_res.residuals) {
            auto it = structural.residuals.find(w);
            REQUIRE(it != structural.residuals.end());
            CHECK_THAT(r - it->second, WithinAbs(0.0, 1e-9));
        }
        // Consistent truncation: the conjugate of the truncated kernel makes
        // the truncated generator stationary outright.
        CHECK(structural.max_residual < 1e-9);
        CHECK(explicit_res.max_residual < 1e-9);
    }

    SECTION("deformed case at a larger cutoff") {
        QContext ctx(QParams(0.1, 1));
        QModel model(ctx, 5, 6);
        auto res = model.stationarity(5, DriftVariant::ito);
        CHECK(res.max_residual < 1e-8);
    }
}

TEST_CASE("majorant generator") {
    QContext ctx(QParams(0.0, 1));
    auto spec = GeneratorSpec::ornstein_uhlenbeck(1, ctx.trace_fn(), 2.0);
    auto mg = MajorantGenerator::from_spec(spec, 3.0);

    SECTION("coefficient data") {
        CHECK_THAT(mg.alpha1.evaluate(5.0), WithinAbs(1.0, 1e-15));  // constant 1
        CHECK_THAT(mg.alpha2.evaluate(5.0), WithinAbs(2.5, 1e-15));  // z/2
    }

    SECTION("single application") {
        MajorantSeries<> phi(1);
        phi.add(2, 1.0);  // z^2
        auto lhat = majorant_apply(mg, phi);
        CHECK_THAT(lhat.coefficient(0), WithinAbs(2.0, 1e-15));
        CHECK_THAT(lhat.coefficient(3), WithinAbs(0.5, 1e-15));
        CHECK_THAT(lhat.evaluate(2.0), WithinAbs(6.0, 1e-15));
        CHECK_THAT(iterated_bound(mg, phi, 1), WithinAbs(6.0, 1e-15));
        CHECK(iterated_bound(mg, MajorantSeries<>(1), 3) == 0.0);
    }

    SECTION("envelope, contour bound, time horizon") {
        CHECK_THAT(mg.envelope(), WithinAbs(1.5, 1e-15));
        CHECK_THAT(stationarity_time(mg), WithinAbs(1.0 / 3.0, 1e-15));

        MajorantSeries<> phi(1);
        phi.add(2, 1.0);
        double prev = 0.0;
        for (int n = 1; n <= 6; ++n) {
            double bound = cauchy_bound(mg, phi, n);
            CHECK(bound > prev);
            prev = bound;
        }

        auto bad = mg;
        bad.rho = 1.0;
        CHECK_THROWS_AS(stationarity_time(bad), std::invalid_argument);
        CHECK_THROWS_AS(cauchy_bound(bad, phi, 1), std::invalid_argument);

        auto divergent = mg;
        divergent.radius = 2.5;  // declared radius below the contour
        CHECK_THROWS_AS(stationarity_time(divergent), NumericalGuard);
    }

    SECTION("time horizon shrinks as r0 approaches rho") {
        double prev = stationarity_time(mg);
        for (double r0 : {2.2, 2.5, 2.8}) {
            auto spec2 = GeneratorSpec::ornstein_uhlenbeck(1, ctx.trace_fn(), r0);
            auto mg2 = MajorantGenerator::from_spec(spec2, 3.0);
            double t = stationarity_time(mg2);
            CHECK(t < prev);
            prev = t;
        }
    }
}

TEST_CASE("iterated majorant dominates iterated traces") {
    SECTION("free Ornstein-Uhlenbeck data") {
        for (int n_gen : {1, 2}) {
            QContext ctx(QParams(0.0, n_gen));
            for (DriftVariant variant : {DriftVariant::ito, DriftVariant::literal}) {
                auto spec =
                    GeneratorSpec::ornstein_uhlenbeck(n_gen, ctx.trace_fn(), ctx.r0(), variant);
                auto mg = MajorantGenerator::from_spec(spec, ctx.r0() + 1.0);
                for (const Word& w : enumerate_words(n_gen, 4, 1)) {
                    NCPolynomial f = monomial(n_gen, w, Complex(1.0));
                    NCPolynomial iter = f;
                    for (int n = 1; n <= 3; ++n) {
                        iter = apply_generator(spec, iter);
                        double traced = std::abs(ctx.trace_poly(iter));
                        double bound =
                            iterated_bound(mg, coefficient_majorant(f), n);
                        CHECK(traced <= bound * (1 + 1e-12) + 1e-12);
                    }
                }
            }
        }
    }

    SECTION("deformed kernel data in one variable") {
        QContext ctx(QParams(0.02, 1));
        auto xiexp = xi_expansion(ctx, 2);
        for (DriftVariant variant : {DriftVariant::ito, DriftVariant::literal}) {
            auto spec = GeneratorSpec::from_xi_expansion(xiexp, ctx, variant);
            auto mg = MajorantGenerator::from_spec(spec, ctx.r0() + 0.5);
            for (int deg = 1; deg <= 4; ++deg) {
                NCPolynomial f = xpow(deg);
                NCPolynomial iter = f;
                for (int n = 1; n <= 3; ++n) {
                    iter = apply_generator(spec, iter);
                    double traced = std::abs(ctx.trace_poly(iter));
                    double bound =
                        iterated_bound(mg, coefficient_majorant(f), n);
                    CHECK(traced <= bound * (1 + 1e-12) + 1e-12);
                }
            }
        }
    }
}
