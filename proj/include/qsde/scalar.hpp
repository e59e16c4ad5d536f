#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <complex>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>

namespace qsde {

using Complex = std::complex<double>;
using Rational = boost::multiprecision::cpp_rational;

/// Thrown when a numerical guard trips (norm-guard abort, NaN state,
/// near-singular Gram matrix, divergent majorant evaluation).
class NumericalGuard : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Complex number over an exact rational coefficient field.
struct RationalComplex {
    Rational re{0};
    Rational im{0};

    RationalComplex() = default;
    RationalComplex(Rational r) : re(std::move(r)) {}
    RationalComplex(Rational r, Rational i) : re(std::move(r)), im(std::move(i)) {}
    RationalComplex(long v) : re(v) {}

    friend RationalComplex operator+(const RationalComplex& a, const RationalComplex& b) {
        return {a.re + b.re, a.im + b.im};
    }
    friend RationalComplex operator-(const RationalComplex& a, const RationalComplex& b) {
        return {a.re - b.re, a.im - b.im};
    }
    friend RationalComplex operator-(const RationalComplex& a) { return {-a.re, -a.im}; }
    friend RationalComplex operator*(const RationalComplex& a, const RationalComplex& b) {
        return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
    }
    RationalComplex& operator+=(const RationalComplex& o) { return *this = *this + o; }
    RationalComplex& operator-=(const RationalComplex& o) { return *this = *this - o; }
    RationalComplex& operator*=(const RationalComplex& o) { return *this = *this * o; }
    friend bool operator==(const RationalComplex& a, const RationalComplex& b) {
        return a.re == b.re && a.im == b.im;
    }
};

inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

// Coefficient-field customization points. real_type is the ring used for
// majorant series built from this scalar; abs_upper must be an upper bound
// for the modulus that is submultiplicative within real_type.
template <class T> struct scalar_traits;

template <> struct scalar_traits<double> {
    using real_type = double;
    static constexpr const char* tag = "c";
    static bool is_negligible(double x) { return std::abs(x) < 1e-15; }
    static double abs_upper(double x) { return std::abs(x); }
    static double conj(double x) { return x; }
    static double scale(double x, double s) { return x * s; }
    static std::string print(double x) { return format_double(x) + " 0"; }
};

template <> struct scalar_traits<Complex> {
    using real_type = double;
    static constexpr const char* tag = "c";
    static bool is_negligible(const Complex& x) { return std::abs(x) < 1e-15; }
    static double abs_upper(const Complex& x) { return std::abs(x); }
    static Complex conj(const Complex& x) { return std::conj(x); }
    static Complex scale(const Complex& x, double s) { return x * s; }
    static std::string print(const Complex& x) {
        return format_double(x.real()) + " " + format_double(x.imag());
    }
};

template <> struct scalar_traits<Rational> {
    using real_type = Rational;
    static constexpr const char* tag = "r";
    static bool is_negligible(const Rational& x) { return x == 0; }
    static Rational abs_upper(const Rational& x) { return x < 0 ? Rational(-x) : x; }
    static Rational conj(const Rational& x) { return x; }
    static Rational scale(const Rational& x, const Rational& s) { return x * s; }
    static std::string print(const Rational& x) {
        std::ostringstream os;
        os << x << " 0";
        return os.str();
    }
};

template <> struct scalar_traits<RationalComplex> {
    using real_type = Rational;
    static constexpr const char* tag = "r";
    static bool is_negligible(const RationalComplex& x) { return x.re == 0 && x.im == 0; }
    // |re| + |im| dominates the modulus and is submultiplicative, so the
    // majorant calculus stays exact over the rationals.
    static Rational abs_upper(const RationalComplex& x) {
        Rational a = x.re < 0 ? Rational(-x.re) : x.re;
        Rational b = x.im < 0 ? Rational(-x.im) : x.im;
        return a + b;
    }
    static RationalComplex conj(const RationalComplex& x) { return {x.re, -x.im}; }
    static RationalComplex scale(const RationalComplex& x, const Rational& s) {
        return {x.re * s, x.im * s};
    }
    static std::string print(const RationalComplex& x) {
        std::ostringstream os;
        os << x.re << " " << x.im;
        return os.str();
    }
};

template <class T> bool parse_scalar_token(const std::string& tok, T& out);

inline bool parse_scalar_token_impl(const std::string& tok, double& out) {
    try {
        size_t pos = 0;
        out = std::stod(tok, &pos);
        return pos == tok.size();
    } catch (const std::exception&) {
        return false;
    }
}

inline bool parse_scalar_token_impl(const std::string& tok, Rational& out) {
    try {
        out = Rational(tok);
        return true;
    } catch (const std::exception&) {
        return false;
    }
}

template <> inline bool parse_scalar_token<double>(const std::string& tok, double& out) {
    return parse_scalar_token_impl(tok, out);
}
template <> inline bool parse_scalar_token<Rational>(const std::string& tok, Rational& out) {
    return parse_scalar_token_impl(tok, out);
}

template <class T> struct scalar_io;

template <> struct scalar_io<double> {
    static bool read(const std::string& re, const std::string& im, double& out) {
        double r = 0, i = 0;
        if (!parse_scalar_token(re, r) || !parse_scalar_token(im, i)) return false;
        if (i != 0) return false;
        out = r;
        return true;
    }
};
template <> struct scalar_io<Complex> {
    static bool read(const std::string& re, const std::string& im, Complex& out) {
        double r = 0, i = 0;
        if (!parse_scalar_token(re, r) || !parse_scalar_token(im, i)) return false;
        out = Complex(r, i);
        return true;
    }
};
template <> struct scalar_io<Rational> {
    static bool read(const std::string& re, const std::string& im, Rational& out) {
        Rational r, i;
        if (!parse_scalar_token(re, r) || !parse_scalar_token(im, i)) return false;
        if (i != 0) return false;
        out = r;
        return true;
    }
};
template <> struct scalar_io<RationalComplex> {
    static bool read(const std::string& re, const std::string& im, RationalComplex& out) {
        Rational r, i;
        if (!parse_scalar_token(re, r) || !parse_scalar_token(im, i)) return false;
        out = RationalComplex(r, i);
        return true;
    }
};

}  // namespace qsde
