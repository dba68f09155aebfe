#pragma once

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <type_traits>

#include <gmpxx.h>

#include "charvar/word.hpp"

namespace charvar {

template <class T>
inline constexpr bool is_exact_v = std::is_same_v<T, mpq_class>;

class determinant_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Row-major 2x2 matrix over exact rationals (mpq_class) or doubles.
template <class T>
struct Mat2 {
    T a11{0}, a12{0}, a21{0}, a22{0};

    static Mat2 identity() { return {T(1), T(0), T(0), T(1)}; }

    T det() const { return a11 * a22 - a12 * a21; }
    T trace() const { return a11 + a22; }
    Mat2 adjugate() const { return {a22, -a12, -a21, a11}; }

    /// Inverse; for determinant-1 matrices this is the adjugate.
    Mat2 inverse() const {
        const T d = det();
        if (d == 0) throw determinant_error("singular matrix has no inverse");
        return {a22 / d, -a12 / d, -a21 / d, a11 / d};
    }

    Mat2 operator*(const Mat2& o) const {
        return {a11 * o.a11 + a12 * o.a21, a11 * o.a12 + a12 * o.a22,
                a21 * o.a11 + a22 * o.a21, a21 * o.a12 + a22 * o.a22};
    }
    Mat2 operator+(const Mat2& o) const { return {a11 + o.a11, a12 + o.a12, a21 + o.a21, a22 + o.a22}; }
    Mat2 operator-(const Mat2& o) const { return {a11 - o.a11, a12 - o.a12, a21 - o.a21, a22 - o.a22}; }
    Mat2 operator-() const { return {-a11, -a12, -a21, -a22}; }
    Mat2 scaled(const T& s) const { return {a11 * s, a12 * s, a21 * s, a22 * s}; }

    friend bool operator==(const Mat2& p, const Mat2& q) {
        return p.a11 == q.a11 && p.a12 == q.a12 && p.a21 == q.a21 && p.a22 == q.a22;
    }

    double frobenius() const {
        auto d = [](const T& v) {
            if constexpr (is_exact_v<T>) return v.get_d();
            else return static_cast<double>(v);
        };
        return std::sqrt(d(a11) * d(a11) + d(a12) * d(a12) + d(a21) * d(a21) + d(a22) * d(a22));
    }

    std::string to_string() const {
        auto f = [](const T& v) -> std::string {
            if constexpr (is_exact_v<T>) {
                return v.get_str();
            } else {
                char buf[40];
                std::snprintf(buf, sizeof buf, "%.17g", static_cast<double>(v));
                return buf;
            }
        };
        return "[[" + f(a11) + "," + f(a12) + "],[" + f(a21) + "," + f(a22) + "]]";
    }
};

using QMat2 = Mat2<mpq_class>;
using DMat2 = Mat2<double>;

inline DMat2 to_double(const QMat2& m) { return {m.a11.get_d(), m.a12.get_d(), m.a21.get_d(), m.a22.get_d()}; }
inline DMat2 to_double(const DMat2& m) { return m; }

template <class T>
Mat2<T> power(Mat2<T> base, long e) {
    if (e < 0) {
        base = base.adjugate();
        e = -e;
    }
    Mat2<T> out = Mat2<T>::identity();
    while (e > 0) {
        if (e & 1) out = out * base;
        base = base * base;
        e >>= 1;
    }
    return out;
}

/// det(M) == 1 exactly, or within `tol` for doubles.
template <class T>
bool has_unit_det(const Mat2<T>& m, double tol = 1e-12) {
    if constexpr (is_exact_v<T>) return m.det() == 1;
    else return std::abs(m.det() - 1.0) <= tol;
}

/// The matrix of `w` under a -> ma, b -> mb. Inverses are taken as adjugates, so
/// the result is a polynomial in the entries; the determinant-1 precondition is
/// checked exactly (rationals) or to `tol` (doubles).
template <class T>
Mat2<T> evaluate(const Word& w, const Mat2<T>& ma, const Mat2<T>& mb, double tol = 1e-12) {
    if (!has_unit_det(ma, tol)) throw determinant_error("evaluate: det(Ma) != 1 (" + ma.to_string() + ")");
    if (!has_unit_det(mb, tol)) throw determinant_error("evaluate: det(Mb) != 1 (" + mb.to_string() + ")");
    Mat2<T> out = Mat2<T>::identity();
    for (const auto& s : w.syllables()) out = out * power(s.gen == Gen::a ? ma : mb, s.exp);
    return out;
}

/// Same as evaluate() without the determinant check; used inside Newton iterations
/// where the determinant constraint is only satisfied at convergence.
template <class T>
Mat2<T> evaluate_unchecked(const Word& w, const Mat2<T>& ma, const Mat2<T>& mb) {
    Mat2<T> out = Mat2<T>::identity();
    for (const auto& s : w.syllables()) out = out * power(s.gen == Gen::a ? ma : mb, s.exp);
    return out;
}

}  // namespace charvar
