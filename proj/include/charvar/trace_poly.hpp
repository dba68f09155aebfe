#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "charvar/word.hpp"

namespace charvar {

/// Exponent triple (i, j, k) for x^i y^j z^k.
using Monomial = std::array<int, 3>;

/// Graded lexicographic order, highest term first.
struct GrlexGreater {
    bool operator()(const Monomial& p, const Monomial& q) const {
        const int dp = p[0] + p[1] + p[2];
        const int dq = q[0] + q[1] + q[2];
        if (dp != dq) return dp > dq;
        return p > q;
    }
};

template <class T>
T scalar_from(const mpz_class& c);
template <>
inline double scalar_from<double>(const mpz_class& c) { return c.get_d(); }
template <>
inline mpq_class scalar_from<mpq_class>(const mpz_class& c) { return mpq_class(c); }
template <>
inline mpz_class scalar_from<mpz_class>(const mpz_class& c) { return c; }

/// Sparse polynomial in x = tr(a), y = tr(b), z = tr(ab) with big-integer coefficients.
/// Zero coefficients are never stored.
class TracePolynomial {
public:
    using Terms = std::map<Monomial, mpz_class, GrlexGreater>;

    TracePolynomial() = default;
    TracePolynomial(long c) {  // NOLINT(google-explicit-constructor)
        if (c != 0) terms_[{0, 0, 0}] = c;
    }

    static TracePolynomial monomial(Monomial m, const mpz_class& c = 1) {
        TracePolynomial p;
        if (c != 0) p.terms_[m] = c;
        return p;
    }
    static TracePolynomial x() { return monomial({1, 0, 0}); }
    static TracePolynomial y() { return monomial({0, 1, 0}); }
    static TracePolynomial z() { return monomial({0, 0, 1}); }

    const Terms& terms() const noexcept { return terms_; }
    bool is_zero() const noexcept { return terms_.empty(); }
    std::size_t size() const noexcept { return terms_.size(); }

    int degree() const {
        int d = 0;
        for (const auto& [m, c] : terms_) d = std::max(d, m[0] + m[1] + m[2]);
        return d;
    }

    mpz_class coefficient(const Monomial& m) const {
        auto it = terms_.find(m);
        return it == terms_.end() ? mpz_class(0) : it->second;
    }

    TracePolynomial& operator+=(const TracePolynomial& o) {
        for (const auto& [m, c] : o.terms_) add_term(m, c);
        return *this;
    }
    TracePolynomial& operator-=(const TracePolynomial& o) {
        for (const auto& [m, c] : o.terms_) add_term(m, -c);
        return *this;
    }
    TracePolynomial operator-() const {
        TracePolynomial p = *this;
        for (auto& [m, c] : p.terms_) c = -c;
        return p;
    }
    friend TracePolynomial operator+(TracePolynomial a, const TracePolynomial& b) { return a += b; }
    friend TracePolynomial operator-(TracePolynomial a, const TracePolynomial& b) { return a -= b; }

    friend TracePolynomial operator*(const TracePolynomial& a, const TracePolynomial& b) {
        TracePolynomial out;
        if (a.is_zero() || b.is_zero()) return out;
        const TracePolynomial& small = a.size() <= b.size() ? a : b;
        const TracePolynomial& large = a.size() <= b.size() ? b : a;
        mpz_class prod;
        for (const auto& [ms, cs] : small.terms_) {
            for (const auto& [ml, cl] : large.terms_) {
                prod = cs * cl;
                out.add_term({ms[0] + ml[0], ms[1] + ml[1], ms[2] + ml[2]}, prod);
            }
        }
        return out;
    }
    TracePolynomial& operator*=(const TracePolynomial& o) { return *this = *this * o; }

    friend bool operator==(const TracePolynomial& a, const TracePolynomial& b) { return a.terms_ == b.terms_; }

    /// Formal partial derivative in variable 0 (x), 1 (y) or 2 (z).
    TracePolynomial derivative(int var) const {
        TracePolynomial out;
        for (const auto& [m, c] : terms_) {
            if (m[var] == 0) continue;
            Monomial d = m;
            --d[var];
            out.add_term(d, c * m[var]);
        }
        return out;
    }

    template <class T>
    T evaluate(const std::array<T, 3>& point) const {
        std::array<std::vector<T>, 3> powers;
        std::array<int, 3> maxexp{0, 0, 0};
        for (const auto& [m, c] : terms_)
            for (int v = 0; v < 3; ++v) maxexp[v] = std::max(maxexp[v], m[v]);
        for (int v = 0; v < 3; ++v) {
            powers[v].resize(static_cast<std::size_t>(maxexp[v]) + 1);
            powers[v][0] = T(1);
            for (int e = 1; e <= maxexp[v]; ++e) powers[v][e] = powers[v][e - 1] * point[v];
        }
        T acc(0);
        for (const auto& [m, c] : terms_) {
            T term = scalar_from<T>(c);
            term *= powers[0][m[0]];
            term *= powers[1][m[1]];
            term *= powers[2][m[2]];
            acc += term;
        }
        return acc;
    }

    /// Sum of |c| * |x|^i |y|^j |z|^k: the scale against which float evaluation error is judged.
    double magnitude(const std::array<double, 3>& point) const {
        double acc = 0;
        for (const auto& [m, c] : terms_) {
            double t = std::abs(c.get_d());
            for (int v = 0; v < 3; ++v) t *= std::pow(std::abs(point[v]), m[v]);
            acc += t;
        }
        return acc;
    }

    /// Graded-lex order, explicit `^` exponents and `*` products: `x^2*y - 2*z + 1`.
    std::string to_string() const {
        if (terms_.empty()) return "0";
        static const char* names[3] = {"x", "y", "z"};
        std::string out;
        bool first = true;
        for (const auto& [m, c] : terms_) {
            const bool neg = c < 0;
            mpz_class mag = abs(c);
            if (first) out += neg ? "-" : "";
            else out += neg ? " - " : " + ";
            first = false;
            std::string mono;
            for (int v = 0; v < 3; ++v) {
                if (m[v] == 0) continue;
                if (!mono.empty()) mono += '*';
                mono += names[v];
                if (m[v] > 1) mono += '^' + std::to_string(m[v]);
            }
            if (mono.empty()) out += mag.get_str();
            else if (mag == 1) out += mono;
            else out += mag.get_str() + '*' + mono;
        }
        return out;
    }

private:
    void add_term(const Monomial& m, const mpz_class& c) {
        if (c == 0) return;
        auto [it, inserted] = terms_.try_emplace(m, c);
        if (!inserted) {
            it->second += c;
            if (it->second == 0) terms_.erase(it);
        }
    }

    Terms terms_;
};

inline std::array<TracePolynomial, 3> gradient(const TracePolynomial& p) {
    return {p.derivative(0), p.derivative(1), p.derivative(2)};
}

inline std::array<std::array<TracePolynomial, 3>, 3> hessian(const TracePolynomial& p) {
    std::array<std::array<TracePolynomial, 3>, 3> h;
    for (int i = 0; i < 3; ++i) {
        const TracePolynomial di = p.derivative(i);
        for (int j = 0; j < 3; ++j) h[i][j] = di.derivative(j);
    }
    return h;
}

template <class T>
T poly_eval(const TracePolynomial& p, const std::array<T, 3>& point) {
    return p.evaluate(point);
}

/// Compiles words to Fricke trace polynomials using tr(X)tr(Y) = tr(XY) + tr(XY^-1),
/// invariance under inversion and cyclic permutation. Results are memoized on the
/// minimal cyclic rotation of the word or its inverse. Not thread-safe; use one
/// compiler per thread (trace_polynomial() does this).
class TraceCompiler {
public:
    TracePolynomial compile(const Word& w) { return trace(w.letters()); }

    std::size_t memo_size() const noexcept { return memo_.size(); }

private:
    using Letters = std::vector<Letter>;

    static TracePolynomial coordinate(Letter l) {
        return (l == 1 || l == -1) ? TracePolynomial::x() : TracePolynomial::y();
    }

    // T_k(s): T_0 = 2, T_1 = s, T_k = s T_{k-1} - T_{k-2}; the trace of g^k when tr(g) = s.
    static TracePolynomial chebyshev_trace(const TracePolynomial& s, std::size_t k) {
        TracePolynomial prev = 2, cur = s;
        if (k == 0) return prev;
        for (std::size_t i = 1; i < k; ++i) {
            TracePolynomial next = s * cur - prev;
            prev = std::move(cur);
            cur = std::move(next);
        }
        return cur;
    }

    // S_k(x): S_{-1} = 0, S_0 = 1, S_k = x S_{k-1} - S_{k-2}.
    const TracePolynomial& second_kind(int var, std::size_t k) {
        auto& table = second_kind_[var];
        if (table.empty()) table.push_back(1);
        const TracePolynomial s = var == 0 ? TracePolynomial::x() : TracePolynomial::y();
        while (table.size() <= k) {
            const std::size_t i = table.size();
            TracePolynomial next = s * table[i - 1];
            if (i >= 2) next -= table[i - 2];
            table.push_back(std::move(next));
        }
        return table[k];
    }

    TracePolynomial trace(const Letters& input) {
        Letters w = detail::cyclic_reduce(input);
        if (w.empty()) return 2;
        Letters key = detail::conjugacy_key(w);
        if (auto it = memo_.find(key); it != memo_.end()) return it->second;
        TracePolynomial result = reduce(key);
        memo_.emplace(std::move(key), result);
        return result;
    }

    TracePolynomial reduce(Letters w) {
        const std::size_t n = w.size();
        if (std::all_of(w.begin(), w.end(), [&](Letter l) { return l == w[0]; }))
            return chebyshev_trace(coordinate(w[0]), n);

        // Rotate to a syllable boundary so no syllable wraps around.
        std::size_t start = 0;
        while (w[start] == w[(start + n - 1) % n]) ++start;
        std::rotate(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(start), w.end());

        struct Run {
            std::size_t pos, len;
        };
        std::vector<Run> runs;
        for (std::size_t i = 0; i < n;) {
            std::size_t j = i;
            while (j < n && w[j] == w[i]) ++j;
            runs.push_back({i, j - i});
            i = j;
        }

        const Run* longest = &runs[0];
        for (const auto& r : runs)
            if (r.len > longest->len) longest = &r;

        if (longest->len >= 2) {
            // w ~ g^m R:  tr(g^m R) = S_{m-1} tr(gR) - S_{m-2} tr(R)
            std::rotate(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(longest->pos), w.end());
            const std::size_t m = longest->len;
            const Letter g = w[0];
            const int var = (g == 1 || g == -1) ? 0 : 1;
            Letters rest(w.begin() + static_cast<std::ptrdiff_t>(m), w.end());
            Letters g_rest;
            g_rest.reserve(rest.size() + 1);
            g_rest.push_back(g);
            g_rest.insert(g_rest.end(), rest.begin(), rest.end());
            const TracePolynomial t1 = trace(g_rest);
            const TracePolynomial t0 = trace(rest);
            TracePolynomial out = second_kind(var, m - 1) * t1;
            out -= second_kind(var, m - 2) * t0;
            return out;
        }

        // Every syllable has exponent +-1. Look for a generator used with both signs.
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                if (w[j] != -w[i]) continue;
                // w ~ X Y with X = g U, Y = g^-1 V:  tr(XY) = tr(X) tr(Y) - tr(X Y^-1)
                Letters rot(w.begin() + static_cast<std::ptrdiff_t>(i), w.end());
                rot.insert(rot.end(), w.begin(), w.begin() + static_cast<std::ptrdiff_t>(i));
                const std::size_t split = j - i;
                Letters x(rot.begin(), rot.begin() + static_cast<std::ptrdiff_t>(split));
                Letters y(rot.begin() + static_cast<std::ptrdiff_t>(split), rot.end());
                Letters xyinv = x;
                const Letters yinv = detail::invert_letters(y);
                xyinv.insert(xyinv.end(), yinv.begin(), yinv.end());
                const TracePolynomial tx = trace(x);
                const TracePolynomial ty = trace(y);
                TracePolynomial out = tx * ty;
                out -= trace(xyinv);
                return out;
            }
        }

        // w = (g h)^k with fixed signs: Chebyshev in tr(gh).
        const bool same_sign = (w[0] > 0) == (w[1] > 0);
        const TracePolynomial s = same_sign ? TracePolynomial::z()
                                            : TracePolynomial::x() * TracePolynomial::y() - TracePolynomial::z();
        return chebyshev_trace(s, n / 2);
    }

    std::map<Letters, TracePolynomial> memo_;
    std::array<std::vector<TracePolynomial>, 2> second_kind_;
};

/// Trace polynomial of `w`, memoized per thread.
inline TracePolynomial trace_polynomial(const Word& w) {
    thread_local TraceCompiler compiler;
    return compiler.compile(w);
}

}  // namespace charvar
