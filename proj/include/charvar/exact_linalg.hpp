#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include <gmpxx.h>

namespace charvar::exact {

using Vector = std::vector<mpq_class>;
using Matrix = std::vector<Vector>;

struct Echelon {
    Matrix rref;
    std::vector<std::size_t> pivots;
};

/// Reduced row echelon form by Gauss-Jordan elimination over Q.
inline Echelon row_reduce(Matrix m) {
    Echelon out;
    const std::size_t rows = m.size();
    const std::size_t cols = rows == 0 ? 0 : m[0].size();
    std::size_t r = 0;
    for (std::size_t c = 0; c < cols && r < rows; ++c) {
        std::size_t p = r;
        while (p < rows && m[p][c] == 0) ++p;
        if (p == rows) continue;
        std::swap(m[p], m[r]);
        const mpq_class inv = 1 / m[r][c];
        for (auto& v : m[r]) v *= inv;
        for (std::size_t i = 0; i < rows; ++i) {
            if (i == r || m[i][c] == 0) continue;
            const mpq_class f = m[i][c];
            for (std::size_t j = c; j < cols; ++j) m[i][j] -= f * m[r][j];
        }
        out.pivots.push_back(c);
        ++r;
    }
    out.rref = std::move(m);
    return out;
}

inline std::size_t rank(const Matrix& m) { return row_reduce(m).pivots.size(); }

/// Basis of {v : m v = 0}, one vector per free column.
inline std::vector<Vector> nullspace(const Matrix& m) {
    const std::size_t cols = m.empty() ? 0 : m[0].size();
    const Echelon e = row_reduce(m);
    std::vector<bool> is_pivot(cols, false);
    for (auto c : e.pivots) is_pivot[c] = true;
    std::vector<Vector> basis;
    for (std::size_t f = 0; f < cols; ++f) {
        if (is_pivot[f]) continue;
        Vector v(cols, mpq_class(0));
        v[f] = 1;
        for (std::size_t i = 0; i < e.pivots.size(); ++i) v[e.pivots[i]] = -e.rref[i][f];
        basis.push_back(std::move(v));
    }
    return basis;
}

/// Scales a rational vector to a primitive integer vector whose first nonzero entry is positive.
inline std::vector<mpz_class> primitive_integer(const Vector& v) {
    mpz_class l = 1;
    for (const auto& q : v) l = lcm(l, q.get_den());
    std::vector<mpz_class> out;
    mpz_class g = 0;
    for (const auto& q : v) {
        mpq_class s = q * l;
        out.push_back(s.get_num());
        g = gcd(g, s.get_num());
    }
    if (g != 0)
        for (auto& z : out) z /= g;
    for (const auto& z : out) {
        if (z == 0) continue;
        if (z < 0)
            for (auto& w : out) w = -w;
        break;
    }
    return out;
}

template <class T>
T det3(const std::array<std::array<T, 3>, 3>& m) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

}  // namespace charvar::exact
