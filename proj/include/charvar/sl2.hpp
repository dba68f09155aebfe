#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <gmpxx.h>

#include "charvar/exact_linalg.hpp"
#include "charvar/mat2.hpp"

namespace charvar {

enum class MatClass { Elliptic, Parabolic, Hyperbolic };

inline const char* to_string(MatClass c) {
    switch (c) {
        case MatClass::Elliptic: return "elliptic";
        case MatClass::Parabolic: return "parabolic";
        case MatClass::Hyperbolic: return "hyperbolic";
    }
    return "?";
}

/// Tolerance on |tr| = 2 and on det = 1 for double matrices.
inline constexpr double kClassTolerance = 1e-9;

template <class T>
MatClass classify(const Mat2<T>& m) {
    if (!has_unit_det(m, kClassTolerance)) throw determinant_error("classify: det != 1 for " + m.to_string());
    if constexpr (is_exact_v<T>) {
        const mpq_class t = abs(m.trace());
        if (t < 2) return MatClass::Elliptic;
        if (t == 2) return MatClass::Parabolic;
        return MatClass::Hyperbolic;
    } else {
        const double t = std::abs(m.trace());
        if (t < 2 - kClassTolerance) return MatClass::Elliptic;
        if (t <= 2 + kClassTolerance) return MatClass::Parabolic;
        return MatClass::Hyperbolic;
    }
}

/// Off-diagonal difference b - c. Its sign separates the two real conjugacy
/// classes sharing a parabolic or elliptic trace.
template <class T>
T delta(const Mat2<T>& m) {
    return m.a12 - m.a21;
}

enum class Conjugacy { ConjugateDetPlus, ConjugateDetMinus, NotApplicable };

inline const char* to_string(Conjugacy c) {
    switch (c) {
        case Conjugacy::ConjugateDetPlus: return "ConjugateDetPlus";
        case Conjugacy::ConjugateDetMinus: return "ConjugateDetMinus";
        case Conjugacy::NotApplicable: return "NotApplicable";
    }
    return "?";
}

namespace detail {
template <class T>
int sign_of(const T& v) {
    if constexpr (is_exact_v<T>) return sgn(v);
    else return (v > 0) - (v < 0);
}
}  // namespace detail

/// For two same-trace matrices that are both elliptic or both parabolic, decides
/// whether a determinant +1 or determinant -1 matrix conjugates one to the other.
template <class T>
Conjugacy same_trace_conjugacy(const Mat2<T>& a, const Mat2<T>& b) {
    if constexpr (is_exact_v<T>) {
        if (a.trace() != b.trace()) throw std::invalid_argument("same_trace_conjugacy: traces differ");
    } else {
        if (std::abs(a.trace() - b.trace()) > kClassTolerance * std::max(1.0, std::abs(a.trace())))
            throw std::invalid_argument("same_trace_conjugacy: traces differ");
    }
    const MatClass ca = classify(a);
    const MatClass cb = classify(b);
    if (ca != cb || ca == MatClass::Hyperbolic) return Conjugacy::NotApplicable;
    const int sa = detail::sign_of(delta(a));
    const int sb = detail::sign_of(delta(b));
    // delta vanishes only on +-I, which is conjugate to nothing else.
    if (sa == 0 || sb == 0) return sa == sb ? Conjugacy::ConjugateDetPlus : Conjugacy::NotApplicable;
    return sa == sb ? Conjugacy::ConjugateDetPlus : Conjugacy::ConjugateDetMinus;
}

enum class ConjugationKind { Parabolic, Elliptic };

/// Delta of P U P^-1 computed by direct products.
template <class T>
T conjugated_delta(const Mat2<T>& p, const Mat2<T>& u) {
    if (p.det() == 0) throw determinant_error("conjugation by a singular matrix");
    return delta(p * u * p.inverse());
}

template <class T>
Mat2<T> unit_parabolic(const T& x) {
    return {T(1), x, T(0), T(1)};
}

template <class T>
Mat2<T> rotation(const T& c, const T& s) {
    return {c, -s, s, c};
}

/// Closed form (a^2 + c^2) x / det(P) for Delta(P [[1,x],[0,1]] P^-1).
template <class T>
T parabolic_delta_formula(const Mat2<T>& p, const T& x) {
    const T d = p.det();
    if (d == 0) throw determinant_error("conjugation by a singular matrix");
    return (p.a11 * p.a11 + p.a21 * p.a21) * x / d;
}

/// Closed form -(a^2 + b^2 + c^2 + d^2) sin(theta) / det(P) for the rotation by theta.
template <class T>
T elliptic_delta_formula(const Mat2<T>& p, const T& sin_theta) {
    const T d = p.det();
    if (d == 0) throw determinant_error("conjugation by a singular matrix");
    return -(p.a11 * p.a11 + p.a12 * p.a12 + p.a21 * p.a21 + p.a22 * p.a22) * sin_theta / d;
}

/// Delta of P U P^-1 where U is the unit parabolic with offset `x_or_theta` or the
/// rotation by angle `x_or_theta`.
inline double conjugation_delta_formulas(const DMat2& p, double x_or_theta, ConjugationKind kind) {
    if (kind == ConjugationKind::Parabolic) return conjugated_delta(p, unit_parabolic(x_or_theta));
    return conjugated_delta(p, rotation(std::cos(x_or_theta), std::sin(x_or_theta)));
}

// ---------------------------------------------------------------------------
// Conjugator solving: G A_i = B_i G for all pairs.

enum class DetSign { Plus, Minus, Singular };

inline const char* to_string(DetSign s) {
    switch (s) {
        case DetSign::Plus: return "+1";
        case DetSign::Minus: return "-1";
        case DetSign::Singular: return "singular";
    }
    return "?";
}

inline int to_int(DetSign s) { return s == DetSign::Plus ? 1 : s == DetSign::Minus ? -1 : 0; }

template <class T>
struct ConjugatorSolution {
    std::size_t nullspace_dim = 0;
    /// Spanning solution, scaled to |det| = 1 when nonsingular (unit Frobenius norm otherwise)
    /// with nonnegative trace.
    Mat2<T> candidate;
    DetSign det_sign = DetSign::Singular;
    std::vector<Mat2<T>> basis;
    /// max_i ||G A_i - B_i G||_F / ||G||_F for the candidate.
    double residual = 0;

    bool underdetermined() const { return nullspace_dim > 1; }
};

namespace detail {

// Row block of G A - B G = 0 in the unknowns (g11, g12, g21, g22).
template <class T>
std::array<std::array<T, 4>, 4> conjugator_rows(const Mat2<T>& a, const Mat2<T>& b) {
    const T A[2][2] = {{a.a11, a.a12}, {a.a21, a.a22}};
    const T B[2][2] = {{b.a11, b.a12}, {b.a21, b.a22}};
    std::array<std::array<T, 4>, 4> rows{};
    for (auto& r : rows) r.fill(T(0));
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            auto& r = rows[static_cast<std::size_t>(2 * i + j)];
            for (int k = 0; k < 2; ++k) {
                r[static_cast<std::size_t>(2 * i + k)] += A[k][j];
                r[static_cast<std::size_t>(2 * k + j)] -= B[i][k];
            }
        }
    return rows;
}

template <class T>
double relation_residual(const Mat2<T>& g, std::span<const std::pair<Mat2<T>, Mat2<T>>> pairs) {
    const double gn = to_double(g).frobenius();
    if (gn == 0) return 0;
    double worst = 0;
    for (const auto& [a, b] : pairs) worst = std::max(worst, to_double(g * a - b * g).frobenius() / gn);
    return worst;
}

template <class T>
Mat2<T> normalize_trace_sign(Mat2<T> g) {
    const T t = g.trace();
    int s = sign_of(t);
    if (s == 0) s = sign_of(g.a11) != 0 ? sign_of(g.a11) : sign_of(g.a12) != 0 ? sign_of(g.a12) : sign_of(g.a21);
    return s < 0 ? -g : g;
}

}  // namespace detail

/// Relative determinant below which a unit-norm float conjugator counts as singular.
inline constexpr double kSingularDetTolerance = 32 * std::numeric_limits<double>::epsilon();

/// Float flavor: SVD of the stacked 4k x 4 system; nullity from the singular values
/// below 1e-8 of the largest.
inline ConjugatorSolution<double> solve_conjugator(std::span<const std::pair<DMat2, DMat2>> pairs) {
    if (pairs.empty()) throw std::invalid_argument("solve_conjugator: empty pair list");
    Eigen::MatrixXd sys(static_cast<Eigen::Index>(4 * pairs.size()), 4);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto rows = detail::conjugator_rows(pairs[p].first, pairs[p].second);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) sys(static_cast<Eigen::Index>(4 * p) + i, j) = rows[i][j];
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(sys, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double smax = sv(0);
    std::size_t rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > 1e-8 * smax) ++rank;
    ConjugatorSolution<double> out;
    out.nullspace_dim = smax == 0 ? 4 : 4 - rank;
    const Eigen::MatrixXd& v = svd.matrixV();
    for (std::size_t k = 0; k < out.nullspace_dim; ++k) {
        const Eigen::Index c = 3 - static_cast<Eigen::Index>(k);
        out.basis.push_back({v(0, c), v(1, c), v(2, c), v(3, c)});
    }
    if (out.basis.empty()) {
        out.candidate = {0, 0, 0, 0};
        out.det_sign = DetSign::Singular;
        out.residual = 0;
        return out;
    }
    DMat2 g = out.basis.front();
    if (out.nullspace_dim > 1) {
        // Project the identity onto the solution space; fall back to the first basis vector.
        Eigen::Vector4d id(1, 0, 0, 1), proj = Eigen::Vector4d::Zero();
        for (const auto& b : out.basis) {
            Eigen::Vector4d bv(b.a11, b.a12, b.a21, b.a22);
            proj += bv.dot(id) * bv;
        }
        if (proj.norm() > 1e-8) g = {proj(0), proj(1), proj(2), proj(3)};
    }
    g = g.scaled(1.0 / g.frobenius());
    const double d = g.det();
    if (std::abs(d) <= kSingularDetTolerance) {
        out.det_sign = DetSign::Singular;
    } else {
        out.det_sign = d > 0 ? DetSign::Plus : DetSign::Minus;
        g = g.scaled(1.0 / std::sqrt(std::abs(d)));
    }
    out.candidate = detail::normalize_trace_sign(g);
    out.residual = detail::relation_residual<double>(out.candidate, pairs);
    return out;
}

/// Exact flavor: rational nullspace elimination. `Singular` when det vanishes on the
/// whole solution space; otherwise the sign is that of the candidate.
inline ConjugatorSolution<mpq_class> solve_conjugator(std::span<const std::pair<QMat2, QMat2>> pairs) {
    if (pairs.empty()) throw std::invalid_argument("solve_conjugator: empty pair list");
    exact::Matrix sys;
    for (const auto& [a, b] : pairs) {
        for (const auto& r : detail::conjugator_rows(a, b)) sys.push_back({r[0], r[1], r[2], r[3]});
    }
    const auto ns = exact::nullspace(sys);
    ConjugatorSolution<mpq_class> out;
    out.nullspace_dim = ns.size();
    for (const auto& v : ns) out.basis.push_back({v[0], v[1], v[2], v[3]});
    if (ns.empty()) {
        out.det_sign = DetSign::Singular;
        return out;
    }
    // det is a quadratic form on the solution space; it vanishes identically iff
    // every diagonal and polar coefficient vanishes.
    bool form_zero = true;
    for (std::size_t i = 0; i < out.basis.size() && form_zero; ++i) {
        if (out.basis[i].det() != 0) form_zero = false;
        for (std::size_t j = i + 1; j < out.basis.size() && form_zero; ++j)
            if ((out.basis[i] + out.basis[j]).det() - out.basis[i].det() - out.basis[j].det() != 0) form_zero = false;
    }
    QMat2 g = out.basis.front();
    if (out.nullspace_dim > 1) {
        // Prefer the identity when it solves the system (the centralizer case).
        bool id_solves = true;
        for (const auto& [a, b] : pairs) id_solves = id_solves && a == b;
        if (id_solves) g = QMat2::identity();
        else {
            for (const auto& b : out.basis)
                if (b.det() != 0) {
                    g = b;
                    break;
                }
        }
    }
    const mpq_class d = g.det();
    out.det_sign = form_zero || d == 0 ? DetSign::Singular : (d > 0 ? DetSign::Plus : DetSign::Minus);
    out.candidate = detail::normalize_trace_sign(g);
    out.residual = detail::relation_residual<mpq_class>(out.candidate, pairs);
    return out;
}

// ---------------------------------------------------------------------------
// Eigen-data and the projective line of directions.

struct EigenPair {
    double value;
    /// Unit representative of the fixed direction, first nonzero coordinate positive.
    std::array<double, 2> direction;
};

namespace detail {
inline std::array<double, 2> normalize_direction(double p, double q) {
    const double n = std::hypot(p, q);
    p /= n;
    q /= n;
    if (p < 0 || (p == 0 && q < 0)) {
        p = -p;
        q = -q;
    }
    return {p, q};
}

inline std::array<double, 2> kernel_direction(const DMat2& m, double lambda) {
    // Null vector of M - lambda I from whichever row is better conditioned.
    const double r1p = m.a11 - lambda, r1q = m.a12;
    const double r2p = m.a21, r2q = m.a22 - lambda;
    if (std::hypot(r1p, r1q) >= std::hypot(r2p, r2q)) return normalize_direction(r1q, -r1p);
    return normalize_direction(r2q, -r2p);
}
}  // namespace detail

/// Hyperbolic: both eigenpairs, expanding one first. Parabolic: the fixed direction.
inline std::vector<EigenPair> eigen_data(const DMat2& m) {
    const MatClass c = classify(m);
    if (c == MatClass::Elliptic) throw std::invalid_argument("eigen_data: elliptic matrix has no real eigenvector");
    const double t = m.trace();
    if (c == MatClass::Parabolic) {
        const double lambda = t > 0 ? 1.0 : -1.0;
        if (std::abs(m.a12) + std::abs(m.a21) + std::abs(m.a11 - m.a22) <= 1e-12) return {{lambda, {1.0, 0.0}}};
        return {{lambda, detail::kernel_direction(m, lambda)}};
    }
    const double disc = std::sqrt(t * t - 4);
    // Larger-magnitude root first; the other from the product of the roots.
    const double big = (t + std::copysign(disc, t)) / 2;
    const double small = 1.0 / big;
    return {{big, detail::kernel_direction(m, big)}, {small, detail::kernel_direction(m, small)}};
}

/// Angle in [0, pi) of the direction of v on the projective line.
inline double projective_angle(double p, double q) {
    double a = std::atan2(q, p);
    if (a < 0) a += std::numbers::pi;
    if (a >= std::numbers::pi) a -= std::numbers::pi;
    return a;
}

// ---------------------------------------------------------------------------
// Translation numbers in the universal cover, with a full pi-turn of the
// projective line counted as one unit.

class continuity_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A lift of the projective action of `base`, recorded by its value at one tracked direction.
struct LiftedElement {
    DMat2 base;
    double base_angle;   ///< tracked direction theta_0
    double angle_track;  ///< lifted image F(theta_0)
};

namespace detail {
inline double image_angle(const DMat2& m, double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    return projective_angle(m.a11 * c + m.a12 * s, m.a21 * c + m.a22 * s);
}

inline double mod_pi(double a) {
    a = std::fmod(a, std::numbers::pi);
    if (a < 0) a += std::numbers::pi;
    return a;
}
}  // namespace detail

/// F(theta) for the lift: determined from F(theta_0) by monotonicity and F(theta + pi) = F(theta) + pi.
inline double lifted_map(const LiftedElement& e, double theta) {
    const double pi = std::numbers::pi;
    const double rel = theta - e.base_angle;
    const double k = std::floor(rel / pi);
    const double phi = rel - k * pi;
    const double sweep = detail::mod_pi(detail::image_angle(e.base, e.base_angle + phi) -
                                        detail::image_angle(e.base, e.base_angle));
    return e.angle_track + k * pi + sweep;
}

/// The lift of a non-elliptic `m` that fixes a lift of its fixed direction, i.e.
/// the lift with translation number 0.
inline LiftedElement lift_start(const DMat2& m, double base_angle = 0.0) {
    if (classify(m) == MatClass::Elliptic) throw std::invalid_argument("lift_start: path must start at a non-elliptic element");
    const auto eig = eigen_data(m);
    const double fixed = projective_angle(eig.front().direction[0], eig.front().direction[1]);
    const LiftedElement anchor{m, fixed, fixed};
    return {m, base_angle, lifted_map(anchor, base_angle)};
}

/// Continues the lift from `prev` to `next` along the straight segment between them.
inline LiftedElement lift_step(const LiftedElement& prev, const DMat2& next, int depth = 0) {
    if (depth == 0 && (next - prev.base).frobenius() >= 0.5)
        throw continuity_error("translation path: consecutive entries differ by Frobenius distance >= 0.5");
    if (next.det() <= 0) throw continuity_error("translation path: orientation-reversing entry");
    const double raw = detail::image_angle(next, prev.base_angle);
    const double cand = raw + std::numbers::pi * std::round((prev.angle_track - raw) / std::numbers::pi);
    if (std::abs(cand - prev.angle_track) < std::numbers::pi / 8) return {next, prev.base_angle, cand};
    if (depth > 40) throw continuity_error("translation path: lift did not resolve under subdivision");
    DMat2 mid = (prev.base + next).scaled(0.5);
    mid = mid.scaled(1.0 / std::sqrt(mid.det()));
    return lift_step(lift_step(prev, mid, depth + 1), next, depth + 1);
}

struct TranslationNumber {
    double value = 0;
    /// Endpoint was elliptic: `value` is the real rotation number from iteration.
    bool elliptic = false;
};

/// Oracle from the iterate limit: the first half of the iterations is burn-in and
/// the displacement per iterate is measured over the second half, which removes
/// the bounded transient of the starting direction.
inline double iterated_translation_number(const LiftedElement& e, std::size_t iterations = 1u << 16) {
    const std::size_t half = std::max<std::size_t>(1, iterations / 2);
    double theta = e.base_angle;
    for (std::size_t i = 0; i < half; ++i) theta = lifted_map(e, theta);
    const double start = theta;
    for (std::size_t i = 0; i < half; ++i) theta = lifted_map(e, theta);
    return (theta - start) / (std::numbers::pi * static_cast<double>(half));
}

/// Displacement of a lifted fixed direction, divided by pi. The fixed direction
/// from eigen_data seeds the integer part; it is then refined as a zero of
/// F(theta) - theta - k pi by bracketing and bisection, since eigenvectors of
/// near-identity matrices are poorly conditioned.
inline TranslationNumber translation_number(const LiftedElement& e) {
    const double pi = std::numbers::pi;
    if (classify(e.base) == MatClass::Elliptic) return {iterated_translation_number(e), true};
    const auto eig = eigen_data(e.base);
    const double fixed = projective_angle(eig.front().direction[0], eig.front().direction[1]);
    const double k = std::round((lifted_map(e, fixed) - fixed) / pi);
    auto g = [&](double th) { return lifted_map(e, th) - th - k * pi; };
    constexpr int kGrid = 64;
    double best_th = fixed, best_g = g(fixed);
    double prev_th = fixed, prev_g = best_g;
    for (int i = 1; i <= kGrid && best_g != 0; ++i) {
        const double th = fixed + pi * i / kGrid;
        const double gv = g(th);
        if (std::abs(gv) < std::abs(best_g)) {
            best_g = gv;
            best_th = th;
        }
        if ((prev_g < 0) != (gv < 0)) {
            double lo = prev_th, hi = th, glo = prev_g;
            for (int it = 0; it < 100 && hi - lo > 0; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (mid == lo || mid == hi) break;
                const double gm = g(mid);
                if ((gm < 0) == (glo < 0)) {
                    lo = mid;
                    glo = gm;
                } else {
                    hi = mid;
                }
            }
            const double glo2 = g(lo), ghi2 = g(hi);
            best_g = std::abs(glo2) < std::abs(ghi2) ? glo2 : ghi2;
            best_th = std::abs(glo2) < std::abs(ghi2) ? lo : hi;
            break;
        }
        prev_th = th;
        prev_g = gv;
    }
    (void)best_th;
    return {k + best_g / pi, false};
}

/// Lifts `path` continuously from its first entry (translation number 0) and returns
/// the translation number at every entry.
inline std::vector<TranslationNumber> translation_numbers_along_path(std::span<const DMat2> path,
                                                                     double base_angle = 0.0) {
    std::vector<TranslationNumber> out;
    if (path.empty()) return out;
    LiftedElement lift = lift_start(path.front(), base_angle);
    out.push_back(translation_number(lift));
    for (std::size_t i = 1; i < path.size(); ++i) {
        lift = lift_step(lift, path[i]);
        out.push_back(translation_number(lift));
    }
    return out;
}

inline TranslationNumber translation_number_along_path(std::span<const DMat2> path, double base_angle = 0.0) {
    if (path.empty()) throw std::invalid_argument("translation_number_along_path: empty path");
    LiftedElement lift = lift_start(path.front(), base_angle);
    for (std::size_t i = 1; i < path.size(); ++i) lift = lift_step(lift, path[i]);
    return translation_number(lift);
}

}  // namespace charvar
