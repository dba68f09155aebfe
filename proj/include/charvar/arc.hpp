#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <gmpxx.h>

#include "charvar/exact_linalg.hpp"
#include "charvar/mat2.hpp"
#include "charvar/pretzel.hpp"
#include "charvar/sl2.hpp"
#include "charvar/trace_poly.hpp"
#include "charvar/word.hpp"

namespace charvar {

// ---------------------------------------------------------------------------
// Exact curve analysis at the limiting character.

struct CurveAnalysis {
    QMatrix3 jacobian;
    std::size_t rank = 0;
    /// Kernel basis vector when the rank is 2, scaled so its first entry is 12
    /// (primitive integer vector when the first entry vanishes).
    QTriple kernel;
    QMatrix3 longitude_hessian;
    mpq_class hessian_on_kernel;
    /// Word name -> gradient of its trace lies outside the Jacobian row span.
    std::map<std::string, bool> local_coordinate;
};

inline CurveAnalysis analyze_curve(const FamilyInstance& f) {
    CurveAnalysis out;
    out.jacobian = jacobian_at(f.curve_eqs, f.chi);
    out.rank = exact::rank(to_exact(out.jacobian));
    const auto ns = exact::nullspace(to_exact(out.jacobian));
    if (ns.size() == 1) {
        const auto prim = exact::primitive_integer(ns.front());
        out.kernel = {mpq_class(prim[0]), mpq_class(prim[1]), mpq_class(prim[2])};
        if (out.kernel[0] != 0) {
            const mpq_class s = mpq_class(12) / out.kernel[0];
            for (auto& v : out.kernel) v *= s;
        }
    } else {
        out.kernel = {0, 0, 0};
    }
    out.longitude_hessian = hessian_at(trace_polynomial(f.longitude), f.chi);
    out.hessian_on_kernel = quadratic_form(out.longitude_hessian, out.kernel);
    const std::pair<const char*, Word> words[] = {{"m1", f.m1}, {"m2", f.m2}, {"m1l1", f.m1 * f.l1}};
    for (const auto& [name, w] : words)
        out.local_coordinate[name] = outside_row_span(out.jacobian, gradient_at(trace_polynomial(w), f.chi));
    return out;
}

// ---------------------------------------------------------------------------
// Continuation of representation arcs in the 8 entries of (Ma, Mb).

enum class Termination { MaxSteps, MeridianTraceCeiling, MeridianMinimum, NewtonFailure, ClassChange };

inline const char* to_string(Termination t) {
    switch (t) {
        case Termination::MaxSteps: return "maxSteps";
        case Termination::MeridianTraceCeiling: return "meridianTraceCeiling";
        case Termination::MeridianMinimum: return "meridianMinimum";
        case Termination::NewtonFailure: return "newtonFailure";
        case Termination::ClassChange: return "classChange";
    }
    return "?";
}

class numerical_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ArcConfig {
    double step_size = 1e-3;
    long max_steps = 2000;
    /// +1 follows the branch whose gluing conjugator has determinant +1.
    int direction = 1;
    double trace_ceiling = 1e6;
    /// Solve the t = 0 conjugator in rational arithmetic.
    bool exact_start = true;
};

inline constexpr double kNewtonTolerance = 1e-10;
inline constexpr int kNewtonMaxIterations = 25;

struct RepSample {
    double t = 0;
    DMat2 ma, mb;
    std::array<double, 3> character{};
    /// Largest absolute violation among the 2 determinant and 3 trace equations.
    double residual = 0;
    DMat2 m1, m2, l1, l2, longitude;
    /// Gluing conjugator: scaled to |det| = 1 with positive trace, or unit norm when singular.
    DMat2 conjugator;
    DetSign det_sign = DetSign::Singular;
    std::size_t conjugator_nullity = 0;
    double longitude_trace = 0;
    /// tr(T) for a determinant +1 conjugator T, NaN otherwise.
    double meridian_trace = std::numeric_limits<double>::quiet_NaN();
    /// |tr(rho[m1, l1]) - 2| computed as |det(M1 L1 - L1 M1)|.
    double margin = 0;
};

struct Arc {
    long n = 0;
    ArcConfig config;
    std::vector<RepSample> samples;
    Termination termination = Termination::MaxSteps;
    /// First accepted step length.
    double initial_step = 0;
    /// Frozen entry indices into (a11, a12, a21, a22, b11, b12, b21, b22).
    std::array<int, 3> pins{};
};

namespace detail {

using Vec8 = Eigen::Matrix<double, 8, 1>;

inline DMat2 mat_a(const Vec8& x) { return {x(0), x(1), x(2), x(3)}; }
inline DMat2 mat_b(const Vec8& x) { return {x(4), x(5), x(6), x(7)}; }

/// Trace of a letter word and its gradient in the 8 entries, from prefix and suffix products.
inline double trace_gradient(const std::vector<Letter>& w, const Vec8& x, double* grad) {
    const DMat2 A = mat_a(x), B = mat_b(x);
    auto mat = [&](Letter l) { return l == 1 ? A : l == -1 ? A.adjugate() : l == 2 ? B : B.adjugate(); };
    const std::size_t k = w.size();
    std::vector<DMat2> pre(k + 1), suf(k + 1);
    pre[0] = DMat2::identity();
    for (std::size_t i = 0; i < k; ++i) pre[i + 1] = pre[i] * mat(w[i]);
    suf[k] = DMat2::identity();
    for (std::size_t i = k; i-- > 0;) suf[i] = mat(w[i]) * suf[i + 1];
    if (grad) {
        std::fill(grad, grad + 8, 0.0);
        for (std::size_t i = 0; i < k; ++i) {
            const DMat2 q = suf[i + 1] * pre[i];
            const int off = (w[i] == 1 || w[i] == -1) ? 0 : 4;
            if (w[i] > 0) {
                grad[off + 0] += q.a11;
                grad[off + 1] += q.a21;
                grad[off + 2] += q.a12;
                grad[off + 3] += q.a22;
            } else {
                grad[off + 3] += q.a11;
                grad[off + 1] -= q.a21;
                grad[off + 2] -= q.a12;
                grad[off + 0] += q.a22;
            }
        }
    }
    return pre[k].trace();
}

class ArcSystem {
public:
    explicit ArcSystem(const FamilyInstance& f)
        : m1_(f.m1.letters()), m2_(f.m2.letters()), l1_(f.l1.letters()), l2_(f.l2.letters()),
          m1l1_((f.m1 * f.l1).letters()), m2l2_((f.m2 * f.l2).letters()), f_(f) {
        x0_ << f.rho_a.a11.get_d(), f.rho_a.a12.get_d(), f.rho_a.a21.get_d(), f.rho_a.a22.get_d(), f.rho_b.a11.get_d(),
            f.rho_b.a12.get_d(), f.rho_b.a21.get_d(), f.rho_b.a22.get_d();
        choose_pins();
    }

    const Vec8& x0() const { return x0_; }
    const std::array<int, 3>& pins() const { return pins_; }

    /// The 5 constraints and their 5 x 8 Jacobian.
    Eigen::Matrix<double, 5, 1> constraints(const Vec8& x, Eigen::Matrix<double, 5, 8>* jac = nullptr) const {
        Eigen::Matrix<double, 5, 1> f;
        const DMat2 A = mat_a(x), B = mat_b(x);
        f(0) = A.det() - 1;
        f(1) = B.det() - 1;
        double g1[8], g2[8];
        const std::pair<const std::vector<Letter>*, const std::vector<Letter>*> eqs[] = {{&m1_, &m2_}, {&l1_, &l2_}, {&m1l1_, &m2l2_}};
        if (jac) {
            jac->setZero();
            (*jac)(0, 0) = A.a22;
            (*jac)(0, 1) = -A.a21;
            (*jac)(0, 2) = -A.a12;
            (*jac)(0, 3) = A.a11;
            (*jac)(1, 4) = B.a22;
            (*jac)(1, 5) = -B.a21;
            (*jac)(1, 6) = -B.a12;
            (*jac)(1, 7) = B.a11;
        }
        for (int r = 0; r < 3; ++r) {
            f(2 + r) = trace_gradient(*eqs[r].first, x, jac ? g1 : nullptr) - trace_gradient(*eqs[r].second, x, jac ? g2 : nullptr);
            if (jac)
                for (int c = 0; c < 8; ++c) (*jac)(2 + r, c) = g1[c] - g2[c];
        }
        return f;
    }

    /// Unit null vector of the constraint Jacobian stacked with the pins.
    Vec8 tangent(const Vec8& x, const Vec8* orient) const {
        Eigen::Matrix<double, 5, 8> j;
        constraints(x, &j);
        Eigen::Matrix<double, 8, 8> aug = Eigen::Matrix<double, 8, 8>::Zero();
        aug.topRows<5>() = j;
        for (int r = 0; r < 3; ++r) aug(5 + r, pins_[static_cast<std::size_t>(r)]) = 1;
        Eigen::JacobiSVD<Eigen::Matrix<double, 8, 8>> svd(aug, Eigen::ComputeFullV);
        Vec8 tau = svd.matrixV().col(7);
        if (orient && tau.dot(*orient) < 0) tau = -tau;
        return tau;
    }

    /// Corrector: Gauss-Newton on constraints, pins and the arclength condition.
    std::optional<Vec8> step(const Vec8& x, const Vec8& tau, double h, double* last_residual = nullptr) const {
        Vec8 y = x + h * tau;
        double prev = std::numeric_limits<double>::infinity();
        for (int it = 0; it <= kNewtonMaxIterations; ++it) {
            Eigen::Matrix<double, 5, 8> j;
            const auto f = constraints(y, &j);
            Eigen::Matrix<double, 9, 1> r;
            Eigen::Matrix<double, 9, 8> m = Eigen::Matrix<double, 9, 8>::Zero();
            r.head<5>() = f;
            m.topRows<5>() = j;
            for (int p = 0; p < 3; ++p) {
                const int idx = pins_[static_cast<std::size_t>(p)];
                r(5 + p) = y(idx) - x0_(idx);
                m(5 + p, idx) = 1;
            }
            r(8) = tau.dot(y - x) - h;
            m.row(8) = tau.transpose();
            const double res = r.cwiseAbs().maxCoeff();
            if (last_residual) *last_residual = f.cwiseAbs().maxCoeff();
            if (!std::isfinite(res)) return std::nullopt;
            if (res <= 1e-13 || (it > 0 && res <= kNewtonTolerance && res > 0.5 * prev)) break;
            if (it == kNewtonMaxIterations) break;
            prev = res;
            const Vec8 d = m.jacobiSvd(Eigen::ComputeFullU | Eigen::ComputeFullV).solve(-r);
            y += d;
        }
        const auto f = constraints(y);
        const double res = f.cwiseAbs().maxCoeff();
        if (last_residual) *last_residual = res;
        if (!(res <= kNewtonTolerance)) return std::nullopt;
        return y;
    }

    RepSample sample(const Vec8& x, double t) const {
        RepSample s;
        s.t = t;
        s.ma = mat_a(x);
        s.mb = mat_b(x);
        s.character = {s.ma.trace(), s.mb.trace(), (s.ma * s.mb).trace()};
        s.residual = constraints(x).cwiseAbs().maxCoeff();
        fill_images(s);
        const std::pair<DMat2, DMat2> pairs[] = {{s.m1, s.m2}, {s.l1, s.l2}};
        const auto sol = solve_conjugator(std::span<const std::pair<DMat2, DMat2>>(pairs));
        set_conjugator(s, sol.candidate, sol.det_sign, sol.nullspace_dim);
        return s;
    }

    /// The t = 0 sample: rho_n itself.
    RepSample start_sample(bool exact) const {
        if (!exact) return sample(x0_, 0.0);
        RepSample s;
        s.ma = to_double(f_.rho_a);
        s.mb = to_double(f_.rho_b);
        s.character = {f_.chi[0].get_d(), f_.chi[1].get_d(), f_.chi[2].get_d()};
        s.residual = constraints(x0_).cwiseAbs().maxCoeff();
        fill_images(s);
        const std::pair<QMat2, QMat2> pairs[] = {{f_.rho(f_.m1), f_.rho(f_.m2)}, {f_.rho(f_.l1), f_.rho(f_.l2)}};
        const auto sol = solve_conjugator(std::span<const std::pair<QMat2, QMat2>>(pairs));
        DMat2 g = to_double(sol.candidate);
        if (g.frobenius() > 0) g = g.scaled(1.0 / g.frobenius());
        set_conjugator(s, g, sol.det_sign, sol.nullspace_dim);
        return s;
    }

    /// |tr| of the conjugator scaled to |det| = 1, whatever its determinant sign.
    static double meridian_scale(const RepSample& s) { return std::abs(s.conjugator.trace()); }

private:
    void fill_images(RepSample& s) const {
        auto ev = [&](const std::vector<Letter>& w) { return evaluate_unchecked(Word::from_letters(w), s.ma, s.mb); };
        s.m1 = ev(m1_);
        s.m2 = ev(m2_);
        s.l1 = ev(l1_);
        s.l2 = ev(l2_);
        s.longitude = s.m1 * s.l1 * s.m1.adjugate() * s.l1.adjugate();
        s.longitude_trace = s.longitude.trace();
        s.margin = std::abs((s.m1 * s.l1 - s.l1 * s.m1).det());
    }

    static void set_conjugator(RepSample& s, const DMat2& g, DetSign sign, std::size_t nullity) {
        s.conjugator = g;
        s.det_sign = sign;
        s.conjugator_nullity = nullity;
        s.meridian_trace = sign == DetSign::Plus ? g.trace() : std::numeric_limits<double>::quiet_NaN();
    }

    // Pins maximize the smallest singular value of the pinned rows restricted to
    // the conjugation orbit, so the pins remove exactly the gauge directions.
    void choose_pins() {
        const DMat2 A = mat_a(x0_), B = mat_b(x0_);
        const DMat2 basis[] = {{1, 0, 0, -1}, {0, 1, 0, 0}, {0, 0, 1, 0}};
        Eigen::Matrix<double, 8, 3> gauge;
        for (int c = 0; c < 3; ++c) {
            const DMat2 da = basis[c] * A - A * basis[c], db = basis[c] * B - B * basis[c];
            gauge.col(c) << da.a11, da.a12, da.a21, da.a22, db.a11, db.a12, db.a21, db.a22;
        }
        double best = -1;
        for (int i = 0; i < 8; ++i)
            for (int j = i + 1; j < 8; ++j)
                for (int k = j + 1; k < 8; ++k) {
                    Eigen::Matrix3d p;
                    p.row(0) = gauge.row(i);
                    p.row(1) = gauge.row(j);
                    p.row(2) = gauge.row(k);
                    const double smin = Eigen::JacobiSVD<Eigen::Matrix3d>(p).singularValues()(2);
                    if (smin > best + 1e-12) {
                        best = smin;
                        pins_ = {i, j, k};
                    }
                }
        if (best <= 1e-8) throw numerical_error("continuation: no gauge pins give a full-rank augmented system");
    }

    std::vector<Letter> m1_, m2_, l1_, l2_, m1l1_, m2l2_;
    const FamilyInstance& f_;
    Vec8 x0_;
    std::array<int, 3> pins_{};
};

}  // namespace detail

/// Follows the arc of representations leaving rho_n. Step lengths ramp up
/// geometrically from the largest power-of-two fraction of `step_size` whose first
/// sample already has meridian trace at the ceiling, and the arc ends at the
/// meridian trace minimum, after `max_steps` steps, or on corrector failure.
inline Arc continue_arc(const FamilyInstance& f, const ArcConfig& cfg = {}) {
    if (!(cfg.step_size >= 1e-6 && cfg.step_size <= 1e-1)) throw std::invalid_argument("continue_arc: stepSize must lie in [1e-6, 1e-1]");
    if (cfg.direction != 1 && cfg.direction != -1) throw std::invalid_argument("continue_arc: direction must be +1 or -1");
    if (cfg.max_steps < 0) throw std::invalid_argument("continue_arc: maxSteps must be >= 0");
    const CurveAnalysis ca = analyze_curve(f);
    if (ca.rank != 2) throw numerical_error("continue_arc: Jacobian rank at chi_n is " + std::to_string(ca.rank) + ", not 2");

    const detail::ArcSystem sys(f);
    Arc arc;
    arc.n = f.n;
    arc.config = cfg;
    arc.pins = sys.pins();
    if (cfg.max_steps == 0) return arc;

    const detail::Vec8 x0 = sys.x0();
    const detail::Vec8 tau0 = sys.tangent(x0, nullptr);

    // Probe both tangent orientations for the determinant +1 gluing branch.
    int plus = 0;
    for (int sgn : {1, -1}) {
        const auto y = sys.step(x0, sgn * tau0, 1e-4);
        if (y && sys.sample(*y, 1e-4).det_sign == DetSign::Plus) {
            plus = sgn;
            break;
        }
    }
    if (plus == 0) throw numerical_error("continue_arc: neither direction glues with a determinant +1 conjugator");
    detail::Vec8 tau = (plus * cfg.direction) * tau0;

    arc.samples.push_back(sys.start_sample(cfg.exact_start));

    // Initial step: halve until the first sample reaches the meridian ceiling.
    double h = cfg.step_size;
    std::optional<detail::Vec8> first;
    RepSample first_sample;
    double last_res = 0;
    while (true) {
        first = sys.step(x0, tau, h, &last_res);
        if (first) {
            first_sample = sys.sample(*first, h);
            if (detail::ArcSystem::meridian_scale(first_sample) >= cfg.trace_ceiling) break;
        }
        h /= 2;
        if (h < 1e-30) {
            if (!first) throw numerical_error("continue_arc: corrector diverged at the first step (residual " + std::to_string(last_res) + ")");
            throw numerical_error("continue_arc: meridian trace never reaches the ceiling near chi_n");
        }
    }
    arc.initial_step = h;
    detail::Vec8 x = *first;
    tau = sys.tangent(x, &tau);
    arc.samples.push_back(first_sample);
    double t = h;
    h = std::min(cfg.step_size, 1.5 * h);

    while (static_cast<long>(arc.samples.size()) - 1 < cfg.max_steps) {
        std::optional<detail::Vec8> y;
        double hh = h;
        for (int attempt = 0; attempt < 12 && !y; ++attempt, hh /= 2) y = sys.step(x, tau, hh);
        if (!y) {
            arc.termination = Termination::NewtonFailure;
            return arc;
        }
        h = hh * 2;
        const RepSample s = sys.sample(*y, t + h);
        const RepSample& prev = arc.samples.back();
        if (s.det_sign != prev.det_sign || s.margin == 0) {
            arc.termination = Termination::ClassChange;
            return arc;
        }
        if (s.det_sign == DetSign::Plus && s.meridian_trace > prev.meridian_trace) {
            arc.termination = Termination::MeridianMinimum;
            return arc;
        }
        if (arc.samples.size() > 2 && detail::ArcSystem::meridian_scale(s) > cfg.trace_ceiling) {
            arc.termination = Termination::MeridianTraceCeiling;
            return arc;
        }
        t += h;
        tau = sys.tangent(*y, &tau);
        x = *y;
        arc.samples.push_back(s);
        h = std::min(cfg.step_size, 1.5 * h);
    }
    arc.termination = Termination::MaxSteps;
    return arc;
}

// ---------------------------------------------------------------------------
// Gluing over the HNN extension.

class gluing_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kGlueTolerance = 1e-8;

struct GluedRep {
    DMat2 ma, mb;
    /// Image of the stable letter (the meridian).
    DMat2 t;
    /// max ||T A - B T|| / (||T|| (||A|| + ||B||)) over the (m1, m2) and (l1, l2) pairs.
    double relation_residual = 0;
    /// ||T L - L T|| / (2 ||T|| ||L||) for the longitude L.
    double peripheral_residual = 0;
};

inline double relative_relation_residual(const DMat2& t, const DMat2& a, const DMat2& b) {
    return (t * a - b * t).frobenius() / (t.frobenius() * (a.frobenius() + b.frobenius()));
}

inline GluedRep glue_hnn(const RepSample& s) {
    if (s.det_sign != DetSign::Plus)
        throw gluing_error(std::string("glue_hnn: conjugator determinant sign is ") + to_string(s.det_sign) + ", not +1");
    GluedRep g{s.ma, s.mb, s.conjugator, 0, 0};
    g.relation_residual = std::max(relative_relation_residual(g.t, s.m1, s.m2), relative_relation_residual(g.t, s.l1, s.l2));
    g.peripheral_residual = relative_relation_residual(g.t, s.longitude, s.longitude);
    if (g.relation_residual > kGlueTolerance)
        throw gluing_error("glue_hnn: relation residual " + std::to_string(g.relation_residual) + " exceeds tolerance");
    if (g.peripheral_residual > kGlueTolerance)
        throw gluing_error("glue_hnn: meridian does not commute with the longitude (residual " + std::to_string(g.peripheral_residual) + ")");
    return g;
}

/// Conjugator data from the meridian pair alone, or from both pairs.
inline ConjugatorSolution<double> glue_pairs(const RepSample& s, bool include_longitude_pair = true) {
    std::vector<std::pair<DMat2, DMat2>> pairs{{s.m1, s.m2}};
    if (include_longitude_pair) pairs.push_back({s.l1, s.l2});
    return solve_conjugator(std::span<const std::pair<DMat2, DMat2>>(pairs));
}

inline double irreducibility_margin(const RepSample& s) { return s.margin; }

// ---------------------------------------------------------------------------
// Diagnostics along an arc.

/// Translation numbers of the longitude images, lifted continuously from t = 0.
inline std::vector<TranslationNumber> longitude_translation_numbers(const Arc& arc) {
    std::vector<DMat2> path;
    path.reserve(arc.samples.size());
    for (const auto& s : arc.samples) path.push_back(s.longitude);
    return translation_numbers_along_path(path);
}

struct MarginFit {
    double exponent = 0;
    double coefficient = 0;
    /// Half the Hessian quadratic form on the kernel vector.
    double predicted = 0;
    std::size_t points = 0;
};

/// Least-squares fit of log(margin) against log|s|, where s is the kernel-direction
/// coordinate of the character displacement from chi_n, over s_lo <= |s| <= s_hi.
inline MarginFit fit_margin(const Arc& arc, const FamilyInstance& f, const CurveAnalysis& ca, double s_lo = 1e-8,
                            double s_hi = 1e-5) {
    MarginFit fit;
    const std::array<double, 3> v{ca.kernel[0].get_d(), ca.kernel[1].get_d(), ca.kernel[2].get_d()};
    const double vv = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    fit.predicted = ca.hessian_on_kernel.get_d() / 2;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& smp : arc.samples) {
        if (smp.t == 0 || smp.margin <= 0) continue;
        double s = 0;
        for (int i = 0; i < 3; ++i) s += (smp.character[static_cast<std::size_t>(i)] - f.chi[static_cast<std::size_t>(i)].get_d()) * v[static_cast<std::size_t>(i)];
        s = std::abs(s / vv);
        if (s < s_lo || s > s_hi) continue;
        const double lx = std::log(s), ly = std::log(smp.margin);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++fit.points;
    }
    if (fit.points < 2) return fit;
    const double k = static_cast<double>(fit.points);
    fit.exponent = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    fit.coefficient = std::exp((sy - fit.exponent * sx) / k);
    return fit;
}

}  // namespace charvar
