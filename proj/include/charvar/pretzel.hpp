#pragma once

#include <array>
#include <cctype>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <gmpxx.h>

#include "charvar/exact_linalg.hpp"
#include "charvar/mat2.hpp"
#include "charvar/sl2.hpp"
#include "charvar/trace_poly.hpp"
#include "charvar/word.hpp"

namespace charvar {

using QTriple = std::array<mpq_class, 3>;
using QMatrix3 = std::array<std::array<mpq_class, 3>, 3>;

/// Default ceiling on n; polynomial sizes grow linearly with n.
inline constexpr long kDefaultMaxN = 10000;

/// The (-3, 3, 2n+1) pretzel family data.
struct FamilyInstance {
    long n = 0;
    Word m1, m2, l1, l2, longitude;
    QMat2 rho_a, rho_b;
    QTriple chi;
    /// tr(m1) - tr(m2), tr(l1) - tr(l2), tr(m1 l1) - tr(m2 l2).
    std::array<TracePolynomial, 3> curve_eqs;

    QMat2 rho(const Word& w) const { return evaluate(w, rho_a, rho_b); }
};

inline FamilyInstance make_family(long n, long max_n = kDefaultMaxN) {
    if (n < 1) throw std::invalid_argument("make_family: n must be >= 1 (got " + std::to_string(n) + ")");
    if (n > max_n) throw std::invalid_argument("make_family: n exceeds the cap " + std::to_string(max_n));
    FamilyInstance f;
    f.n = n;
    const Word a = Word::generator(Gen::a), b = Word::generator(Gen::b);
    const Word B = b.inverse();
    f.m1 = a.pow(n + 1) * b * a * b;
    f.m2 = a.pow(n + 1) * b * a;
    f.l1 = B * a * b;
    f.l2 = B * a * b * a;
    f.longitude = f.m1 * f.l1 * f.m1.inverse() * f.l1.inverse();
    f.rho_a = {-1, 1, 0, -1};
    f.rho_b = {mpq_class(2 * n + 1), mpq_class(n), 2, 1};
    f.chi = {-2, mpq_class(2 * n + 2), mpq_class(-2 * n)};
    TraceCompiler tc;
    f.curve_eqs = {tc.compile(f.m1) - tc.compile(f.m2), tc.compile(f.l1) - tc.compile(f.l2),
                   tc.compile(f.m1 * f.l1) - tc.compile(f.m2 * f.l2)};
    return f;
}

// ---------------------------------------------------------------------------
// Closed forms as displayed for the family.

namespace closed_form {

inline mpq_class sign_pow(long n) { return n % 2 == 0 ? 1 : -1; }

inline QMat2 m1(long n) { return QMat2{mpq_class(-2 * n - 1), mpq_class(-n), mpq_class(4 * n), mpq_class(2 * n - 1)}.scaled(sign_pow(n)); }
inline QMat2 m2(long n) { return QMat2{-1, 0, 2, -1}.scaled(sign_pow(n)); }
inline QMat2 l1() { return {1, 1, -4, -3}; }
inline QMat2 l2() { return {-1, 0, 4, -1}; }
inline QMat2 m1l1(long n) { return QMat2{mpq_class(2 * n - 1), mpq_class(n - 1), mpq_class(-4 * n), mpq_class(3 - 2 * n)}.scaled(sign_pow(n)); }
inline QMat2 m2l2(long n) { return QMat2{1, 0, -6, 1}.scaled(sign_pow(n)); }

inline QMatrix3 jacobian(long n) {
    const mpq_class N(n), s = sign_pow(n + 1);
    QMatrix3 j;
    j[0] = {s * (4 * N * N * N * N + 4 * N * N * N - 7 * N * N - 4 * N) / 3, s * (2 * N * N - N - 1), s * (2 * N * N + N - 2)};
    j[1] = {(2 * N + 1) * (2 * N + 1), 4, 4};
    j[2] = {s * (-4 * N * N * N * N + 4 * N * N * N + 43 * N * N + 26 * N + 3) / 3, s * (-2 * N * N + 5 * N + 9),
            s * (-2 * N * N + 3 * N + 14)};
    return j;
}

inline QTriple grad_m2(long n) {
    const mpq_class N(n), s = sign_pow(n + 1);
    return {s * 2 * N * (N + 1) * (N + 2) / 3, s * (N + 1), s * (N + 2)};
}

inline QTriple kernel(long n) {
    const mpq_class N(n);
    return {12, -(4 * N * N * N + 12 * N * N + 17 * N + 6), 4 * N * N * N + 5 * N + 3};
}

inline QMatrix3 hessian(long n) {
    const mpq_class N(n);
    const mpq_class p = N + 1, q = 2 * N + 1;
    QMatrix3 h;
    h[0] = {8 * N * N * p * p * q * q / 9, 8 * N * N * p * q / 3, 8 * N * p * p * q / 3};
    h[1] = {8 * N * N * p * q / 3, 8 * N * N, 8 * N * p};
    h[2] = {8 * N * p * p * q / 3, 8 * N * p, 8 * p * p};
    return h;
}

}  // namespace closed_form

// ---------------------------------------------------------------------------
// Exact curve data at the limiting character.

inline QMatrix3 jacobian_at(const std::array<TracePolynomial, 3>& eqs, const QTriple& p) {
    QMatrix3 j;
    for (std::size_t r = 0; r < 3; ++r) {
        const auto g = gradient(eqs[r]);
        for (std::size_t c = 0; c < 3; ++c) j[r][c] = g[c].evaluate(p);
    }
    return j;
}

inline QTriple gradient_at(const TracePolynomial& p, const QTriple& at) {
    const auto g = gradient(p);
    return {g[0].evaluate(at), g[1].evaluate(at), g[2].evaluate(at)};
}

inline QMatrix3 hessian_at(const TracePolynomial& p, const QTriple& at) {
    const auto h = hessian(p);
    QMatrix3 out;
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c) out[r][c] = h[r][c].evaluate(at);
    return out;
}

inline exact::Matrix to_exact(const QMatrix3& m) {
    exact::Matrix out;
    for (const auto& r : m) out.push_back({r[0], r[1], r[2]});
    return out;
}

inline QTriple mat_vec(const QMatrix3& m, const QTriple& v) {
    QTriple out;
    for (std::size_t r = 0; r < 3; ++r) out[r] = m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2];
    return out;
}

inline mpq_class quadratic_form(const QMatrix3& h, const QTriple& v) {
    const QTriple hv = mat_vec(h, v);
    return v[0] * hv[0] + v[1] * hv[1] + v[2] * hv[2];
}

/// True iff `v` lies outside the row span of `m`.
inline bool outside_row_span(const QMatrix3& m, const QTriple& v) {
    exact::Matrix aug = to_exact(m);
    aug.push_back({v[0], v[1], v[2]});
    return exact::rank(aug) > exact::rank(to_exact(m));
}

inline std::string format(const QTriple& v) {
    return "(" + v[0].get_str() + "," + v[1].get_str() + "," + v[2].get_str() + ")";
}

inline std::string format(const QMatrix3& m) {
    return "[" + format(m[0]) + "," + format(m[1]) + "," + format(m[2]) + "]";
}

// ---------------------------------------------------------------------------
// Verification report.

struct LemmaEntry {
    std::string name;
    bool pass = false;
    /// Non-gating entries are recorded but do not affect the overall verdict.
    bool gating = true;
    std::string witness;
};

struct LemmaReport {
    long n = 0;
    std::vector<LemmaEntry> entries;

    QMatrix3 jacobian;
    mpq_class minor;
    std::size_t rank = 0;
    QTriple grad_m1, grad_m2;
    QMatrix3 hessian;
    mpq_class hessian_on_kernel;

    bool passed() const {
        for (const auto& e : entries)
            if (e.gating && !e.pass) return false;
        return true;
    }

    const LemmaEntry* find(std::string_view name) const {
        for (const auto& e : entries)
            if (e.name == name) return &e;
        return nullptr;
    }

    std::size_t gating_count() const {
        std::size_t k = 0;
        for (const auto& e : entries) k += e.gating;
        return k;
    }

    std::size_t gating_passed() const {
        std::size_t k = 0;
        for (const auto& e : entries) k += e.gating && e.pass;
        return k;
    }

    std::string summary_line() const {
        return "n=" + std::to_string(n) + ": " + (passed() ? "PASS" : "FAIL") + " (" + std::to_string(gating_passed()) + "/" +
               std::to_string(gating_count()) + " checks)";
    }

    std::string to_text() const {
        std::ostringstream os;
        os << "family (-3,3," << 2 * n + 1 << "), n=" << n << "\n";
        for (const auto& e : entries) {
            os << "  " << (e.pass ? "PASS" : (e.gating ? "FAIL" : "DIFF")) << (e.gating ? "  " : "* ") << e.name;
            if (!e.witness.empty()) os << "  " << e.witness;
            os << "\n";
        }
        os << "  (* recorded, not gating)\n";
        os << summary_line() << "\n";
        return os.str();
    }

    /// One tab-separated line per entry: n, name, verdict, gating flag, witness.
    std::string to_key_value() const {
        std::ostringstream os;
        for (const auto& e : entries)
            os << n << '\t' << e.name << '\t' << (e.pass ? "PASS" : "FAIL") << '\t' << (e.gating ? "gating" : "info") << '\t'
               << e.witness << "\n";
        return os.str();
    }
};

/// Exact check of every claim made about the family at the limiting character.
inline LemmaReport verify_lemma(const FamilyInstance& f) {
    LemmaReport rep;
    rep.n = f.n;
    const long n = f.n;
    auto add = [&](std::string name, bool pass, std::string witness, bool gating = true) {
        rep.entries.push_back({std::move(name), pass, gating, std::move(witness)});
    };
    auto eq_display = [&](const char* name, const QMat2& got, const QMat2& shown, bool gating) {
        add(name, got == shown, "computed " + got.to_string() + " displayed " + shown.to_string(), gating);
    };

    const QMat2 m1 = f.rho(f.m1), m2 = f.rho(f.m2), l1 = f.rho(f.l1), l2 = f.rho(f.l2);
    const QMat2 m1l1 = f.rho(f.m1 * f.l1), m2l2 = f.rho(f.m2 * f.l2);

    // (1) conjugate parabolics.
    add("m1.parabolic", classify(m1) == MatClass::Parabolic, "tr=" + m1.trace().get_str());
    add("m2.parabolic", classify(m2) == MatClass::Parabolic, "tr=" + m2.trace().get_str());
    eq_display("m1.display", m1, closed_form::m1(n), true);
    eq_display("m2.display", m2, closed_form::m2(n), true);
    {
        const bool same_tr = m1.trace() == m2.trace();
        const Conjugacy c = same_tr ? same_trace_conjugacy(m1, m2) : Conjugacy::NotApplicable;
        add("m.conjugate", c == Conjugacy::ConjugateDetPlus,
            std::string(to_string(c)) + " delta=" + delta(m1).get_str() + "," + delta(m2).get_str());
    }

    // (2) chi on the curve.
    {
        const QTriple tri{f.rho_a.trace(), f.rho_b.trace(), (f.rho_a * f.rho_b).trace()};
        add("chi.character", tri == f.chi, "traces " + format(tri) + " chi " + format(f.chi));
        QTriple res;
        for (std::size_t i = 0; i < 3; ++i) res[i] = f.curve_eqs[i].evaluate(f.chi);
        add("chi.on_curve", res[0] == 0 && res[1] == 0 && res[2] == 0, "residues " + format(res));
        const mpq_class direct = m1.trace(), compiled = trace_polynomial(f.m1).evaluate(f.chi);
        add("m1.trace_agreement", direct == compiled, "evaluated " + direct.get_str() + " compiled " + compiled.get_str());
    }

    // (3) smooth point.
    rep.jacobian = jacobian_at(f.curve_eqs, f.chi);
    {
        const QMatrix3 shown = closed_form::jacobian(n);
        add("jacobian.display", rep.jacobian == shown, format(rep.jacobian));
        const mpq_class d = exact::det3(rep.jacobian);
        add("jacobian.det_zero", d == 0, "det=" + d.get_str());
        rep.minor = rep.jacobian[0][0] * rep.jacobian[1][1] - rep.jacobian[0][1] * rep.jacobian[1][0];
        add("jacobian.minor_nonzero", rep.minor != 0, "minor=" + rep.minor.get_str());
        rep.rank = exact::rank(to_exact(rep.jacobian));
        add("jacobian.rank2", rep.rank == 2, "rank=" + std::to_string(rep.rank));
    }

    // (4) local coordinate, for both meridian words.
    rep.grad_m2 = gradient_at(trace_polynomial(f.m2), f.chi);
    rep.grad_m1 = gradient_at(trace_polynomial(f.m1), f.chi);
    add("grad_m2.display", rep.grad_m2 == closed_form::grad_m2(n), format(rep.grad_m2));
    add("m2.local_coordinate", outside_row_span(rep.jacobian, rep.grad_m2), "grad " + format(rep.grad_m2));
    add("m1.local_coordinate", outside_row_span(rep.jacobian, rep.grad_m1), "grad " + format(rep.grad_m1));

    // (5) nonconstant longitude trace.
    {
        const QTriple k = closed_form::kernel(n);
        const QTriple jk = mat_vec(rep.jacobian, k);
        add("kernel.annihilated", jk[0] == 0 && jk[1] == 0 && jk[2] == 0, "v=" + format(k) + " Jv=" + format(jk));
        const TracePolynomial lp = trace_polynomial(f.longitude);
        const mpq_class lt = lp.evaluate(f.chi);
        const QTriple lg = gradient_at(lp, f.chi);
        add("longitude.trace_two", lt == 2 && lg == QTriple{0, 0, 0}, "tr=" + lt.get_str() + " grad=" + format(lg));
        rep.hessian = hessian_at(lp, f.chi);
        add("hessian.display", rep.hessian == closed_form::hessian(n), format(rep.hessian));
        rep.hessian_on_kernel = quadratic_form(rep.hessian, k);
        add("hessian.kernel_nonzero", rep.hessian_on_kernel != 0, "vHv=" + rep.hessian_on_kernel.get_str());
    }

    // (6) non-gluable limiting character.
    {
        const Conjugacy c = l1.trace() == l2.trace() ? same_trace_conjugacy(l1, l2) : Conjugacy::NotApplicable;
        const mpq_class prod = delta(l1) * delta(l2);
        add("l.nonconjugate", c == Conjugacy::ConjugateDetMinus && prod < 0,
            std::string(to_string(c)) + " delta product=" + prod.get_str());
        add("longitude.identity", f.rho(f.longitude) == QMat2::identity(), f.rho(f.longitude).to_string());
    }

    eq_display("l1.display", l1, closed_form::l1(), false);
    eq_display("l2.display", l2, closed_form::l2(), false);
    eq_display("m1l1.display", m1l1, closed_form::m1l1(n), false);
    eq_display("m2l2.display", m2l2, closed_form::m2l2(n), false);
    return rep;
}

inline LemmaReport verify_lemma(long n) { return verify_lemma(make_family(n)); }

// ---------------------------------------------------------------------------
// Lin presentation of the odd pretzel knot group.

struct LinPresentation {
    long p = 0, q = 0, r = 0;
    std::array<std::string, 2> relators;
};

namespace detail {
inline std::string power_atom(const std::string& atom, long e) {
    if (e == 0) return "";
    if (e == 1) return atom;
    return atom + "^" + std::to_string(e);
}

inline std::string join_atoms(const std::vector<std::string>& atoms) {
    std::string out;
    for (const auto& a : atoms) {
        if (a.empty()) continue;
        if (!out.empty()) out += ' ';
        out += a;
    }
    return out;
}
}  // namespace detail

/// Relators t a^{r+1} (ba)^q b t^-1 = a^{r+1} (ba)^q and t b^{p+1} (ab)^q t^-1 = b^{p+1} (ab)^q a,
/// with unit exponents collapsed and zero powers dropped.
inline LinPresentation lin_presentation(long p, long q, long r) {
    using detail::join_atoms;
    using detail::power_atom;
    LinPresentation out{p, q, r, {}};
    out.relators[0] = join_atoms({"t", power_atom("a", r + 1), power_atom("(ba)", q), "b", "t^-1"}) + " = " +
                      join_atoms({power_atom("a", r + 1), power_atom("(ba)", q)});
    out.relators[1] = join_atoms({"t", power_atom("b", p + 1), power_atom("(ab)", q), "t^-1"}) + " = " +
                      join_atoms({power_atom("b", p + 1), power_atom("(ab)", q), "a"});
    if (out.relators[0].substr(out.relators[0].size() - 3) == " = ") out.relators[0] += "1";
    return out;
}

/// Freely reduced word over {a, b, t}; letters are (generator char, exponent).
using TWord = std::vector<std::pair<char, long>>;

namespace detail {
inline void push_reduced(TWord& w, char g, long e) {
    if (e == 0) return;
    if (!w.empty() && w.back().first == g) {
        w.back().second += e;
        if (w.back().second == 0) w.pop_back();
        return;
    }
    w.push_back({g, e});
}

inline TWord parse_tword_seq(std::string_view s, std::size_t& i, bool nested);

inline long parse_exponent(std::string_view s, std::size_t& i) {
    while (i < s.size() && s[i] == ' ') ++i;
    if (i >= s.size() || s[i] != '^') return 1;
    ++i;
    bool neg = false;
    if (i < s.size() && (s[i] == '-' || s[i] == '+')) neg = s[i++] == '-';
    const std::size_t start = i;
    long v = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) v = v * 10 + (s[i++] - '0');
    if (i == start) throw parse_error("expected exponent", i);
    return neg ? -v : v;
}

inline TWord parse_tword_seq(std::string_view s, std::size_t& i, bool nested) {
    TWord out;
    while (i < s.size()) {
        const char c = s[i];
        if (c == ' ') {
            ++i;
        } else if (c == ')') {
            if (!nested) throw parse_error("unbalanced ')'", i);
            return out;
        } else if (c == '(') {
            ++i;
            const TWord inner = parse_tword_seq(s, i, true);
            if (i >= s.size() || s[i] != ')') throw parse_error("expected ')'", i);
            ++i;
            long e = parse_exponent(s, i);
            TWord base = inner;
            if (e < 0) {
                base.assign(inner.rbegin(), inner.rend());
                for (auto& l : base) l.second = -l.second;
                e = -e;
            }
            for (long k = 0; k < e; ++k)
                for (const auto& [g, x] : base) push_reduced(out, g, x);
        } else if (c == 'a' || c == 'b' || c == 't') {
            ++i;
            push_reduced(out, c, parse_exponent(s, i));
        } else if (c == '1' && !nested) {
            ++i;
        } else {
            throw parse_error(std::string("unexpected character '") + c + "'", i);
        }
    }
    if (nested) throw parse_error("expected ')'", i);
    return out;
}
}  // namespace detail

/// Parses one side of a relator as printed by lin_presentation.
inline TWord parse_tword(std::string_view s) {
    std::size_t i = 0;
    return detail::parse_tword_seq(s, i, false);
}

/// The two sides of each relator built directly from (p, q, r).
inline std::array<std::pair<TWord, TWord>, 2> lin_relator_words(long p, long q, long r) {
    auto pw = [](TWord& w, const TWord& base, long e) {
        TWord b = base;
        if (e < 0) {
            b.assign(base.rbegin(), base.rend());
            for (auto& l : b) l.second = -l.second;
            e = -e;
        }
        for (long k = 0; k < e; ++k)
            for (const auto& [g, x] : b) detail::push_reduced(w, g, x);
    };
    TWord l0, r0, l1, r1;
    detail::push_reduced(l0, 't', 1);
    detail::push_reduced(l0, 'a', r + 1);
    pw(l0, {{'b', 1}, {'a', 1}}, q);
    detail::push_reduced(l0, 'b', 1);
    detail::push_reduced(l0, 't', -1);
    detail::push_reduced(r0, 'a', r + 1);
    pw(r0, {{'b', 1}, {'a', 1}}, q);
    detail::push_reduced(l1, 't', 1);
    detail::push_reduced(l1, 'b', p + 1);
    pw(l1, {{'a', 1}, {'b', 1}}, q);
    detail::push_reduced(l1, 't', -1);
    detail::push_reduced(r1, 'b', p + 1);
    pw(r1, {{'a', 1}, {'b', 1}}, q);
    detail::push_reduced(r1, 'a', 1);
    return {{{l0, r0}, {l1, r1}}};
}

}  // namespace charvar
