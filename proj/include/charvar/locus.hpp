#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "charvar/arc.hpp"
#include "charvar/mat2.hpp"
#include "charvar/sl2.hpp"

namespace charvar {

class locus_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LocusPoint {
    /// Index of the originating sample.
    std::size_t sample = 0;
    double t = 0;
    double u = 0;
    double w = 0;
    /// 1 or 2.
    int branch = 1;
    /// -w / u, NaN when u = 0.
    double slope = std::numeric_limits<double>::quiet_NaN();
    std::array<double, 2> direction{};
};

struct PeripheralSample {
    std::size_t sample = 0;
    double t = 0;
    DMat2 meridian;
    DMat2 longitude;
};

struct LocusArc {
    /// Sample order; branch 2 is the pointwise negation of branch 1.
    std::vector<LocusPoint> first, second;
};

inline constexpr double kPeripheralTolerance = 1e-8;

namespace detail {
inline double projective_distance(const std::array<double, 2>& p, const std::array<double, 2>& q) {
    return std::abs(p[0] * q[1] - p[1] * q[0]);
}

inline double eigenvalue_at(const DMat2& m, const std::array<double, 2>& v) {
    const double mv0 = m.a11 * v[0] + m.a12 * v[1], mv1 = m.a21 * v[0] + m.a22 * v[1];
    return (mv0 * v[0] + mv1 * v[1]) / (v[0] * v[0] + v[1] * v[1]);
}
// ln|lambda| at d1 for a determinant-one matrix fixing d1 and d2. The larger
// eigenvalue is the well-conditioned one, so the smaller is taken as its reciprocal.
inline double log_eigenvalue(const DMat2& m, const std::array<double, 2>& d1, const std::array<double, 2>& d2) {
    const double r1 = std::abs(eigenvalue_at(m, d1)), r2 = std::abs(eigenvalue_at(m, d2));
    return r1 >= r2 ? std::log(r1) : -std::log(r2);
}
}  // namespace detail

/// (ln|lambda_m|, ln|lambda_l|) at both common fixed directions, with the
/// directions matched to the previous sample by projective distance.
inline LocusArc locus_from_peripheral(std::span<const PeripheralSample> samples) {
    LocusArc out;
    std::array<double, 2> prev{};
    bool have_prev = false;
    for (const auto& s : samples) {
        const double tr = s.meridian.trace();
        if (!(std::abs(tr) > 2 + 1e-9)) throw locus_error("locus: meridian image is not hyperbolic at t=" + std::to_string(s.t));
        const double comm = (s.meridian * s.longitude - s.longitude * s.meridian).frobenius() /
                            (2 * s.meridian.frobenius() * s.longitude.frobenius());
        if (!(comm <= kPeripheralTolerance))
            throw locus_error("locus: meridian and longitude images do not commute at t=" + std::to_string(s.t));
        const auto eig = eigen_data(s.meridian);
        std::array<double, 2> d1 = eig[0].direction, d2 = eig[1].direction;
        if (have_prev && detail::projective_distance(d2, prev) < detail::projective_distance(d1, prev)) std::swap(d1, d2);
        prev = d1;
        have_prev = true;
        const std::array<double, 2> dirs[] = {d1, d2};
        const double u = detail::log_eigenvalue(s.meridian, d1, d2), w = detail::log_eigenvalue(s.longitude, d1, d2);
        for (int b = 0; b < 2; ++b) {
            LocusPoint p;
            p.sample = s.sample;
            p.t = s.t;
            p.branch = b + 1;
            p.direction = dirs[b];
            p.u = b == 0 ? u : -u;
            p.w = b == 0 ? w : -w;
            if (p.u != 0) p.slope = -p.w / p.u;
            (b == 0 ? out.first : out.second).push_back(p);
        }
    }
    return out;
}

/// Locus of an arc: every t > 0 sample must glue with determinant +1 and carry
/// longitude translation number 0.
inline LocusArc locus_points(const Arc& arc, std::span<const TranslationNumber> translation) {
    if (translation.size() != arc.samples.size()) throw std::invalid_argument("locus_points: one translation number per sample required");
    std::vector<PeripheralSample> ps;
    for (std::size_t i = 0; i < arc.samples.size(); ++i) {
        const RepSample& s = arc.samples[i];
        if (s.t == 0) continue;
        if (translation[i].elliptic || std::abs(translation[i].value) > 1e-6)
            throw locus_error("locus: longitude translation number " + std::to_string(translation[i].value) + " at t=" + std::to_string(s.t));
        const GluedRep g = glue_hnn(s);
        ps.push_back({i, s.t, g.t, s.longitude});
    }
    return locus_from_peripheral(ps);
}

// ---------------------------------------------------------------------------
// Asymptote diagnostics and the slope interval.

struct AsymptoteCheck {
    std::size_t tail_points = 0;
    bool tail_monotone = false;
    double final_abs_w = 0;
    double max_abs_w = 0;
    double final_u = 0;
    /// Least-squares slope dw/du over the tail.
    double tail_slope = 0;

    bool passes() const { return tail_monotone && final_abs_w < 0.1 * max_abs_w && final_u > 5; }
};

namespace detail {
inline std::vector<LocusPoint> by_u(const std::vector<LocusPoint>& pts) {
    std::vector<LocusPoint> s = pts;
    std::stable_sort(s.begin(), s.end(), [](const LocusPoint& a, const LocusPoint& b) { return a.u < b.u; });
    return s;
}
}  // namespace detail

/// Tail = the 20% of branch-1 points with the largest u. Monotonicity of |w|
/// along increasing u allows `slack` of absolute noise.
inline AsymptoteCheck asymptote_check(const LocusArc& locus, double slack = 1e-12) {
    AsymptoteCheck c;
    const auto pts = detail::by_u(locus.first);
    if (pts.empty()) return c;
    for (const auto& p : pts) c.max_abs_w = std::max(c.max_abs_w, std::abs(p.w));
    c.tail_points = std::max<std::size_t>(1, pts.size() / 5);
    const std::size_t start = pts.size() - c.tail_points;
    c.tail_monotone = true;
    double su = 0, sw = 0, suu = 0, suw = 0;
    for (std::size_t i = start; i < pts.size(); ++i) {
        if (i > start && std::abs(pts[i].w) > std::abs(pts[i - 1].w) + slack) c.tail_monotone = false;
        su += pts[i].u;
        sw += pts[i].w;
        suu += pts[i].u * pts[i].u;
        suw += pts[i].u * pts[i].w;
    }
    const double k = static_cast<double>(c.tail_points);
    const double den = k * suu - su * su;
    c.tail_slope = den != 0 ? (k * suw - su * sw) / den : 0;
    c.final_abs_w = std::abs(pts.back().w);
    c.final_u = pts.back().u;
    return c;
}

/// Slopes r = -w/u form a same-sign run starting from the asymptotic (largest u)
/// end; the interval spans 0 and the extreme r in that run. Sampled chords only.
inline std::pair<double, double> orderable_interval(const LocusArc& locus) {
    if (locus.first.empty()) throw locus_error("orderable_interval: empty locus");
    bool horizontal = true;
    for (const auto& p : locus.first)
        if (std::abs(p.w) > 1e-9) horizontal = false;
    if (horizontal) throw locus_error("orderable_interval: all-horizontal arc (every |w| <= 1e-9)");
    const auto pts = detail::by_u(locus.first);
    int sign = 0;
    double extreme = 0;
    for (std::size_t i = pts.size(); i-- > 0;) {
        const double r = pts[i].slope;
        if (!std::isfinite(r) || r == 0) continue;
        const int s = r > 0 ? 1 : -1;
        if (sign == 0) sign = s;
        if (s != sign) break;
        extreme = sign > 0 ? std::max(extreme, r) : std::min(extreme, r);
    }
    if (sign == 0) throw locus_error("orderable_interval: no sample with a nonzero finite slope");
    return sign > 0 ? std::pair{0.0, extreme} : std::pair{extreme, 0.0};
}

inline std::string format_interval(const std::pair<double, double>& iv) {
    char buf[96];
    if (iv.first == 0) std::snprintf(buf, sizeof buf, "(0, %.6g)", iv.second);
    else std::snprintf(buf, sizeof buf, "(%.6g, 0)", iv.first);
    return buf;
}

// ---------------------------------------------------------------------------
// Artifacts.

inline constexpr const char* kCsvHeader = "t,x,y,z,tr_meridian,tr_longitude,u1,w1,u2,w2,slope1,det_conjugator,residual,trans_longitude";

namespace detail {
inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
}  // namespace detail

/// One row per arc sample; locus columns are NaN where the sample has no glued point.
inline void write_csv(std::ostream& os, const Arc& arc, const LocusArc& locus, std::span<const TranslationNumber> translation) {
    using detail::num;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<const LocusPoint*> p1(arc.samples.size(), nullptr), p2(arc.samples.size(), nullptr);
    for (const auto& p : locus.first)
        if (p.sample < p1.size()) p1[p.sample] = &p;
    for (const auto& p : locus.second)
        if (p.sample < p2.size()) p2[p.sample] = &p;
    os << kCsvHeader << '\n';
    for (std::size_t i = 0; i < arc.samples.size(); ++i) {
        const RepSample& s = arc.samples[i];
        const double tn = i < translation.size() ? translation[i].value : nan;
        os << num(s.t) << ',' << num(s.character[0]) << ',' << num(s.character[1]) << ',' << num(s.character[2]) << ','
           << num(s.meridian_trace) << ',' << num(s.longitude_trace) << ',' << num(p1[i] ? p1[i]->u : nan) << ','
           << num(p1[i] ? p1[i]->w : nan) << ',' << num(p2[i] ? p2[i]->u : nan) << ',' << num(p2[i] ? p2[i]->w : nan) << ','
           << num(p1[i] ? p1[i]->slope : nan) << ',' << to_int(s.det_sign) << ',' << num(s.residual) << ',' << num(tn) << '\n';
    }
}

namespace detail {
inline double nice_step(double span, int target) {
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double f = raw / mag;
    return (f < 1.5 ? 1 : f < 3.5 ? 2 : f < 7.5 ? 5 : 10) * mag;
}

inline std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}
}  // namespace detail

/// Static 800 x 600 plot of both branches in the (u, w) plane.
inline void write_svg(std::ostream& os, const LocusArc& locus) {
    using detail::fmt;
    constexpr double W = 800, H = 600, L = 70, R = 20, T = 20, B = 50;
    double umin = 0, umax = 0, wmin = 0, wmax = 0;
    for (const auto* br : {&locus.first, &locus.second})
        for (const auto& p : *br) {
            umin = std::min(umin, p.u);
            umax = std::max(umax, p.u);
            wmin = std::min(wmin, p.w);
            wmax = std::max(wmax, p.w);
        }
    auto pad = [](double& lo, double& hi) {
        if (hi - lo < 1e-12) {
            lo -= 1;
            hi += 1;
        }
        const double m = 0.05 * (hi - lo);
        lo -= m;
        hi += m;
    };
    pad(umin, umax);
    pad(wmin, wmax);
    auto sx = [&](double u) { return L + (u - umin) / (umax - umin) * (W - L - R); };
    auto sy = [&](double w) { return H - B - (w - wmin) / (wmax - wmin) * (H - T - B); };

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"600\" viewBox=\"0 0 800 600\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"800\" height=\"600\" fill=\"white\"/>\n";
    os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    // Ticks and labels.
    const double du = detail::nice_step(umax - umin, 8), dw = detail::nice_step(wmax - wmin, 6);
    for (double u = std::ceil(umin / du) * du; u <= umax; u += du) {
        const double x = sx(u);
        os << "<line x1=\"" << fmt("%.2f", x) << "\" y1=\"" << H - B << "\" x2=\"" << fmt("%.2f", x) << "\" y2=\"" << H - B + 5
           << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << fmt("%.2f", x) << "\" y=\"" << H - B + 18 << "\" font-size=\"11\" text-anchor=\"middle\">"
           << fmt("%.4g", std::abs(u) < 1e-12 * du ? 0.0 : u) << "</text>\n";
    }
    for (double w = std::ceil(wmin / dw) * dw; w <= wmax; w += dw) {
        const double y = sy(w);
        os << "<line x1=\"" << L - 5 << "\" y1=\"" << fmt("%.2f", y) << "\" x2=\"" << L << "\" y2=\"" << fmt("%.2f", y)
           << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << L - 8 << "\" y=\"" << fmt("%.2f", y + 4) << "\" font-size=\"11\" text-anchor=\"end\">"
           << fmt("%.4g", std::abs(w) < 1e-12 * dw ? 0.0 : w) << "</text>\n";
    }
    // Axes through the origin.
    os << "<line x1=\"" << L << "\" y1=\"" << fmt("%.2f", sy(0)) << "\" x2=\"" << W - R << "\" y2=\"" << fmt("%.2f", sy(0))
       << "\" stroke=\"gray\"/>\n";
    os << "<line x1=\"" << fmt("%.2f", sx(0)) << "\" y1=\"" << T << "\" x2=\"" << fmt("%.2f", sx(0)) << "\" y2=\"" << H - B
       << "\" stroke=\"gray\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" font-size=\"13\" text-anchor=\"middle\">u = ln|lambda_m|</text>\n";
    os << "<text x=\"16\" y=\"" << H / 2 << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << H / 2
       << ")\">w = ln|lambda_l|</text>\n";
    const char* colors[] = {"#1f77b4", "#d62728"};
    int b = 0;
    for (const auto* br : {&locus.first, &locus.second}) {
        const char* c = colors[b++];
        if (br->size() >= 2) {
            os << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < br->size(); ++i)
                os << (i ? " " : "") << fmt("%.2f", sx((*br)[i].u)) << ',' << fmt("%.2f", sy((*br)[i].w));
            os << "\"/>\n";
        } else if (br->size() == 1) {
            os << "<circle cx=\"" << fmt("%.2f", sx(br->front().u)) << "\" cy=\"" << fmt("%.2f", sy(br->front().w))
               << "\" r=\"3\" fill=\"" << c << "\"/>\n";
        }
    }
    os << "<circle cx=\"" << fmt("%.2f", sx(0)) << "\" cy=\"" << fmt("%.2f", sy(0)) << "\" r=\"4\" fill=\"none\" stroke=\"black\"/>\n";
    os << "</svg>\n";
}

inline void emit_csv(const Arc& arc, const LocusArc& locus, std::span<const TranslationNumber> translation, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    write_csv(f, arc, locus, translation);
    if (!f) throw std::runtime_error("write failed: " + path);
}

inline void emit_svg(const LocusArc& locus, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    write_svg(f, locus);
    if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace charvar
