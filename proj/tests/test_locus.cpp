#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "charvar/locus.hpp"

using namespace charvar;

namespace {
LocusArc synthetic(const std::vector<std::pair<double, double>>& uw) {
    LocusArc l;
    for (std::size_t i = 0; i < uw.size(); ++i) {
        const auto [u, w] = uw[i];
        l.first.push_back({i, static_cast<double>(i), u, w, 1, u != 0 ? -w / u : NAN, {1, 0}});
        l.second.push_back({i, static_cast<double>(i), -u, -w, 2, u != 0 ? -w / u : NAN, {0, 1}});
    }
    return l;
}

const Arc& arc1() {
    static const Arc a = continue_arc(make_family(1));
    return a;
}
}  // namespace

TEST(Locus, DiagonalPair) {
    const double e = std::exp(1.0);
    const PeripheralSample s{0, 1, DMat2{e, 0, 0, 1 / e}, DMat2{e * e, 0, 0, 1 / (e * e)}};
    const auto l = locus_from_peripheral(std::span<const PeripheralSample>(&s, 1));
    ASSERT_EQ(l.first.size(), 1u);
    EXPECT_NEAR(l.first[0].u, 1, 1e-15);
    EXPECT_NEAR(l.first[0].w, 2, 1e-15);
    EXPECT_NEAR(l.first[0].slope, -2, 1e-15);
    EXPECT_NEAR(l.second[0].u, -1, 1e-15);
    EXPECT_NEAR(l.second[0].w, -2, 1e-15);
}

TEST(Locus, IdentityLongitude) {
    const PeripheralSample s{0, 1, DMat2{2, 1, 1, 1}, DMat2::identity()};
    const auto l = locus_from_peripheral(std::span<const PeripheralSample>(&s, 1));
    EXPECT_EQ(l.first[0].w, 0);
    EXPECT_EQ(l.second[0].w, 0);
}

TEST(Locus, Preconditions) {
    const PeripheralSample para{0, 1, DMat2{1, 1, 0, 1}, DMat2::identity()};
    EXPECT_THROW(locus_from_peripheral(std::span<const PeripheralSample>(&para, 1)), locus_error);
    const PeripheralSample nc{0, 1, DMat2{2, 1, 1, 1}, DMat2{1, 1, 0, 1}};
    EXPECT_THROW(locus_from_peripheral(std::span<const PeripheralSample>(&nc, 1)), locus_error);
}

TEST(Locus, IntervalSynthetic) {
    const auto iv = orderable_interval(synthetic({{1, -0.5}, {2, -0.25}, {4, -0.1}}));
    EXPECT_EQ(iv.first, 0);
    EXPECT_DOUBLE_EQ(iv.second, 0.5);
    const auto neg = orderable_interval(synthetic({{1, 0.3}, {3, 0.2}}));
    EXPECT_DOUBLE_EQ(neg.first, -0.3);
    EXPECT_EQ(neg.second, 0);
    EXPECT_THROW(orderable_interval(synthetic({{1, 0}, {2, 0}})), locus_error);
    EXPECT_THROW(orderable_interval(LocusArc{}), locus_error);
    EXPECT_EQ(format_interval({-0.93638712, 0}), "(-0.936387, 0)");
    EXPECT_EQ(format_interval({0, 0.5}), "(0, 0.5)");
}

TEST(Locus, ArcBranchesAndSlopes) {
    const auto tn = longitude_translation_numbers(arc1());
    const auto l = locus_points(arc1(), tn);
    ASSERT_EQ(l.first.size(), arc1().samples.size() - 1);
    for (std::size_t i = 0; i < l.first.size(); ++i) {
        EXPECT_EQ(l.second[i].u, -l.first[i].u);
        EXPECT_EQ(l.second[i].w, -l.first[i].w);
        EXPECT_NEAR(l.first[i].slope, -l.first[i].w / l.first[i].u, 1e-12 * std::abs(l.first[i].slope) + 1e-300);
    }
}

TEST(Locus, RefusesNonzeroTranslation) {
    auto tn = longitude_translation_numbers(arc1());
    tn[5].value = 1;
    EXPECT_THROW(locus_points(arc1(), tn), locus_error);
}

TEST(Locus, AsymptoteN1) {
    const auto tn = longitude_translation_numbers(arc1());
    const auto ac = asymptote_check(locus_points(arc1(), tn));
    EXPECT_TRUE(ac.tail_monotone);
    EXPECT_LT(ac.final_abs_w, 0.1 * ac.max_abs_w);
    EXPECT_GT(ac.final_u, 5);
    EXPECT_GT(ac.max_abs_w, 1e-9);
}

TEST(Locus, CsvLayout) {
    std::ostringstream empty;
    write_csv(empty, Arc{}, LocusArc{}, {});
    EXPECT_EQ(empty.str(), std::string(kCsvHeader) + "\n");

    const auto tn = longitude_translation_numbers(arc1());
    const auto l = locus_points(arc1(), tn);
    std::ostringstream os;
    write_csv(os, arc1(), l, tn);
    const std::string s = os.str();
    EXPECT_EQ(static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')), arc1().samples.size() + 1);
    std::istringstream in(s);
    std::string header, row0, row1;
    std::getline(in, header);
    std::getline(in, row0);
    std::getline(in, row1);
    EXPECT_EQ(std::count(row0.begin(), row0.end(), ','), 13);
    EXPECT_EQ(row0.rfind("0,-2,4,-2,nan,2,nan,nan,nan,nan,nan,0,", 0), 0u) << row0;
    EXPECT_NE(row1.find(",1,"), std::string::npos);
}

TEST(Locus, SvgLayout) {
    LocusArc one = synthetic({{1, -0.5}});
    std::ostringstream os;
    write_svg(os, one);
    const std::string s = os.str();
    EXPECT_NE(s.find("width=\"800\" height=\"600\""), std::string::npos);
    EXPECT_EQ(s.find("<polyline"), std::string::npos);
    EXPECT_NE(s.find("<circle"), std::string::npos);
    EXPECT_EQ(s.find("<script"), std::string::npos);

    std::ostringstream full;
    write_svg(full, synthetic({{1, -0.5}, {2, -0.25}, {4, -0.1}}));
    const std::string f = full.str();
    std::size_t polylines = 0;
    for (auto p = f.find("<polyline"); p != std::string::npos; p = f.find("<polyline", p + 1)) ++polylines;
    EXPECT_EQ(polylines, 2u);
    EXPECT_NE(f.find("<text"), std::string::npos);
}
