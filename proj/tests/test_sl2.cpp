#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "charvar/sl2.hpp"

using namespace charvar;

namespace {

QMat2 random_sl2(std::mt19937_64& rng, int bound) {
    std::uniform_int_distribution<int> d(-bound, bound);
    while (true) {
        const int a = d(rng), b = d(rng), c = d(rng), e = d(rng);
        if (a * e - b * c == 1) return {a, b, c, e};
    }
}

mpq_class random_rational(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> num(-9, 9), den(1, 7);
    mpq_class q(num(rng), den(rng));
    q.canonicalize();
    return q;
}

// Rational point (c, s) on the unit circle with s != 0.
std::pair<mpq_class, mpq_class> rational_angle(std::mt19937_64& rng) {
    mpq_class t;
    do t = random_rational(rng);
    while (t == 0);
    const mpq_class d = 1 + t * t;
    return {(1 - t * t) / d, 2 * t / d};
}

DMat2 rot(double th) { return {std::cos(th), -std::sin(th), std::sin(th), std::cos(th)}; }

}  // namespace

TEST(Sl2, Classify) {
    EXPECT_EQ(classify(QMat2{-1, 1, 0, -1}), MatClass::Parabolic);
    EXPECT_EQ(classify(QMat2{3, 1, 2, 1}), MatClass::Hyperbolic);
    EXPECT_EQ(classify(QMat2{0, -1, 1, 0}), MatClass::Elliptic);
    EXPECT_EQ(classify(DMat2{1, 1e-3, 0, 1}), MatClass::Parabolic);
    EXPECT_EQ(classify(DMat2{1 + 1e-10, 0, 0, 1 / (1 + 1e-10)}), MatClass::Parabolic);
    EXPECT_THROW(classify(QMat2{2, 0, 0, 1}), determinant_error);
}

TEST(Sl2, Delta) {
    EXPECT_EQ(delta(QMat2{1, 1, -4, -3}), 5);
    EXPECT_EQ(delta(QMat2{-1, 0, 4, -1}), -4);
    EXPECT_EQ(delta(QMat2::identity()), 0);
}

TEST(Sl2, SameTraceConjugacyExamples) {
    EXPECT_EQ(same_trace_conjugacy(QMat2{3, 1, -4, -1}, QMat2{1, 0, -2, 1}), Conjugacy::ConjugateDetPlus);
    EXPECT_EQ(same_trace_conjugacy(QMat2{1, 1, -4, -3}, QMat2{-1, 0, 4, -1}), Conjugacy::ConjugateDetMinus);
    const QMat2 r{mpq_class(3, 5), mpq_class(-4, 5), mpq_class(4, 5), mpq_class(3, 5)};
    EXPECT_EQ(same_trace_conjugacy(r, r), Conjugacy::ConjugateDetPlus);
    EXPECT_EQ(same_trace_conjugacy(QMat2{2, 1, 1, 1}, QMat2{1, 1, 1, 2}), Conjugacy::NotApplicable);
    EXPECT_THROW(same_trace_conjugacy(QMat2{2, 1, 1, 1}, QMat2::identity()), std::invalid_argument);
}

// Same-trace pairs built by conjugating a seed with a determinant +-1 matrix.
TEST(Sl2, ConjugacyVerdictMatchesConstruction) {
    std::mt19937_64 rng(31337);
    std::bernoulli_distribution coin(0.5);
    for (int i = 0; i < 1000; ++i) {
        QMat2 seed;
        if (coin(rng)) {
            mpq_class x;
            do x = random_rational(rng);
            while (x == 0);
            seed = QMat2{1, x, 0, 1}.scaled(coin(rng) ? 1 : -1);
        } else {
            const auto [c, s] = rational_angle(rng);
            seed = rotation(c, s);
        }
        const QMat2 q = random_sl2(rng, 4);
        seed = q * seed * q.adjugate();
        // Keep the seed conjugation inside SL2 so the seed's delta sign class is arbitrary.
        QMat2 p = random_sl2(rng, 5);
        const bool plus = coin(rng);
        if (!plus) p = p * QMat2{1, 0, 0, -1};
        const QMat2 b = p * seed * p.inverse();
        EXPECT_EQ(same_trace_conjugacy(seed, b), plus ? Conjugacy::ConjugateDetPlus : Conjugacy::ConjugateDetMinus)
            << seed.to_string() << " " << p.to_string();
    }
}

TEST(Sl2, ConjugationDeltaFormulas) {
    EXPECT_DOUBLE_EQ(conjugation_delta_formulas(DMat2::identity(), 3, ConjugationKind::Parabolic), 3);
    EXPECT_DOUBLE_EQ(conjugation_delta_formulas(DMat2{1, 0, 2, 1}, 1, ConjugationKind::Parabolic), 5);
    EXPECT_NEAR(conjugation_delta_formulas(DMat2::identity(), std::numbers::pi / 2, ConjugationKind::Elliptic), -2, 1e-15);
    EXPECT_THROW(conjugation_delta_formulas(DMat2{1, 2, 2, 4}, 1, ConjugationKind::Parabolic), determinant_error);

    std::mt19937_64 rng(4);
    for (int i = 0; i < 100; ++i) {
        QMat2 p;
        do p = {random_rational(rng), random_rational(rng), random_rational(rng), random_rational(rng)};
        while (p.det() == 0);
        const mpq_class x = random_rational(rng);
        EXPECT_EQ(conjugated_delta(p, unit_parabolic(x)), parabolic_delta_formula(p, x));
        const auto [c, s] = rational_angle(rng);
        EXPECT_EQ(conjugated_delta(p, rotation(c, s)), elliptic_delta_formula(p, s));
    }
}

TEST(Sl2, SolveConjugatorCentralizer) {
    const QMat2 m{2, 1, 1, 1};
    const std::pair<QMat2, QMat2> qp[] = {{m, m}};
    const auto q = solve_conjugator(std::span<const std::pair<QMat2, QMat2>>(qp));
    EXPECT_EQ(q.nullspace_dim, 2u);
    EXPECT_TRUE(q.underdetermined());
    EXPECT_EQ(q.candidate, QMat2::identity());
    EXPECT_EQ(q.det_sign, DetSign::Plus);

    const std::pair<DMat2, DMat2> dp[] = {{to_double(m), to_double(m)}};
    const auto d = solve_conjugator(std::span<const std::pair<DMat2, DMat2>>(dp));
    EXPECT_EQ(d.nullspace_dim, 2u);
    EXPECT_NEAR((d.candidate - DMat2::identity()).frobenius(), 0, 1e-12);
    EXPECT_EQ(d.det_sign, DetSign::Plus);

    EXPECT_THROW(solve_conjugator(std::span<const std::pair<DMat2, DMat2>>()), std::invalid_argument);
}

TEST(Sl2, SolveConjugatorLimitingPairs) {
    // rho_1 images of m1, m2, l1, l2.
    const QMat2 m1{3, 1, -4, -1}, m2{1, 0, -2, 1}, l1{1, 1, -4, -3}, l2{-1, 0, 4, -1};
    const std::pair<QMat2, QMat2> qp[] = {{m1, m2}, {l1, l2}};
    const auto q = solve_conjugator(std::span<const std::pair<QMat2, QMat2>>(qp));
    EXPECT_EQ(q.nullspace_dim, 1u);
    EXPECT_EQ(q.det_sign, DetSign::Singular);
    EXPECT_EQ(q.residual, 0);

    const std::pair<DMat2, DMat2> dp[] = {{to_double(m1), to_double(m2)}, {to_double(l1), to_double(l2)}};
    const auto d = solve_conjugator(std::span<const std::pair<DMat2, DMat2>>(dp));
    EXPECT_EQ(d.nullspace_dim, 1u);
    EXPECT_EQ(d.det_sign, DetSign::Singular);
}

TEST(Sl2, SolveConjugatorResidual) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int i = 0; i < 200; ++i) {
        const DMat2 a = to_double(random_sl2(rng, 4)), c = to_double(random_sl2(rng, 4));
        DMat2 g{u(rng), u(rng), u(rng), u(rng)};
        if (std::abs(g.det()) < 1e-2) continue;
        const DMat2 gi = g.inverse();
        const std::pair<DMat2, DMat2> pairs[] = {{a, g * a * gi}, {c, g * c * gi}};
        const auto s = solve_conjugator(std::span<const std::pair<DMat2, DMat2>>(pairs));
        for (const auto& [x, y] : pairs) EXPECT_LE((s.candidate * x - y * s.candidate).frobenius(), 1e-9 * s.candidate.frobenius());
        if (s.nullspace_dim == 1) EXPECT_EQ(s.det_sign, g.det() > 0 ? DetSign::Plus : DetSign::Minus);
    }
}

TEST(Sl2, EigenData) {
    const auto d = eigen_data(DMat2{2, 0, 0, 0.5});
    ASSERT_EQ(d.size(), 2u);
    EXPECT_DOUBLE_EQ(d[0].value, 2);
    EXPECT_NEAR(std::abs(d[0].direction[1]), 0, 1e-15);
    EXPECT_DOUBLE_EQ(d[1].value, 0.5);
    EXPECT_NEAR(std::abs(d[1].direction[0]), 0, 1e-15);

    const auto l = eigen_data(DMat2{1, 1, -4, -3});
    ASSERT_EQ(l.size(), 1u);
    EXPECT_EQ(l[0].value, -1);
    EXPECT_NEAR(l[0].direction[1] / l[0].direction[0], -2, 1e-12);

    const auto h = eigen_data(DMat2{3, 1, 2, 1});
    EXPECT_NEAR(h[0].value, 2 + std::sqrt(3.0), 1e-12);
    EXPECT_NEAR(h[1].value, 2 - std::sqrt(3.0), 1e-12);
    for (const auto& e : h) {
        const DMat2 m{3, 1, 2, 1};
        EXPECT_NEAR(m.a11 * e.direction[0] + m.a12 * e.direction[1], e.value * e.direction[0], 1e-12);
    }
    EXPECT_THROW(eigen_data(DMat2{0, -1, 1, 0}), std::invalid_argument);
}

TEST(Sl2, TranslationTrivialPaths) {
    const std::vector<DMat2> constant(5, DMat2::identity());
    EXPECT_EQ(translation_number_along_path(constant).value, 0);
    std::vector<DMat2> diag;
    for (int i = 0; i <= 20; ++i) {
        const double s = std::pow(2.0, i / 20.0);
        diag.push_back({s, 0, 0, 1 / s});
    }
    const auto t = translation_number_along_path(diag);
    EXPECT_FALSE(t.elliptic);
    EXPECT_NEAR(t.value, 0, 1e-12);
}

namespace {
// Rotate by pi (a full turn of directions), then stretch: endpoint hyperbolic
// with translation number 1.
std::vector<DMat2> turn_then_stretch(int pieces) {
    std::vector<DMat2> path;
    for (int i = 0; i <= pieces; ++i) path.push_back(rot(std::numbers::pi * i / pieces));
    for (int i = 1; i <= pieces; ++i) {
        const double s = std::pow(3.0, static_cast<double>(i) / pieces);
        path.push_back(rot(std::numbers::pi) * DMat2{s, 0.3 * (s - 1), 0, 1 / s});
    }
    return path;
}
}  // namespace

TEST(Sl2, TranslationRefinementAndBaseInvariance) {
    for (int pieces : {20, 40, 160})
        for (double base : {0.0, 0.4, 1.3, 2.9}) {
            const auto t = translation_number_along_path(turn_then_stretch(pieces), base);
            EXPECT_FALSE(t.elliptic);
            EXPECT_NEAR(t.value, 1, 1e-6) << pieces << " " << base;
        }
    const auto path = turn_then_stretch(40);
    LiftedElement lift = lift_start(path.front(), 0.7);
    for (std::size_t i = 1; i < path.size(); ++i) lift = lift_step(lift, path[i]);
    EXPECT_NEAR(iterated_translation_number(lift), 1, 1e-6);
}

TEST(Sl2, TranslationEllipticAndGuard) {
    std::vector<DMat2> path;
    for (int i = 0; i <= 30; ++i) path.push_back(rot(std::numbers::pi / 3 * i / 30));
    const auto t = translation_number_along_path(path);
    EXPECT_TRUE(t.elliptic);
    EXPECT_NEAR(t.value, 1.0 / 3, 1e-4);

    const std::vector<DMat2> jump{DMat2::identity(), DMat2{3, 0, 0, 1.0 / 3}};
    EXPECT_THROW(translation_number_along_path(jump), continuity_error);
    const std::vector<DMat2> elliptic_start{rot(1.0)};
    EXPECT_THROW(translation_number_along_path(elliptic_start), std::invalid_argument);
}
