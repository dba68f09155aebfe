// Acceptance suite. `acceptance K` runs criterion K and prints one verdict line.

#include <sys/wait.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "charvar/charvar.hpp"

using namespace charvar;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) detail = what;
        pass = pass && ok;
    }
};

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

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

mpq_class nonzero_rational(std::mt19937_64& rng) {
    mpq_class q;
    do q = random_rational(rng);
    while (q == 0);
    return q;
}

// 1: exact closed forms for n = 1..50, display checks included.
Verdict criterion1() {
    Verdict v;
    std::size_t failures = 0;
    std::string first;
    for (long n = 1; n <= 50; ++n) {
        const auto r = verify_lemma(n);
        for (const auto& e : r.entries) {
            if (e.pass) continue;
            ++failures;
            if (first.empty()) first = "n=" + std::to_string(n) + " " + e.name + ": " + e.witness;
        }
    }
    v.require(failures == 0, std::to_string(failures) + " failing checks, first " + first);
    if (v.pass) v.detail = "all checks exact for n = 1..50";
    return v;
}

// 2: compiled polynomial against direct products over random integer matrices.
Verdict criterion2() {
    Verdict v;
    std::mt19937_64 rng(20240611);
    std::uniform_int_distribution<int> len(0, 12), pick(0, 3);
    const Letter letters[] = {1, -1, 2, -2};
    TraceCompiler compiler;
    std::size_t bad = 0;
    for (int i = 0; i < 1000; ++i) {
        std::vector<Letter> raw(static_cast<std::size_t>(len(rng)));
        for (auto& l : raw) l = letters[pick(rng)];
        const Word w = Word::from_letters(raw);
        const QMat2 a = random_sl2(rng, 5), b = random_sl2(rng, 5);
        // Direct product, independent of the compiler.
        QMat2 m = QMat2::identity();
        for (Letter l : w.letters()) m = m * (l == 1 ? a : l == -1 ? a.inverse() : l == 2 ? b : b.inverse());
        const std::array<mpq_class, 3> xyz{a.trace(), b.trace(), (a * b).trace()};
        if (poly_eval(compiler.compile(w), xyz) != m.trace()) ++bad;
    }
    v.require(bad == 0, std::to_string(bad) + " of 1000 disagree");
    if (v.pass) v.detail = "1000/1000 exact";
    return v;
}

// 3: conjugacy verdicts and Delta formulas on constructed pairs.
Verdict criterion3() {
    Verdict v;
    std::mt19937_64 rng(31337);
    std::bernoulli_distribution coin(0.5);
    std::size_t bad_verdict = 0, bad_formula = 0;
    for (int i = 0; i < 1000; ++i) {
        const bool parabolic = coin(rng);
        QMat2 seed;
        mpq_class x, c, s;
        if (parabolic) {
            x = nonzero_rational(rng);
            seed = unit_parabolic(x);
        } else {
            const mpq_class t = nonzero_rational(rng), d = 1 + t * t;
            c = (1 - t * t) / d;
            s = 2 * t / d;
            seed = rotation(c, s);
        }
        QMat2 p = random_sl2(rng, 5);
        const bool plus = coin(rng);
        if (!plus) p = p * QMat2{1, 0, 0, -1};
        const QMat2 b = p * seed * p.inverse();
        if (same_trace_conjugacy(seed, b) != (plus ? Conjugacy::ConjugateDetPlus : Conjugacy::ConjugateDetMinus)) ++bad_verdict;
        const mpq_class formula = parabolic ? parabolic_delta_formula(p, x) : elliptic_delta_formula(p, s);
        if (formula != delta(b)) ++bad_formula;
    }
    v.require(bad_verdict == 0, std::to_string(bad_verdict) + " verdict mismatches");
    v.require(bad_formula == 0, std::to_string(bad_formula) + " Delta formula mismatches");
    if (v.pass) v.detail = "1000/1000 verdicts and formulas exact";
    return v;
}

// 4: continuation health for n = 1, 2, 3.
Verdict criterion4() {
    Verdict v;
    std::ostringstream summary;
    for (long n = 1; n <= 3; ++n) {
        const auto f = make_family(n);
        ArcConfig cfg;
        cfg.max_steps = 20000;
        const Arc arc = continue_arc(f, cfg);
        const std::string tag = "n=" + std::to_string(n) + ": ";
        v.require(arc.samples.size() > 2, tag + "arc too short");
        double max_res = 0, max_meridian = 0, prev = std::numeric_limits<double>::infinity();
        bool margin_ok = true, sign_ok = true, monotone = true;
        std::size_t rounded_to_two = 0;
        for (const auto& s : arc.samples) {
            max_res = std::max(max_res, s.residual);
            if (s.t == 0) continue;
            // |tr L - 2| through the determinant identity; the rounded trace itself can read exactly 2 at tiny t.
            margin_ok = margin_ok && irreducibility_margin(s) > 0;
            rounded_to_two += s.longitude_trace == 2;
            sign_ok = sign_ok && s.det_sign == DetSign::Plus;
            monotone = monotone && s.meridian_trace < prev;
            prev = s.meridian_trace;
            max_meridian = std::max(max_meridian, s.meridian_trace);
        }
        const auto fit = fit_margin(arc, f, analyze_curve(f));
        v.require(max_res <= 1e-10, tag + "residual " + fmt("%.3g", max_res));
        v.require(margin_ok, tag + "longitude trace 2 at t > 0");
        v.require(sign_ok, tag + "conjugator determinant sign not +1");
        v.require(monotone, tag + "meridian trace not monotone");
        v.require(max_meridian >= cfg.trace_ceiling, tag + "meridian ceiling not reached");
        v.require(std::abs(fit.exponent - 2) <= 0.1, tag + "margin exponent " + fmt("%.4f", fit.exponent));
        summary << tag << "exponent " << fmt("%.4f", fit.exponent) << ", coefficient " << fmt("%.6g", fit.coefficient)
                << " vs 1/2 v^T H v = " << fmt("%.6g", fit.predicted) << ", termination " << to_string(arc.termination)
                << ", " << arc.samples.size() << " samples (" << rounded_to_two << " with tr L rounding to 2); ";
    }
    if (v.pass) v.detail = summary.str();
    return v;
}

// 5: longitude translation numbers along each arc against the iterate oracle.
Verdict criterion5() {
    Verdict v;
    std::size_t checked = 0;
    double worst = 0;
    for (long n = 1; n <= 3; ++n) {
        const Arc arc = continue_arc(make_family(n));
        const auto tn = longitude_translation_numbers(arc);
        LiftedElement lift = lift_start(arc.samples.front().longitude);
        for (std::size_t i = 0; i < arc.samples.size(); ++i) {
            if (i > 0) lift = lift_step(lift, arc.samples[i].longitude);
            const double r = std::round(tn[i].value);
            v.require(!tn[i].elliptic, "elliptic longitude at sample " + std::to_string(i));
            v.require(std::abs(tn[i].value) <= 1e-6, "n=" + std::to_string(n) + " translation " + fmt("%.3g", tn[i].value));
            v.require(r >= -1 && r <= 1, "Milnor-Wood bound violated");
            if (i % 50 == 0) {
                const double oracle = iterated_translation_number(lift);
                worst = std::max(worst, std::abs(oracle - tn[i].value));
                ++checked;
            }
        }
    }
    v.require(worst <= 1e-6, "oracle disagreement " + fmt("%.3g", worst));
    if (v.pass) v.detail = "all samples 0; oracle agrees to " + fmt("%.2g", worst) + " on " + std::to_string(checked) + " samples";
    return v;
}

std::pair<double, double> interval_for(long n, double step, AsymptoteCheck* ac) {
    ArcConfig cfg;
    cfg.step_size = step;
    cfg.max_steps = 20000;
    const Arc arc = continue_arc(make_family(n), cfg);
    const auto locus = locus_points(arc, longitude_translation_numbers(arc));
    if (ac) *ac = asymptote_check(locus);
    return orderable_interval(locus);
}

// 6: locus asymptote and interval stability.
Verdict criterion6() {
    Verdict v;
    std::ostringstream summary;
    for (long n = 1; n <= 3; ++n) {
        const std::string tag = "n=" + std::to_string(n) + ": ";
        AsymptoteCheck ac;
        const auto iv = interval_for(n, 1e-3, &ac);
        const auto half = interval_for(n, 5e-4, nullptr);
        const double a = iv.first != 0 ? iv.first : iv.second, b = half.first != 0 ? half.first : half.second;
        v.require(ac.tail_monotone, tag + "tail |w| not monotone");
        v.require(ac.final_abs_w < 0.1 * ac.max_abs_w, tag + "final |w| not below 0.1 max |w|");
        v.require(ac.final_u > 5, tag + "u does not exceed 5");
        v.require(ac.max_abs_w > 1e-9, tag + "horizontal arc");
        v.require(a != 0 && (iv.first == 0 || iv.second == 0), tag + "empty interval");
        v.require(std::abs(a - b) <= 0.1 * std::abs(a), tag + "interval unstable under step halving");
        summary << tag << format_interval(iv) << " (halved " << format_interval(half) << "); ";
    }
    if (v.pass) v.detail = summary.str();
    return v;
}

struct Run {
    int code;
    std::string out;
};

Run run(const std::string& args) {
    const std::string cmd = std::string(CHARVAR_CLI_PATH) + " " + args + " 2>&1";
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return {-1, ""};
    std::string out;
    std::array<char, 4096> buf{};
    std::size_t got;
    while ((got = fread(buf.data(), 1, buf.size(), p)) > 0) out.append(buf.data(), got);
    const int status = pclose(p);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// 7: byte-identical output across repeated CLI runs.
Verdict criterion7() {
    Verdict v;
    const std::vector<std::string> commands = {
        "trace --word 'a b A B a^3 b^-2'",
        "verify --n 3",
        "verify --range 1..20 --format kv --jobs 4",
        "verify --range 1..20 --jobs 1",
        "arc --n 1",
        "arc --n 2 --step 5e-4 --steps 3000 --exact",
        "arc --n 1 --direction -1 --steps 300",
        "locus --n 1 --out accept_locus_R.csv --svg accept_locus_R.svg",
        "interval --n 2",
        "interval --n 3 --steps 20000",
        "verify --n 0",
    };
    for (const auto& c : commands) {
        std::string outputs[2];
        int codes[2];
        for (int rep = 0; rep < 2; ++rep) {
            std::string cmd = c;
            const auto pos = cmd.find("_R.");
            std::string files;
            if (pos != std::string::npos) {
                const std::string r = std::to_string(rep);
                for (auto p = cmd.find("_R."); p != std::string::npos; p = cmd.find("_R.")) cmd.replace(p, 3, "_" + r + ".");
            }
            const Run res = run(cmd);
            codes[rep] = res.code;
            outputs[rep] = res.out;
            if (pos != std::string::npos) {
                const std::string r = std::to_string(rep);
                outputs[rep] += slurp("accept_locus_" + r + ".csv") + slurp("accept_locus_" + r + ".svg");
            }
        }
        v.require(codes[0] == codes[1] && outputs[0] == outputs[1], "outputs differ for: " + c);
    }
    if (v.pass) v.detail = std::to_string(commands.size()) + " commands byte-identical across two runs";
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    const std::array<std::function<Verdict()>, 7> criteria{criterion1, criterion2, criterion3, criterion4,
                                                           criterion5, criterion6, criterion7};
    std::vector<int> which;
    if (argc < 2) {
        for (int k = 1; k <= 7; ++k) which.push_back(k);
    } else {
        for (int i = 1; i < argc; ++i) {
            const int k = std::atoi(argv[i]);
            if (k < 1 || k > 7) {
                std::cerr << "usage: acceptance [1-7]...\n";
                return 2;
            }
            which.push_back(k);
        }
    }
    bool all = true;
    for (int k : which) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[static_cast<std::size_t>(k - 1)]();
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("criterion %d: %s (%.1f s) %s\n", k, v.pass ? "PASS" : "FAIL", secs, v.detail.c_str());
        all = all && v.pass;
    }
    return all ? 0 : 1;
}
