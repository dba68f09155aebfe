#include <algorithm>
#include <atomic>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "charvar/charvar.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kVerifyFailed = 1;
constexpr int kUsage = 2;
constexpr int kNumerical = 3;

struct usage_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ArcFlags {
    long n = 1;
    double step = 1e-3;
    long steps = 2000;
    int direction = 1;
    double ceiling = 1e6;
    bool exact = false;
    long max_n = charvar::kDefaultMaxN;
};

void add_arc_flags(CLI::App* cmd, ArcFlags& f) {
    cmd->add_option("--n", f.n, "family parameter n >= 1")->required();
    cmd->add_option("--step", f.step, "maximum arclength step in [1e-6, 1e-1]")->capture_default_str();
    cmd->add_option("--steps", f.steps, "maximum number of continuation steps")->capture_default_str();
    cmd->add_option("--direction", f.direction, "+1: determinant +1 gluing branch, -1: the other")->capture_default_str();
    cmd->add_option("--ceiling", f.ceiling, "meridian trace ceiling")->capture_default_str();
    cmd->add_flag("--exact,!--no-exact", f.exact, "solve the t = 0 conjugator in rational arithmetic");
    cmd->add_option("--max-n", f.max_n, "cap on n")->capture_default_str();
}

charvar::ArcConfig to_config(const ArcFlags& f) {
    if (f.direction != 1 && f.direction != -1) throw usage_error("--direction must be 1 or -1");
    if (!(f.step >= 1e-6 && f.step <= 1e-1)) throw usage_error("--step must lie in [1e-6, 1e-1]");
    if (f.steps < 0) throw usage_error("--steps must be >= 0");
    if (!(f.ceiling > 2)) throw usage_error("--ceiling must exceed 2");
    charvar::ArcConfig c;
    c.step_size = f.step;
    c.max_steps = f.steps;
    c.direction = f.direction;
    c.trace_ceiling = f.ceiling;
    c.exact_start = f.exact;
    return c;
}

charvar::FamilyInstance family(long n, long max_n) {
    if (n < 1) throw usage_error("--n must be >= 1");
    if (n > max_n) throw usage_error("--n exceeds --max-n (" + std::to_string(max_n) + ")");
    return charvar::make_family(n, max_n);
}

struct Pipeline {
    charvar::Arc arc;
    std::vector<charvar::TranslationNumber> translation;
    charvar::LocusArc locus;
    bool has_locus = false;
    std::string locus_failure;
};

Pipeline run_pipeline(const ArcFlags& flags, bool require_locus) {
    const auto f = family(flags.n, flags.max_n);
    Pipeline p;
    p.arc = charvar::continue_arc(f, to_config(flags));
    p.translation = charvar::longitude_translation_numbers(p.arc);
    try {
        p.locus = charvar::locus_points(p.arc, p.translation);
        p.has_locus = true;
    } catch (const std::exception& e) {
        if (require_locus) throw;
        p.locus_failure = e.what();
    }
    return p;
}

std::pair<long, long> parse_range(const std::string& s) {
    const auto dots = s.find("..");
    if (dots == std::string::npos) throw usage_error("--range must look like A..B");
    try {
        std::size_t used = 0;
        const long a = std::stol(s.substr(0, dots), &used);
        if (used != dots) throw usage_error("--range: bad lower bound");
        const std::string rest = s.substr(dots + 2);
        const long b = std::stol(rest, &used);
        if (used != rest.size()) throw usage_error("--range: bad upper bound");
        if (a < 1 || b < a) throw usage_error("--range needs 1 <= A <= B");
        return {a, b};
    } catch (const std::logic_error&) {
        throw usage_error("--range must look like A..B with integers");
    }
}

int cmd_trace(const std::string& text) {
    const charvar::Word w = charvar::parse_word(text);
    std::cout << charvar::trace_polynomial(w).to_string() << "\n";
    return kOk;
}

int cmd_verify(long n, const std::string& range, const std::string& format, unsigned jobs, bool exact, long max_n) {
    if (!exact) throw usage_error("verify runs in exact arithmetic only; drop --no-exact");
    if (format != "text" && format != "kv") throw usage_error("--format must be text or kv");
    long lo = n, hi = n;
    const bool ranged = !range.empty();
    if (ranged) std::tie(lo, hi) = parse_range(range);
    else if (n < 1) throw usage_error("--n must be >= 1");
    if (hi > max_n) throw usage_error("n exceeds --max-n (" + std::to_string(max_n) + ")");

    const std::size_t count = static_cast<std::size_t>(hi - lo + 1);
    std::vector<charvar::LemmaReport> reports(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) reports[i] = charvar::verify_lemma(charvar::make_family(lo + static_cast<long>(i), max_n));
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(count)));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    bool all = true;
    for (const auto& r : reports) {
        all = all && r.passed();
        if (format == "kv") std::cout << r.to_key_value();
        else if (ranged) std::cout << r.summary_line() << "\n";
        else std::cout << r.to_text();
    }
    return all ? kOk : kVerifyFailed;
}

void print_arc_summary(std::ostream& os, const Pipeline& p) {
    os << "samples: " << p.arc.samples.size() << "\n";
    os << "termination: " << charvar::to_string(p.arc.termination) << "\n";
    if (!p.arc.samples.empty()) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "t range: [0, %.6g]\n", p.arc.samples.back().t);
        os << buf;
    }
    if (!p.has_locus && !p.locus_failure.empty()) os << "locus: unavailable (" << p.locus_failure << ")\n";
}

int cmd_arc(const ArcFlags& flags, const std::string& out) {
    const Pipeline p = run_pipeline(flags, false);
    if (out.empty()) {
        charvar::write_csv(std::cout, p.arc, p.locus, p.translation);
    } else {
        charvar::emit_csv(p.arc, p.locus, p.translation, out);
        print_arc_summary(std::cout, p);
    }
    return kOk;
}

int cmd_locus(const ArcFlags& flags, const std::string& out, const std::string& svg) {
    const Pipeline p = run_pipeline(flags, true);
    if (!out.empty()) charvar::emit_csv(p.arc, p.locus, p.translation, out);
    if (!svg.empty()) charvar::emit_svg(p.locus, svg);
    print_arc_summary(std::cout, p);
    const auto ac = charvar::asymptote_check(p.locus);
    char buf[256];
    std::snprintf(buf, sizeof buf, "asymptote: %s (tail |w| monotone %s, final |w| %.6g, max |w| %.6g, final u %.6g)\n",
                  ac.passes() ? "horizontal" : "not established", ac.tail_monotone ? "yes" : "no", ac.final_abs_w, ac.max_abs_w,
                  ac.final_u);
    std::cout << buf;
    if (!p.locus.first.empty()) std::cout << "interval: " << charvar::format_interval(charvar::orderable_interval(p.locus)) << "\n";
    return kOk;
}

int cmd_interval(const ArcFlags& flags) {
    const Pipeline p = run_pipeline(flags, true);
    std::cout << "interval: " << charvar::format_interval(charvar::orderable_interval(p.locus)) << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"charvar: trace polynomials, pretzel family checks, representation arcs and slope intervals"};
    app.require_subcommand(1);

    std::string word;
    auto* trace = app.add_subcommand("trace", "print the trace polynomial of a word in a, b (A, B are inverses)");
    trace->add_option("--word", word, "word, e.g. \"a^2 b A\"")->required();

    long vn = 0;
    std::string range, format = "text";
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    bool vexact = true;
    long vmax = charvar::kDefaultMaxN;
    auto* verify = app.add_subcommand("verify", "exact checks of the family claims at the limiting character");
    auto* vn_opt = verify->add_option("--n", vn, "family parameter n >= 1");
    auto* range_opt = verify->add_option("--range", range, "inclusive range A..B");
    vn_opt->excludes(range_opt);
    verify->add_option("--format", format, "text or kv")->capture_default_str();
    verify->add_option("--jobs", jobs, "worker threads for --range");
    verify->add_flag("--exact,!--no-exact", vexact, "exact rational arithmetic (default)");
    verify->add_option("--max-n", vmax, "cap on n")->capture_default_str();

    ArcFlags arc_flags, locus_flags, interval_flags;
    std::string arc_out, locus_out, locus_svg;
    auto* arc = app.add_subcommand("arc", "continue a representation arc and write CSV");
    add_arc_flags(arc, arc_flags);
    arc->add_option("--out", arc_out, "CSV path (stdout when omitted)");
    auto* locus = app.add_subcommand("locus", "holonomy extension locus CSV and SVG");
    add_arc_flags(locus, locus_flags);
    locus->add_option("--out", locus_out, "CSV path");
    locus->add_option("--svg", locus_svg, "SVG path");
    auto* interval = app.add_subcommand("interval", "slope interval adjacent to 0");
    add_arc_flags(interval, interval_flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*trace) return cmd_trace(word);
        if (*verify) {
            if (!*vn_opt && !*range_opt) throw usage_error("verify needs --n or --range");
            return cmd_verify(vn, range, format, jobs, vexact, vmax);
        }
        if (*arc) return cmd_arc(arc_flags, arc_out);
        if (*locus) return cmd_locus(locus_flags, locus_out, locus_svg);
        if (*interval) return cmd_interval(interval_flags);
    } catch (const charvar::parse_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const usage_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    }
    return kUsage;
}
