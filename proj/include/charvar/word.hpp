#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace charvar {

enum class Gen : std::uint8_t { a = 0, b = 1 };

struct Syllable {
    Gen gen;
    long exp;

    friend bool operator==(const Syllable&, const Syllable&) = default;
};

/// Thrown by parse_word; `position` is the 0-based offset into the input text.
class parse_error : public std::runtime_error {
public:
    parse_error(const std::string& what, std::size_t position)
        : std::runtime_error(what + " at position " + std::to_string(position)), position_(position) {}
    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// Letter encoding used by the trace compiler: +1 = a, -1 = a^-1, +2 = b, -2 = b^-1.
using Letter = std::int8_t;

/// A freely reduced element of the free group <a, b>, stored as syllables g^e.
/// Multiplication composes left to right: "ab" evaluates to M(a) * M(b).
class Word {
public:
    Word() = default;

    /// Builds a word from arbitrary syllables, merging and cancelling as needed.
    explicit Word(const std::vector<Syllable>& syllables) {
        for (const auto& s : syllables) push(s);
    }

    static Word generator(Gen g, long e = 1) { return Word({{g, e}}); }

    static Word from_letters(const std::vector<Letter>& letters) {
        Word w;
        for (Letter l : letters) w.push({l > 0 ? (l == 1 ? Gen::a : Gen::b) : (l == -1 ? Gen::a : Gen::b), l > 0 ? 1 : -1});
        return w;
    }

    const std::vector<Syllable>& syllables() const noexcept { return syllables_; }
    bool empty() const noexcept { return syllables_.empty(); }

    std::size_t length() const noexcept {
        std::size_t n = 0;
        for (const auto& s : syllables_) n += static_cast<std::size_t>(s.exp < 0 ? -s.exp : s.exp);
        return n;
    }

    std::vector<Letter> letters() const {
        std::vector<Letter> out;
        out.reserve(length());
        for (const auto& s : syllables_) {
            const Letter base = s.gen == Gen::a ? 1 : 2;
            const Letter l = s.exp > 0 ? base : static_cast<Letter>(-base);
            for (long k = 0; k < (s.exp < 0 ? -s.exp : s.exp); ++k) out.push_back(l);
        }
        return out;
    }

    Word inverse() const {
        Word w;
        w.syllables_.reserve(syllables_.size());
        for (auto it = syllables_.rbegin(); it != syllables_.rend(); ++it) w.syllables_.push_back({it->gen, -it->exp});
        return w;
    }

    Word operator*(const Word& rhs) const {
        Word w = *this;
        for (const auto& s : rhs.syllables_) w.push(s);
        return w;
    }

    Word pow(long k) const {
        Word base = k < 0 ? inverse() : *this;
        Word out;
        for (long i = 0; i < (k < 0 ? -k : k); ++i) out = out * base;
        return out;
    }

    /// Canonical text: `a^2 b A^-3`-style with single-letter atoms separated by spaces.
    std::string to_string() const {
        if (syllables_.empty()) return "1";
        std::string out;
        for (const auto& s : syllables_) {
            if (!out.empty()) out += ' ';
            out += s.gen == Gen::a ? 'a' : 'b';
            if (s.exp != 1) out += '^' + std::to_string(s.exp);
        }
        return out;
    }

    friend bool operator==(const Word&, const Word&) = default;

private:
    void push(Syllable s) {
        if (s.exp == 0) return;
        if (!syllables_.empty() && syllables_.back().gen == s.gen) {
            syllables_.back().exp += s.exp;
            if (syllables_.back().exp == 0) syllables_.pop_back();
            return;
        }
        syllables_.push_back(s);
    }

    std::vector<Syllable> syllables_;
};

inline Word invert(const Word& w) { return w.inverse(); }
inline Word concat(const Word& u, const Word& v) { return u * v; }

/// Grammar: atoms `a`, `b`, `A`, `B` (capitals are inverses), each optionally
/// followed by `^` and a nonzero decimal integer, braces around the exponent
/// allowed (`a^{-1}`). Whitespace is ignored everywhere.
inline Word parse_word(std::string_view text) {
    std::vector<Syllable> out;
    std::size_t i = 0;
    auto skip_ws = [&] {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    };
    skip_ws();
    while (i < text.size()) {
        const char c = text[i];
        Gen g;
        long sign;
        switch (c) {
            case 'a': g = Gen::a; sign = 1; break;
            case 'b': g = Gen::b; sign = 1; break;
            case 'A': g = Gen::a; sign = -1; break;
            case 'B': g = Gen::b; sign = -1; break;
            default: throw parse_error(std::string("unexpected character '") + c + "'", i);
        }
        ++i;
        skip_ws();
        long e = 1;
        if (i < text.size() && text[i] == '^') {
            const std::size_t caret = i;
            ++i;
            skip_ws();
            bool braced = false;
            if (i < text.size() && text[i] == '{') {
                braced = true;
                ++i;
                skip_ws();
            }
            const std::size_t start = i;
            bool neg = false;
            if (i < text.size() && (text[i] == '-' || text[i] == '+')) {
                neg = text[i] == '-';
                ++i;
                skip_ws();
            }
            const std::size_t digits = i;
            long value = 0;
            while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
                if (value > 100000000L) throw parse_error("exponent too large", start);
                value = value * 10 + (text[i] - '0');
                ++i;
            }
            if (i == digits) throw parse_error("expected integer exponent after '^'", digits);
            if (value == 0) throw parse_error("zero exponent", caret);
            skip_ws();
            if (braced) {
                if (i >= text.size() || text[i] != '}') throw parse_error("expected '}'", i);
                ++i;
                skip_ws();
            }
            e = neg ? -value : value;
        }
        out.push_back({g, sign * e});
    }
    return Word(out);
}

namespace detail {

inline std::vector<Letter> free_reduce(const std::vector<Letter>& in) {
    std::vector<Letter> out;
    out.reserve(in.size());
    for (Letter l : in) {
        if (!out.empty() && out.back() == -l) out.pop_back();
        else out.push_back(l);
    }
    return out;
}

/// Free and cyclic reduction; the result represents the same conjugacy class.
inline std::vector<Letter> cyclic_reduce(const std::vector<Letter>& in) {
    std::vector<Letter> w = free_reduce(in);
    std::size_t lo = 0, hi = w.size();
    while (hi - lo >= 2 && w[lo] == -w[hi - 1]) {
        ++lo;
        --hi;
    }
    return {w.begin() + static_cast<std::ptrdiff_t>(lo), w.begin() + static_cast<std::ptrdiff_t>(hi)};
}

inline std::vector<Letter> invert_letters(const std::vector<Letter>& w) {
    std::vector<Letter> out(w.rbegin(), w.rend());
    for (auto& l : out) l = static_cast<Letter>(-l);
    return out;
}

inline std::vector<Letter> min_rotation(const std::vector<Letter>& w) {
    std::vector<Letter> best = w;
    std::vector<Letter> cur = w;
    for (std::size_t k = 1; k < w.size(); ++k) {
        std::rotate(cur.begin(), cur.begin() + 1, cur.end());
        if (cur < best) best = cur;
    }
    return best;
}

/// Lexicographically minimal rotation of the cyclically reduced word or of its inverse.
inline std::vector<Letter> conjugacy_key(const std::vector<Letter>& w) {
    auto r = cyclic_reduce(w);
    auto k1 = min_rotation(r);
    auto k2 = min_rotation(invert_letters(r));
    return std::min(k1, k2);
}

}  // namespace detail

}  // namespace charvar
