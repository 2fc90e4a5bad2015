#include "mda/text.hpp"

#include "mda/common.hpp"

#include <cstdint>

namespace mda {

extern const char kStopwordResource[];  // generated from resources/stopwords_en.txt

namespace {

struct Decoded {
    char32_t cp;
    std::size_t len;
};

// Invalid sequences decode to a single byte so nothing is silently lost.
Decoded decode_utf8(std::string_view s, std::size_t i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    auto cont = [&](std::size_t k) {
        return i + k < s.size() && (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
    };
    auto bits = [&](std::size_t k) { return static_cast<char32_t>(s[i + k] & 0x3F); };
    if (b0 < 0x80) return {b0, 1};
    if ((b0 & 0xE0) == 0xC0 && cont(1)) return {(static_cast<char32_t>(b0 & 0x1F) << 6) | bits(1), 2};
    if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2))
        return {(static_cast<char32_t>(b0 & 0x0F) << 12) | (bits(1) << 6) | bits(2), 3};
    if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3))
        return {(static_cast<char32_t>(b0 & 0x07) << 18) | (bits(1) << 12) | (bits(2) << 6) | bits(3), 4};
    return {b0, 1};
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

bool is_emoji(char32_t cp) {
    return (cp >= 0x1F300 && cp <= 0x1FAFF) || (cp >= 0x2600 && cp <= 0x27BF) || cp == 0xFE0F ||
           cp == 0x200D;
}

bool starts_with_ci(std::string_view s, std::size_t pos, std::string_view prefix) {
    if (s.size() - pos < prefix.size()) return false;
    for (std::size_t k = 0; k < prefix.size(); ++k) {
        char c = s[pos + k];
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        if (c != prefix[k]) return false;
    }
    return true;
}

std::size_t skip_to_space(std::string_view s, std::size_t pos) {
    while (pos < s.size() && !is_space(s[pos])) ++pos;
    return pos;
}

// Letters and digits survive tokenization; punctuation and symbol blocks do not.
bool is_word_codepoint(char32_t cp) {
    if (cp < 0x80) return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9');
    if (cp <= 0xBF || cp == 0xD7 || cp == 0xF7) return false;
    if (cp >= 0x2000 && cp <= 0x2BFF) return false;
    if (cp >= 0x3000 && cp <= 0x303F) return false;
    if (cp >= 0xE000 && cp <= 0xF8FF) return false;
    if (cp >= 0xFE00 && cp <= 0xFE0F) return false;
    if (cp >= 0xFE30 && cp <= 0xFE4F) return false;
    if ((cp >= 0xFF00 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) ||
        (cp >= 0xFF3B && cp <= 0xFF40) || (cp >= 0xFF5B && cp <= 0xFF65))
        return false;
    if (cp >= 0xFFF0 && cp <= 0xFFFF) return false;
    if (cp >= 0x1F000 && cp <= 0x1FAFF) return false;
    return true;
}

char32_t to_lower(char32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 32;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
    if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 32;
    if (cp >= 0x410 && cp <= 0x42F) return cp + 32;
    if (cp >= 0x400 && cp <= 0x40F) return cp + 80;
    return cp;
}

bool is_digit(char32_t cp) { return cp >= '0' && cp <= '9'; }

}  // namespace

std::string sanitize_text(std::string_view raw, bool is_tweet) {
    std::string out;
    out.reserve(raw.size());
    std::size_t i = 0;
    while (i < raw.size()) {
        const bool token_start = i == 0 || is_space(raw[i - 1]);
        if (starts_with_ci(raw, i, "http://") || starts_with_ci(raw, i, "https://") ||
            (token_start && starts_with_ci(raw, i, "www."))) {
            i = skip_to_space(raw, i);
            continue;
        }
        if (is_tweet && token_start && raw[i] == '@') {
            i = skip_to_space(raw, i);
            continue;
        }
        const Decoded d = decode_utf8(raw, i);
        if (!(is_tweet && is_emoji(d.cp))) out.append(raw.substr(i, d.len));
        i += d.len;
    }
    return out;
}

std::vector<std::string> tokenize(std::string_view text) {
    const auto& stop = stopwords();
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        const std::size_t start = i;
        i = skip_to_space(text, i);
        if (start == i) break;
        const std::string_view piece = text.substr(start, i - start);

        // Lowercase and decode once; remember which codepoints are word characters.
        std::vector<char32_t> cps;
        for (std::size_t p = 0; p < piece.size();) {
            const Decoded d = decode_utf8(piece, p);
            cps.push_back(to_lower(d.cp));
            p += d.len;
        }

        // Contractions such as "don't" are matched as written before
        // punctuation removal would turn them into a different word.
        std::size_t lo = 0, hi = cps.size();
        while (lo < hi && !is_word_codepoint(cps[lo])) ++lo;
        while (hi > lo && !is_word_codepoint(cps[hi - 1])) --hi;
        std::string core;
        for (std::size_t k = lo; k < hi; ++k) append_utf8(core, cps[k]);
        if (stop.contains(core)) continue;

        std::string word;
        bool has_digit = false, has_letter = false;
        for (char32_t cp : cps) {
            if (!is_word_codepoint(cp)) continue;
            (is_digit(cp) ? has_digit : has_letter) = true;
            append_utf8(word, cp);
        }
        if (word.empty() || !has_letter || has_digit) continue;
        if (stop.contains(word)) continue;
        tokens.push_back(std::move(word));
    }
    return tokens;
}

std::string_view stopword_resource() { return kStopwordResource; }

const std::unordered_set<std::string>& stopwords() {
    static const std::unordered_set<std::string> set = [] {
        std::unordered_set<std::string> s;
        std::string_view rest = stopword_resource();
        while (!rest.empty()) {
            const auto nl = rest.find('\n');
            std::string_view line = rest.substr(0, nl);
            if (!line.empty()) s.emplace(line);
            if (nl == std::string_view::npos) break;
            rest.remove_prefix(nl + 1);
        }
        return s;
    }();
    return set;
}

const std::string& stopword_hash() {
    static const std::string hash = sha256_hex(stopword_resource());
    return hash;
}

}  // namespace mda
