#ifndef TOPICLENS_TEXT_HPP
#define TOPICLENS_TEXT_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

/**
 * @file text.hpp
 *
 * @brief UTF-8 decoding and the character classes used by the cleaning rules.
 *
 * Classification is table-driven over Unicode blocks rather than the full UCD. The
 * tables cover the scripts that show up in multilingual social-media text: Latin,
 * Greek, Cyrillic, Arabic, Hebrew, Indic, Thai, Khmer, CJK and Hangul. Anything
 * not listed as whitespace, punctuation, symbol, digit or emoji is treated as part
 * of a word.
 */

namespace topiclens::text {

/**
 * Decodes UTF-8. Malformed sequences are dropped byte by byte.
 */
inline std::u32string decode_utf8(std::string_view input) {
    std::u32string out;
    out.reserve(input.size());
    std::size_t i = 0;
    const auto n = input.size();
    auto cont = [&](std::size_t at) {
        return at < n && (static_cast<unsigned char>(input[at]) & 0xC0) == 0x80;
    };
    while (i < n) {
        auto c = static_cast<unsigned char>(input[i]);
        if (c < 0x80) {
            out.push_back(c);
            ++i;
        } else if ((c & 0xE0) == 0xC0 && c >= 0xC2 && cont(i + 1)) {
            out.push_back(((c & 0x1F) << 6) | (static_cast<unsigned char>(input[i + 1]) & 0x3F));
            i += 2;
        } else if ((c & 0xF0) == 0xE0 && cont(i + 1) && cont(i + 2)) {
            char32_t cp = ((c & 0x0F) << 12) | ((static_cast<unsigned char>(input[i + 1]) & 0x3F) << 6) |
                          (static_cast<unsigned char>(input[i + 2]) & 0x3F);
            if (cp >= 0x800 && (cp < 0xD800 || cp > 0xDFFF)) {
                out.push_back(cp);
            }
            i += 3;
        } else if ((c & 0xF8) == 0xF0 && cont(i + 1) && cont(i + 2) && cont(i + 3)) {
            char32_t cp = ((c & 0x07) << 18) | ((static_cast<unsigned char>(input[i + 1]) & 0x3F) << 12) |
                          ((static_cast<unsigned char>(input[i + 2]) & 0x3F) << 6) |
                          (static_cast<unsigned char>(input[i + 3]) & 0x3F);
            if (cp >= 0x10000 && cp <= 0x10FFFF) {
                out.push_back(cp);
            }
            i += 4;
        } else {
            ++i;
        }
    }
    return out;
}

inline void append_utf8(std::string& out, char32_t cp) {
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

inline std::string encode_utf8(std::u32string_view cps) {
    std::string out;
    out.reserve(cps.size());
    for (auto cp : cps) {
        append_utf8(out, cp);
    }
    return out;
}

namespace detail {

struct Range {
    char32_t lo, hi;
};

template <std::size_t N>
constexpr bool in_ranges(char32_t c, const Range (&ranges)[N]) {
    for (const auto& r : ranges) {
        if (c >= r.lo && c <= r.hi) {
            return true;
        }
    }
    return false;
}

inline constexpr Range whitespace_ranges[] = {
    {0x09, 0x0D}, {0x20, 0x20}, {0x85, 0x85}, {0xA0, 0xA0}, {0x1680, 0x1680},
    {0x2000, 0x200A}, {0x2028, 0x2029}, {0x202F, 0x202F}, {0x205F, 0x205F}, {0x3000, 0x3000},
};

// Pictographs, dingbats, flags, skin-tone modifiers, keycap and tag sequences.
inline constexpr Range emoji_ranges[] = {
    {0x00A9, 0x00A9}, {0x00AE, 0x00AE}, {0x203C, 0x203C}, {0x2049, 0x2049}, {0x2122, 0x2122},
    {0x2139, 0x2139}, {0x2194, 0x21AA}, {0x231A, 0x23FF}, {0x24C2, 0x24C2}, {0x25AA, 0x25FE},
    {0x2600, 0x27BF}, {0x2934, 0x2935}, {0x2B00, 0x2BFF}, {0x3030, 0x3030}, {0x303D, 0x303D},
    {0x3297, 0x3297}, {0x3299, 0x3299}, {0x1F000, 0x1FAFF}, {0x1FC00, 0x1FFFD}, {0xE0020, 0xE007F},
};

// Joiners and presentation selectors that only glue emoji sequences together.
inline constexpr Range emoji_format_ranges[] = {
    {0x200B, 0x200B}, {0x200D, 0x200D}, {0x2060, 0x2060}, {0x20E3, 0x20E3}, {0xFE00, 0xFE0F}, {0xFEFF, 0xFEFF},
};

inline constexpr Range punctuation_ranges[] = {
    {0x21, 0x2F}, {0x3A, 0x40}, {0x5B, 0x5E}, {0x60, 0x60}, {0x7B, 0x7E},
    {0xA1, 0xA9}, {0xAB, 0xB1}, {0xB4, 0xB4}, {0xB6, 0xB8}, {0xBB, 0xBB}, {0xBF, 0xBF},
    {0xD7, 0xD7}, {0xF7, 0xF7},
    {0x02C2, 0x02C5}, {0x02D2, 0x02DF},
    {0x037E, 0x037E}, {0x0387, 0x0387},
    {0x055A, 0x055F}, {0x0589, 0x058A},
    {0x05BE, 0x05BE}, {0x05C0, 0x05C0}, {0x05C3, 0x05C3}, {0x05C6, 0x05C6}, {0x05F3, 0x05F4},
    {0x0600, 0x060F}, {0x061B, 0x061F}, {0x066A, 0x066D}, {0x06D4, 0x06D4},
    {0x0964, 0x0965}, {0x0970, 0x0970},
    {0x0E3F, 0x0E3F}, {0x0E4F, 0x0E4F}, {0x0E5A, 0x0E5B},
    {0x104A, 0x104F}, {0x10FB, 0x10FB}, {0x1360, 0x1368},
    {0x17D4, 0x17D6}, {0x17D8, 0x17DB},
    {0x2010, 0x2027}, {0x2030, 0x205E}, {0x207A, 0x207E}, {0x208A, 0x208E},
    {0x20A0, 0x20CF}, {0x2100, 0x214F}, {0x2190, 0x23FF}, {0x2400, 0x25FF}, {0x2E00, 0x2E7F},
    {0x3001, 0x3004}, {0x3008, 0x3020}, {0x3030, 0x3030}, {0x303D, 0x303F}, {0x30FB, 0x30FB},
    {0xFE10, 0xFE19}, {0xFE30, 0xFE4F}, {0xFE50, 0xFE6B},
    {0xFF01, 0xFF0F}, {0xFF1A, 0xFF20}, {0xFF3B, 0xFF3E}, {0xFF40, 0xFF40}, {0xFF5B, 0xFF65},
    {0xFFE0, 0xFFEE}, {0xFFFC, 0xFFFD},
};

inline constexpr Range digit_ranges[] = {
    {0x30, 0x39}, {0xB2, 0xB3}, {0xB9, 0xB9}, {0xBC, 0xBE},
    {0x0660, 0x0669}, {0x06F0, 0x06F9}, {0x07C0, 0x07C9}, {0x0966, 0x096F}, {0x09E6, 0x09EF},
    {0x0A66, 0x0A6F}, {0x0AE6, 0x0AEF}, {0x0B66, 0x0B6F}, {0x0BE6, 0x0BEF}, {0x0C66, 0x0C6F},
    {0x0CE6, 0x0CEF}, {0x0D66, 0x0D6F}, {0x0E50, 0x0E59}, {0x0ED0, 0x0ED9}, {0x1040, 0x1049},
    {0x17E0, 0x17E9}, {0x2070, 0x2079}, {0x2080, 0x2089}, {0x2150, 0x2189}, {0x2460, 0x249B},
    {0xFF10, 0xFF19},
};

} // namespace detail

inline bool is_whitespace(char32_t c) { return detail::in_ranges(c, detail::whitespace_ranges); }

inline bool is_control(char32_t c) { return c < 0x20 || (c >= 0x7F && c < 0xA0); }

inline bool is_emoji(char32_t c) { return detail::in_ranges(c, detail::emoji_ranges); }

inline bool is_emoji_format(char32_t c) { return detail::in_ranges(c, detail::emoji_format_ranges); }

/** Apostrophes are deleted in place ("don't" -> "dont") instead of splitting the word. */
inline bool is_apostrophe(char32_t c) { return c == U'\'' || c == 0x2019 || c == 0x02BC || c == 0xFF07; }

/** Punctuation and symbol characters. The underscore is deliberately excluded. */
inline bool is_punctuation(char32_t c) {
    return c != U'_' && detail::in_ranges(c, detail::punctuation_ranges);
}

inline bool is_digit(char32_t c) { return detail::in_ranges(c, detail::digit_ranges); }

/**
 * Simple (1:1) lowercase mapping for Latin, Greek, Cyrillic, Armenian and fullwidth Latin.
 * Scripts without case pass through unchanged.
 */
inline char32_t to_lower(char32_t c) {
    if (c < 0x80) {
        return (c >= U'A' && c <= U'Z') ? c + 0x20 : c;
    }
    if ((c >= 0xC0 && c <= 0xDE) && c != 0xD7) {
        return c + 0x20;
    }
    if (c >= 0x0100 && c <= 0x017F) {
        if (c == 0x0130) {
            return U'i';
        }
        if (c == 0x0178) {
            return 0x00FF;
        }
        if ((c >= 0x0139 && c <= 0x0148) || (c >= 0x0179 && c <= 0x017E)) {
            return (c % 2 == 1) ? c + 1 : c;
        }
        if (c == 0x0138 || c == 0x0149 || c == 0x017F) {
            return c;
        }
        return (c % 2 == 0) ? c + 1 : c;
    }
    if (c >= 0x0180 && c <= 0x024F) {
        // Latin Extended-B is irregular; only the regular paired blocks are mapped.
        if ((c >= 0x01CD && c <= 0x01DC) ) {
            return (c % 2 == 1) ? c + 1 : c;
        }
        if ((c >= 0x01DE && c <= 0x01EF) || (c >= 0x01F8 && c <= 0x021F) || (c >= 0x0222 && c <= 0x0233) ||
            (c >= 0x0246 && c <= 0x024F)) {
            return (c % 2 == 0) ? c + 1 : c;
        }
        return c;
    }
    if (c >= 0x0370 && c <= 0x03FF) {
        if (c >= 0x0391 && c <= 0x03AB && c != 0x03A2) {
            return c + 0x20;
        }
        if (c == 0x0386) {
            return 0x03AC;
        }
        if (c >= 0x0388 && c <= 0x038A) {
            return c + 37;
        }
        if (c == 0x038C) {
            return 0x03CC;
        }
        if (c == 0x038E || c == 0x038F) {
            return c + 63;
        }
        return c;
    }
    if (c >= 0x0400 && c <= 0x040F) {
        return c + 0x50;
    }
    if (c >= 0x0410 && c <= 0x042F) {
        return c + 0x20;
    }
    if (c >= 0x0460 && c <= 0x04FF) {
        if (c == 0x04C0) {
            return 0x04CF;
        }
        if (c >= 0x04C1 && c <= 0x04CE) {
            return (c % 2 == 1) ? c + 1 : c;
        }
        if ((c >= 0x0460 && c <= 0x0481) || (c >= 0x048A && c <= 0x04BF) || (c >= 0x04D0 && c <= 0x04FF)) {
            return (c % 2 == 0) ? c + 1 : c;
        }
        return c;
    }
    if (c >= 0x0531 && c <= 0x0556) {
        return c + 0x30;
    }
    if ((c >= 0x1E00 && c <= 0x1E95) || (c >= 0x1EA0 && c <= 0x1EFF)) {
        return (c % 2 == 0) ? c + 1 : c;
    }
    if (c >= 0xFF21 && c <= 0xFF3A) {
        return c + 0x20;
    }
    return c;
}

inline std::string to_lower(std::string_view utf8) {
    std::string out;
    out.reserve(utf8.size());
    for (auto cp : decode_utf8(utf8)) {
        append_utf8(out, to_lower(cp));
    }
    return out;
}

/**
 * Splits on Unicode whitespace. Runs of non-Latin script stay whole, so a CJK phrase
 * without spaces is a single token.
 */
inline std::vector<std::string> tokenize(std::string_view utf8) {
    std::vector<std::string> tokens;
    std::string current;
    for (auto cp : decode_utf8(utf8)) {
        if (is_whitespace(cp)) {
            if (!current.empty()) {
                tokens.push_back(std::move(current));
                current.clear();
            }
        } else {
            append_utf8(current, cp);
        }
    }
    if (!current.empty()) {
        tokens.push_back(std::move(current));
    }
    return tokens;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) {
            out += sep;
        }
        out += parts[i];
    }
    return out;
}

inline std::string trim(std::string_view s) {
    auto cps = decode_utf8(s);
    std::size_t b = 0, e = cps.size();
    while (b < e && is_whitespace(cps[b])) {
        ++b;
    }
    while (e > b && is_whitespace(cps[e - 1])) {
        --e;
    }
    return encode_utf8(std::u32string_view(cps).substr(b, e - b));
}

} // namespace topiclens::text

#endif
