#pragma once

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace forge {

// Decodes UTF-8 into unicode scalar values. Invalid sequences decode to
// U+FFFD, one replacement per rejected byte, so the result is deterministic
// on arbitrary model output.
inline std::vector<char32_t> utf8_decode(std::string_view s) {
    std::vector<char32_t> out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        unsigned char b0 = static_cast<unsigned char>(s[i]);
        std::size_t len;
        char32_t cp;
        if (b0 < 0x80) {
            len = 1; cp = b0;
        } else if ((b0 & 0xe0) == 0xc0) {
            len = 2; cp = b0 & 0x1f;
        } else if ((b0 & 0xf0) == 0xe0) {
            len = 3; cp = b0 & 0x0f;
        } else if ((b0 & 0xf8) == 0xf0) {
            len = 4; cp = b0 & 0x07;
        } else {
            out.push_back(0xFFFD); ++i; continue;
        }
        if (i + len > s.size()) {
            out.push_back(0xFFFD); ++i; continue;
        }
        bool ok = true;
        for (std::size_t j = 1; j < len; ++j) {
            unsigned char b = static_cast<unsigned char>(s[i + j]);
            if ((b & 0xc0) != 0x80) { ok = false; break; }
            cp = (cp << 6) | (b & 0x3f);
        }
        // overlong forms and surrogates are invalid
        if (ok && (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF) ||
                   (len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) ||
                   (len == 4 && cp < 0x10000))) {
            ok = false;
        }
        if (!ok) {
            out.push_back(0xFFFD); ++i; continue;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

inline void utf8_append(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else {
        out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    }
}

// Number of unicode scalar values in a UTF-8 string.
inline std::size_t count_scalars(std::string_view s) {
    return utf8_decode(s).size();
}

namespace detail {

inline const icu::Normalizer2& nfc() {
    UErrorCode ec = U_ZERO_ERROR;
    const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(ec);
    if (U_FAILURE(ec) || !n) throw std::runtime_error("ICU NFC instance unavailable");
    return *n;
}

}  // namespace detail

// NFC-normalize and lowercase (root locale, so no Turkish-i surprises).
// Lowercasing can in rare cases denormalize, hence the second NFC pass.
inline std::string nfc_lower(std::string_view s) {
    icu::UnicodeString u = icu::UnicodeString::fromUTF8(
        icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
    UErrorCode ec = U_ZERO_ERROR;
    icu::UnicodeString n = detail::nfc().normalize(u, ec);
    if (U_FAILURE(ec)) throw std::runtime_error("ICU normalize failed");
    n.toLower(icu::Locale::getRoot());
    ec = U_ZERO_ERROR;
    icu::UnicodeString n2 = detail::nfc().normalize(n, ec);
    if (U_FAILURE(ec)) throw std::runtime_error("ICU normalize failed");
    std::string out;
    n2.toUTF8String(out);
    return out;
}

inline bool is_unicode_space(char32_t cp) {
    if (cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == U'\v' || cp == U'\f') return true;
    return u_isUWhiteSpace(static_cast<UChar32>(cp)) != 0;
}

}  // namespace forge
