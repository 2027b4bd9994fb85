#include "seqclr/charset.hpp"

#include <stdexcept>

#include "seqclr/errors.hpp"

namespace seqclr {

std::vector<char32_t> utf8_decode(const std::string& text) {
    std::vector<char32_t> out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        const unsigned char c0 = static_cast<unsigned char>(text[i]);
        int extra;
        char32_t cp;
        if (c0 < 0x80) {
            extra = 0;
            cp = c0;
        } else if ((c0 & 0xE0) == 0xC0) {
            extra = 1;
            cp = c0 & 0x1F;
        } else if ((c0 & 0xF0) == 0xE0) {
            extra = 2;
            cp = c0 & 0x0F;
        } else if ((c0 & 0xF8) == 0xF0) {
            extra = 3;
            cp = c0 & 0x07;
        } else {
            throw ConfigError("invalid UTF-8 lead byte at offset " + std::to_string(i));
        }
        if (i + extra >= text.size())
            throw ConfigError("truncated UTF-8 sequence at offset " + std::to_string(i));
        for (int k = 1; k <= extra; ++k) {
            const unsigned char cc = static_cast<unsigned char>(text[i + k]);
            if ((cc & 0xC0) != 0x80)
                throw ConfigError("invalid UTF-8 continuation byte at offset " +
                                  std::to_string(i + k));
            cp = (cp << 6) | (cc & 0x3F);
        }
        // Reject overlong encodings and surrogate range.
        static constexpr char32_t kMin[4] = {0x0, 0x80, 0x800, 0x10000};
        if (extra > 0 && cp < kMin[extra])
            throw ConfigError("overlong UTF-8 encoding at offset " + std::to_string(i));
        if (cp >= 0xD800 && cp <= 0xDFFF)
            throw ConfigError("UTF-8 surrogate codepoint at offset " + std::to_string(i));
        if (cp > 0x10FFFF)
            throw ConfigError("UTF-8 codepoint beyond U+10FFFF at offset " + std::to_string(i));
        out.push_back(cp);
        i += static_cast<std::size_t>(extra) + 1;
    }
    return out;
}

std::string utf8_encode(const std::vector<char32_t>& codepoints) {
    std::string out;
    out.reserve(codepoints.size());
    for (char32_t cp : codepoints) {
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
    return out;
}

Charset::Charset(const std::string& symbols_utf8) {
    for (char32_t cp : utf8_decode(symbols_utf8)) {
        if (to_id_.count(cp))
            throw ConfigError("duplicate symbol in charset: codepoint " +
                              std::to_string(static_cast<std::uint32_t>(cp)));
        to_id_.emplace(cp, static_cast<int>(symbols_.size()));
        symbols_.push_back(cp);
    }
}

Charset Charset::printable_ascii() {
    std::string s;
    for (char c = 32; c <= 126; ++c) s.push_back(c);
    return Charset(s);
}

Charset Charset::alphanumeric() {
    std::string s;
    for (char c = '0'; c <= '9'; ++c) s.push_back(c);
    for (char c = 'a'; c <= 'z'; ++c) s.push_back(c);
    for (char c = 'A'; c <= 'Z'; ++c) s.push_back(c);
    return Charset(s);
}

int Charset::id_of(char32_t cp) const {
    auto it = to_id_.find(cp);
    if (it == to_id_.end())
        throw ConfigError("symbol not in charset: codepoint " +
                          std::to_string(static_cast<std::uint32_t>(cp)));
    return it->second;
}

char32_t Charset::symbol_of(int id) const {
    if (id < 0 || id >= size())
        throw ConfigError("id out of charset range: " + std::to_string(id));
    return symbols_[static_cast<std::size_t>(id)];
}

std::vector<int> Charset::encode(const std::string& text) const {
    std::vector<int> ids;
    for (char32_t cp : utf8_decode(text)) ids.push_back(id_of(cp));
    return ids;
}

std::string Charset::decode(const std::vector<int>& ids) const {
    std::vector<char32_t> cps;
    cps.reserve(ids.size());
    for (int id : ids) cps.push_back(symbol_of(id));
    return utf8_encode(cps);
}

std::string Charset::symbols_utf8() const { return utf8_encode(symbols_); }

}  // namespace seqclr
