#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace seqclr {

// Ordered alphabet mapping symbols (Unicode codepoints) to dense ids 0..N-1.
// Ids past the alphabet are reserved for decoder specials:
//   blank_id() = N          (CTC blank)
//   eow_id()   = N          (attention end-of-word)
//   start_id() = N + 1      (attention start-of-decoding)
class Charset {
public:
    // Symbols given as a UTF-8 string; ids follow codepoint order of appearance.
    explicit Charset(const std::string& symbols_utf8);

    // Printable ASCII 32..126: space, digits, letters, punctuation (95 symbols).
    static Charset printable_ascii();
    // Digits plus upper/lowercase letters (62 symbols), the renderer default.
    static Charset alphanumeric();

    int size() const { return static_cast<int>(symbols_.size()); }
    int blank_id() const { return size(); }
    int eow_id() const { return size(); }
    int start_id() const { return size() + 1; }

    bool contains(char32_t cp) const { return to_id_.count(cp) > 0; }
    int id_of(char32_t cp) const;           // throws ConfigError on unknown symbol
    char32_t symbol_of(int id) const;       // alphabet ids only

    // UTF-8 text -> ids. Throws ConfigError on unknown symbols or invalid UTF-8.
    std::vector<int> encode(const std::string& text) const;
    // Alphabet ids -> UTF-8 text (special ids are rejected).
    std::string decode(const std::vector<int>& ids) const;

    // The alphabet as a UTF-8 string, in id order.
    std::string symbols_utf8() const;

private:
    std::vector<char32_t> symbols_;
    std::unordered_map<char32_t, int> to_id_;
};

// Decodes one UTF-8 string into codepoints. Throws ConfigError on malformed input.
std::vector<char32_t> utf8_decode(const std::string& text);
// Encodes codepoints back into a UTF-8 string.
std::string utf8_encode(const std::vector<char32_t>& codepoints);

}  // namespace seqclr
