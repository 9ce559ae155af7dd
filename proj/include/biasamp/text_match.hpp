#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace biasamp {

/// Bytes that sit inside a token: ASCII alphanumerics plus any non-ASCII
/// byte (multi-byte UTF-8 sequences never act as boundaries).
inline bool is_word_byte(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
           c >= 0x80;
}

inline bool is_space_byte(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline char to_lower_ascii(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

/// Lowercase ASCII letters and collapse each whitespace run to one ' '.
/// Multiword phrases then match any caption whose words are separated by a
/// single whitespace run.
std::string normalize_for_match(std::string_view text, std::string* out = nullptr);

/// Aho-Corasick automaton over lowercase phrases. A phrase matches only at
/// token boundaries: the bytes adjacent to the matched span must not be word
/// bytes.
class PhraseMatcher {
public:
    explicit PhraseMatcher(const std::vector<std::string>& phrases);

    std::size_t pattern_count() const { return patterns_.size(); }
    const std::vector<std::string>& patterns() const { return patterns_; }

    /// Sets hits[i] for every phrase i occurring in text. hits is resized to
    /// pattern_count() and cleared first. scratch is reused across calls to
    /// avoid re-allocating the normalized buffer.
    void match(std::string_view text, std::vector<bool>& hits, std::string& scratch) const;

    /// Single-text convenience.
    bool contains(std::string_view text, std::size_t pattern_index) const;

private:
    struct Node {
        std::array<int, 256> next;
        std::vector<int> outputs;  // pattern ids ending here (own + via fail chain)
    };

    std::vector<std::string> patterns_;
    std::vector<Node> nodes_;

    void run(std::string_view normalized, std::vector<bool>& hits) const;
};

}  // namespace biasamp
