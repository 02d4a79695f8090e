#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace kgrx {

/// One normalized token. `begin`/`end` index the original text (half-open).
/// Tokens produced by expanding one abbreviation share its span.
struct Token {
    std::string text;
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t sentence = 0; ///< incremented at every '.' or ';' separator
};

/// Abbreviation → expansion lookup. Keys may end with '.', in which case they
/// only match a token immediately followed by a period in the source text.
class AbbreviationTable {
public:
    AbbreviationTable() = default;

    void add(std::string abbrev, std::string expansion);

    /// Two-column UTF-8 text: abbrev TAB expansion. Blank lines and lines
    /// starting with '#' are skipped.
    static AbbreviationTable from_tsv(std::string_view content);
    static AbbreviationTable load(const std::string& path);

    /// Table bundled with the engine (mirrors fixtures/abbreviations.tsv).
    static const AbbreviationTable& builtin();

    const std::string* find(std::string_view key) const;
    bool empty() const { return entries_.empty(); }

private:
    std::map<std::string, std::string, std::less<>> entries_;
};

/// Lowercases, splits on every non-alphanumeric ASCII byte except a '#' that
/// starts a token and is followed by an alphanumeric (tooth notation), then
/// applies the abbreviation table at token level.
std::vector<Token> tokenize(std::string_view text,
                            const AbbreviationTable& abbreviations = AbbreviationTable::builtin());

/// Token texts only.
std::vector<std::string> token_strings(std::string_view text);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

} // namespace kgrx
