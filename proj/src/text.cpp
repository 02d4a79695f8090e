#include "kgrx/text.hpp"

#include "kgrx/errors.hpp"

#include <fstream>
#include <sstream>

namespace kgrx {

namespace {

bool is_alnum(char c) noexcept {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

char lower(char c) noexcept { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ' ' || c == '\t') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

} // namespace

void AbbreviationTable::add(std::string abbrev, std::string expansion) {
    std::string key;
    for (char c : abbrev) key.push_back(lower(c));
    std::string value;
    for (char c : expansion) value.push_back(lower(c));
    entries_[std::move(key)] = std::move(value);
}

AbbreviationTable AbbreviationTable::from_tsv(std::string_view content) {
    AbbreviationTable table;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= content.size()) {
        auto nl = content.find('\n', pos);
        if (nl == std::string_view::npos) nl = content.size();
        auto line = content.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty() || line.front() == '#') {
            if (nl == content.size()) break;
            continue;
        }
        auto tab = line.find('\t');
        if (tab == std::string_view::npos || tab == 0 || tab + 1 == line.size()) {
            throw ParseError(line_no, "abbreviation line needs two tab-separated columns");
        }
        table.add(std::string(line.substr(0, tab)), std::string(line.substr(tab + 1)));
        if (nl == content.size()) break;
    }
    return table;
}

AbbreviationTable AbbreviationTable::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open abbreviation table: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_tsv(buf.str());
}

const AbbreviationTable& AbbreviationTable::builtin() {
    static const AbbreviationTable table = [] {
        AbbreviationTable t;
        t.add("periap.", "periapical");
        t.add("rad.", "radiolucency");
        t.add("abx", "antibiotics");
        t.add("pdl", "periodontal ligament");
        t.add("hx", "history");
        t.add("sx", "symptoms");
        t.add("furc.", "furcation");
        t.add("mand.", "mandibular");
        t.add("max.", "maxillary");
        return t;
    }();
    return table;
}

const std::string* AbbreviationTable::find(std::string_view key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
}

std::vector<Token> tokenize(std::string_view text, const AbbreviationTable& abbreviations) {
    std::vector<Token> out;
    std::size_t sentence = 0;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        const char c = text[i];
        const bool starts_notation =
            c == '#' && i + 1 < n && is_alnum(text[i + 1]) && (i == 0 || !is_alnum(text[i - 1]));
        if (!is_alnum(c) && !starts_notation) {
            if (c == '.' || c == ';') ++sentence;
            ++i;
            continue;
        }
        const std::size_t begin = i;
        std::string tok;
        if (starts_notation) {
            tok.push_back('#');
            ++i;
        }
        while (i < n && is_alnum(text[i])) tok.push_back(lower(text[i++]));

        std::size_t end = i;
        const std::string* expansion = nullptr;
        if (i < n && text[i] == '.') {
            expansion = abbreviations.find(tok + ".");
            if (expansion != nullptr) end = ++i; // the period belongs to the abbreviation
        }
        if (expansion == nullptr) expansion = abbreviations.find(tok);

        if (expansion == nullptr) {
            out.push_back({std::move(tok), begin, end, sentence});
        } else {
            for (auto& part : split_ws(*expansion)) out.push_back({std::move(part), begin, end, sentence});
        }
    }
    return out;
}

std::vector<std::string> token_strings(std::string_view text) {
    std::vector<std::string> out;
    for (auto& t : tokenize(text)) out.push_back(std::move(t.text));
    return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i != 0) out.append(sep);
        out.append(parts[i]);
    }
    return out;
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace kgrx
