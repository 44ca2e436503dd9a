#include "codectx/jparse.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace codectx::jparse {

namespace {

constexpr char kLiteralFill = '\x01';

bool is_ident_start(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == '$' || c >= 0x80;
}

bool is_ident_char(unsigned char c) {
    return is_ident_start(c) || (c >= '0' && c <= '9');
}

// Comments become spaces (newlines kept for line numbers), string/char/text
// block interiors become \x01 with the quotes kept, so structural scanning
// can treat braces, parens and commas literally.
std::string mask_source(std::string_view src) {
    std::string out(src);
    enum class St { Code, Line, Block, Str, Chr, TextBlock };
    St st = St::Code;
    for (std::size_t i = 0; i < src.size(); ++i) {
        char c = src[i];
        switch (st) {
        case St::Code:
            if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
                st = St::Line;
                out[i] = ' ';
            } else if (c == '/' && i + 1 < src.size() && src[i + 1] == '*') {
                st = St::Block;
                out[i] = ' ';
            } else if (c == '"' && i + 2 < src.size() && src[i + 1] == '"' && src[i + 2] == '"') {
                st = St::TextBlock;
                out[i + 1] = out[i + 2] = kLiteralFill;
                i += 2;
            } else if (c == '"') {
                st = St::Str;
            } else if (c == '\'') {
                st = St::Chr;
            }
            break;
        case St::Line:
            if (c == '\n')
                st = St::Code;
            else
                out[i] = ' ';
            break;
        case St::Block:
            if (c == '*' && i + 1 < src.size() && src[i + 1] == '/') {
                out[i] = out[i + 1] = ' ';
                ++i;
                st = St::Code;
            } else if (c != '\n') {
                out[i] = ' ';
            }
            break;
        case St::Str:
        case St::Chr:
            if (c == '\\' && i + 1 < src.size()) {
                out[i] = kLiteralFill;
                out[i + 1] = kLiteralFill;
                ++i;
            } else if ((st == St::Str && c == '"') || (st == St::Chr && c == '\'')) {
                st = St::Code;
            } else {
                out[i] = (c == '\n') ? '\n' : kLiteralFill;
            }
            break;
        case St::TextBlock:
            if (c == '"' && i + 2 < src.size() && src[i + 1] == '"' && src[i + 2] == '"') {
                out[i] = out[i + 1] = kLiteralFill;
                i += 2;
                st = St::Code;
            } else {
                out[i] = (c == '\n') ? '\n' : kLiteralFill;
            }
            break;
        }
    }
    return out;
}

struct Tok {
    std::string_view text; // view into the masked buffer
    std::size_t pos = 0;
    bool ident = false; // identifier (not starting with a digit)
};

std::vector<Tok> lex(std::string_view masked) {
    std::vector<Tok> toks;
    std::size_t i = 0;
    while (i < masked.size()) {
        unsigned char c = static_cast<unsigned char>(masked[i]);
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v' ||
            c == static_cast<unsigned char>(kLiteralFill)) {
            ++i;
            continue;
        }
        if (is_ident_char(c)) {
            std::size_t j = i + 1;
            while (j < masked.size() && is_ident_char(static_cast<unsigned char>(masked[j]))) ++j;
            toks.push_back({masked.substr(i, j - i), i, is_ident_start(c)});
            i = j;
        } else {
            toks.push_back({masked.substr(i, 1), i, false});
            ++i;
        }
    }
    return toks;
}

const std::array<std::string_view, 12> kModifiers = {
    "public", "protected", "private", "static",   "final",    "abstract",
    "default", "native",    "synchronized", "strictfp", "transient", "volatile"};

bool is_modifier(std::string_view s) {
    return std::find(kModifiers.begin(), kModifiers.end(), s) != kModifiers.end();
}

const std::array<std::string_view, 15> kNotACallee = {
    "if",   "for", "while", "switch", "catch", "synchronized", "return", "new",
    "this", "super", "do",  "else",  "try",   "throw",        "assert"};

bool is_callee_keyword(std::string_view s) {
    return std::find(kNotACallee.begin(), kNotACallee.end(), s) != kNotACallee.end();
}

const std::array<std::string_view, 9> kPrimitives = {"int",    "long",  "short", "byte", "char",
                                                     "boolean", "float", "double", "void"};

bool is_primitive(std::string_view s) {
    return std::find(kPrimitives.begin(), kPrimitives.end(), s) != kPrimitives.end();
}

bool is_type_decl_keyword(std::string_view s) {
    return s == "class" || s == "interface" || s == "enum" || s == "record";
}

std::size_t line_of(std::string_view src, std::size_t pos) {
    return 1 + static_cast<std::size_t>(std::count(src.begin(), src.begin() + static_cast<long>(pos), '\n'));
}

// Index of the token matching `open` at `at`, or npos if the stream ends first.
std::size_t match_forward(const std::vector<Tok>& toks, std::size_t at, char open, char close) {
    int depth = 0;
    for (std::size_t i = at; i < toks.size(); ++i) {
        if (toks[i].text.size() == 1) {
            if (toks[i].text[0] == open) ++depth;
            else if (toks[i].text[0] == close && --depth == 0) return i;
        }
    }
    return std::string_view::npos;
}

// Does toks[at]=='<' open something that looks like a type-argument list?
// Returns the index of the matching '>' or npos. Only type-ish tokens are
// allowed inside, so comparison operators fall through to "no".
std::size_t match_type_args(const std::vector<Tok>& toks, std::size_t at) {
    int depth = 0;
    for (std::size_t i = at; i < toks.size(); ++i) {
        const Tok& t = toks[i];
        if (t.text == "<") {
            ++depth;
        } else if (t.text == ">") {
            if (--depth == 0) return i;
        } else if (t.ident) {
            if (!(t.text == "extends" || t.text == "super" || is_primitive(t.text) ||
                  is_java_identifier(t.text)))
                return std::string_view::npos;
        } else if (!(t.text == "," || t.text == "." || t.text == "?" || t.text == "&" ||
                     t.text == "[" || t.text == "]" || t.text == "@")) {
            return std::string_view::npos;
        }
    }
    return std::string_view::npos;
}

std::string collapse_ws(std::string_view s) {
    std::string out;
    bool in_ws = false;
    for (char c : s) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v' ||
            c == kLiteralFill) {
            in_ws = true;
        } else {
            if (in_ws && !out.empty()) out.push_back(' ');
            in_ws = false;
            out.push_back(c);
        }
    }
    return out;
}

} // namespace

std::string MethodSignature::text() const {
    std::string out = type_path;
    if (!out.empty()) out.push_back('.');
    out += name;
    out.push_back('(');
    for (std::size_t i = 0; i < param_types.size(); ++i) {
        if (i) out.push_back(',');
        out += param_types[i];
    }
    out.push_back(')');
    return out;
}

bool is_java_identifier(std::string_view s) {
    if (s.empty() || !is_ident_start(static_cast<unsigned char>(s[0]))) return false;
    return std::all_of(s.begin(), s.end(),
                       [](char c) { return is_ident_char(static_cast<unsigned char>(c)); });
}

std::string normalize_body(std::string_view raw) {
    std::string stripped;
    stripped.reserve(raw.size());
    enum class St { Code, Line, Block, Str, Chr, TextBlock };
    St st = St::Code;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        char c = raw[i];
        switch (st) {
        case St::Code:
            if (c == '/' && i + 1 < raw.size() && raw[i + 1] == '/') {
                st = St::Line;
                ++i;
            } else if (c == '/' && i + 1 < raw.size() && raw[i + 1] == '*') {
                st = St::Block;
                ++i;
            } else if (c == '"' && i + 2 < raw.size() && raw[i + 1] == '"' && raw[i + 2] == '"') {
                st = St::TextBlock;
                stripped += "\"\"\"";
                i += 2;
            } else {
                if (c == '"') st = St::Str;
                else if (c == '\'') st = St::Chr;
                stripped.push_back(c);
            }
            break;
        case St::Line:
            if (c == '\n') {
                st = St::Code;
                stripped.push_back('\n');
            }
            break;
        case St::Block:
            if (c == '*' && i + 1 < raw.size() && raw[i + 1] == '/') {
                st = St::Code;
                ++i;
            }
            break;
        case St::Str:
        case St::Chr:
            stripped.push_back(c);
            if (c == '\\' && i + 1 < raw.size()) {
                stripped.push_back(raw[i + 1]);
                ++i;
            } else if ((st == St::Str && c == '"') || (st == St::Chr && c == '\'')) {
                st = St::Code;
            }
            break;
        case St::TextBlock:
            stripped.push_back(c);
            if (c == '"' && i + 2 < raw.size() && raw[i + 1] == '"' && raw[i + 2] == '"') {
                stripped += "\"\"";
                i += 2;
                st = St::Code;
            }
            break;
        }
    }

    std::string out;
    out.reserve(stripped.size());
    bool in_ws = false;
    bool in_literal = false;
    char quote = 0;
    for (std::size_t i = 0; i < stripped.size(); ++i) {
        char c = stripped[i];
        if (in_literal) {
            out.push_back(c);
            if (c == '\\' && i + 1 < stripped.size()) {
                out.push_back(stripped[++i]);
            } else if (c == quote) {
                in_literal = false;
            }
            continue;
        }
        if (c == '"' || c == '\'') {
            if (in_ws && !out.empty()) out.push_back(' ');
            in_ws = false;
            in_literal = true;
            quote = c;
            out.push_back(c);
        } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
            in_ws = true;
        } else {
            if (in_ws && !out.empty()) out.push_back(' ');
            in_ws = false;
            out.push_back(c);
        }
    }
    return out;
}

namespace {

// Argument count = top-level commas + 1 inside (open..close), 0 for empty
// parens. Type-argument lists are skipped so `new Map<A,B>()` passed as an
// argument does not inflate the count.
std::size_t count_args(const std::vector<Tok>& toks, std::size_t open, std::size_t close) {
    if (close == open + 1) return 0;
    std::size_t commas = 0;
    int depth = 0;
    for (std::size_t i = open + 1; i < close; ++i) {
        const Tok& t = toks[i];
        if (t.text == "(" || t.text == "[" || t.text == "{") ++depth;
        else if (t.text == ")" || t.text == "]" || t.text == "}") --depth;
        else if (t.text == "<" && i > open + 1 && toks[i - 1].ident) {
            std::size_t g = match_type_args(toks, i);
            if (g != std::string_view::npos && g < close) i = g;
        } else if (t.text == "," && depth == 0) {
            ++commas;
        }
    }
    return commas + 1;
}

// Scans a token range for invocation sites. `src` is the original source for
// receiver text; lines are 1-based over `src`.
void scan_sites(const std::vector<Tok>& toks, std::size_t begin, std::size_t end,
                std::string_view src, std::vector<CallSite>& out) {
    for (std::size_t i = begin; i < end; ++i) {
        const Tok& t = toks[i];
        if (t.text == "new" && t.ident) {
            // new a.b.Type<...> ( args )
            std::size_t j = i + 1;
            std::string_view simple;
            while (j < end && toks[j].ident && is_java_identifier(toks[j].text)) {
                simple = toks[j].text;
                ++j;
                if (j < end && toks[j].text == ".") ++j;
                else break;
            }
            if (simple.empty()) continue;
            if (j < end && toks[j].text == "<") {
                std::size_t g = match_type_args(toks, j);
                if (g == std::string_view::npos || g >= end) continue;
                j = g + 1;
            }
            if (j < end && toks[j].text == "(") {
                std::size_t close = match_forward(toks, j, '(', ')');
                if (close != std::string_view::npos && close < end) {
                    out.push_back({std::string(simple), count_args(toks, j, close), std::nullopt,
                                   line_of(src, t.pos)});
                }
            }
            continue;
        }
        if (!t.ident || i + 1 >= end || toks[i + 1].text != "(") continue;
        if (is_callee_keyword(t.text) || is_primitive(t.text) || !is_java_identifier(t.text))
            continue;
        if (i > begin) {
            const Tok& p = toks[i - 1];
            // `Type name(` and `@Anno(` shapes are declarations/annotations, not calls
            if (p.ident || p.text == ">" || p.text == "]" || p.text == "@") continue;
        }
        std::size_t close = match_forward(toks, i + 1, '(', ')');
        if (close == std::string_view::npos || close >= end) continue;
        std::optional<std::string> receiver;
        if (i > begin && toks[i - 1].text == ".") {
            // capture a plain dotted chain: a.b.c.name(
            std::size_t k = i - 1;
            std::size_t chain_end = k; // exclusive of the final dot
            std::size_t chain_begin = chain_end;
            while (k > begin) {
                --k;
                if (toks[k].ident &&
                    (is_java_identifier(toks[k].text) || toks[k].text == "this" || toks[k].text == "super")) {
                    chain_begin = k;
                    if (k > begin && toks[k - 1].text == ".") { --k; continue; }
                }
                break;
            }
            // `new a.b.Type(...)` was already emitted by the constructor path above
            if (chain_begin > begin && toks[chain_begin - 1].text == "new") continue;
            if (chain_begin < chain_end) {
                std::size_t from = toks[chain_begin].pos;
                std::size_t to = toks[chain_end - 1].pos + toks[chain_end - 1].text.size();
                receiver = std::string(src.substr(from, to - from));
            }
        }
        out.push_back({std::string(t.text), count_args(toks, i + 1, close), std::move(receiver),
                       line_of(src, t.pos)});
    }
}

struct ParamListResult {
    std::vector<std::string> types;
    bool ok = true;
};

// Splits (open..close) on top-level commas; each parameter keeps the source
// spelling of its type (annotations and `final` stripped, whitespace
// collapsed, C-style array suffix folded into the type).
ParamListResult parse_params(const std::vector<Tok>& toks, std::size_t open, std::size_t close,
                             std::string_view src) {
    ParamListResult r;
    if (close == open + 1) return r;
    std::vector<std::pair<std::size_t, std::size_t>> pieces; // token ranges
    std::size_t start = open + 1;
    int depth = 0;
    for (std::size_t i = open + 1; i < close; ++i) {
        const Tok& t = toks[i];
        if (t.text == "(" || t.text == "[" || t.text == "{") ++depth;
        else if (t.text == ")" || t.text == "]" || t.text == "}") --depth;
        else if (t.text == "<" && i > open + 1 && toks[i - 1].ident) {
            std::size_t g = match_type_args(toks, i);
            if (g != std::string_view::npos && g < close) i = g;
        } else if (t.text == "," && depth == 0) {
            pieces.emplace_back(start, i);
            start = i + 1;
        }
    }
    pieces.emplace_back(start, close);

    for (auto [b, e] : pieces) {
        // strip leading annotations and `final`
        while (b < e) {
            if (toks[b].text == "@") {
                b += 2; // @ + name
                if (b < e && toks[b].text == "(") {
                    std::size_t c = match_forward(toks, b, '(', ')');
                    if (c == std::string_view::npos || c >= e) { r.ok = false; break; }
                    b = c + 1;
                }
            } else if (toks[b].text == "final") {
                ++b;
            } else {
                break;
            }
        }
        if (b >= e) { r.ok = false; continue; }
        // trailing `[]` pairs after the name belong to the type
        std::size_t name_end = e;
        std::string suffix;
        while (name_end > b + 1 && toks[name_end - 1].text == "]" && toks[name_end - 2].text == "[") {
            suffix += "[]";
            name_end -= 2;
        }
        if (name_end <= b || !toks[name_end - 1].ident) { r.ok = false; continue; }
        std::size_t type_end = name_end - 1; // exclusive: the name token
        if (type_end == b) { r.ok = false; continue; }
        std::size_t from = toks[b].pos;
        std::size_t to = toks[type_end - 1].pos + toks[type_end - 1].text.size();
        std::string type_text = collapse_ws(src.substr(from, to - from));
        r.types.push_back(type_text + suffix);
    }
    return r;
}

struct TypeScope {
    std::string name;
    int body_depth = 0; // brace depth inside the type body
};

} // namespace

ParseResult extract_methods(std::string_view source, std::string_view file_path) {
    ParseResult result;
    const std::string masked = mask_source(source);
    const std::vector<Tok> toks = lex(masked);

    std::string package_name;
    std::vector<TypeScope> stack;
    int depth = 0;
    std::size_t anchor = 0; // first token of the current declaration candidate

    auto type_path = [&]() {
        std::string p = package_name;
        for (const auto& s : stack) {
            if (!p.empty()) p.push_back('.');
            p += s.name;
        }
        return p;
    };

    std::size_t i = 0;
    while (i < toks.size()) {
        const Tok& t = toks[i];

        if (t.text == "{") { ++depth; anchor = ++i; continue; }
        if (t.text == "}") {
            --depth;
            while (!stack.empty() && depth < stack.back().body_depth) stack.pop_back();
            anchor = ++i;
            continue;
        }
        if (t.text == ";") { anchor = ++i; continue; }

        if (t.ident && t.text == "package" && depth == 0 && stack.empty()) {
            std::size_t j = i + 1;
            std::string name;
            while (j < toks.size() && toks[j].text != ";") {
                name += toks[j].text;
                ++j;
            }
            package_name = name;
            i = (j < toks.size()) ? j + 1 : j;
            anchor = i;
            continue;
        }

        if (t.ident && is_type_decl_keyword(t.text) && i + 1 < toks.size() && toks[i + 1].ident &&
            is_java_identifier(toks[i + 1].text)) {
            std::string name(toks[i + 1].text);
            // skip the header (generics, extends/implements, record components) to the body brace
            std::size_t j = i + 2;
            int pd = 0;
            while (j < toks.size()) {
                std::string_view x = toks[j].text;
                if (x == "(") ++pd;
                else if (x == ")") --pd;
                else if (x == "<") {
                    std::size_t g = match_type_args(toks, j);
                    if (g != std::string_view::npos) { j = g + 1; continue; }
                } else if (pd == 0 && (x == "{" || x == ";")) break;
                ++j;
            }
            if (j < toks.size() && toks[j].text == "{") {
                ++depth;
                stack.push_back({std::move(name), depth});
                i = j + 1;
                anchor = i;
            } else {
                i = (j < toks.size()) ? j + 1 : j;
                anchor = i;
            }
            continue;
        }

        // method/constructor candidate: ident '(' at declaration level
        const int decl_depth = stack.empty() ? 0 : stack.back().body_depth;
        if (t.ident && depth == decl_depth && i + 1 < toks.size() && toks[i + 1].text == "(" &&
            is_java_identifier(t.text) && !is_callee_keyword(t.text) && !is_primitive(t.text) &&
            !(i > 0 && (toks[i - 1].text == "@" || toks[i - 1].text == "new" || toks[i - 1].text == "."))) {
            std::size_t close = match_forward(toks, i + 1, '(', ')');
            if (close != std::string_view::npos) {
                // after params: optional throws clause, then `{` (body) or `;` (no body)
                std::size_t j = close + 1;
                if (j < toks.size() && toks[j].text == "throws") {
                    ++j;
                    while (j < toks.size() &&
                           (toks[j].ident || toks[j].text == "." || toks[j].text == ","))
                        ++j;
                }
                if (j < toks.size() && toks[j].text == ";") {
                    // abstract/interface/native declaration without a body: skipped
                    i = j + 1;
                    anchor = i;
                    continue;
                }
                if (j < toks.size() && toks[j].text == "{") {
                    // declaration region: [anchor, i); skip leading annotations
                    std::size_t d = anchor;
                    while (d < i && toks[d].text == "@") {
                        d += 2;
                        while (d < i && toks[d].text == ".") d += 2; // qualified annotation names
                        if (d < i && toks[d].text == "(") {
                            std::size_t c = match_forward(toks, d, '(', ')');
                            if (c == std::string_view::npos || c >= i) break;
                            d = c + 1;
                        }
                    }
                    std::size_t decl_start = d;
                    // modifiers, then optional generic type parameters
                    while (d < i && toks[d].ident && is_modifier(toks[d].text)) ++d;
                    if (d < i && toks[d].text == "<") {
                        std::size_t g = match_type_args(toks, d);
                        if (g != std::string_view::npos && g < i) d = g + 1;
                    }
                    std::string return_type;
                    if (d < i) {
                        std::size_t from = toks[d].pos;
                        std::size_t to = toks[i - 1].pos + toks[i - 1].text.size();
                        return_type = collapse_ws(masked.substr(from, to - from));
                    }
                    bool is_ctor = return_type.empty() &&
                                   (stack.empty() || stack.back().name == t.text);
                    if (!return_type.empty() || is_ctor) {
                        std::size_t body_close = match_forward(toks, j, '{', '}');
                        if (body_close == std::string_view::npos) {
                            result.diagnostics.push_back(
                                {line_of(source, toks[j].pos),
                                 "unbalanced braces in method '" + std::string(t.text) + "'"});
                            i = j + 1;
                            anchor = i;
                            continue;
                        }
                        ParamListResult params = parse_params(toks, i + 1, close, source);
                        MethodRecord rec;
                        rec.signature = {type_path(), std::string(t.text), std::move(params.types),
                                         return_type};
                        rec.file_path = std::string(file_path);
                        std::size_t raw_from = toks[decl_start].pos;
                        std::size_t raw_to = toks[body_close].pos + 1;
                        rec.line_span = {line_of(source, raw_from), line_of(source, toks[body_close].pos)};
                        rec.raw_body = std::string(source.substr(raw_from, raw_to - raw_from));
                        rec.normalized_body = normalize_body(rec.raw_body);
                        std::vector<CallSite> sites;
                        scan_sites(toks, j + 1, body_close, source, sites);
                        rec.call_sites = std::move(sites);
                        result.methods.push_back(std::move(rec));
                        i = body_close + 1;
                        anchor = i;
                        continue;
                    }
                }
            }
        }

        ++i;
    }
    return result;
}

std::vector<CallSite> extract_call_sites(const MethodRecord& record) {
    const std::string masked = mask_source(record.raw_body);
    const std::vector<Tok> toks = lex(masked);
    // scan only inside the body braces so the declaration header is excluded
    std::size_t open = 0;
    while (open < toks.size() && toks[open].text != "{") ++open;
    if (open >= toks.size()) return {};
    std::size_t close = match_forward(toks, open, '{', '}');
    if (close == std::string_view::npos) close = toks.size();
    std::vector<CallSite> sites;
    scan_sites(toks, open + 1, close, record.raw_body, sites);
    const std::size_t base = record.line_span.start;
    for (auto& s : sites) s.line += base > 0 ? base - 1 : 0;
    return sites;
}

} // namespace codectx::jparse
