#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace codectx::jparse {

/// Identity key for a method: used to match the same declaration across
/// files and commits. Generic parameter types keep their source spelling
/// and are compared textually.
struct MethodSignature {
    std::string type_path; // enclosing package + class chain, dot separated; empty for bare fragments
    std::string name;
    std::vector<std::string> param_types;
    std::string return_type; // empty for constructors

    std::size_t arity() const { return param_types.size(); }
    std::string text() const; // canonical "type_path.name(T1,T2)" rendering
    bool operator==(const MethodSignature&) const = default;
};

struct CallSite {
    std::string callee_name;
    std::size_t arg_count = 0;
    std::optional<std::string> receiver_text; // simple dotted chain before ".name(", when present
    std::size_t line = 0;                     // 1-based, file-absolute
    bool operator==(const CallSite&) const = default;
};

struct LineSpan {
    std::size_t start = 0;
    std::size_t end = 0;
};

struct MethodRecord {
    MethodSignature signature;
    std::string file_path;
    LineSpan line_span;
    std::string raw_body;        // declaration through closing brace, annotations/javadoc excluded
    std::string normalized_body; // normalize_body(raw_body)
    std::vector<CallSite> call_sites;
};

struct Diagnostic {
    std::size_t line = 0;
    std::string message;
};

struct ParseResult {
    std::vector<MethodRecord> methods; // ordered by start line
    std::vector<Diagnostic> diagnostics;
};

/// Tolerant scanner over Java source text. Finds method/constructor
/// declarations at any class/interface/enum nesting depth (and bare
/// fragments at top level); never throws on malformed input. Candidates
/// whose braces never rebalance are skipped and reported as diagnostics.
ParseResult extract_methods(std::string_view source, std::string_view file_path = {});

/// Syntactic invocation sites inside a method body. `new Type(...)` yields a
/// site named after the type's simple name; control-flow keywords never do.
std::vector<CallSite> extract_call_sites(const MethodRecord& record);

/// Comments stripped (string/char literals protected), whitespace runs
/// collapsed to single spaces, ends trimmed. Idempotent.
std::string normalize_body(std::string_view raw);

bool is_java_identifier(std::string_view s);

} // namespace codectx::jparse
