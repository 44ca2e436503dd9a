#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace codectx::dataset {

struct ContextRecord {
    std::string method_id; // project/path/signature digest
    std::string project;
    std::string current_code;
    std::vector<std::string> versions; // normalized bodies, newest first
    std::int64_t age_days = 0;
    std::optional<std::string> longest_caller;
    std::optional<std::string> longest_callee;
    std::optional<std::string> doc;   // reference summary
    std::optional<std::string> label; // project name for classification
    std::string partition;            // train | valid | test

    bool operator==(const ContextRecord&) const = default;
};

struct ClonePair {
    std::string left;
    std::string right;
    int label = 0;
};

enum class Partition { train, valid, test };
std::string_view partition_name(Partition p);

struct EmptyInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct SchemaViolation : std::runtime_error {
    std::size_t line;
    SchemaViolation(std::size_t line_, const std::string& what)
        : std::runtime_error("line " + std::to_string(line_) + ": " + what), line(line_) {}
};

/// Deterministic seeded shuffle, then train/valid/test by position. valid and
/// test sizes are floor-allocated; the remainder goes to train.
std::vector<Partition> split_partitions(std::size_t n, std::array<double, 3> ratios,
                                        std::uint64_t seed);

/// One JSON object per line, keys exactly the ContextRecord field names
/// (optionals serialize as null), lines ordered by method_id.
std::string emit_jsonl(std::vector<ContextRecord> records);
std::vector<ContextRecord> read_jsonl(std::string_view bytes);

std::string emit_pairs_jsonl(std::vector<ClonePair> pairs);
std::vector<ClonePair> read_pairs_jsonl(std::string_view bytes);

enum class ContextKind { versions, caller, callee, age };

struct RenderOptions {
    std::vector<ContextKind> contexts; // appended in this order
    std::size_t token_budget = 512;
    std::string delimiter = "⟐"; // one reserved token between units
};

/// current_code, then whole context units in order (each behind a delimiter
/// token) while they fit the budget; code alone over budget is hard-truncated
/// to exactly `token_budget` tokens.
std::string render_text_context(const ContextRecord& record, const RenderOptions& options);

} // namespace codectx::dataset
