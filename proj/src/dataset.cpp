#include "codectx/dataset.hpp"

#include "codectx/tokenize.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <tuple>

namespace codectx::dataset {

using json = nlohmann::json;

std::string_view partition_name(Partition p) {
    switch (p) {
    case Partition::train: return "train";
    case Partition::valid: return "valid";
    case Partition::test: return "test";
    }
    return "train";
}

namespace {

// splitmix64; stable across platforms, unlike std::shuffle
std::uint64_t next_rand(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::uint64_t bounded_rand(std::uint64_t& state, std::uint64_t bound) {
    // rejection sampling keeps the draw unbiased
    std::uint64_t threshold = (~bound + 1) % bound;
    for (;;) {
        std::uint64_t r = next_rand(state);
        if (r >= threshold) return r % bound;
    }
}

json to_json(const ContextRecord& r) {
    json j;
    j["method_id"] = r.method_id;
    j["project"] = r.project;
    j["current_code"] = r.current_code;
    j["versions"] = r.versions;
    j["age_days"] = r.age_days;
    j["longest_caller"] = r.longest_caller ? json(*r.longest_caller) : json(nullptr);
    j["longest_callee"] = r.longest_callee ? json(*r.longest_callee) : json(nullptr);
    j["doc"] = r.doc ? json(*r.doc) : json(nullptr);
    j["label"] = r.label ? json(*r.label) : json(nullptr);
    j["partition"] = r.partition;
    return j;
}

ContextRecord from_json(const json& j, std::size_t line) {
    auto need = [&](const char* key) -> const json& {
        auto it = j.find(key);
        if (it == j.end()) throw SchemaViolation(line, std::string("missing key '") + key + "'");
        return *it;
    };
    auto opt_string = [&](const char* key) -> std::optional<std::string> {
        const json& v = need(key);
        if (v.is_null()) return std::nullopt;
        if (!v.is_string()) throw SchemaViolation(line, std::string(key) + " must be string or null");
        return v.get<std::string>();
    };
    ContextRecord r;
    try {
        r.method_id = need("method_id").get<std::string>();
        r.project = need("project").get<std::string>();
        r.current_code = need("current_code").get<std::string>();
        r.versions = need("versions").get<std::vector<std::string>>();
        r.age_days = need("age_days").get<std::int64_t>();
        r.longest_caller = opt_string("longest_caller");
        r.longest_callee = opt_string("longest_callee");
        r.doc = opt_string("doc");
        r.label = opt_string("label");
        r.partition = need("partition").get<std::string>();
    } catch (const json::exception& e) {
        throw SchemaViolation(line, e.what());
    }
    if (r.partition != "train" && r.partition != "valid" && r.partition != "test")
        throw SchemaViolation(line, "partition must be train|valid|test, got '" + r.partition + "'");
    if (r.age_days < 0) throw SchemaViolation(line, "age_days must be >= 0");
    return r;
}

} // namespace

std::vector<Partition> split_partitions(std::size_t n, std::array<double, 3> ratios,
                                        std::uint64_t seed) {
    if (n == 0) throw EmptyInput("cannot split an empty item list");
    double sum = ratios[0] + ratios[1] + ratios[2];
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("ratios must sum to 1, got " + std::to_string(sum));

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::uint64_t state = seed;
    for (std::size_t i = n; i > 1; --i)
        std::swap(order[i - 1], order[bounded_rand(state, i)]);

    // tiny epsilon so exact products like 850*0.1 do not floor to 84
    auto alloc = [&](double r) {
        return static_cast<std::size_t>(std::floor(r * static_cast<double>(n) + 1e-9));
    };
    std::size_t n_valid = alloc(ratios[1]);
    std::size_t n_test = alloc(ratios[2]);
    std::size_t n_train = n - n_valid - n_test;

    std::vector<Partition> out(n, Partition::train);
    for (std::size_t pos = 0; pos < n; ++pos) {
        Partition p = pos < n_train                ? Partition::train
                      : pos < n_train + n_valid    ? Partition::valid
                                                   : Partition::test;
        out[order[pos]] = p;
    }
    return out;
}

std::string emit_jsonl(std::vector<ContextRecord> records) {
    std::sort(records.begin(), records.end(),
              [](const ContextRecord& a, const ContextRecord& b) { return a.method_id < b.method_id; });
    std::string out;
    for (const auto& r : records) {
        out += to_json(r).dump();
        out.push_back('\n');
    }
    return out;
}

std::vector<ContextRecord> read_jsonl(std::string_view bytes) {
    std::vector<ContextRecord> records;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < bytes.size()) {
        std::size_t end = bytes.find('\n', start);
        if (end == std::string_view::npos) end = bytes.size();
        std::string_view line = bytes.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw SchemaViolation(line_no, "not a JSON object");
        records.push_back(from_json(j, line_no));
    }
    return records;
}

std::string emit_pairs_jsonl(std::vector<ClonePair> pairs) {
    std::sort(pairs.begin(), pairs.end(), [](const ClonePair& a, const ClonePair& b) {
        return std::tie(a.left, a.right) < std::tie(b.left, b.right);
    });
    std::string out;
    for (const auto& p : pairs) {
        json j;
        j["left"] = p.left;
        j["right"] = p.right;
        j["label"] = p.label;
        out += j.dump();
        out.push_back('\n');
    }
    return out;
}

std::vector<ClonePair> read_pairs_jsonl(std::string_view bytes) {
    std::vector<ClonePair> pairs;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < bytes.size()) {
        std::size_t end = bytes.find('\n', start);
        if (end == std::string_view::npos) end = bytes.size();
        std::string_view line = bytes.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw SchemaViolation(line_no, "not a JSON object");
        ClonePair p;
        try {
            p.left = j.at("left").get<std::string>();
            p.right = j.at("right").get<std::string>();
            p.label = j.at("label").get<int>();
        } catch (const json::exception& e) {
            throw SchemaViolation(line_no, e.what());
        }
        if (p.left == p.right) throw SchemaViolation(line_no, "left == right in clone pair");
        if (p.label != 0 && p.label != 1) throw SchemaViolation(line_no, "label must be 0 or 1");
        pairs.push_back(std::move(p));
    }
    return pairs;
}

namespace {

std::string truncate_tokens(std::string_view text, std::size_t budget) {
    auto toks = tokenize(text);
    std::string out;
    for (std::size_t i = 0; i < std::min(budget, toks.size()); ++i) {
        if (i) out.push_back(' ');
        out.append(toks[i]);
    }
    return out;
}

} // namespace

std::string render_text_context(const ContextRecord& record, const RenderOptions& options) {
    const std::size_t budget = options.token_budget;
    std::size_t code_tokens = token_count(record.current_code);
    if (code_tokens > budget) return truncate_tokens(record.current_code, budget);

    // one ordered unit stream; the first unit that would not fit ends the render
    std::vector<std::string> units;
    for (ContextKind kind : options.contexts) {
        switch (kind) {
        case ContextKind::versions:
            for (const auto& v : record.versions) units.push_back(v);
            break;
        case ContextKind::caller:
            if (record.longest_caller) units.push_back(*record.longest_caller);
            break;
        case ContextKind::callee:
            if (record.longest_callee) units.push_back(*record.longest_callee);
            break;
        case ContextKind::age:
            units.push_back("<age> " + std::to_string(record.age_days));
            break;
        }
    }

    std::string out = record.current_code;
    std::size_t used = code_tokens;
    for (const auto& unit : units) {
        std::size_t cost = 1 + token_count(unit); // delimiter + unit
        if (used + cost > budget) break;
        out += " " + options.delimiter + " " + unit;
        used += cost;
    }
    return out;
}

} // namespace codectx::dataset
