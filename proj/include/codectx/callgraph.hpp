#pragma once

#include "codectx/jparse.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace codectx::callgraph {

using MethodId = std::uint32_t;

struct UnknownMethodId : std::out_of_range {
    using std::out_of_range::out_of_range;
};

/// Intra-project call graph. Node ids are indices into `methods`, which is
/// canonically sorted by (file_path, start line, signature text) so the graph
/// is identical for any input ordering.
struct CallGraph {
    std::vector<jparse::MethodRecord> methods;
    std::set<std::pair<MethodId, MethodId>> edges; // caller -> callee, deduplicated
    // (caller, callee simple name, arity) -> number of project methods the
    // site could resolve to; >1 flags ambiguous resolution
    std::map<std::tuple<MethodId, std::string, std::size_t>, std::size_t> candidate_multiplicity;

    const jparse::MethodRecord& method(MethodId id) const;
};

/// Resolves every call site against project methods by (simple name, arity);
/// sites with no project match (library calls) add no edge. Constructors
/// participate as callees via `new TypeName(...)` sites.
CallGraph build_call_graph(std::vector<jparse::MethodRecord> methods);

/// Nodes with at least one incident edge, as caller or callee.
std::set<MethodId> filter_isolated(const CallGraph& graph);

struct Neighbors {
    std::optional<MethodId> caller;
    std::optional<MethodId> callee;
};

/// Longest in-/out-neighbor by normalized-body token count, ties broken by
/// lexicographically smallest signature text. A method is never its own
/// selected neighbor.
Neighbors select_longest_neighbors(const CallGraph& graph, MethodId id);

} // namespace codectx::callgraph
