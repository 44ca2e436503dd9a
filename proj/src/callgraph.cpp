#include "codectx/callgraph.hpp"

#include "codectx/tokenize.hpp"

#include <algorithm>

namespace codectx::callgraph {

const jparse::MethodRecord& CallGraph::method(MethodId id) const {
    if (id >= methods.size()) throw UnknownMethodId("method id " + std::to_string(id));
    return methods[id];
}

CallGraph build_call_graph(std::vector<jparse::MethodRecord> methods) {
    CallGraph g;
    g.methods = std::move(methods);
    std::sort(g.methods.begin(), g.methods.end(),
              [](const jparse::MethodRecord& a, const jparse::MethodRecord& b) {
                  auto key = [](const jparse::MethodRecord& m) {
                      return std::make_tuple(std::cref(m.file_path), m.line_span.start,
                                             m.signature.text());
                  };
                  return key(a) < key(b);
              });

    // (simple name, arity) -> candidate method ids; constructors are keyed by
    // their type's simple name so `new Foo(x)` resolves to Foo's constructor
    std::map<std::pair<std::string, std::size_t>, std::vector<MethodId>> by_key;
    for (MethodId id = 0; id < g.methods.size(); ++id) {
        const auto& sig = g.methods[id].signature;
        by_key[{sig.name, sig.arity()}].push_back(id);
    }

    for (MethodId caller = 0; caller < g.methods.size(); ++caller) {
        for (const auto& site : g.methods[caller].call_sites) {
            auto it = by_key.find({site.callee_name, site.arg_count});
            if (it == by_key.end()) continue; // external/library call
            g.candidate_multiplicity[{caller, site.callee_name, site.arg_count}] =
                it->second.size();
            for (MethodId callee : it->second) g.edges.emplace(caller, callee);
        }
    }
    return g;
}

std::set<MethodId> filter_isolated(const CallGraph& graph) {
    std::set<MethodId> retained;
    for (const auto& [a, b] : graph.edges) {
        retained.insert(a);
        retained.insert(b);
    }
    return retained;
}

Neighbors select_longest_neighbors(const CallGraph& graph, MethodId id) {
    if (id >= graph.methods.size()) throw UnknownMethodId("method id " + std::to_string(id));

    auto better = [&](MethodId challenger, std::optional<MethodId> best) {
        if (!best) return true;
        std::size_t ct = token_count(graph.methods[challenger].normalized_body);
        std::size_t bt = token_count(graph.methods[*best].normalized_body);
        if (ct != bt) return ct > bt;
        return graph.methods[challenger].signature.text() <
               graph.methods[*best].signature.text();
    };

    Neighbors n;
    for (const auto& [a, b] : graph.edges) {
        if (b == id && a != id && better(a, n.caller)) n.caller = a;
        if (a == id && b != id && better(b, n.callee)) n.callee = b;
    }
    return n;
}

} // namespace codectx::callgraph
