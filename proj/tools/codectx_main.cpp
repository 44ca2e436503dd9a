#include "codectx/callgraph.hpp"
#include "codectx/dataset.hpp"
#include "codectx/evalstat.hpp"
#include "codectx/gitstore.hpp"
#include "codectx/histmine.hpp"
#include "codectx/jparse.hpp"
#include "codectx/report.hpp"
#include "codectx/represent.hpp"
#include "codectx/tokenize.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace codectx;

namespace {

int g_log_debug = 0;

void log_debug(json event) {
    if (g_log_debug) std::cerr << event.dump() << "\n";
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, std::string_view content) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("cannot write " + p.string());
}

// Provenance sidecar: resolved configuration plus input digests, no clocks,
// so reruns stay byte-identical.
struct RunInfo {
    std::string subcommand;
    json config = json::object();
    json inputs = json::object();

    void add_input(const std::string& label, const fs::path& p) {
        inputs[label] = {{"path", p.string()}, {"sha1", git::sha1_hex(read_file(p))}};
    }
    void write(const fs::path& where) const {
        json j;
        j["tool"] = "codectx";
        j["subcommand"] = subcommand;
        j["config"] = config;
        j["inputs"] = inputs;
        write_file(where, j.dump(2) + "\n");
    }
};

fs::path run_json_path(const std::string& out_flag) {
    if (out_flag.empty()) return "run.json";
    fs::path out(out_flag);
    if (fs::is_directory(out) || out.extension().empty()) return out / "run.json";
    return out.parent_path() / (out.stem().string() + ".run.json");
}

struct MethodKey {
    std::string file_path;
    std::string name;
    std::size_t arity = 0;
    auto operator<=>(const MethodKey&) const = default;
};

std::string canonical_method_key(const std::string& file_path, const jparse::MethodSignature& sig) {
    return file_path + "#" + sig.text();
}

json signature_json(const jparse::MethodSignature& sig) {
    return {{"type_path", sig.type_path},
            {"name", sig.name},
            {"param_types", sig.param_types},
            {"return_type", sig.return_type}};
}

json commit_json(const histmine::CommitRef& c) {
    return {{"id", c.id}, {"timestamp_utc", c.timestamp_utc}, {"parent_ids", c.parent_ids}};
}

// ---------------------------------------------------------------------------
// mine-history
// ---------------------------------------------------------------------------

int cmd_mine_history(const std::string& repo, const std::string& snapshot,
                     const std::string& methods_file, std::size_t max_versions, unsigned jobs,
                     const std::string& out) {
    git::ObjectStore probe(repo);
    auto snap_id = probe.resolve(snapshot);
    if (!snap_id) {
        std::cerr << "error: cannot resolve snapshot '" << snapshot << "'\n";
        return 2;
    }

    std::vector<MethodKey> targets;
    {
        std::string bytes = read_file(methods_file);
        std::size_t line_no = 0, start = 0;
        while (start < bytes.size()) {
            std::size_t end = bytes.find('\n', start);
            if (end == std::string::npos) end = bytes.size();
            std::string line = bytes.substr(start, end - start);
            start = end + 1;
            ++line_no;
            if (line.empty()) continue;
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.contains("file_path") || !j.contains("name") ||
                !j.contains("arity")) {
                std::cerr << "error: methods-file line " << line_no
                          << ": need {file_path, name, arity}\n";
                return 2;
            }
            targets.push_back({j["file_path"].get<std::string>(), j["name"].get<std::string>(),
                               j["arity"].get<std::size_t>()});
        }
    }

    histmine::MineOptions options;
    options.max_versions = max_versions;

    std::vector<std::optional<histmine::VersionHistory>> results(targets.size());
    std::vector<std::string> failures(targets.size());
    std::size_t next = 0;
    std::mutex take;
    auto worker = [&]() {
        git::ObjectStore store(repo); // one handle per worker
        for (;;) {
            std::size_t i;
            {
                std::lock_guard<std::mutex> lock(take);
                if (next >= targets.size()) return;
                i = next++;
            }
            const MethodKey& t = targets[i];
            try {
                results[i] = histmine::walk_history(store, *snap_id, t.file_path, t.name, t.arity,
                                                    options);
            } catch (const std::exception& e) {
                failures[i] = e.what();
            }
        }
    };
    unsigned n_jobs = std::max(1u, jobs);
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n_jobs; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    std::string payload;
    std::size_t mined = 0;
    for (std::size_t i = 0; i < targets.size(); ++i) { // merge preserves input order
        if (!results[i]) {
            log_debug({{"event", "method_skipped"},
                       {"file_path", targets[i].file_path},
                       {"name", targets[i].name},
                       {"arity", targets[i].arity},
                       {"reason", failures[i]}});
            continue;
        }
        const auto& h = *results[i];
        json j;
        j["method_key"] = signature_json(h.method_key);
        j["file_path"] = h.file_path;
        j["snapshot_commit"] = commit_json(h.snapshot_commit);
        j["age_days"] = h.age_days;
        j["versions"] = json::array();
        for (const auto& v : h.versions)
            j["versions"].push_back({{"commit", commit_json(v.commit)},
                                     {"file_path_at_commit", v.file_path_at_commit},
                                     {"normalized_body", v.normalized_body},
                                     {"ordinal", v.ordinal}});
        j["provenance"] = {{"renames_followed", h.provenance.renames_followed},
                           {"stopped_at_rename", h.provenance.stopped_at_rename},
                           {"commits_skipped", h.provenance.commits_skipped}};
        payload += j.dump();
        payload.push_back('\n');
        ++mined;
    }
    write_file(out, payload);
    log_debug({{"event", "mining_summary"},
               {"requested", targets.size()},
               {"mined", mined},
               {"retention", targets.empty() ? 1.0 : double(mined) / double(targets.size())}});

    RunInfo run;
    run.subcommand = "mine-history";
    run.config = {{"repo", repo},           {"snapshot", *snap_id},
                  {"methods_file", methods_file}, {"max_versions", max_versions},
                  {"jobs", n_jobs},         {"out", out}};
    run.add_input("methods_file", methods_file);
    run.write(run_json_path(out));
    return 0;
}

// ---------------------------------------------------------------------------
// callgraph
// ---------------------------------------------------------------------------

std::vector<jparse::MethodRecord> parse_project_dir(const std::string& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".java") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<jparse::MethodRecord> methods;
    for (const auto& f : files) {
        auto rel = fs::relative(f, dir).generic_string();
        auto parsed = jparse::extract_methods(read_file(f), rel);
        for (const auto& d : parsed.diagnostics)
            log_debug({{"event", "parse_diagnostic"}, {"file", rel}, {"line", d.line},
                       {"message", d.message}});
        for (auto& m : parsed.methods) methods.push_back(std::move(m));
    }
    return methods;
}

int cmd_callgraph(const std::string& project_dir, const std::string& out,
                  const std::string& methods_out) {
    auto graph = callgraph::build_call_graph(parse_project_dir(project_dir));
    auto retained = callgraph::filter_isolated(graph);

    std::string edges;
    for (const auto& [a, b] : graph.edges) {
        const auto& ma = graph.method(a);
        const auto& mb = graph.method(b);
        json j;
        j["caller"] = canonical_method_key(ma.file_path, ma.signature);
        j["callee"] = canonical_method_key(mb.file_path, mb.signature);
        j["multiplicity"] =
            graph.candidate_multiplicity.at({a, mb.signature.name, mb.signature.arity()});
        edges += j.dump();
        edges.push_back('\n');
    }
    write_file(out, edges);

    if (!methods_out.empty()) {
        std::string rows;
        for (callgraph::MethodId id = 0; id < graph.methods.size(); ++id) {
            const auto& m = graph.method(id);
            auto neighbors = callgraph::select_longest_neighbors(graph, id);
            json j;
            j["key"] = canonical_method_key(m.file_path, m.signature);
            j["file_path"] = m.file_path;
            j["signature"] = signature_json(m.signature);
            j["line_start"] = m.line_span.start;
            j["line_end"] = m.line_span.end;
            j["raw_body"] = m.raw_body;
            j["normalized_body"] = m.normalized_body;
            j["retained"] = retained.count(id) > 0;
            auto key_of = [&](std::optional<callgraph::MethodId> n) {
                return n ? json(canonical_method_key(graph.method(*n).file_path,
                                                     graph.method(*n).signature))
                         : json(nullptr);
            };
            j["longest_caller"] = key_of(neighbors.caller);
            j["longest_callee"] = key_of(neighbors.callee);
            rows += j.dump();
            rows.push_back('\n');
        }
        write_file(methods_out, rows);
    }

    log_debug({{"event", "callgraph_summary"},
               {"methods", graph.methods.size()},
               {"edges", graph.edges.size()},
               {"retained", retained.size()}});

    RunInfo run;
    run.subcommand = "callgraph";
    run.config = {{"project_dir", project_dir}, {"out", out}, {"methods_out", methods_out}};
    run.write(run_json_path(out));
    return 0;
}

// ---------------------------------------------------------------------------
// build-dataset
// ---------------------------------------------------------------------------

struct StoredMethod {
    std::string key;
    std::string file_path;
    std::string name;
    std::size_t arity = 0;
    std::string signature_text;
    std::string raw_body;
    std::string normalized_body;
    std::optional<std::string> longest_caller_key;
    std::optional<std::string> longest_callee_key;
};

std::map<std::string, StoredMethod> load_method_store(const std::string& path) {
    std::map<std::string, StoredMethod> store;
    std::string bytes = read_file(path);
    std::size_t line_no = 0, start = 0;
    while (start < bytes.size()) {
        std::size_t end = bytes.find('\n', start);
        if (end == std::string::npos) end = bytes.size();
        std::string line = bytes.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw dataset::SchemaViolation(line_no, "not valid JSON");
        try {
            StoredMethod m;
            m.key = j.at("key").get<std::string>();
            m.file_path = j.at("file_path").get<std::string>();
            const json& sig = j.at("signature");
            m.name = sig.at("name").get<std::string>();
            m.arity = sig.at("param_types").size();
            jparse::MethodSignature s{sig.at("type_path").get<std::string>(), m.name,
                                      sig.at("param_types").get<std::vector<std::string>>(),
                                      sig.at("return_type").get<std::string>()};
            m.signature_text = s.text();
            m.raw_body = j.at("raw_body").get<std::string>();
            m.normalized_body = j.at("normalized_body").get<std::string>();
            if (!j.at("longest_caller").is_null())
                m.longest_caller_key = j["longest_caller"].get<std::string>();
            if (!j.at("longest_callee").is_null())
                m.longest_callee_key = j["longest_callee"].get<std::string>();
            store[m.key] = std::move(m);
        } catch (const json::exception& e) {
            throw dataset::SchemaViolation(line_no, e.what());
        }
    }
    return store;
}

// Longest caller/callee per method key, recomputed from the serialized edge
// set (token count of the neighbor's normalized body, ties by key).
std::map<std::string, std::pair<std::optional<std::string>, std::optional<std::string>>>
neighbors_from_edges(const std::string& edges_path,
                     const std::map<std::string, StoredMethod>& store) {
    std::map<std::string, std::pair<std::optional<std::string>, std::optional<std::string>>> out;
    std::string bytes = read_file(edges_path);
    auto better = [&](const std::string& challenger, const std::optional<std::string>& best) {
        if (!store.count(challenger)) return false;
        if (!best) return true;
        std::size_t ct = token_count(store.at(challenger).normalized_body);
        std::size_t bt = token_count(store.at(*best).normalized_body);
        return ct != bt ? ct > bt : challenger < *best;
    };
    std::size_t line_no = 0, start = 0;
    while (start < bytes.size()) {
        std::size_t end = bytes.find('\n', start);
        if (end == std::string::npos) end = bytes.size();
        std::string line = bytes.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("caller") || !j.contains("callee"))
            throw dataset::SchemaViolation(line_no, "edge rows need caller and callee");
        std::string caller = j["caller"].get<std::string>();
        std::string callee = j["callee"].get<std::string>();
        if (caller == callee) continue; // self edges never become selected neighbors
        auto& caller_slot = out[caller];
        if (better(callee, caller_slot.second)) caller_slot.second = callee;
        auto& callee_slot = out[callee];
        if (better(caller, callee_slot.first)) callee_slot.first = caller;
    }
    return out;
}

int cmd_build_dataset(const std::string& histories_file, const std::string& callgraph_file,
                      const std::string& methods_file, const std::string& project,
                      const std::string& ratios_text, std::uint64_t seed,
                      const std::string& pairs_file, const std::string& docs_file,
                      const std::string& out_dir) {
    // ratios
    std::array<double, 3> ratios{};
    {
        std::istringstream ss(ratios_text);
        std::string part;
        int i = 0;
        while (std::getline(ss, part, ',') && i < 3) ratios[i++] = std::stod(part);
        if (i != 3) {
            std::cerr << "error: --ratios needs three comma-separated values\n";
            return 2;
        }
    }

    auto store = load_method_store(methods_file);

    // neighbor links come from the edge file when given, else from the store
    std::map<std::string, std::pair<std::optional<std::string>, std::optional<std::string>>>
        neighbors;
    if (!callgraph_file.empty()) {
        neighbors = neighbors_from_edges(callgraph_file, store);
    } else {
        for (const auto& [key, m] : store)
            neighbors[key] = {m.longest_caller_key, m.longest_callee_key};
    }

    // (file_path, name, arity) -> method key; histories address methods this way
    std::map<MethodKey, std::string> by_identity;
    for (const auto& [key, m] : store) by_identity[{m.file_path, m.name, m.arity}] = key;

    std::map<MethodKey, std::string> docs;
    if (!docs_file.empty()) {
        std::string bytes = read_file(docs_file);
        std::size_t line_no = 0, start = 0;
        while (start < bytes.size()) {
            std::size_t end = bytes.find('\n', start);
            if (end == std::string::npos) end = bytes.size();
            std::string line = bytes.substr(start, end - start);
            start = end + 1;
            ++line_no;
            if (line.empty()) continue;
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded()) throw dataset::SchemaViolation(line_no, "not valid JSON");
            docs[{j.at("file_path").get<std::string>(), j.at("name").get<std::string>(),
                  j.at("arity").get<std::size_t>()}] = j.at("doc").get<std::string>();
        }
    }

    // histories drive the record list
    std::vector<dataset::ContextRecord> records;
    std::map<std::string, std::string> key_to_method_id;
    {
        std::string bytes = read_file(histories_file);
        std::size_t line_no = 0, start = 0;
        while (start < bytes.size()) {
            std::size_t end = bytes.find('\n', start);
            if (end == std::string::npos) end = bytes.size();
            std::string line = bytes.substr(start, end - start);
            start = end + 1;
            ++line_no;
            if (line.empty()) continue;
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded()) throw dataset::SchemaViolation(line_no, "not valid JSON");
            try {
                std::string file_path = j.at("file_path").get<std::string>();
                const json& key = j.at("method_key");
                std::string name = key.at("name").get<std::string>();
                std::size_t arity = key.at("param_types").size();
                jparse::MethodSignature sig{key.at("type_path").get<std::string>(), name,
                                            key.at("param_types").get<std::vector<std::string>>(),
                                            key.at("return_type").get<std::string>()};

                dataset::ContextRecord r;
                r.project = project;
                r.method_id =
                    project + "/" + file_path + "/" + git::sha1_hex(sig.text()).substr(0, 16);
                r.age_days = j.at("age_days").get<std::int64_t>();
                for (const auto& v : j.at("versions"))
                    r.versions.push_back(v.at("normalized_body").get<std::string>());
                if (r.versions.empty())
                    throw dataset::SchemaViolation(line_no, "history without versions");

                auto ident = by_identity.find(MethodKey{file_path, name, arity});
                if (ident != by_identity.end()) {
                    const StoredMethod& m = store.at(ident->second);
                    r.current_code = m.raw_body;
                    auto links = neighbors.find(m.key);
                    if (links != neighbors.end()) {
                        if (links->second.first && store.count(*links->second.first))
                            r.longest_caller = store.at(*links->second.first).normalized_body;
                        if (links->second.second && store.count(*links->second.second))
                            r.longest_callee = store.at(*links->second.second).normalized_body;
                    }
                    key_to_method_id[m.key] = r.method_id;
                } else {
                    r.current_code = r.versions.front();
                }
                auto doc = docs.find(MethodKey{file_path, name, arity});
                if (doc != docs.end()) r.doc = doc->second;
                r.label = project;
                records.push_back(std::move(r));
            } catch (const json::exception& e) {
                throw dataset::SchemaViolation(line_no, e.what());
            }
        }
    }
    if (records.empty()) {
        std::cerr << "error: no records assembled from " << histories_file << "\n";
        return 2;
    }

    std::sort(records.begin(), records.end(),
              [](const dataset::ContextRecord& a, const dataset::ContextRecord& b) {
                  return a.method_id < b.method_id;
              });
    auto parts = dataset::split_partitions(records.size(), ratios, seed);
    for (std::size_t i = 0; i < records.size(); ++i)
        records[i].partition = std::string(dataset::partition_name(parts[i]));

    fs::create_directories(out_dir);
    for (auto p : {dataset::Partition::train, dataset::Partition::valid, dataset::Partition::test}) {
        std::vector<dataset::ContextRecord> bucket;
        for (const auto& r : records)
            if (r.partition == dataset::partition_name(p)) bucket.push_back(r);
        write_file(fs::path(out_dir) / ("records." + std::string(dataset::partition_name(p)) +
                                        ".jsonl"),
                   dataset::emit_jsonl(std::move(bucket)));
    }

    if (!pairs_file.empty()) {
        std::vector<dataset::ClonePair> pairs;
        std::string bytes = read_file(pairs_file);
        std::size_t line_no = 0, start = 0;
        while (start < bytes.size()) {
            std::size_t end = bytes.find('\n', start);
            if (end == std::string::npos) end = bytes.size();
            std::string line = bytes.substr(start, end - start);
            start = end + 1;
            ++line_no;
            if (line.empty()) continue;
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded()) throw dataset::SchemaViolation(line_no, "not valid JSON");
            auto resolve = [&](const json& side) -> std::string {
                std::string key = side.at("file_path").get<std::string>() + "#";
                // method ids are keyed through the method store
                auto ident = by_identity.find(MethodKey{side.at("file_path").get<std::string>(),
                                                        side.at("name").get<std::string>(),
                                                        side.at("arity").get<std::size_t>()});
                if (ident == by_identity.end() || !key_to_method_id.count(ident->second))
                    throw dataset::SchemaViolation(line_no, "pair references unknown method " + key);
                return key_to_method_id.at(ident->second);
            };
            try {
                dataset::ClonePair p;
                p.left = resolve(j.at("left"));
                p.right = resolve(j.at("right"));
                p.label = j.at("label").get<int>();
                if (p.left == p.right)
                    throw dataset::SchemaViolation(line_no, "pair references one method twice");
                pairs.push_back(std::move(p));
            } catch (const json::exception& e) {
                throw dataset::SchemaViolation(line_no, e.what());
            }
        }
        if (!pairs.empty()) {
            std::sort(pairs.begin(), pairs.end(),
                      [](const dataset::ClonePair& a, const dataset::ClonePair& b) {
                          return std::tie(a.left, a.right) < std::tie(b.left, b.right);
                      });
            auto pair_parts = dataset::split_partitions(pairs.size(), ratios, seed);
            for (auto p : {dataset::Partition::train, dataset::Partition::valid,
                           dataset::Partition::test}) {
                std::vector<dataset::ClonePair> bucket;
                for (std::size_t i = 0; i < pairs.size(); ++i)
                    if (pair_parts[i] == p) bucket.push_back(pairs[i]);
                write_file(fs::path(out_dir) / ("pairs." +
                                                std::string(dataset::partition_name(p)) + ".jsonl"),
                           dataset::emit_pairs_jsonl(std::move(bucket)));
            }
        }
    }

    RunInfo run;
    run.subcommand = "build-dataset";
    run.config = {{"histories", histories_file}, {"callgraph", callgraph_file},
                  {"methods", methods_file},     {"project", project},
                  {"ratios", ratios_text},       {"seed", seed},
                  {"pairs", pairs_file},         {"docs", docs_file},
                  {"out", out_dir}};
    run.add_input("histories", histories_file);
    run.add_input("methods", methods_file);
    if (!callgraph_file.empty()) run.add_input("callgraph", callgraph_file);
    if (!pairs_file.empty()) run.add_input("pairs", pairs_file);
    if (!docs_file.empty()) run.add_input("docs", docs_file);
    run.write(fs::path(out_dir) / "run.json");
    return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

represent::ContextSelection parse_contexts(const std::string& text) {
    represent::ContextSelection sel;
    std::istringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        if (part == "vh") sel.history = true;
        else if (part == "cg") sel.callgraph = true;
        else if (part == "age") sel.age = true;
        else if (!part.empty()) throw CLI::ValidationError("--contexts", "unknown context " + part);
    }
    return sel;
}

represent::ContextBundle encode_record(const dataset::ContextRecord& r,
                                       const represent::Encoder& enc,
                                       const represent::TrainConfig& cfg) {
    represent::ContextBundle b;
    b.code = enc.encode(r.current_code);
    if (cfg.contexts.history && !r.versions.empty()) {
        std::vector<represent::Vector> vs;
        for (const auto& v : r.versions) vs.push_back(enc.encode(v));
        b.history = represent::reduce_history(vs, cfg.history_reduce);
    }
    if (cfg.contexts.callgraph) {
        if (r.longest_caller) b.caller = enc.encode(*r.longest_caller);
        if (r.longest_callee) b.callee = enc.encode(*r.longest_callee);
    }
    if (cfg.contexts.age) b.age_days = r.age_days;
    return b;
}

json head_json(const represent::Model& model) {
    json weights = json::array();
    for (Eigen::Index r = 0; r < model.head().weights.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < model.head().weights.cols(); ++c)
            row.push_back(model.head().weights(r, c));
        weights.push_back(std::move(row));
    }
    json bias = json::array();
    for (Eigen::Index i = 0; i < model.head().bias.size(); ++i)
        bias.push_back(model.head().bias[i]);
    json age_w = json::array(), age_b = json::array();
    for (Eigen::Index i = 0; i < model.age_projection().weight.size(); ++i) {
        age_w.push_back(model.age_projection().weight[i]);
        age_b.push_back(model.age_projection().bias[i]);
    }
    return {{"weights", weights},
            {"bias", bias},
            {"age_projection", {{"weight", age_w}, {"bias", age_b}}}};
}

std::unique_ptr<represent::Encoder> make_encoder(long dim, std::uint64_t salt,
                                                 const std::string& embeddings_file) {
    if (embeddings_file.empty())
        return std::make_unique<represent::HashedEncoder>(dim, salt);
    std::map<std::string, represent::Vector> by_digest;
    std::string bytes = read_file(embeddings_file);
    std::size_t line_no = 0, start = 0;
    while (start < bytes.size()) {
        std::size_t end = bytes.find('\n', start);
        if (end == std::string::npos) end = bytes.size();
        std::string line = bytes.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("sha1") || !j.contains("vector"))
            throw dataset::SchemaViolation(line_no, "embedding rows need sha1 and vector");
        auto values = j["vector"].get<std::vector<double>>();
        represent::Vector v(static_cast<Eigen::Index>(values.size()));
        for (std::size_t i = 0; i < values.size(); ++i) v[static_cast<Eigen::Index>(i)] = values[i];
        by_digest[j["sha1"].get<std::string>()] = std::move(v);
    }
    return std::make_unique<represent::PrecomputedEncoder>(dim, std::move(by_digest));
}

int cmd_train(const std::string& data_dir, const std::string& task, const std::string& aggregation,
              const std::string& contexts, long dim, long age_dim, long age_max, double lr,
              int epochs, int batch, std::uint64_t seed, std::uint64_t salt,
              const std::string& history_reduce, const std::string& embeddings_file,
              const std::string& out) {
    represent::TrainConfig cfg;
    cfg.task = task == "clone" ? represent::Task::clone : represent::Task::classify;
    cfg.aggregation = aggregation == "concat"    ? represent::Aggregation::concat
                      : aggregation == "maxpool" ? represent::Aggregation::maxpool
                                                 : represent::Aggregation::diffconcat;
    cfg.contexts = parse_contexts(contexts);
    cfg.dim = dim;
    cfg.age_dim = age_dim;
    cfg.age_max = age_max;
    cfg.lr = lr;
    cfg.epochs = epochs;
    cfg.batch = batch;
    cfg.seed = seed;
    cfg.history_reduce = history_reduce == "mean" ? represent::ReduceMode::mean
                                                  : represent::ReduceMode::max;

    std::unique_ptr<represent::Encoder> encoder_ptr = make_encoder(dim, salt, embeddings_file);
    const represent::Encoder& encoder = *encoder_ptr;
    auto load_records = [&](const char* split) {
        return dataset::read_jsonl(read_file(fs::path(data_dir) /
                                             (std::string("records.") + split + ".jsonl")));
    };

    json log = json::array();
    json result_json;

    if (cfg.task == represent::Task::clone) {
        auto train_records = load_records("train");
        auto valid_records = load_records("valid");
        std::map<std::string, represent::ContextBundle> bundles;
        for (const auto& r : train_records) bundles[r.method_id] = encode_record(r, encoder, cfg);
        for (const auto& r : valid_records) bundles[r.method_id] = encode_record(r, encoder, cfg);
        // test records may participate in pairs only as encoded bundles
        auto test_records = load_records("test");
        for (const auto& r : test_records) bundles[r.method_id] = encode_record(r, encoder, cfg);

        auto load_pairs = [&](const char* split) {
            std::vector<represent::PairExample> out_pairs;
            auto pairs = dataset::read_pairs_jsonl(
                read_file(fs::path(data_dir) / (std::string("pairs.") + split + ".jsonl")));
            for (const auto& p : pairs) {
                auto l = bundles.find(p.left);
                auto r = bundles.find(p.right);
                if (l == bundles.end() || r == bundles.end())
                    throw std::runtime_error("pair references unknown method id " + p.left + " / " +
                                             p.right);
                out_pairs.push_back({l->second, r->second, p.label});
            }
            return out_pairs;
        };
        auto result = represent::train_clone(load_pairs("train"), load_pairs("valid"), cfg);
        for (const auto& e : result.log)
            log.push_back({{"epoch", e.epoch},
                           {"train_loss", e.train_loss},
                           {"valid_metric", e.valid_metric}});
        result_json = head_json(result.model);
        result_json["best_epoch"] = result.best_epoch;
        result_json["best_valid_metric"] = result.best_valid_metric;
    } else {
        auto train_records = load_records("train");
        auto valid_records = load_records("valid");
        std::map<std::string, int> label_map;
        auto label_of = [&](const dataset::ContextRecord& r) {
            std::string l = r.label.value_or("");
            auto it = label_map.find(l);
            if (it == label_map.end()) it = label_map.emplace(l, int(label_map.size())).first;
            return it->second;
        };
        // deterministic label indices: collect sorted labels first
        std::set<std::string> labels;
        for (const auto& r : train_records) labels.insert(r.label.value_or(""));
        for (const auto& r : valid_records) labels.insert(r.label.value_or(""));
        for (const auto& l : labels) label_map.emplace(l, int(label_map.size()));
        cfg.classes = std::max<int>(2, int(label_map.size()));

        std::vector<represent::Example> train_set, valid_set;
        for (const auto& r : train_records)
            train_set.push_back({encode_record(r, encoder, cfg), label_of(r)});
        for (const auto& r : valid_records)
            valid_set.push_back({encode_record(r, encoder, cfg), label_of(r)});
        auto result = represent::train_classify(train_set, valid_set, cfg);
        for (const auto& e : result.log)
            log.push_back({{"epoch", e.epoch},
                           {"train_loss", e.train_loss},
                           {"valid_metric", e.valid_metric}});
        result_json = head_json(result.model);
        result_json["best_epoch"] = result.best_epoch;
        result_json["best_valid_metric"] = result.best_valid_metric;
        json lm = json::object();
        for (const auto& [l, i] : label_map) lm[l] = i;
        result_json["label_map"] = lm;
    }

    result_json["config"] = {{"task", task},
                             {"aggregation", aggregation},
                             {"contexts", contexts},
                             {"dim", dim},
                             {"age_dim", age_dim},
                             {"age_max", age_max},
                             {"lr", lr},
                             {"epochs", epochs},
                             {"batch", batch},
                             {"seed", seed},
                             {"salt", salt},
                             {"history_reduce", history_reduce}};
    result_json["log"] = log;
    write_file(out, result_json.dump(2) + "\n");

    RunInfo run;
    run.subcommand = "train";
    run.config = result_json["config"];
    run.config["data"] = data_dir;
    run.config["embeddings"] = embeddings_file;
    run.config["out"] = out;
    if (!embeddings_file.empty()) run.add_input("embeddings", embeddings_file);
    for (const char* split : {"train", "valid", "test"}) {
        fs::path p = fs::path(data_dir) / (std::string("records.") + split + ".jsonl");
        if (fs::exists(p)) run.add_input(std::string("records.") + split, p);
        fs::path q = fs::path(data_dir) / (std::string("pairs.") + split + ".jsonl");
        if (fs::exists(q)) run.add_input(std::string("pairs.") + split, q);
    }
    run.write(run_json_path(out));
    return 0;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

std::map<std::string, json> load_by_id(const std::string& path) {
    std::map<std::string, json> rows;
    std::string bytes = read_file(path);
    std::size_t line_no = 0, start = 0;
    while (start < bytes.size()) {
        std::size_t end = bytes.find('\n', start);
        if (end == std::string::npos) end = bytes.size();
        std::string line = bytes.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("id"))
            throw dataset::SchemaViolation(line_no, "rows need an 'id' field");
        std::string id = j["id"].get<std::string>();
        rows[id] = std::move(j);
    }
    return rows;
}

int cmd_evaluate(const std::string& task, const std::string& pred_file,
                 const std::string& gold_file, int classes, const std::string& out) {
    auto pred = load_by_id(pred_file);
    auto gold = load_by_id(gold_file);
    if (pred.size() != gold.size()) {
        std::cerr << "error: prediction and gold files disagree on item count (" << pred.size()
                  << " vs " << gold.size() << ")\n";
        return 2;
    }

    json result;
    if (task == "clone" || task == "classify") {
        std::vector<int> p, g;
        for (const auto& [id, row] : gold) {
            auto it = pred.find(id);
            if (it == pred.end()) {
                std::cerr << "error: no prediction for item " << id << "\n";
                return 2;
            }
            p.push_back(it->second.at("value").get<int>());
            g.push_back(row.at("value").get<int>());
        }
        if (task == "clone") {
            auto m = evalstat::prf1(p, g);
            result = {{"task", "clone"},
                      {"precision", m.precision},
                      {"recall", m.recall},
                      {"f1", m.f1},
                      {"items", p.size()}};
        } else {
            int k = classes;
            if (k == 0)
                for (std::size_t i = 0; i < g.size(); ++i)
                    k = std::max(k, std::max(p[i], g[i]) + 1);
            result = {{"task", "classify"},
                      {"macro_f1", evalstat::macro_f1(p, g, k)},
                      {"classes", k},
                      {"items", p.size()}};
        }
    } else { // summarize
        double bleu = 0, rouge = 0, meteor = 0;
        std::size_t n = 0;
        for (const auto& [id, row] : gold) {
            auto it = pred.find(id);
            if (it == pred.end()) {
                std::cerr << "error: no prediction for item " << id << "\n";
                return 2;
            }
            auto toks = [](const json& j) {
                evalstat::Tokens out_toks;
                for (auto t : tokenize(j.at("text").get<std::string>()))
                    out_toks.emplace_back(t);
                return out_toks;
            };
            evalstat::Tokens cand = toks(it->second), ref = toks(row);
            bleu += evalstat::bleu4(cand, ref);
            rouge += evalstat::rouge_l(cand, ref);
            meteor += evalstat::meteor_lite(cand, ref);
            ++n;
        }
        result = {{"task", "summarize"},
                  {"items", n},
                  {"bleu4", n ? bleu / double(n) : 0.0},
                  {"rouge_l", n ? rouge / double(n) : 0.0},
                  {"meteor_lite", n ? meteor / double(n) : 0.0},
                  {"metadata",
                   {{"bleu_smoothing", "add-one on zero counts for n >= 2"},
                    {"meteor_variant", "meteor_lite: exact+stem matching, no synonym resources"}}}};
    }

    std::string payload = result.dump(2) + "\n";
    if (out.empty()) std::cout << payload;
    else write_file(out, payload);

    RunInfo run;
    run.subcommand = "evaluate";
    run.config = {{"task", task}, {"pred", pred_file}, {"gold", gold_file}, {"classes", classes},
                  {"out", out}};
    run.add_input("pred", pred_file);
    run.add_input("gold", gold_file);
    run.write(run_json_path(out));
    return 0;
}

// ---------------------------------------------------------------------------
// stats
// ---------------------------------------------------------------------------

int cmd_stats(const std::string& rankings_file, const std::string& baseline,
              const std::string& dimension, const std::string& out) {
    auto all = report::load_rankings_jsonl(read_file(rankings_file));
    auto it = all.find(dimension);
    if (it == all.end()) {
        std::cerr << "error: dimension '" << dimension << "' not present in " << rankings_file
                  << "\n";
        return 2;
    }
    auto rep = report::make_stats_report(it->second, baseline);
    std::string j = report::to_json(rep);
    if (out.empty()) {
        std::cout << j;
    } else {
        fs::create_directories(out);
        write_file(fs::path(out) / ("stats." + dimension + ".json"), j);
        write_file(fs::path(out) / ("comparisons." + dimension + ".csv"),
                   report::comparisons_csv(rep));
        write_file(fs::path(out) / ("distributions." + dimension + ".csv"),
                   report::distributions_csv(rep));
    }

    RunInfo run;
    run.subcommand = "stats";
    run.config = {{"rankings", rankings_file}, {"baseline", baseline}, {"dimension", dimension},
                  {"out", out}};
    run.add_input("rankings", rankings_file);
    run.write(run_json_path(out));
    return 0;
}

// ---------------------------------------------------------------------------
// render-text
// ---------------------------------------------------------------------------

int cmd_render_text(const std::string& records_file, const std::string& contexts, long budget,
                    const std::string& delimiter, const std::string& out) {
    dataset::RenderOptions opt;
    opt.token_budget = static_cast<std::size_t>(budget);
    if (!delimiter.empty()) opt.delimiter = delimiter;
    std::istringstream ss(contexts);
    std::string part;
    while (std::getline(ss, part, ',')) {
        if (part == "vh" || part == "versions") opt.contexts.push_back(dataset::ContextKind::versions);
        else if (part == "caller") opt.contexts.push_back(dataset::ContextKind::caller);
        else if (part == "callee") opt.contexts.push_back(dataset::ContextKind::callee);
        else if (part == "cg") {
            opt.contexts.push_back(dataset::ContextKind::caller);
            opt.contexts.push_back(dataset::ContextKind::callee);
        } else if (part == "age") opt.contexts.push_back(dataset::ContextKind::age);
        else if (!part.empty()) {
            std::cerr << "error: unknown context '" << part << "'\n";
            return 2;
        }
    }

    auto records = dataset::read_jsonl(read_file(records_file));
    std::string payload;
    for (const auto& r : records) {
        json j;
        j["method_id"] = r.method_id;
        j["text"] = dataset::render_text_context(r, opt);
        payload += j.dump();
        payload.push_back('\n');
    }
    write_file(out, payload);

    RunInfo run;
    run.subcommand = "render-text";
    run.config = {{"records", records_file}, {"contexts", contexts}, {"budget", budget},
                  {"delimiter", opt.delimiter}, {"out", out}};
    run.add_input("records", records_file);
    run.write(run_json_path(out));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"codectx: mine method histories and call graphs, assemble context datasets,\n"
                 "train aggregation heads, and run the evaluation statistics suite"};
    app.require_subcommand(1);
    std::string log_level = "info";
    app.add_option("--log-level", log_level)->check(CLI::IsMember({"info", "debug"}));

    // mine-history
    auto* mine = app.add_subcommand("mine-history", "walk git history for target methods");
    std::string repo, snapshot = "HEAD", methods_file, mine_out = "histories.jsonl";
    std::size_t max_versions = 0;
    unsigned jobs = 1;
    mine->add_option("--repo", repo)->required();
    mine->add_option("--snapshot", snapshot);
    mine->add_option("--methods-file", methods_file)->required();
    mine->add_option("--max-versions", max_versions);
    mine->add_option("--jobs", jobs);
    mine->add_option("--out", mine_out);

    // callgraph
    auto* cg = app.add_subcommand("callgraph", "build the intra-project call graph");
    std::string project_dir, cg_out = "edges.jsonl", methods_out;
    cg->add_option("--project-dir", project_dir)->required();
    cg->add_option("--out", cg_out);
    cg->add_option("--methods-out", methods_out);

    // build-dataset
    auto* bd = app.add_subcommand("build-dataset", "assemble and partition context records");
    std::string histories, callgraph_file, bd_methods, project = "project", ratios = "0.8,0.1,0.1";
    std::string pairs_file, docs_file, bd_out = "dataset";
    std::uint64_t seed = 1;
    bd->add_option("--histories", histories)->required();
    bd->add_option("--callgraph", callgraph_file);
    bd->add_option("--methods", bd_methods)->required();
    bd->add_option("--project", project);
    bd->add_option("--ratios", ratios);
    bd->add_option("--seed", seed);
    bd->add_option("--pairs", pairs_file);
    bd->add_option("--docs", docs_file);
    bd->add_option("--out", bd_out);

    // train
    auto* tr = app.add_subcommand("train", "train a task head over aggregated representations");
    std::string data_dir, task = "clone", aggregation = "diffconcat", contexts;
    std::string history_reduce = "max", embeddings_file, train_out = "model.json";
    long dim = 256, age_dim = 8, age_max = 7368;
    double lr = 0.1;
    int epochs = 50, batch = 16;
    std::uint64_t train_seed = 1, salt = 1;
    tr->add_option("--data", data_dir)->required();
    tr->add_option("--task", task)->check(CLI::IsMember({"clone", "classify"}));
    tr->add_option("--aggregation", aggregation)
        ->check(CLI::IsMember({"concat", "maxpool", "diffconcat"}));
    tr->add_option("--contexts", contexts);
    tr->add_option("--dim", dim);
    tr->add_option("--age-dim", age_dim);
    tr->add_option("--age-max", age_max);
    tr->add_option("--lr", lr);
    tr->add_option("--epochs", epochs);
    tr->add_option("--batch", batch);
    tr->add_option("--seed", train_seed);
    tr->add_option("--salt", salt);
    tr->add_option("--history-reduce", history_reduce)->check(CLI::IsMember({"max", "mean"}));
    tr->add_option("--embeddings", embeddings_file);
    tr->add_option("--out", train_out);

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "score predictions against gold data");
    std::string ev_task = "clone", pred_file, gold_file, ev_out;
    int classes = 0;
    ev->add_option("--task", ev_task)->check(CLI::IsMember({"clone", "classify", "summarize"}));
    ev->add_option("--pred", pred_file)->required();
    ev->add_option("--gold", gold_file)->required();
    ev->add_option("--classes", classes);
    ev->add_option("--out", ev_out);

    // stats
    auto* st = app.add_subcommand("stats", "human-evaluation statistics reports");
    std::string rankings_file, baseline, dimension = "accuracy", stats_out;
    st->add_option("--rankings", rankings_file)->required();
    st->add_option("--baseline", baseline)->required();
    st->add_option("--dimension", dimension)
        ->check(CLI::IsMember({"accuracy", "conciseness", "adequacy"}));
    st->add_option("--out", stats_out);

    // render-text
    auto* rt = app.add_subcommand("render-text", "token-budgeted text-level context rendering");
    std::string rt_records, rt_contexts = "vh,caller,callee,age", rt_delim, rt_out = "texts.jsonl";
    long budget = 512;
    rt->add_option("--records", rt_records)->required();
    rt->add_option("--contexts", rt_contexts);
    rt->add_option("--budget", budget);
    rt->add_option("--delimiter", rt_delim);
    rt->add_option("--out", rt_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e); // prints usage to stderr
        return 2;
    }
    g_log_debug = log_level == "debug";

    try {
        if (mine->parsed())
            return cmd_mine_history(repo, snapshot, methods_file, max_versions, jobs, mine_out);
        if (cg->parsed()) return cmd_callgraph(project_dir, cg_out, methods_out);
        if (bd->parsed())
            return cmd_build_dataset(histories, callgraph_file, bd_methods, project, ratios, seed,
                                     pairs_file, docs_file, bd_out);
        if (tr->parsed())
            return cmd_train(data_dir, task, aggregation, contexts, dim, age_dim, age_max, lr,
                             epochs, batch, train_seed, salt, history_reduce, embeddings_file,
                             train_out);
        if (ev->parsed()) return cmd_evaluate(ev_task, pred_file, gold_file, classes, ev_out);
        if (st->parsed()) return cmd_stats(rankings_file, baseline, dimension, stats_out);
        if (rt->parsed()) return cmd_render_text(rt_records, rt_contexts, budget, rt_delim, rt_out);
    } catch (const dataset::SchemaViolation& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
