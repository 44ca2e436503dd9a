#include "codectx/histmine.hpp"

#include "codectx/tokenize.hpp"

#include <algorithm>
#include <map>

namespace codectx::histmine {

namespace {

CommitRef to_ref(const git::Commit& c) { return {c.id, c.commit_time, c.parents}; }

bool looks_binary(std::string_view content) {
    return content.find('\0') != std::string_view::npos;
}

// Locates a method by (simple name, arity) in parsed source; first match wins
// (duplicate (name, arity) within one file is already a parse-level anomaly).
std::optional<jparse::MethodRecord> find_method(const std::string& source,
                                                const std::string& name, std::size_t arity) {
    auto parsed = jparse::extract_methods(source);
    for (auto& m : parsed.methods)
        if (m.signature.name == name && m.signature.arity() == arity) return std::move(m);
    return std::nullopt;
}

// Token-multiset overlap in [0,1]; used to pick a rename source when the
// renaming commit also edited the file.
double content_similarity(std::string_view a, std::string_view b) {
    std::map<std::string_view, std::size_t> ca, cb;
    for (auto t : tokenize(a)) ++ca[t];
    for (auto t : tokenize(b)) ++cb[t];
    std::size_t inter = 0, total_a = 0, total_b = 0;
    for (auto& [t, n] : ca) {
        total_a += n;
        auto it = cb.find(t);
        if (it != cb.end()) inter += std::min(n, it->second);
    }
    for (auto& [t, n] : cb) total_b += n;
    std::size_t denom = std::max(total_a, total_b);
    return denom == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(denom);
}

} // namespace

std::int64_t compute_age(std::int64_t first_ts, std::int64_t snapshot_ts) {
    if (snapshot_ts < first_ts)
        throw NegativeInterval("snapshot " + std::to_string(snapshot_ts) + " precedes introduction " +
                               std::to_string(first_ts));
    return (snapshot_ts - first_ts) / 86400;
}

VersionHistory walk_history(const git::ObjectStore& store, const git::ObjectId& snapshot,
                            const std::string& file_path, const std::string& method_name,
                            std::size_t arity, const MineOptions& options) {
    git::Commit head = store.read_commit(snapshot);

    auto snapshot_blob = store.blob_at(head, file_path);
    if (!snapshot_blob)
        throw MethodNotFoundAtSnapshot("no file " + file_path + " at " + snapshot);
    auto snapshot_method = find_method(store.read_blob(*snapshot_blob), method_name, arity);
    if (!snapshot_method)
        throw MethodNotFoundAtSnapshot(method_name + "/" + std::to_string(arity) +
                                       " not found in " + file_path + " at " + snapshot);

    VersionHistory hist;
    hist.method_key = snapshot_method->signature;
    hist.file_path = file_path;
    hist.snapshot_commit = to_ref(head);

    std::string tracked_path = file_path;
    std::optional<git::ObjectId> tracked_blob = snapshot_blob;
    std::int64_t first_found_ts = head.commit_time;

    git::Commit cur = head;
    std::optional<git::ObjectId> prev_blob; // blob examined at the next-newer commit
    bool cur_has_method = false;            // method present at the next-newer commit
    // Whether versions.back() still tracks the body stream at `cur`; while it
    // does, walking onto an older commit with the same body re-attributes the
    // version to that commit, so each version names its introducing commit.
    bool back_live = false;

    while (true) {
        if (tracked_blob && prev_blob && *tracked_blob == *prev_blob) {
            // identical file content: method state carries over unchanged
            if (cur_has_method) {
                first_found_ts = cur.commit_time;
                if (back_live) {
                    hist.versions.back().commit = to_ref(cur);
                    hist.versions.back().file_path_at_commit = tracked_path;
                }
            }
        } else if (tracked_blob) {
            std::string content = store.read_blob(*tracked_blob);
            if (looks_binary(content)) {
                ++hist.provenance.commits_skipped;
                cur_has_method = false;
                back_live = false;
            } else if (auto m = find_method(content, method_name, arity)) {
                first_found_ts = cur.commit_time;
                if (back_live && m->normalized_body == hist.versions.back().normalized_body) {
                    hist.versions.back().commit = to_ref(cur);
                    hist.versions.back().file_path_at_commit = tracked_path;
                } else if (hist.versions.empty() ||
                           m->normalized_body != hist.versions.back().normalized_body) {
                    if (options.max_versions == 0 || hist.versions.size() < options.max_versions) {
                        hist.versions.push_back({to_ref(cur), tracked_path, m->normalized_body,
                                                 hist.versions.size()});
                        back_live = true;
                    } else {
                        back_live = false;
                    }
                }
                cur_has_method = true;
            } else {
                cur_has_method = false;
                back_live = false;
            }
        }
        prev_blob = tracked_blob;

        if (cur.parents.empty()) break;
        git::Commit parent = store.read_commit(cur.parents.front()); // first-parent ancestry

        auto parent_blob = store.blob_at(parent, tracked_path);
        if (!parent_blob && tracked_blob) {
            // The child commit renamed the file. Prefer an exact blob match
            // among .java files the child deleted; fall back to content
            // similarity for rename+edit commits.
            if (!options.follow_renames) {
                hist.provenance.stopped_at_rename = true;
                break;
            }
            std::string best_path;
            double best_score = 0.0;
            std::string cur_content = store.read_blob(*tracked_blob);
            for (const auto& cand : store.list_files(parent, ".java")) {
                if (store.blob_at(cur, cand)) continue; // still present in child: not a rename source
                auto cand_blob = store.blob_at(parent, cand);
                if (!cand_blob) continue;
                if (*cand_blob == *tracked_blob) { // rename without edit
                    best_path = cand;
                    best_score = 1.0;
                    break;
                }
                double s = content_similarity(cur_content, store.read_blob(*cand_blob));
                if (s > best_score) {
                    best_score = s;
                    best_path = cand;
                }
            }
            if (best_score >= 0.5 && !best_path.empty()) {
                tracked_path = best_path;
                parent_blob = store.blob_at(parent, tracked_path);
                hist.provenance.renames_followed = true;
            } else {
                hist.provenance.stopped_at_rename = true;
                break;
            }
        }
        tracked_blob = parent_blob;
        cur = std::move(parent);
        if (!tracked_blob) break; // file does not exist this far back
    }

    // Clock skew in ancestors is tolerated: age is clamped at 0.
    hist.age_days = first_found_ts > head.commit_time ? 0
                                                      : compute_age(first_found_ts, head.commit_time);
    return hist;
}

} // namespace codectx::histmine
