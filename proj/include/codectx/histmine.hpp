#pragma once

#include "codectx/gitstore.hpp"
#include "codectx/jparse.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace codectx::histmine {

struct CommitRef {
    std::string id; // 40-char lowercase hex
    std::int64_t timestamp_utc = 0;
    std::vector<std::string> parent_ids;
};

struct MethodVersion {
    CommitRef commit;
    std::string file_path_at_commit;
    std::string normalized_body;
    std::size_t ordinal = 0; // 0 = newest
};

struct Provenance {
    bool renames_followed = false;    // at least one rename was crossed
    bool stopped_at_rename = false;   // rename target could not be identified
    std::size_t commits_skipped = 0;  // unparseable file states skipped
};

struct VersionHistory {
    jparse::MethodSignature method_key;
    std::string file_path; // path at the snapshot commit
    CommitRef snapshot_commit;
    std::vector<MethodVersion> versions; // newest-first, adjacent bodies distinct
    std::int64_t age_days = 0;
    Provenance provenance;
};

struct MethodNotFoundAtSnapshot : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NegativeInterval : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MineOptions {
    std::size_t max_versions = 0; // 0 = unlimited
    bool follow_renames = true;
};

/// floor((snapshot_ts - first_ts) / 86400); throws NegativeInterval when the
/// snapshot precedes the first introduction.
std::int64_t compute_age(std::int64_t first_ts, std::int64_t snapshot_ts);

/// Walks first-parent ancestry from `snapshot`, following the file across
/// renames, and records a version whenever the method's normalized body
/// differs from the next-newer recorded one. Method identity across commits
/// is (simple name, arity).
VersionHistory walk_history(const git::ObjectStore& store, const git::ObjectId& snapshot,
                            const std::string& file_path, const std::string& method_name,
                            std::size_t arity, const MineOptions& options = {});

} // namespace codectx::histmine
