#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace codectx::git {

using ObjectId = std::string; // 40-char lowercase hex

std::string sha1_hex(std::string_view data);
bool is_object_id(std::string_view s);

struct Commit {
    ObjectId id;
    ObjectId tree;
    std::vector<ObjectId> parents;
    std::int64_t commit_time = 0; // committer timestamp, seconds since epoch
    std::string message;
};

struct TreeEntry {
    std::string name;
    std::uint32_t mode = 0;
    ObjectId id;
    bool is_tree() const { return mode == 040000; }
};

struct StoreError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Read-only view of a .git object database: loose objects plus version-2
/// pack files (ofs/ref deltas resolved). Accepts either the repository root
/// or the .git directory itself.
class ObjectStore {
  public:
    explicit ObjectStore(const std::filesystem::path& repo);
    ~ObjectStore();
    ObjectStore(ObjectStore&&) noexcept;
    ObjectStore& operator=(ObjectStore&&) noexcept;

    const std::filesystem::path& git_dir() const { return git_dir_; }

    /// Full hex id, ref name (HEAD, refs/heads/x, short branch name) or a
    /// unique hex prefix.
    std::optional<ObjectId> resolve(const std::string& name) const;

    bool contains(const ObjectId& id) const;
    Commit read_commit(const ObjectId& id) const;
    std::vector<TreeEntry> read_tree(const ObjectId& id) const;
    std::string read_blob(const ObjectId& id) const;

    /// Blob (or subtree) id reached from a commit's root tree by a
    /// slash-separated path; nullopt when any component is missing.
    std::optional<ObjectId> blob_at(const Commit& commit, std::string_view path) const;

    /// All file paths under a commit's root tree (sorted), optionally
    /// filtered by extension (e.g. ".java").
    std::vector<std::string> list_files(const Commit& commit, std::string_view ext = {}) const;

  private:
    struct Raw {
        std::string type;
        std::string content;
    };
    Raw read_object(const ObjectId& id) const;
    std::optional<Raw> read_loose(const ObjectId& id) const;
    std::optional<Raw> read_packed(const ObjectId& id) const;
    void load_packs() const;

    std::filesystem::path git_dir_;
    mutable bool packs_loaded_ = false;
    struct PackFile;
    mutable std::vector<PackFile> packs_;
    mutable std::map<std::string, ObjectId> refs_;
};

/// Writes loose objects and refs; just enough of a repository to build test
/// fixtures and golden corpora without external tooling.
class ObjectWriter {
  public:
    /// Creates <path>/.git with the usual skeleton.
    static ObjectWriter init(const std::filesystem::path& repo_root);
    explicit ObjectWriter(std::filesystem::path git_dir);

    ObjectId write_blob(std::string_view content);
    ObjectId write_tree(const std::vector<TreeEntry>& entries);
    /// Builds nested trees from path -> blob id and returns the root tree.
    ObjectId write_tree_from_paths(const std::map<std::string, ObjectId>& blobs_by_path);
    ObjectId write_commit(const ObjectId& tree, const std::vector<ObjectId>& parents,
                          std::int64_t timestamp, const std::string& message,
                          const std::string& author = "Fixture <fixture@example.com>");
    void set_ref(const std::string& name, const ObjectId& id); // e.g. refs/heads/main
    void set_head(const std::string& ref_name);

  private:
    ObjectId write_object(std::string_view type, std::string_view content);
    std::filesystem::path git_dir_;
};

std::string zlib_inflate(std::string_view data, std::size_t size_hint = 0);
std::string zlib_deflate(std::string_view data);

} // namespace codectx::git
