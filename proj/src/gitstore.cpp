#include "codectx/gitstore.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <sstream>

namespace codectx::git {

namespace {

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw StoreError("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& p, std::string_view content) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw StoreError("cannot write " + p.string());
}

std::string to_hex(const unsigned char* bytes, std::size_t n) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(n * 2);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(digits[bytes[i] >> 4]);
        out.push_back(digits[bytes[i] & 0xf]);
    }
    return out;
}

std::string hex_to_bytes(std::string_view hex) {
    auto nib = [](char c) -> unsigned {
        if (c >= '0' && c <= '9') return static_cast<unsigned>(c - '0');
        if (c >= 'a' && c <= 'f') return static_cast<unsigned>(c - 'a' + 10);
        return static_cast<unsigned>(c - 'A' + 10);
    };
    std::string out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i + 1 < hex.size(); i += 2)
        out.push_back(static_cast<char>((nib(hex[i]) << 4) | nib(hex[i + 1])));
    return out;
}

// ---------------------------------------------------------------------------
// SHA-1 (FIPS 180-1), enough for object ids and input digests.
// ---------------------------------------------------------------------------

struct Sha1 {
    std::uint32_t h[5] = {0x67452301u, 0xEFCDAB89u, 0x98BADCFEu, 0x10325476u, 0xC3D2E1F0u};
    std::uint64_t total = 0;
    unsigned char buf[64];
    std::size_t buffered = 0;

    static std::uint32_t rol(std::uint32_t v, int s) { return (v << s) | (v >> (32 - s)); }

    void block(const unsigned char* p) {
        std::uint32_t w[80];
        for (int i = 0; i < 16; ++i)
            w[i] = (std::uint32_t(p[4 * i]) << 24) | (std::uint32_t(p[4 * i + 1]) << 16) |
                   (std::uint32_t(p[4 * i + 2]) << 8) | std::uint32_t(p[4 * i + 3]);
        for (int i = 16; i < 80; ++i) w[i] = rol(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);
        std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4];
        for (int i = 0; i < 80; ++i) {
            std::uint32_t f, k;
            if (i < 20) { f = (b & c) | (~b & d); k = 0x5A827999u; }
            else if (i < 40) { f = b ^ c ^ d; k = 0x6ED9EBA1u; }
            else if (i < 60) { f = (b & c) | (b & d) | (c & d); k = 0x8F1BBCDCu; }
            else { f = b ^ c ^ d; k = 0xCA62C1D6u; }
            std::uint32_t t = rol(a, 5) + f + e + k + w[i];
            e = d; d = c; c = rol(b, 30); b = a; a = t;
        }
        h[0] += a; h[1] += b; h[2] += c; h[3] += d; h[4] += e;
    }

    void update(const void* data, std::size_t n) {
        const unsigned char* p = static_cast<const unsigned char*>(data);
        total += n;
        if (buffered) {
            std::size_t take = std::min(n, 64 - buffered);
            std::memcpy(buf + buffered, p, take);
            buffered += take;
            p += take;
            n -= take;
            if (buffered == 64) { block(buf); buffered = 0; }
        }
        while (n >= 64) { block(p); p += 64; n -= 64; }
        if (n) { std::memcpy(buf, p, n); buffered = n; }
    }

    std::string hex() {
        std::uint64_t bits = total * 8;
        unsigned char pad = 0x80;
        update(&pad, 1);
        unsigned char zero = 0;
        while (buffered != 56) update(&zero, 1);
        unsigned char len[8];
        for (int i = 0; i < 8; ++i) len[i] = static_cast<unsigned char>(bits >> (56 - 8 * i));
        update(len, 8);
        unsigned char digest[20];
        for (int i = 0; i < 5; ++i) {
            digest[4 * i] = static_cast<unsigned char>(h[i] >> 24);
            digest[4 * i + 1] = static_cast<unsigned char>(h[i] >> 16);
            digest[4 * i + 2] = static_cast<unsigned char>(h[i] >> 8);
            digest[4 * i + 3] = static_cast<unsigned char>(h[i]);
        }
        return to_hex(digest, 20);
    }
};

std::uint32_t be32(const unsigned char* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) | (std::uint32_t(p[2]) << 8) |
           std::uint32_t(p[3]);
}

std::uint64_t be64(const unsigned char* p) {
    return (std::uint64_t(be32(p)) << 32) | be32(p + 4);
}

} // namespace

std::string sha1_hex(std::string_view data) {
    Sha1 s;
    s.update(data.data(), data.size());
    return s.hex();
}

bool is_object_id(std::string_view s) {
    return s.size() == 40 && std::all_of(s.begin(), s.end(), [](char c) {
               return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
           });
}

std::string zlib_inflate(std::string_view data, std::size_t size_hint) {
    z_stream zs{};
    if (inflateInit(&zs) != Z_OK) throw StoreError("inflateInit failed");
    std::string out;
    out.reserve(size_hint ? size_hint : data.size() * 3);
    std::array<char, 1 << 15> chunk;
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
    zs.avail_in = static_cast<uInt>(data.size());
    int rc = Z_OK;
    do {
        zs.next_out = reinterpret_cast<Bytef*>(chunk.data());
        zs.avail_out = static_cast<uInt>(chunk.size());
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw StoreError("zlib inflate error " + std::to_string(rc));
        }
        out.append(chunk.data(), chunk.size() - zs.avail_out);
    } while (rc != Z_STREAM_END && (zs.avail_in > 0 || zs.avail_out == 0));
    inflateEnd(&zs);
    return out;
}

std::string zlib_deflate(std::string_view data) {
    z_stream zs{};
    if (deflateInit(&zs, Z_BEST_SPEED) != Z_OK) throw StoreError("deflateInit failed");
    std::string out;
    std::array<char, 1 << 15> chunk;
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
    zs.avail_in = static_cast<uInt>(data.size());
    int rc = Z_OK;
    do {
        zs.next_out = reinterpret_cast<Bytef*>(chunk.data());
        zs.avail_out = static_cast<uInt>(chunk.size());
        rc = deflate(&zs, Z_FINISH);
        out.append(chunk.data(), chunk.size() - zs.avail_out);
    } while (rc != Z_STREAM_END);
    deflateEnd(&zs);
    return out;
}

// ---------------------------------------------------------------------------
// Pack files
// ---------------------------------------------------------------------------

struct ObjectStore::PackFile {
    std::string pack; // whole .pack contents
    std::vector<ObjectId> ids;          // sorted (idx order)
    std::vector<std::uint64_t> offsets; // parallel to ids

    std::optional<std::uint64_t> find(const ObjectId& id) const {
        auto it = std::lower_bound(ids.begin(), ids.end(), id);
        if (it == ids.end() || *it != id) return std::nullopt;
        return offsets[static_cast<std::size_t>(it - ids.begin())];
    }
};

namespace {

// git pack object types
constexpr int kObjCommit = 1;
constexpr int kObjTree = 2;
constexpr int kObjBlob = 3;
constexpr int kObjTag = 4;
constexpr int kObjOfsDelta = 6;
constexpr int kObjRefDelta = 7;

std::string apply_delta(std::string_view base, std::string_view delta) {
    std::size_t i = 0;
    auto varint = [&]() {
        std::uint64_t v = 0;
        int shift = 0;
        while (i < delta.size()) {
            unsigned char b = static_cast<unsigned char>(delta[i++]);
            v |= std::uint64_t(b & 0x7f) << shift;
            shift += 7;
            if (!(b & 0x80)) break;
        }
        return v;
    };
    std::uint64_t base_size = varint();
    std::uint64_t result_size = varint();
    if (base_size != base.size()) throw StoreError("delta base size mismatch");
    std::string out;
    out.reserve(result_size);
    while (i < delta.size()) {
        unsigned char op = static_cast<unsigned char>(delta[i++]);
        if (op & 0x80) { // copy from base
            std::uint64_t off = 0, len = 0;
            for (int b = 0; b < 4; ++b)
                if (op & (1u << b)) off |= std::uint64_t(static_cast<unsigned char>(delta[i++])) << (8 * b);
            for (int b = 0; b < 3; ++b)
                if (op & (0x10u << b)) len |= std::uint64_t(static_cast<unsigned char>(delta[i++])) << (8 * b);
            if (len == 0) len = 0x10000;
            out.append(base.substr(off, len));
        } else if (op) { // insert literal
            out.append(delta.substr(i, op));
            i += op;
        } else {
            throw StoreError("bad delta opcode");
        }
    }
    if (out.size() != result_size) throw StoreError("delta result size mismatch");
    return out;
}

std::pair<int, std::string> read_pack_object(const std::string& pack, std::uint64_t offset);

std::pair<int, std::string> resolve_pack_entry(const std::string& pack, std::uint64_t offset) {
    const unsigned char* data = reinterpret_cast<const unsigned char*>(pack.data());
    std::uint64_t i = offset;
    unsigned char b = data[i++];
    int type = (b >> 4) & 7;
    std::uint64_t size = b & 0x0f;
    int shift = 4;
    while (b & 0x80) {
        b = data[i++];
        size |= std::uint64_t(b & 0x7f) << shift;
        shift += 7;
    }
    if (type == kObjOfsDelta) {
        b = data[i++];
        std::uint64_t rel = b & 0x7f;
        while (b & 0x80) {
            b = data[i++];
            rel = ((rel + 1) << 7) | (b & 0x7f);
        }
        auto [base_type, base] = read_pack_object(pack, offset - rel);
        std::string delta = zlib_inflate(std::string_view(pack).substr(i), size);
        return {base_type, apply_delta(base, delta)};
    }
    if (type == kObjRefDelta) {
        throw StoreError("ref-delta requires store lookup"); // handled by caller
    }
    return {type, zlib_inflate(std::string_view(pack).substr(i), size)};
}

std::pair<int, std::string> read_pack_object(const std::string& pack, std::uint64_t offset) {
    return resolve_pack_entry(pack, offset);
}

std::string type_name(int t) {
    switch (t) {
    case kObjCommit: return "commit";
    case kObjTree: return "tree";
    case kObjBlob: return "blob";
    case kObjTag: return "tag";
    default: return "unknown";
    }
}

} // namespace

// ---------------------------------------------------------------------------
// ObjectStore
// ---------------------------------------------------------------------------

ObjectStore::ObjectStore(const std::filesystem::path& repo) {
    namespace fs = std::filesystem;
    if (fs::exists(repo / ".git" / "objects")) git_dir_ = repo / ".git";
    else if (fs::exists(repo / "objects")) git_dir_ = repo; // bare or .git itself
    else throw StoreError("not a git repository: " + repo.string());
}

ObjectStore::~ObjectStore() = default;
ObjectStore::ObjectStore(ObjectStore&&) noexcept = default;
ObjectStore& ObjectStore::operator=(ObjectStore&&) noexcept = default;

void ObjectStore::load_packs() const {
    if (packs_loaded_) return;
    packs_loaded_ = true;
    namespace fs = std::filesystem;
    fs::path dir = git_dir_ / "objects" / "pack";
    if (!fs::exists(dir)) return;
    std::vector<fs::path> idx_files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".idx") idx_files.push_back(e.path());
    std::sort(idx_files.begin(), idx_files.end());
    for (const auto& idx_path : idx_files) {
        std::string idx = read_file(idx_path);
        const unsigned char* p = reinterpret_cast<const unsigned char*>(idx.data());
        if (idx.size() < 8 + 256 * 4 || be32(p) != 0xff744f63u || be32(p + 4) != 2)
            continue; // v1 indexes not supported
        const unsigned char* fanout = p + 8;
        std::uint32_t count = be32(fanout + 255 * 4);
        const unsigned char* shas = fanout + 256 * 4;
        const unsigned char* offs32 = shas + count * 20 + count * 4; // skip crc table
        PackFile pf;
        pf.pack = read_file(fs::path(idx_path).replace_extension(".pack"));
        pf.ids.reserve(count);
        pf.offsets.reserve(count);
        std::vector<std::uint64_t> raw(count);
        const unsigned char* off64 = offs32 + count * 4;
        for (std::uint32_t k = 0; k < count; ++k) {
            std::uint32_t o = be32(offs32 + k * 4);
            raw[k] = (o & 0x80000000u) ? be64(off64 + (o & 0x7fffffffu) * 8) : o;
        }
        for (std::uint32_t k = 0; k < count; ++k) {
            pf.ids.push_back(to_hex(shas + k * 20, 20));
            pf.offsets.push_back(raw[k]);
        }
        packs_.push_back(std::move(pf));
    }
}

std::optional<ObjectStore::Raw> ObjectStore::read_loose(const ObjectId& id) const {
    namespace fs = std::filesystem;
    fs::path p = git_dir_ / "objects" / id.substr(0, 2) / id.substr(2);
    if (!fs::exists(p)) return std::nullopt;
    std::string full = zlib_inflate(read_file(p));
    std::size_t nul = full.find('\0');
    if (nul == std::string::npos) throw StoreError("malformed loose object " + id);
    std::string header = full.substr(0, nul);
    std::size_t sp = header.find(' ');
    return Raw{header.substr(0, sp), full.substr(nul + 1)};
}

std::optional<ObjectStore::Raw> ObjectStore::read_packed(const ObjectId& id) const {
    load_packs();
    for (const auto& pf : packs_) {
        auto off = pf.find(id);
        if (!off) continue;
        // ref-delta bases may live in another pack or loose; resolve here
        const unsigned char* data = reinterpret_cast<const unsigned char*>(pf.pack.data());
        std::uint64_t i = *off;
        unsigned char b = data[i++];
        int type = (b >> 4) & 7;
        std::uint64_t size = b & 0x0f;
        int shift = 4;
        while (b & 0x80) {
            b = data[i++];
            size |= std::uint64_t(b & 0x7f) << shift;
            shift += 7;
        }
        if (type == kObjRefDelta) {
            ObjectId base_id = to_hex(data + i, 20);
            i += 20;
            Raw base = read_object(base_id);
            std::string delta = zlib_inflate(std::string_view(pf.pack).substr(i), size);
            return Raw{base.type, apply_delta(base.content, delta)};
        }
        auto [t, content] = read_pack_object(pf.pack, *off);
        return Raw{type_name(t), std::move(content)};
    }
    return std::nullopt;
}

ObjectStore::Raw ObjectStore::read_object(const ObjectId& id) const {
    if (auto r = read_loose(id)) return std::move(*r);
    if (auto r = read_packed(id)) return std::move(*r);
    throw StoreError("object not found: " + id);
}

bool ObjectStore::contains(const ObjectId& id) const {
    if (!is_object_id(id)) return false;
    namespace fs = std::filesystem;
    if (fs::exists(git_dir_ / "objects" / id.substr(0, 2) / id.substr(2))) return true;
    load_packs();
    for (const auto& pf : packs_)
        if (pf.find(id)) return true;
    return false;
}

std::optional<ObjectId> ObjectStore::resolve(const std::string& name) const {
    namespace fs = std::filesystem;
    if (is_object_id(name) && contains(name)) return name;

    auto read_ref_file = [&](const fs::path& p) -> std::optional<std::string> {
        if (!fs::exists(p)) return std::nullopt;
        std::string s = read_file(p);
        while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
        return s;
    };

    std::string target = name;
    for (int hops = 0; hops < 10; ++hops) {
        for (const std::string& prefix :
             {std::string{}, std::string{"refs/"}, std::string{"refs/heads/"}, std::string{"refs/tags/"}}) {
            if (auto v = read_ref_file(git_dir_ / (prefix + target))) {
                if (v->starts_with("ref: ")) { target = v->substr(5); goto next_hop; }
                if (is_object_id(*v)) return *v;
            }
        }
        // packed-refs fallback
        if (fs::exists(git_dir_ / "packed-refs")) {
            std::istringstream in(read_file(git_dir_ / "packed-refs"));
            std::string line;
            while (std::getline(in, line)) {
                if (line.empty() || line[0] == '#' || line[0] == '^') continue;
                std::size_t sp = line.find(' ');
                if (sp == std::string::npos) continue;
                std::string ref = line.substr(sp + 1);
                if (ref == target || ref == "refs/" + target || ref == "refs/heads/" + target ||
                    ref == "refs/tags/" + target)
                    return line.substr(0, sp);
            }
        }
        break;
    next_hop:;
    }

    // unique hex prefix over loose + packed
    if (name.size() >= 4 && name.size() < 40 &&
        std::all_of(name.begin(), name.end(),
                    [](char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'); })) {
        std::vector<ObjectId> hits;
        fs::path fan = git_dir_ / "objects" / name.substr(0, 2);
        if (name.size() >= 2 && fs::exists(fan)) {
            for (const auto& e : fs::directory_iterator(fan)) {
                ObjectId id = name.substr(0, 2) + e.path().filename().string();
                if (id.starts_with(name)) hits.push_back(id);
            }
        }
        load_packs();
        for (const auto& pf : packs_)
            for (const auto& id : pf.ids)
                if (id.starts_with(name)) hits.push_back(id);
        std::sort(hits.begin(), hits.end());
        hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
        if (hits.size() == 1) return hits[0];
    }
    return std::nullopt;
}

Commit ObjectStore::read_commit(const ObjectId& id) const {
    Raw raw = read_object(id);
    if (raw.type != "commit") throw StoreError(id + " is a " + raw.type + ", not a commit");
    Commit c;
    c.id = id;
    std::istringstream in(raw.content);
    std::string line;
    bool in_headers = true;
    while (std::getline(in, line)) {
        if (in_headers) {
            if (line.empty()) { in_headers = false; continue; }
            if (line.starts_with("tree ")) c.tree = line.substr(5);
            else if (line.starts_with("parent ")) c.parents.push_back(line.substr(7));
            else if (line.starts_with("committer ")) {
                // committer Name <email> <timestamp> <tz>
                std::size_t gt = line.rfind('>');
                if (gt != std::string::npos) {
                    std::istringstream rest(line.substr(gt + 1));
                    rest >> c.commit_time;
                }
            }
        } else {
            c.message += line;
            c.message += '\n';
        }
    }
    return c;
}

std::vector<TreeEntry> ObjectStore::read_tree(const ObjectId& id) const {
    Raw raw = read_object(id);
    if (raw.type != "tree") throw StoreError(id + " is a " + raw.type + ", not a tree");
    std::vector<TreeEntry> entries;
    std::size_t i = 0;
    const std::string& s = raw.content;
    while (i < s.size()) {
        std::size_t sp = s.find(' ', i);
        std::size_t nul = s.find('\0', sp);
        TreeEntry e;
        e.mode = static_cast<std::uint32_t>(std::stoul(s.substr(i, sp - i), nullptr, 8));
        e.name = s.substr(sp + 1, nul - sp - 1);
        e.id = to_hex(reinterpret_cast<const unsigned char*>(s.data() + nul + 1), 20);
        entries.push_back(std::move(e));
        i = nul + 21;
    }
    return entries;
}

std::string ObjectStore::read_blob(const ObjectId& id) const {
    Raw raw = read_object(id);
    if (raw.type != "blob") throw StoreError(id + " is a " + raw.type + ", not a blob");
    return std::move(raw.content);
}

std::optional<ObjectId> ObjectStore::blob_at(const Commit& commit, std::string_view path) const {
    ObjectId cur = commit.tree;
    std::size_t start = 0;
    while (start <= path.size()) {
        std::size_t slash = path.find('/', start);
        std::string_view part = path.substr(start, slash == std::string_view::npos
                                                       ? std::string_view::npos
                                                       : slash - start);
        bool last = slash == std::string_view::npos;
        auto entries = read_tree(cur);
        const TreeEntry* hit = nullptr;
        for (const auto& e : entries)
            if (e.name == part) { hit = &e; break; }
        if (!hit) return std::nullopt;
        if (last) return hit->id;
        if (!hit->is_tree()) return std::nullopt;
        cur = hit->id;
        start = slash + 1;
    }
    return std::nullopt;
}

std::vector<std::string> ObjectStore::list_files(const Commit& commit, std::string_view ext) const {
    std::vector<std::string> out;
    std::vector<std::pair<ObjectId, std::string>> stack{{commit.tree, ""}};
    while (!stack.empty()) {
        auto [tree, prefix] = stack.back();
        stack.pop_back();
        for (const auto& e : read_tree(tree)) {
            std::string p = prefix.empty() ? e.name : prefix + "/" + e.name;
            if (e.is_tree()) stack.emplace_back(e.id, p);
            else if (ext.empty() || p.ends_with(ext)) out.push_back(std::move(p));
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------
// ObjectWriter
// ---------------------------------------------------------------------------

ObjectWriter ObjectWriter::init(const std::filesystem::path& repo_root) {
    namespace fs = std::filesystem;
    fs::path git = repo_root / ".git";
    fs::create_directories(git / "objects");
    fs::create_directories(git / "refs" / "heads");
    write_file(git / "HEAD", "ref: refs/heads/main\n");
    return ObjectWriter(git);
}

ObjectWriter::ObjectWriter(std::filesystem::path git_dir) : git_dir_(std::move(git_dir)) {}

ObjectId ObjectWriter::write_object(std::string_view type, std::string_view content) {
    std::string full;
    full.reserve(type.size() + content.size() + 16);
    full.append(type);
    full.push_back(' ');
    full.append(std::to_string(content.size()));
    full.push_back('\0');
    full.append(content);
    ObjectId id = sha1_hex(full);
    std::filesystem::path p = git_dir_ / "objects" / id.substr(0, 2) / id.substr(2);
    if (!std::filesystem::exists(p)) write_file(p, zlib_deflate(full));
    return id;
}

ObjectId ObjectWriter::write_blob(std::string_view content) { return write_object("blob", content); }

ObjectId ObjectWriter::write_tree(const std::vector<TreeEntry>& entries) {
    std::vector<TreeEntry> sorted = entries;
    // git sorts tree entries by name, directories as if suffixed with '/'
    std::sort(sorted.begin(), sorted.end(), [](const TreeEntry& a, const TreeEntry& b) {
        std::string an = a.name + (a.is_tree() ? "/" : "");
        std::string bn = b.name + (b.is_tree() ? "/" : "");
        return an < bn;
    });
    std::string content;
    for (const auto& e : sorted) {
        char mode[8];
        std::snprintf(mode, sizeof mode, "%o", e.mode);
        content += mode;
        content.push_back(' ');
        content += e.name;
        content.push_back('\0');
        content += hex_to_bytes(e.id);
    }
    return write_object("tree", content);
}

ObjectId ObjectWriter::write_tree_from_paths(const std::map<std::string, ObjectId>& blobs_by_path) {
    struct Dir {
        std::map<std::string, Dir> dirs;
        std::map<std::string, ObjectId> files;
    };
    Dir root;
    for (const auto& [path, blob] : blobs_by_path) {
        Dir* d = &root;
        std::size_t start = 0;
        while (true) {
            std::size_t slash = path.find('/', start);
            if (slash == std::string::npos) {
                d->files[path.substr(start)] = blob;
                break;
            }
            d = &d->dirs[path.substr(start, slash - start)];
            start = slash + 1;
        }
    }
    auto emit = [this](auto&& self, const Dir& d) -> ObjectId {
        std::vector<TreeEntry> entries;
        for (const auto& [name, sub] : d.dirs) entries.push_back({name, 040000, self(self, sub)});
        for (const auto& [name, blob] : d.files) entries.push_back({name, 0100644, blob});
        return write_tree(entries);
    };
    return emit(emit, root);
}

ObjectId ObjectWriter::write_commit(const ObjectId& tree, const std::vector<ObjectId>& parents,
                                    std::int64_t timestamp, const std::string& message,
                                    const std::string& author) {
    std::string content = "tree " + tree + "\n";
    for (const auto& p : parents) content += "parent " + p + "\n";
    std::string stamp = author + " " + std::to_string(timestamp) + " +0000";
    content += "author " + stamp + "\n";
    content += "committer " + stamp + "\n\n";
    content += message;
    if (!message.ends_with('\n')) content.push_back('\n');
    return write_object("commit", content);
}

void ObjectWriter::set_ref(const std::string& name, const ObjectId& id) {
    write_file(git_dir_ / name, id + "\n");
}

void ObjectWriter::set_head(const std::string& ref_name) {
    write_file(git_dir_ / "HEAD", "ref: " + ref_name + "\n");
}

} // namespace codectx::git
