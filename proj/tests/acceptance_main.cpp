// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exits non-zero when any fails.

#include "codectx/callgraph.hpp"
#include "codectx/dataset.hpp"
#include "codectx/evalstat.hpp"
#include "codectx/gitstore.hpp"
#include "codectx/histmine.hpp"
#include "codectx/jparse.hpp"
#include "codectx/represent.hpp"
#include "fixture_project.hpp"
#include "reference_tables.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <vector>

namespace fs = std::filesystem;
using namespace codectx;

namespace {

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define REQUIRE_MSG(cond, msg)                                                                     \
    do {                                                                                           \
        if (!(cond)) {                                                                             \
            std::ostringstream ss_;                                                                \
            ss_ << msg;                                                                            \
            throw Failure(ss_.str());                                                              \
        }                                                                                          \
    } while (0)

std::string g_cli; // path to the codectx binary, for the determinism criterion

fs::path fresh_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / "codectx-acceptance" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE_MSG(in.good(), "cannot open " << p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& content) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << content;
}

int run(const std::string& args) {
    std::string cmd = g_cli + " " + args + " >/dev/null 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
}

// --------------------------------------------------------------------------
// 1. F1 arithmetic on the reference clone-detection rows
// --------------------------------------------------------------------------

void criterion_f1_arithmetic() {
    for (const auto& row : reference_tables::kCloneDetectionRows) {
        double f1 = evalstat::f1_from_pr(row.precision, row.recall);
        REQUIRE_MSG(std::abs(f1 - row.f1) <= 0.0005,
                    row.model << "/" << row.context << ": computed " << f1 << " vs reported "
                              << row.f1);
    }
}

// --------------------------------------------------------------------------
// 2. Mean-rank reproduction from the rank histograms
// --------------------------------------------------------------------------

void criterion_mean_rank() {
    for (const auto& row : reference_tables::kRankDistributionRows) {
        std::map<int, std::size_t> hist = {
            {1, row.rank1}, {2, row.rank2}, {3, row.rank3}, {4, row.rank4plus}}; // 4++ as 4
        double mean = evalstat::mean_rank(hist);
        REQUIRE_MSG(std::abs(mean - row.mean_rank) <= 0.02,
                    row.dimension << "/" << row.contexts << ": computed " << mean
                                  << " vs reported " << row.mean_rank);
    }
}

// --------------------------------------------------------------------------
// 3. Effect-size bins reproduce every reference magnitude label
// --------------------------------------------------------------------------

void criterion_effect_bins() {
    auto check = [](const auto& rows) {
        for (const auto& row : rows) {
            char got = evalstat::magnitude_letter(evalstat::bin_magnitude(row.abs_delta));
            REQUIRE_MSG(got == row.magnitude, "|delta|=" << row.abs_delta << " binned to " << got
                                                         << ", reported " << row.magnitude);
        }
    };
    check(reference_tables::kSingleContextEffects);
    check(reference_tables::kCombinedContextEffects);
}

// --------------------------------------------------------------------------
// 4. Wilcoxon exact mode vs exhaustive sign enumeration
// --------------------------------------------------------------------------

std::vector<double> midranks_of_abs(std::vector<double> d) {
    for (auto& v : d) v = std::abs(v);
    std::vector<double> ranks(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        double less = 0, equal = 0;
        for (std::size_t j = 0; j < d.size(); ++j) {
            if (d[j] < d[i]) ++less;
            if (d[j] == d[i]) ++equal;
        }
        ranks[i] = less + (equal + 1) / 2;
    }
    return ranks;
}

void criterion_wilcoxon_oracle() {
    std::mt19937_64 rng(20240801);
    int tested = 0;
    while (tested < 100) {
        std::size_t n = 1 + rng() % 10;
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = static_cast<double>(rng() % 7);
            b[i] = static_cast<double>(rng() % 7);
        }
        std::vector<double> diffs;
        for (std::size_t i = 0; i < n; ++i)
            if (a[i] != b[i]) diffs.push_back(a[i] - b[i]);
        auto result = evalstat::wilcoxon_signed_rank(a, b);
        if (diffs.empty()) {
            REQUIRE_MSG(!result.p_two_sided.has_value(), "all-zero instance must be undefined");
            continue; // does not count toward the 100 exact comparisons
        }
        ++tested;
        auto ranks = midranks_of_abs(diffs);
        double w_plus = 0;
        for (std::size_t i = 0; i < diffs.size(); ++i)
            if (diffs[i] > 0) w_plus += ranks[i];
        long long w2 = std::llround(2 * w_plus);
        std::size_t below = 0, above = 0;
        std::size_t m = diffs.size();
        for (std::size_t mask = 0; mask < (std::size_t(1) << m); ++mask) {
            double w = 0;
            for (std::size_t i = 0; i < m; ++i)
                if (mask & (std::size_t(1) << i)) w += ranks[i];
            long long s = std::llround(2 * w);
            if (s <= w2) ++below;
            if (s >= w2) ++above;
        }
        double expected = std::min(
            1.0, 2.0 * std::min<double>(double(below), double(above)) / std::ldexp(1.0, int(m)));
        REQUIRE_MSG(result.p_two_sided.has_value(), "exact p missing");
        REQUIRE_MSG(result.method == evalstat::WilcoxonResult::Method::exact, "not exact mode");
        REQUIRE_MSG(*result.p_two_sided == expected, "p=" << *result.p_two_sided << " oracle "
                                                          << expected << " (n=" << m << ")");
    }
}

// --------------------------------------------------------------------------
// 5. Kendall oracles
// --------------------------------------------------------------------------

void criterion_kendall() {
    std::vector<double> up = {1, 2, 3, 4, 5, 6}, down = {6, 5, 4, 3, 2, 1};
    auto t_same = evalstat::kendall_tau_b(up, up);
    auto t_rev = evalstat::kendall_tau_b(up, down);
    REQUIRE_MSG(t_same && std::abs(*t_same - 1.0) < 1e-12, "tau_b(identical) != 1");
    REQUIRE_MSG(t_rev && std::abs(*t_rev + 1.0) < 1e-12, "tau_b(reversed) != -1");

    std::vector<std::vector<double>> same_ranks = {{1, 2, 3, 4}, {1, 2, 3, 4}, {1, 2, 3, 4}};
    REQUIRE_MSG(std::abs(evalstat::kendall_w(same_ranks) - 1.0) < 1e-12, "W(identical) != 1");

    std::mt19937_64 rng(5150);
    for (int t = 0; t < 100; ++t) {
        std::size_t n = 2 + rng() % 20;
        std::vector<double> x(n), y(n);
        for (auto& v : x) v = static_cast<double>(rng() % 5); // ties guaranteed
        for (auto& v : y) v = static_cast<double>(rng() % 5);
        // O(n^2) pair counting
        double c = 0, d = 0, tx = 0, ty = 0, txy = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                double dx = x[i] - x[j], dy = y[i] - y[j];
                if (dx == 0 && dy == 0) ++txy;
                else if (dx == 0) ++tx;
                else if (dy == 0) ++ty;
                else if (dx * dy > 0) ++c;
                else ++d;
            }
        double n0 = double(n) * (double(n) - 1) / 2;
        double dx_denom = n0 - (tx + txy), dy_denom = n0 - (ty + txy);
        auto got = evalstat::kendall_tau_b(x, y);
        if (dx_denom <= 0 || dy_denom <= 0) {
            REQUIRE_MSG(!got.has_value(), "all-tied side must be undefined");
            continue;
        }
        double want = (c - d) / std::sqrt(dx_denom * dy_denom);
        REQUIRE_MSG(got.has_value(), "tau_b undefined on defined input");
        REQUIRE_MSG(std::abs(*got - want) < 1e-12,
                    "tau_b=" << *got << " oracle " << want << " n=" << n);
    }
}

// --------------------------------------------------------------------------
// 6. Aggregation algebra, 1000 randomized cases each
// --------------------------------------------------------------------------

void criterion_aggregation_algebra() {
    std::mt19937_64 rng(777);
    auto rand_vec = [&](Eigen::Index d) {
        represent::Vector v(d);
        std::normal_distribution<double> g;
        for (Eigen::Index i = 0; i < d; ++i) v[i] = g(rng);
        return v;
    };
    for (int t = 0; t < 1000; ++t) {
        Eigen::Index d = 1 + static_cast<Eigen::Index>(rng() % 24);
        // concat length additivity
        std::size_t parts = 1 + rng() % 4;
        std::vector<represent::Vector> vs;
        Eigen::Index total = 0;
        for (std::size_t k = 0; k < parts; ++k) {
            Eigen::Index dk = 1 + static_cast<Eigen::Index>(rng() % 16);
            vs.push_back(rand_vec(dk));
            total += dk;
        }
        REQUIRE_MSG(represent::aggregate_concat(vs).size() == total, "concat length additivity");

        // max-pool commutativity, associativity, idempotence (exact)
        represent::Vector a = rand_vec(d), b = rand_vec(d), c = rand_vec(d);
        REQUIRE_MSG(represent::aggregate_maxpool({a, b}) == represent::aggregate_maxpool({b, a}),
                    "maxpool commutativity");
        REQUIRE_MSG(represent::aggregate_maxpool({represent::aggregate_maxpool({a, b}), c}) ==
                        represent::aggregate_maxpool({a, represent::aggregate_maxpool({b, c})}),
                    "maxpool associativity");
        REQUIRE_MSG(represent::aggregate_maxpool({a, a}) == a, "maxpool idempotence");

        // diff-concat swap symmetry (exact)
        represent::Vector ctx = rand_vec(1 + static_cast<Eigen::Index>(rng() % 8));
        REQUIRE_MSG(represent::aggregate_diffconcat(a, b, {ctx}) ==
                        represent::aggregate_diffconcat(b, a, {ctx}),
                    "diff-concat swap symmetry");
    }
}

// --------------------------------------------------------------------------
// 7. Gradient check, 100 random draws across heads and the age projection
// --------------------------------------------------------------------------

void criterion_gradient_check() {
    std::mt19937_64 rng(20240215);
    const Eigen::Index d = 5;
    auto rand_vec = [&](Eigen::Index n) {
        represent::Vector v(n);
        std::normal_distribution<double> g;
        for (Eigen::Index i = 0; i < n; ++i) v[i] = g(rng);
        return v;
    };
    auto rand_bundle = [&]() {
        represent::ContextBundle b;
        b.code = rand_vec(d);
        b.history = rand_vec(d);
        b.caller = rand_vec(d);
        b.callee = rand_vec(d);
        b.age_days = static_cast<std::int64_t>(rng() % 5000);
        return b;
    };

    const double eps = 1e-4;
    double worst = 0;
    int draws = 0;
    auto check_model = [&](represent::Model& model, auto&& loss_only,
                           const represent::Gradients& g) {
        std::vector<double*> slots;
        std::vector<double> analytic;
        auto add = [&](auto& eigen_obj, const auto& grad_obj) {
            for (Eigen::Index i = 0; i < eigen_obj.size(); ++i) {
                slots.push_back(eigen_obj.data() + i);
                analytic.push_back(grad_obj.data()[i]);
            }
        };
        add(model.head().weights, g.d_weights);
        add(model.head().bias, g.d_bias);
        add(model.age_projection().weight, g.d_age_weight);
        add(model.age_projection().bias, g.d_age_bias);
        for (std::size_t k = 0; k < slots.size(); ++k) {
            double saved = *slots[k];
            *slots[k] = saved + eps;
            double up = loss_only();
            *slots[k] = saved - eps;
            double down = loss_only();
            *slots[k] = saved;
            double fd = (up - down) / (2 * eps);
            double rel = std::abs(analytic[k] - fd) /
                         std::max(1e-4, std::abs(analytic[k]) + std::abs(fd));
            worst = std::max(worst, rel);
            REQUIRE_MSG(rel < 1e-4, "gradient mismatch: analytic " << analytic[k] << " fd " << fd
                                                                   << " rel " << rel);
        }
    };
    auto randomize = [&](represent::Model& model) {
        std::normal_distribution<double> g(0.0, 0.5);
        for (Eigen::Index i = 0; i < model.head().weights.size(); ++i)
            model.head().weights.data()[i] = g(rng);
        for (Eigen::Index i = 0; i < model.head().bias.size(); ++i) model.head().bias[i] = g(rng);
        for (Eigen::Index i = 0; i < model.age_projection().weight.size(); ++i)
            model.age_projection().weight[i] = g(rng);
        for (Eigen::Index i = 0; i < model.age_projection().bias.size(); ++i)
            model.age_projection().bias[i] = g(rng);
    };

    while (draws < 100) {
        bool clone_side = draws % 2 == 0;
        represent::TrainConfig cfg;
        cfg.dim = d;
        cfg.age_dim = 3;
        cfg.contexts = {true, true, true};
        cfg.classes = 3;
        cfg.seed = rng();
        if (clone_side) {
            cfg.task = represent::Task::clone;
            const represent::Aggregation aggs[] = {represent::Aggregation::concat,
                                                   represent::Aggregation::maxpool,
                                                   represent::Aggregation::diffconcat};
            cfg.aggregation = aggs[draws % 3];
            represent::Model model(cfg, represent::Model::feature_dim_for(cfg));
            randomize(model);
            std::vector<represent::PairExample> batch = {
                {rand_bundle(), rand_bundle(), static_cast<int>(rng() % 2)}};
            represent::Gradients g;
            represent::clone_loss_and_grad(model, batch, g);
            check_model(model,
                        [&]() {
                            represent::Gradients scratch;
                            return represent::clone_loss_and_grad(model, batch, scratch);
                        },
                        g);
        } else {
            cfg.task = represent::Task::classify;
            cfg.aggregation = draws % 4 == 1 ? represent::Aggregation::concat
                                             : represent::Aggregation::maxpool;
            represent::Model model(cfg, represent::Model::feature_dim_for(cfg));
            randomize(model);
            std::vector<represent::Example> batch = {
                {rand_bundle(), static_cast<int>(rng() % 3)}};
            represent::Gradients g;
            represent::classify_loss_and_grad(model, batch, g);
            check_model(model,
                        [&]() {
                            represent::Gradients scratch;
                            return represent::classify_loss_and_grad(model, batch, scratch);
                        },
                        g);
        }
        ++draws;
    }
    std::cerr << "  (gradient check worst relative error: " << worst << ")\n";
}

// --------------------------------------------------------------------------
// 8. Mining fixture with scripted commits
// --------------------------------------------------------------------------

void criterion_mining_fixture() {
    auto dir = fresh_dir("mining");
    auto w = git::ObjectWriter::init(dir);
    const std::int64_t day = 86400, t0 = 1500000000;

    std::string f1 = "int f(int a) { return a; }";
    std::string f3 = "int f(int a) { return a + 1; }";
    std::string g1 = "int g() { return 0; }";
    std::string g2 = "int g() { return 1; }";
    auto file_with = [&](const std::string& f_body, const std::string& g_body,
                         const std::string& extra = "") {
        return "class Main {\n  " + f_body + "\n  " + g_body + "\n" + extra + "}\n";
    };

    auto c1 = w.write_commit(
        w.write_tree_from_paths({{"Main.java", w.write_blob(file_with(f1, g1))}}), {}, t0,
        "create");
    auto c2 = w.write_commit(
        w.write_tree_from_paths({{"Main.java", w.write_blob(file_with(f1, g2))}}), {c1}, t0 + day,
        "unrelated edit");
    auto c3 = w.write_commit(
        w.write_tree_from_paths({{"Main.java", w.write_blob(file_with(f3, g2))}}), {c2},
        t0 + 2 * day, "edit f body");
    auto c4 = w.write_commit(
        w.write_tree_from_paths({{"src/Main.java", w.write_blob(file_with(f3, g2))}}), {c3},
        t0 + 3 * day, "rename file");
    auto c5 = w.write_commit(
        w.write_tree_from_paths(
            {{"src/Main.java", w.write_blob(file_with(f3, g2, "  int fresh() { return 9; }\n"))}}),
        {c4}, t0 + 4 * day, "add method at snapshot");
    w.set_ref("refs/heads/main", c5);

    git::ObjectStore store(dir);

    // f: edited at c3, created at c1; the rename is crossed without a version
    auto hf = histmine::walk_history(store, c5, "src/Main.java", "f", 1);
    REQUIRE_MSG(hf.versions.size() == 2, "f expected 2 versions, got " << hf.versions.size());
    REQUIRE_MSG(hf.versions[0].commit.id == c3, "f version 0 at " << hf.versions[0].commit.id);
    REQUIRE_MSG(hf.versions[0].ordinal == 0, "ordinal 0");
    REQUIRE_MSG(hf.versions[1].commit.id == c1, "f version 1 at " << hf.versions[1].commit.id);
    REQUIRE_MSG(hf.versions[1].file_path_at_commit == "Main.java", "rename not followed");
    REQUIRE_MSG(hf.age_days == 4, "f age " << hf.age_days);
    REQUIRE_MSG(hf.provenance.renames_followed, "rename provenance flag missing");

    // g: edited at c2, created at c1
    auto hg = histmine::walk_history(store, c5, "src/Main.java", "g", 0);
    REQUIRE_MSG(hg.versions.size() == 2, "g expected 2 versions");
    REQUIRE_MSG(hg.versions[0].commit.id == c2 && hg.versions[1].commit.id == c1, "g commits");
    REQUIRE_MSG(hg.age_days == 4, "g age " << hg.age_days);

    // fresh: added at the snapshot commit; the age-0 creation case
    auto hfresh = histmine::walk_history(store, c5, "src/Main.java", "fresh", 0);
    REQUIRE_MSG(hfresh.versions.size() == 1, "fresh expected 1 version");
    REQUIRE_MSG(hfresh.versions[0].commit.id == c5, "fresh at snapshot");
    REQUIRE_MSG(hfresh.age_days == 0, "fresh age " << hfresh.age_days);
}

// --------------------------------------------------------------------------
// 9. Call-graph fixture against the hand enumeration
// --------------------------------------------------------------------------

void criterion_callgraph_fixture() {
    std::vector<jparse::MethodRecord> methods;
    for (const auto& f : fixture::project_files()) {
        auto parsed = jparse::extract_methods(f.text, f.path);
        REQUIRE_MSG(parsed.diagnostics.empty(), "fixture must parse cleanly");
        for (auto& m : parsed.methods) methods.push_back(std::move(m));
    }
    auto g = callgraph::build_call_graph(methods);

    auto key_of = [&](callgraph::MethodId id) {
        const auto& m = g.method(id);
        return fixture::method_key(m.signature.type_path, m.signature.name, m.signature.arity());
    };

    std::multimap<std::string, std::string> got_edges;
    for (const auto& [a, b] : g.edges) got_edges.emplace(key_of(a), key_of(b));
    REQUIRE_MSG(got_edges == fixture::ground_truth_edges(), "edge set mismatch");

    std::map<std::string, std::size_t> got_mult;
    for (const auto& [k, v] : g.candidate_multiplicity) {
        const auto& [caller, name, arity] = k;
        got_mult[key_of(caller) + "|" + name + "/" + std::to_string(arity)] = v;
    }
    REQUIRE_MSG(got_mult == fixture::ground_truth_multiplicity(), "multiplicity mismatch");

    auto retained = callgraph::filter_isolated(g);
    std::set<std::string> dropped;
    for (callgraph::MethodId id = 0; id < g.methods.size(); ++id)
        if (!retained.count(id)) dropped.insert(key_of(id));
    REQUIRE_MSG(dropped == fixture::ground_truth_isolated(), "isolated set mismatch");

    auto expect_neighbor = [&](const std::string& who, const char* caller, const char* callee) {
        for (callgraph::MethodId id = 0; id < g.methods.size(); ++id) {
            if (key_of(id) != who) continue;
            auto n = callgraph::select_longest_neighbors(g, id);
            if (caller) {
                REQUIRE_MSG(n.caller && key_of(*n.caller) == caller,
                            who << " caller " << (n.caller ? key_of(*n.caller) : "none"));
            } else {
                REQUIRE_MSG(!n.caller, who << " unexpectedly has a caller");
            }
            if (callee) {
                REQUIRE_MSG(n.callee && key_of(*n.callee) == callee,
                            who << " callee " << (n.callee ? key_of(*n.callee) : "none"));
            } else {
                REQUIRE_MSG(!n.callee, who << " unexpectedly has a callee");
            }
            return;
        }
        throw Failure("method " + who + " not found");
    };
    expect_neighbor("D.leaf/0", "H.wide/0", nullptr);   // longest of three callers
    expect_neighbor("J.top/0", nullptr, "I.chain/0");   // no callers, one callee
    expect_neighbor("C.step/1", "A.run/1", "B.step/1"); // self-edge never selected
    expect_neighbor("A.run/1", nullptr, "C.step/1");    // longest of two callees
    expect_neighbor("F.F/1", "E.make/0", nullptr);      // constructor callee via new
}

// --------------------------------------------------------------------------
// 10. End-to-end directional check: version history helps clone detection
// --------------------------------------------------------------------------

std::string random_code(std::mt19937_64& rng, int tokens) {
    static const char* vocab[] = {"alpha", "beta",  "gamma", "delta", "eps",  "zeta",
                                  "eta",   "theta", "iota",  "kappa", "mu",   "nu",
                                  "xi",    "pi",    "rho",   "sigma", "tau",  "phi"};
    std::string out = "void m() {";
    for (int i = 0; i < tokens; ++i) {
        out += " ";
        out += vocab[rng() % std::size(vocab)];
        out += std::to_string(rng() % 50);
        out += ";";
    }
    out += " }";
    return out;
}

void criterion_directional() {
    std::vector<double> improvements;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        std::mt19937_64 rng(9000 + seed);

        // Methods whose current bodies are unrelated; clone pairs share their
        // historical versions, non-clone pairs do not.
        std::vector<dataset::ContextRecord> records;
        std::vector<dataset::ClonePair> pairs;
        int next_id = 0;
        auto add_method = [&](const std::vector<std::string>& versions) {
            dataset::ContextRecord r;
            r.method_id = "m" + std::to_string(next_id++);
            r.project = "synthetic";
            r.current_code = random_code(rng, 24);
            r.versions = versions;
            r.versions.insert(r.versions.begin(), r.current_code);
            r.age_days = static_cast<std::int64_t>(rng() % 3000);
            r.partition = "train";
            records.push_back(r);
            return r.method_id;
        };
        for (int i = 0; i < 60; ++i) {
            std::string shared_a = random_code(rng, 20);
            std::string shared_b = random_code(rng, 20);
            auto left = add_method({shared_a, shared_b});
            auto right = add_method({shared_a, shared_b}); // clone: same ancestry
            pairs.push_back({left, right, 1});
            auto lone_l = add_method({random_code(rng, 20), random_code(rng, 20)});
            auto lone_r = add_method({random_code(rng, 20), random_code(rng, 20)});
            pairs.push_back({lone_l, lone_r, 0});
        }

        represent::TrainConfig cfg;
        cfg.task = represent::Task::clone;
        cfg.aggregation = represent::Aggregation::diffconcat;
        cfg.dim = 64;
        cfg.lr = 0.5;
        cfg.epochs = 40;
        cfg.batch = 8;
        cfg.seed = seed;

        represent::HashedEncoder enc(cfg.dim, seed);
        auto bundle_of = [&](const dataset::ContextRecord& r, bool with_history) {
            represent::ContextBundle b;
            b.code = enc.encode(r.current_code);
            if (with_history) {
                std::vector<represent::Vector> vs;
                for (const auto& v : r.versions) vs.push_back(enc.encode(v));
                b.history = represent::reduce_history(vs, cfg.history_reduce);
            }
            return b;
        };
        std::map<std::string, dataset::ContextRecord> by_id;
        for (const auto& r : records) by_id[r.method_id] = r;

        auto split = dataset::split_partitions(pairs.size(), {0.8, 0.1, 0.1}, seed);
        auto make_sets = [&](bool with_history) {
            std::array<std::vector<represent::PairExample>, 3> sets;
            for (std::size_t i = 0; i < pairs.size(); ++i) {
                represent::PairExample ex{bundle_of(by_id[pairs[i].left], with_history),
                                          bundle_of(by_id[pairs[i].right], with_history),
                                          pairs[i].label};
                sets[static_cast<std::size_t>(split[i])].push_back(std::move(ex));
            }
            return sets;
        };

        auto f1_on_test = [&](bool with_history) {
            represent::TrainConfig run_cfg = cfg;
            run_cfg.contexts.history = with_history;
            auto sets = make_sets(with_history);
            auto result = represent::train_clone(sets[0], sets[1], run_cfg);
            std::vector<int> pred, gold;
            for (const auto& ex : sets[2]) {
                pred.push_back(result.model.predict_clone(ex) > 0.5 ? 1 : 0);
                gold.push_back(ex.label);
            }
            return evalstat::prf1(pred, gold).f1;
        };

        double base = f1_on_test(false);
        double with_vh = f1_on_test(true);
        improvements.push_back(with_vh - base);
    }
    std::sort(improvements.begin(), improvements.end());
    double median = improvements[improvements.size() / 2];
    std::ostringstream detail;
    for (double d : improvements) detail << d << " ";
    std::cerr << "  (directional improvements per seed, sorted: " << detail.str() << ")\n";
    REQUIRE_MSG(median > 0, "median F1 improvement " << median << " not > 0");
}

// --------------------------------------------------------------------------
// 11. Determinism of every subcommand through the real binary
// --------------------------------------------------------------------------

void criterion_determinism() {
    REQUIRE_MSG(!g_cli.empty(), "codectx binary path not supplied");
    auto dir = fresh_dir("determinism");

    // fixture repository + checkout
    fs::path repo = dir / "repo";
    fs::create_directories(repo);
    auto w = git::ObjectWriter::init(repo);
    std::map<std::string, git::ObjectId> tree_a, tree_b;
    for (const auto& f : fixture::project_files()) {
        std::string text = f.text;
        tree_b[f.path] = w.write_blob(text);
        if (std::string(f.path) == "D.java") {
            std::string old = text;
            auto pos = old.find("int x = 0;");
            REQUIRE_MSG(pos != std::string::npos, "fixture text drifted");
            old.replace(pos, 10, "int x = 42;");
            tree_a[f.path] = w.write_blob(old);
        } else {
            tree_a[f.path] = w.write_blob(text);
        }
        spit(dir / "project" / f.path, text);
    }
    auto c1 = w.write_commit(w.write_tree_from_paths(tree_a), {}, 1400000000, "one");
    auto c2 = w.write_commit(w.write_tree_from_paths(tree_b), {c1}, 1400000000 + 86400, "two");
    w.set_ref("refs/heads/main", c2);

    spit(dir / "targets.jsonl",
         "{\"file_path\":\"D.java\",\"name\":\"leaf\",\"arity\":0}\n"
         "{\"file_path\":\"A.java\",\"name\":\"run\",\"arity\":1}\n"
         "{\"file_path\":\"B.java\",\"name\":\"step\",\"arity\":1}\n"
         "{\"file_path\":\"C.java\",\"name\":\"step\",\"arity\":1}\n"
         "{\"file_path\":\"H.java\",\"name\":\"wide\",\"arity\":0}\n"
         "{\"file_path\":\"I.java\",\"name\":\"chain\",\"arity\":0}\n"
         "{\"file_path\":\"J.java\",\"name\":\"top\",\"arity\":0}\n");
    spit(dir / "pairs.jsonl",
         "{\"left\":{\"file_path\":\"B.java\",\"name\":\"step\",\"arity\":1},"
         "\"right\":{\"file_path\":\"C.java\",\"name\":\"step\",\"arity\":1},\"label\":1}\n"
         "{\"left\":{\"file_path\":\"D.java\",\"name\":\"leaf\",\"arity\":0},"
         "\"right\":{\"file_path\":\"J.java\",\"name\":\"top\",\"arity\":0},\"label\":0}\n");
    spit(dir / "pred.jsonl", "{\"id\":\"a\",\"value\":1}\n{\"id\":\"b\",\"value\":0}\n");
    spit(dir / "gold.jsonl", "{\"id\":\"a\",\"value\":1}\n{\"id\":\"b\",\"value\":1}\n");
    std::string rankings;
    for (int i = 0; i < 12; ++i)
        rankings += "{\"item\":\"s" + std::to_string(i) +
                    "\",\"dimension\":\"accuracy\",\"ranks\":{\"base\":" +
                    std::to_string(1 + (i % 3)) + ",\"sys\":1}}\n";
    spit(dir / "rankings.jsonl", rankings);

    auto compare_rerun = [&](const std::string& what, const std::string& args,
                             const std::vector<fs::path>& outputs) {
        REQUIRE_MSG(run(args) == 0, what << " failed on first run");
        std::vector<std::string> first;
        for (const auto& p : outputs) first.push_back(slurp(p));
        REQUIRE_MSG(run(args) == 0, what << " failed on rerun");
        for (std::size_t i = 0; i < outputs.size(); ++i)
            REQUIRE_MSG(slurp(outputs[i]) == first[i],
                        what << ": " << outputs[i] << " differs between identical runs");
    };

    std::string base = dir.string();
    compare_rerun("mine-history",
                  "mine-history --repo " + base + "/repo --snapshot main --methods-file " + base +
                      "/targets.jsonl --jobs 2 --out " + base + "/hist.jsonl",
                  {dir / "hist.jsonl", dir / "hist.run.json"});
    compare_rerun("callgraph",
                  "callgraph --project-dir " + base + "/project --out " + base +
                      "/edges.jsonl --methods-out " + base + "/methods.jsonl",
                  {dir / "edges.jsonl", dir / "methods.jsonl"});
    compare_rerun("build-dataset",
                  "build-dataset --histories " + base + "/hist.jsonl --callgraph " + base +
                      "/edges.jsonl --methods " + base + "/methods.jsonl --project fx " +
                      "--ratios 0.6,0.2,0.2 --seed 5 --pairs " + base + "/pairs.jsonl --out " +
                      base + "/ds",
                  {dir / "ds" / "records.train.jsonl", dir / "ds" / "records.valid.jsonl",
                   dir / "ds" / "records.test.jsonl", dir / "ds" / "run.json"});
    compare_rerun("render-text",
                  "render-text --records " + base + "/ds/records.train.jsonl --contexts "
                  "vh,cg,age --budget 96 --out " + base + "/texts.jsonl",
                  {dir / "texts.jsonl"});

    // training data: reuse train records as all three splits with synthetic pairs
    {
        auto recs = dataset::read_jsonl(slurp(dir / "ds" / "records.train.jsonl"));
        REQUIRE_MSG(recs.size() >= 2, "need at least two records for pairing");
        fs::create_directories(dir / "tiny");
        std::string pj;
        for (std::size_t i = 0; i + 1 < recs.size(); ++i)
            pj += "{\"left\":\"" + recs[i].method_id + "\",\"right\":\"" + recs[i + 1].method_id +
                  "\",\"label\":" + ((i % 2) ? "0" : "1") + "}\n";
        for (const char* split : {"train", "valid", "test"}) {
            fs::copy_file(dir / "ds" / "records.train.jsonl",
                          dir / "tiny" / ("records." + std::string(split) + ".jsonl"),
                          fs::copy_options::overwrite_existing);
            spit(dir / "tiny" / ("pairs." + std::string(split) + ".jsonl"), pj);
        }
    }
    compare_rerun("train",
                  "train --data " + base + "/tiny --task clone --aggregation diffconcat "
                  "--contexts vh,cg,age --dim 24 --epochs 4 --batch 2 --seed 9 --out " +
                      base + "/model.json",
                  {dir / "model.json"});
    compare_rerun("evaluate",
                  "evaluate --task clone --pred " + base + "/pred.jsonl --gold " + base +
                      "/gold.jsonl --out " + base + "/metrics.json",
                  {dir / "metrics.json"});
    compare_rerun("stats",
                  "stats --rankings " + base + "/rankings.jsonl --baseline base --dimension "
                  "accuracy --out " + base + "/stats",
                  {dir / "stats" / "stats.accuracy.json", dir / "stats" / "comparisons.accuracy.csv",
                   dir / "stats" / "distributions.accuracy.csv"});
}

// --------------------------------------------------------------------------
// 12. Text-budget contract on 1000 random records
// --------------------------------------------------------------------------

std::size_t independent_token_count(const std::string& s) {
    std::size_t n = 0, i = 0;
    auto word = [](unsigned char c) {
        return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80;
    };
    while (i < s.size()) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        if (std::isspace(c)) { ++i; continue; }
        ++n;
        if (word(c)) {
            while (i < s.size() && word(static_cast<unsigned char>(s[i]))) ++i;
        } else {
            ++i;
        }
    }
    return n;
}

void criterion_text_budget() {
    std::mt19937_64 rng(61803398);
    dataset::RenderOptions opt; // default budget 512
    opt.contexts = {dataset::ContextKind::versions, dataset::ContextKind::caller,
                    dataset::ContextKind::callee, dataset::ContextKind::age};
    REQUIRE_MSG(opt.token_budget == 512, "default budget must be 512");

    for (int t = 0; t < 1000; ++t) {
        dataset::ContextRecord r;
        r.method_id = "m";
        r.partition = "train";
        std::uniform_int_distribution<int> code_len(1, 700);
        auto text_of = [&](int tokens, const std::string& tag) {
            std::string out = tag;
            for (int i = 1; i < tokens; ++i) out += " w" + std::to_string(rng() % 97);
            return out;
        };
        r.current_code = text_of(code_len(rng), "code0");
        std::size_t n_versions = rng() % 6;
        for (std::size_t v = 0; v < n_versions; ++v)
            r.versions.push_back(text_of(1 + int(rng() % 300), "ver" + std::to_string(v)));
        if (rng() % 2) r.longest_caller = text_of(1 + int(rng() % 200), "caller0");
        if (rng() % 2) r.longest_callee = text_of(1 + int(rng() % 200), "callee0");
        r.age_days = static_cast<std::int64_t>(rng() % 7368);

        std::string out = dataset::render_text_context(r, opt);
        std::size_t count = independent_token_count(out);
        REQUIRE_MSG(count <= 512, "render produced " << count << " tokens");

        // versions appear newest-first: ver0 before ver1 before ver2...
        std::size_t prev = 0;
        bool stopped = false;
        for (std::size_t v = 0; v < n_versions; ++v) {
            std::size_t at = out.find("ver" + std::to_string(v) + " ");
            if (at == std::string::npos) at = out.find("ver" + std::to_string(v));
            if (at == std::string::npos || at < prev) { // missing: budget ran out
                stopped = true;
                continue;
            }
            REQUIRE_MSG(!stopped, "version " << v << " rendered after an omitted newer one");
            REQUIRE_MSG(at >= prev, "version order violated");
            prev = at;
        }
    }
}

struct Criterion {
    int id;
    const char* name;
    double limit_seconds;
    std::function<void()> body;
};

} // namespace

int main(int argc, char** argv) {
    if (argc > 1) g_cli = argv[1];

    std::vector<Criterion> criteria = {
        {1, "F1 arithmetic reproduces reference clone-detection rows (+-0.0005)", 1.0,
         criterion_f1_arithmetic},
        {2, "rank histograms reproduce reference mean ranks (+-0.02)", 1.0, criterion_mean_rank},
        {3, "Cliff's delta bins reproduce all reference magnitude labels", 1.0,
         criterion_effect_bins},
        {4, "exact Wilcoxon equals sign-enumeration oracle on 100 instances", 10.0,
         criterion_wilcoxon_oracle},
        {5, "Kendall tau_b/W against oracles and closed forms", 5.0, criterion_kendall},
        {6, "aggregation algebra holds on 1000 randomized cases", 5.0,
         criterion_aggregation_algebra},
        {7, "analytic gradients match central finite differences (<1e-4)", 30.0,
         criterion_gradient_check},
        {8, "scripted-repository mining fixture yields hand-specified histories", 5.0,
         criterion_mining_fixture},
        {9, "call-graph fixture equals hand-enumerated ground truth", 5.0,
         criterion_callgraph_fixture},
        {10, "diff-concat + version history beats code-only on shared-history clones", 120.0,
         criterion_directional},
        {11, "every subcommand is byte-identical across reruns", 60.0, criterion_determinism},
        {12, "rendered text never exceeds 512 tokens, versions newest-first", 10.0,
         criterion_text_budget},
    };

    int passed = 0;
    for (const auto& c : criteria) {
        auto start = std::chrono::steady_clock::now();
        std::string failure;
        try {
            c.body();
        } catch (const std::exception& e) {
            failure = e.what();
        }
        double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        bool ok = failure.empty() && seconds <= c.limit_seconds;
        if (failure.empty() && seconds > c.limit_seconds)
            failure = "exceeded time limit of " + std::to_string(c.limit_seconds) + " s";
        std::printf("criterion %2d: %-72s %s (%.2f s)\n", c.id, c.name, ok ? "PASS" : "FAIL",
                    seconds);
        if (!ok) std::printf("              -> %s\n", failure.c_str());
        if (ok) ++passed;
    }
    std::printf("acceptance: %d/%zu criteria passed\n", passed, criteria.size());
    return passed == static_cast<int>(criteria.size()) ? 0 : 1;
}
