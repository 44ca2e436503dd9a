#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace codectx::represent {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct DimensionMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct EmptyHistory : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct NegativeAge : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct EmptyPartition : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct NonFiniteLoss : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Encoding
// ---------------------------------------------------------------------------

/// Hashed bag-of-tokens with sign hashing, L2-normalized; the built-in
/// provider behind the pluggable encoder surface. Empty text encodes to the
/// zero vector.
Vector encode_tokens(std::string_view text, Eigen::Index dim, std::uint64_t salt);

/// Encoder abstraction so precomputed embeddings can replace the hashed
/// bag-of-tokens without touching call sites.
class Encoder {
  public:
    virtual ~Encoder() = default;
    virtual Eigen::Index dim() const = 0;
    virtual Vector encode(std::string_view text) const = 0;
};

class HashedEncoder final : public Encoder {
  public:
    HashedEncoder(Eigen::Index dim, std::uint64_t salt) : dim_(dim), salt_(salt) {}
    Eigen::Index dim() const override { return dim_; }
    Vector encode(std::string_view text) const override { return encode_tokens(text, dim_, salt_); }

  private:
    Eigen::Index dim_;
    std::uint64_t salt_;
};

/// Pre-computed embeddings keyed by the SHA-1 of the exact text, loaded from
/// JSONL rows {"sha1": ..., "vector": [...]}. A text without an entry is an
/// error; empty text falls back to the zero vector.
class PrecomputedEncoder final : public Encoder {
  public:
    PrecomputedEncoder(Eigen::Index dim, std::map<std::string, Vector> by_digest)
        : dim_(dim), by_digest_(std::move(by_digest)) {}
    Eigen::Index dim() const override { return dim_; }
    Vector encode(std::string_view text) const override;

  private:
    Eigen::Index dim_;
    std::map<std::string, Vector> by_digest_;
};

// ---------------------------------------------------------------------------
// Context reduction and age embedding
// ---------------------------------------------------------------------------

enum class ReduceMode { max, mean };

Vector reduce_history(const std::vector<Vector>& vectors, ReduceMode mode);

struct AgeProjection {
    Vector weight; // per-dimension scale of the scalar age feature
    Vector bias;
    Eigen::Index dim() const { return weight.size(); }
};

AgeProjection make_age_projection(Eigen::Index dim, std::uint64_t seed);

/// Normalized scalar feature ln(1+age)/ln(1+d_max).
double age_feature(std::int64_t age_days, std::int64_t d_max);

/// Affine projection of the scalar feature: weight * u + bias.
Vector embed_age(std::int64_t age_days, const AgeProjection& projection, std::int64_t d_max);

// ---------------------------------------------------------------------------
// Aggregation operators
// ---------------------------------------------------------------------------

Vector aggregate_concat(const std::vector<Vector>& vectors);
Vector aggregate_maxpool(const std::vector<Vector>& vectors);
Vector aggregate_diffconcat(const Vector& code1, const Vector& code2,
                            const std::vector<Vector>& contexts);

// ---------------------------------------------------------------------------
// Heads
// ---------------------------------------------------------------------------

struct HeadParams {
    Matrix weights; // out x in
    Vector bias;    // out
};

double forward_clone(const Vector& x, const HeadParams& head);   // sigmoid, out = 1
Vector forward_classify(const Vector& x, const HeadParams& head); // softmax over rows

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

enum class Aggregation { concat, maxpool, diffconcat };
enum class Task { clone, classify };

struct ContextSelection {
    bool history = false;
    bool callgraph = false; // caller + callee
    bool age = false;
};

/// Per-method encoded inputs ready for aggregation. Selected-but-missing
/// context blocks participate as zero vectors under concat and are skipped
/// under max-pooling.
struct ContextBundle {
    Vector code;
    std::optional<Vector> history;
    std::optional<Vector> caller;
    std::optional<Vector> callee;
    std::optional<std::int64_t> age_days;
};

struct PairExample {
    ContextBundle a;
    ContextBundle b;
    int label = 0;
};

struct Example {
    ContextBundle features;
    int label = 0;
};

struct TrainConfig {
    Task task = Task::clone;
    Aggregation aggregation = Aggregation::diffconcat;
    ContextSelection contexts;
    Eigen::Index dim = 256;
    Eigen::Index age_dim = 8;
    std::int64_t age_max = 7368;
    int classes = 2; // classify only
    double lr = 0.1;
    int epochs = 50;
    int batch = 16;
    std::uint64_t seed = 1;
    ReduceMode history_reduce = ReduceMode::max;
};

/// Linear head plus (when the age context is selected) the trainable age
/// projection. Under max-pooling the age feature is projected to the shared
/// dimension before pooling; under concat and diff-concat its block keeps its
/// own width. For clone pairs every selected context enters as the
/// element-wise absolute difference of the two sides, mirroring the code
/// treatment, so pair features are swap-invariant.
class Model {
  public:
    Model(TrainConfig config, Eigen::Index feature_dim);

    const TrainConfig& config() const { return config_; }
    Eigen::Index feature_dim() const { return feature_dim_; }
    HeadParams& head() { return head_; }
    const HeadParams& head() const { return head_; }
    AgeProjection& age_projection() { return age_; }
    const AgeProjection& age_projection() const { return age_; }

    Vector assemble(const ContextBundle& bundle) const;
    Vector assemble(const PairExample& pair) const;

    double predict_clone(const PairExample& pair) const;
    Vector predict_classify(const ContextBundle& bundle) const;

    static Eigen::Index feature_dim_for(const TrainConfig& config);

  private:
    TrainConfig config_;
    Eigen::Index feature_dim_;
    HeadParams head_;
    AgeProjection age_;
};

struct Gradients {
    Matrix d_weights;
    Vector d_bias;
    Vector d_age_weight;
    Vector d_age_bias;
};

/// Mean cross-entropy loss over the batch plus analytic gradients for the
/// head and the age projection.
double clone_loss_and_grad(const Model& model, const std::vector<PairExample>& batch,
                           Gradients& out);
double classify_loss_and_grad(const Model& model, const std::vector<Example>& batch,
                              Gradients& out);

struct EpochStats {
    int epoch = 0;
    double train_loss = 0;
    double valid_metric = 0; // F1 (clone) or macro-F1 (classify)
};

struct TrainResult {
    Model model;
    std::vector<EpochStats> log;
    int best_epoch = 0;
    double best_valid_metric = 0;
};

/// Mini-batch gradient descent with a fixed learning rate and seeded
/// shuffling; the returned parameters are the epoch checkpoint with the best
/// validation metric. Deterministic for a fixed seed.
TrainResult train_clone(const std::vector<PairExample>& train,
                        const std::vector<PairExample>& valid, const TrainConfig& config);
TrainResult train_classify(const std::vector<Example>& train, const std::vector<Example>& valid,
                           const TrainConfig& config);

} // namespace codectx::represent
