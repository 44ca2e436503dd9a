#include "codectx/represent.hpp"

#include "codectx/evalstat.hpp"
#include "codectx/gitstore.hpp" // sha1_hex for precomputed-embedding keys
#include "codectx/tokenize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace codectx::represent {

namespace {

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::uint64_t splitmix_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    return mix64(state);
}

double stable_sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

double softplus(double z) { // ln(1 + e^z) without overflow
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

} // namespace

Vector encode_tokens(std::string_view text, Eigen::Index dim, std::uint64_t salt) {
    if (dim < 1) throw std::invalid_argument("encode_tokens needs dim >= 1");
    Vector v = Vector::Zero(dim);
    const std::uint64_t seed = mix64(salt ^ 0xA0761D6478BD642Full);
    for (std::string_view tok : tokenize(text)) {
        std::uint64_t h = 1469598103934665603ull ^ seed; // FNV-1a with salted basis
        for (unsigned char c : tok) {
            h ^= c;
            h *= 1099511628211ull;
        }
        h = mix64(h);
        Eigen::Index bucket = static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dim));
        v[bucket] += (h >> 63) ? -1.0 : 1.0;
    }
    double norm = v.norm();
    if (norm > 0) v /= norm;
    return v;
}

Vector PrecomputedEncoder::encode(std::string_view text) const {
    if (text.empty()) return Vector::Zero(dim_);
    auto it = by_digest_.find(git::sha1_hex(text));
    if (it == by_digest_.end())
        throw std::out_of_range("no precomputed embedding for text starting '" +
                                std::string(text.substr(0, 40)) + "'");
    if (it->second.size() != dim_)
        throw DimensionMismatch("precomputed embedding has wrong dimension");
    return it->second;
}

Vector reduce_history(const std::vector<Vector>& vectors, ReduceMode mode) {
    if (vectors.empty()) throw EmptyHistory("reduce_history needs at least one vector");
    const Eigen::Index d = vectors.front().size();
    for (const auto& v : vectors)
        if (v.size() != d) throw DimensionMismatch("history vectors disagree on dimension");
    Vector out = vectors.front();
    for (std::size_t i = 1; i < vectors.size(); ++i) {
        if (mode == ReduceMode::max)
            out = out.cwiseMax(vectors[i]);
        else
            out += vectors[i];
    }
    if (mode == ReduceMode::mean) out /= static_cast<double>(vectors.size());
    return out;
}

AgeProjection make_age_projection(Eigen::Index dim, std::uint64_t seed) {
    AgeProjection p;
    p.weight.resize(dim);
    p.bias.resize(dim);
    std::uint64_t state = seed ^ 0x6A09E667F3BCC908ull;
    auto uniform = [&]() {
        return (static_cast<double>(splitmix_next(state) >> 11) / 9007199254740992.0) * 0.2 - 0.1;
    };
    for (Eigen::Index i = 0; i < dim; ++i) p.weight[i] = uniform();
    for (Eigen::Index i = 0; i < dim; ++i) p.bias[i] = uniform();
    return p;
}

double age_feature(std::int64_t age_days, std::int64_t d_max) {
    if (age_days < 0) throw NegativeAge("age_days must be >= 0");
    if (d_max < 1) throw std::invalid_argument("d_max must be >= 1");
    return std::log1p(static_cast<double>(age_days)) / std::log1p(static_cast<double>(d_max));
}

Vector embed_age(std::int64_t age_days, const AgeProjection& projection, std::int64_t d_max) {
    return projection.weight * age_feature(age_days, d_max) + projection.bias;
}

Vector aggregate_concat(const std::vector<Vector>& vectors) {
    if (vectors.empty()) throw std::invalid_argument("aggregate_concat needs at least one vector");
    Eigen::Index total = 0;
    for (const auto& v : vectors) total += v.size();
    Vector out(total);
    Eigen::Index off = 0;
    for (const auto& v : vectors) {
        out.segment(off, v.size()) = v;
        off += v.size();
    }
    return out;
}

Vector aggregate_maxpool(const std::vector<Vector>& vectors) {
    if (vectors.empty()) throw std::invalid_argument("aggregate_maxpool needs at least one vector");
    const Eigen::Index d = vectors.front().size();
    Vector out = vectors.front();
    for (std::size_t i = 1; i < vectors.size(); ++i) {
        if (vectors[i].size() != d) throw DimensionMismatch("maxpool vectors disagree on dimension");
        out = out.cwiseMax(vectors[i]);
    }
    return out;
}

Vector aggregate_diffconcat(const Vector& code1, const Vector& code2,
                            const std::vector<Vector>& contexts) {
    if (code1.size() != code2.size())
        throw DimensionMismatch("diffconcat code vectors disagree on dimension");
    std::vector<Vector> parts;
    parts.reserve(contexts.size() + 1);
    parts.push_back((code1 - code2).cwiseAbs());
    for (const auto& c : contexts) parts.push_back(c);
    return aggregate_concat(parts);
}

double forward_clone(const Vector& x, const HeadParams& head) {
    if (head.weights.rows() != 1 || head.weights.cols() != x.size() || head.bias.size() != 1)
        throw DimensionMismatch("clone head expects a 1 x dim(x) weight matrix");
    return stable_sigmoid(head.weights.row(0).dot(x) + head.bias[0]);
}

Vector forward_classify(const Vector& x, const HeadParams& head) {
    if (head.weights.cols() != x.size() || head.bias.size() != head.weights.rows())
        throw DimensionMismatch("classify head dimensions disagree with the input");
    Vector z = head.weights * x + head.bias;
    double zmax = z.maxCoeff();
    Vector e = (z.array() - zmax).exp();
    return e / e.sum();
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

namespace {

Eigen::Index concat_width(const TrainConfig& c) {
    Eigen::Index blocks = 1 + (c.contexts.history ? 1 : 0) + (c.contexts.callgraph ? 2 : 0);
    return blocks * c.dim + (c.contexts.age ? c.age_dim : 0);
}

// Bookkeeping carried from assembly to the age-projection backprop.
struct AgeTrace {
    // concat-style age blocks: feature offset and the scalar feature u
    std::vector<std::pair<Eigen::Index, double>> affine_blocks;
    // diff-concat age block: offset and (uA - uB)
    std::optional<std::pair<Eigen::Index, double>> diff_block;
    // max-pooling: winner-is-age mask and the winner's u per coordinate
    Vector pool_age_mask;
    Vector pool_age_u;
    bool pooled = false;
};

} // namespace

Eigen::Index Model::feature_dim_for(const TrainConfig& config) {
    switch (config.aggregation) {
    case Aggregation::concat:
        return config.task == Task::clone ? 2 * concat_width(config) : concat_width(config);
    case Aggregation::maxpool:
        return config.dim;
    case Aggregation::diffconcat:
        if (config.task != Task::clone)
            throw std::invalid_argument("diff-concat applies only to the pairwise clone task");
        return concat_width(config);
    }
    throw std::invalid_argument("unknown aggregation");
}

Model::Model(TrainConfig config, Eigen::Index feature_dim)
    : config_(std::move(config)), feature_dim_(feature_dim) {
    const Eigen::Index out = config_.task == Task::clone ? 1 : config_.classes;
    if (config_.task == Task::classify && config_.classes < 2)
        throw std::invalid_argument("classify needs at least 2 classes");
    head_.weights = Matrix::Zero(out, feature_dim_);
    head_.bias = Vector::Zero(out);
    const Eigen::Index age_dim =
        config_.aggregation == Aggregation::maxpool ? config_.dim : config_.age_dim;
    age_ = make_age_projection(age_dim, config_.seed);
}

namespace {

Vector zero_or(const std::optional<Vector>& v, Eigen::Index dim) {
    return v ? *v : Vector::Zero(dim);
}

// concat layout for one bundle; offsets are relative to the bundle start
Vector assemble_concat_bundle(const TrainConfig& cfg, const AgeProjection& age,
                              const ContextBundle& b, Eigen::Index base_offset, AgeTrace* trace) {
    std::vector<Vector> parts;
    parts.push_back(b.code);
    if (cfg.contexts.history) parts.push_back(zero_or(b.history, cfg.dim));
    if (cfg.contexts.callgraph) {
        parts.push_back(zero_or(b.caller, cfg.dim));
        parts.push_back(zero_or(b.callee, cfg.dim));
    }
    if (cfg.contexts.age) {
        if (b.age_days) {
            double u = age_feature(*b.age_days, cfg.age_max);
            parts.push_back(age.weight * u + age.bias);
            if (trace) {
                Eigen::Index off = base_offset;
                for (std::size_t i = 0; i + 1 < parts.size(); ++i)
                    off += parts[i].size();
                trace->affine_blocks.emplace_back(off, u);
            }
        } else {
            parts.push_back(Vector::Zero(cfg.age_dim));
        }
    }
    return aggregate_concat(parts);
}

void pool_members(const TrainConfig& cfg, const AgeProjection& age, const ContextBundle& b,
                  std::vector<Vector>& members, std::vector<double>& member_age_u) {
    members.push_back(b.code);
    member_age_u.push_back(std::numeric_limits<double>::quiet_NaN());
    auto push = [&](const std::optional<Vector>& v) {
        if (v) {
            members.push_back(*v);
            member_age_u.push_back(std::numeric_limits<double>::quiet_NaN());
        }
    };
    if (cfg.contexts.history) push(b.history);
    if (cfg.contexts.callgraph) {
        push(b.caller);
        push(b.callee);
    }
    if (cfg.contexts.age && b.age_days) {
        double u = age_feature(*b.age_days, cfg.age_max);
        members.push_back(age.weight * u + age.bias); // projected to the shared dim
        member_age_u.push_back(u);
    }
}

Vector assemble_pool(const TrainConfig& cfg, const AgeProjection& age,
                     const std::vector<const ContextBundle*>& bundles, AgeTrace* trace) {
    std::vector<Vector> members;
    std::vector<double> member_age_u;
    for (const ContextBundle* b : bundles) pool_members(cfg, age, *b, members, member_age_u);
    Vector out = members.front();
    std::vector<std::size_t> winner(static_cast<std::size_t>(cfg.dim), 0);
    for (std::size_t m = 1; m < members.size(); ++m) {
        if (members[m].size() != cfg.dim)
            throw DimensionMismatch("pool members disagree on dimension");
        for (Eigen::Index i = 0; i < cfg.dim; ++i) {
            if (members[m][i] > out[i]) { // first max wins on ties
                out[i] = members[m][i];
                winner[static_cast<std::size_t>(i)] = m;
            }
        }
    }
    if (trace) {
        trace->pooled = true;
        trace->pool_age_mask = Vector::Zero(cfg.dim);
        trace->pool_age_u = Vector::Zero(cfg.dim);
        for (Eigen::Index i = 0; i < cfg.dim; ++i) {
            double u = member_age_u[winner[static_cast<std::size_t>(i)]];
            if (!std::isnan(u)) {
                trace->pool_age_mask[i] = 1.0;
                trace->pool_age_u[i] = u;
            }
        }
    }
    return out;
}

Vector assemble_traced(const TrainConfig& cfg, const AgeProjection& age, const ContextBundle& b,
                       AgeTrace* trace) {
    switch (cfg.aggregation) {
    case Aggregation::concat:
        return assemble_concat_bundle(cfg, age, b, 0, trace);
    case Aggregation::maxpool:
        return assemble_pool(cfg, age, {&b}, trace);
    case Aggregation::diffconcat:
        throw std::invalid_argument("diff-concat applies only to pairs");
    }
    throw std::invalid_argument("unknown aggregation");
}

Vector assemble_traced(const TrainConfig& cfg, const AgeProjection& age, const PairExample& pair,
                       AgeTrace* trace) {
    switch (cfg.aggregation) {
    case Aggregation::concat: {
        Vector a = assemble_concat_bundle(cfg, age, pair.a, 0, trace);
        Vector b = assemble_concat_bundle(cfg, age, pair.b, a.size(), trace);
        return aggregate_concat({a, b});
    }
    case Aggregation::maxpool:
        return assemble_pool(cfg, age, {&pair.a, &pair.b}, trace);
    case Aggregation::diffconcat: {
        // every selected context mirrors the |c1 - c2| code treatment, so the
        // pair representation is swap-invariant
        std::vector<Vector> contexts;
        auto diff = [&](const std::optional<Vector>& x, const std::optional<Vector>& y) {
            return (zero_or(x, cfg.dim) - zero_or(y, cfg.dim)).cwiseAbs().eval();
        };
        if (cfg.contexts.history) contexts.push_back(diff(pair.a.history, pair.b.history));
        if (cfg.contexts.callgraph) {
            contexts.push_back(diff(pair.a.caller, pair.b.caller));
            contexts.push_back(diff(pair.a.callee, pair.b.callee));
        }
        if (cfg.contexts.age) {
            double ua = pair.a.age_days ? age_feature(*pair.a.age_days, cfg.age_max) : 0.0;
            double ub = pair.b.age_days ? age_feature(*pair.b.age_days, cfg.age_max) : 0.0;
            contexts.push_back((age.weight * (ua - ub)).cwiseAbs());
            if (trace) {
                Eigen::Index off = cfg.dim;
                for (std::size_t i = 0; i + 1 < contexts.size(); ++i) off += contexts[i].size();
                trace->diff_block = {off, ua - ub};
            }
        }
        return aggregate_diffconcat(pair.a.code, pair.b.code, contexts);
    }
    }
    throw std::invalid_argument("unknown aggregation");
}

// Routes dL/dx into the age projection parameters.
void backprop_age(const TrainConfig& cfg, const AgeProjection& age, const AgeTrace& trace,
                  const Vector& dLdx, Vector& d_weight, Vector& d_bias) {
    for (const auto& [off, u] : trace.affine_blocks) {
        d_weight += u * dLdx.segment(off, cfg.age_dim);
        d_bias += dLdx.segment(off, cfg.age_dim);
    }
    if (trace.diff_block) {
        auto [off, du] = *trace.diff_block;
        for (Eigen::Index i = 0; i < cfg.age_dim; ++i) {
            double pre = age.weight[i] * du;
            double sgn = pre > 0 ? 1.0 : pre < 0 ? -1.0 : 0.0;
            d_weight[i] += dLdx[off + i] * sgn * du;
        }
    }
    if (trace.pooled) {
        d_weight += (trace.pool_age_u.array() * dLdx.array()).matrix();
        d_bias += (trace.pool_age_mask.array() * dLdx.array()).matrix();
    }
}

} // namespace

Vector Model::assemble(const ContextBundle& bundle) const {
    return assemble_traced(config_, age_, bundle, nullptr);
}

Vector Model::assemble(const PairExample& pair) const {
    return assemble_traced(config_, age_, pair, nullptr);
}

double Model::predict_clone(const PairExample& pair) const {
    return forward_clone(assemble(pair), head_);
}

Vector Model::predict_classify(const ContextBundle& bundle) const {
    return forward_classify(assemble(bundle), head_);
}

double clone_loss_and_grad(const Model& model, const std::vector<PairExample>& batch,
                           Gradients& out) {
    const TrainConfig& cfg = model.config();
    const HeadParams& head = model.head();
    out.d_weights = Matrix::Zero(head.weights.rows(), head.weights.cols());
    out.d_bias = Vector::Zero(head.bias.size());
    out.d_age_weight = Vector::Zero(model.age_projection().dim());
    out.d_age_bias = Vector::Zero(model.age_projection().dim());

    double loss = 0;
    for (const PairExample& ex : batch) {
        AgeTrace trace;
        Vector x = assemble_traced(cfg, model.age_projection(), ex, &trace);
        double z = head.weights.row(0).dot(x) + head.bias[0];
        double y = ex.label ? 1.0 : 0.0;
        loss += softplus(z) - y * z; // binary cross-entropy on the logit
        double dz = stable_sigmoid(z) - y;
        out.d_weights.row(0) += dz * x.transpose();
        out.d_bias[0] += dz;
        if (cfg.contexts.age) {
            Vector dLdx = head.weights.row(0).transpose() * dz;
            backprop_age(cfg, model.age_projection(), trace, dLdx, out.d_age_weight,
                         out.d_age_bias);
        }
    }
    const double n = static_cast<double>(batch.size());
    out.d_weights /= n;
    out.d_bias /= n;
    out.d_age_weight /= n;
    out.d_age_bias /= n;
    return loss / n;
}

double classify_loss_and_grad(const Model& model, const std::vector<Example>& batch,
                              Gradients& out) {
    const TrainConfig& cfg = model.config();
    const HeadParams& head = model.head();
    out.d_weights = Matrix::Zero(head.weights.rows(), head.weights.cols());
    out.d_bias = Vector::Zero(head.bias.size());
    out.d_age_weight = Vector::Zero(model.age_projection().dim());
    out.d_age_bias = Vector::Zero(model.age_projection().dim());

    double loss = 0;
    for (const Example& ex : batch) {
        AgeTrace trace;
        Vector x = assemble_traced(cfg, model.age_projection(), ex.features, &trace);
        Vector z = head.weights * x + head.bias;
        double zmax = z.maxCoeff();
        double lse = zmax + std::log((z.array() - zmax).exp().sum());
        loss += lse - z[ex.label];
        Vector p = (z.array() - lse).exp();
        Vector dz = p;
        dz[ex.label] -= 1.0;
        out.d_weights += dz * x.transpose();
        out.d_bias += dz;
        if (cfg.contexts.age) {
            Vector dLdx = head.weights.transpose() * dz;
            backprop_age(cfg, model.age_projection(), trace, dLdx, out.d_age_weight,
                         out.d_age_bias);
        }
    }
    const double n = static_cast<double>(batch.size());
    out.d_weights /= n;
    out.d_bias /= n;
    out.d_age_weight /= n;
    out.d_age_bias /= n;
    return loss / n;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace {

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t& state) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = n; i > 1; --i) {
        std::uint64_t bound = i;
        std::uint64_t threshold = (~bound + 1) % bound;
        std::uint64_t r;
        do {
            r = splitmix_next(state);
        } while (r < threshold);
        std::swap(idx[i - 1], idx[r % bound]);
    }
    return idx;
}

template <typename ExampleT, typename LossFn, typename MetricFn>
TrainResult run_training(const std::vector<ExampleT>& train, const std::vector<ExampleT>& valid,
                         const TrainConfig& config, LossFn&& loss_fn, MetricFn&& metric_fn) {
    if (train.empty() || valid.empty())
        throw EmptyPartition("training requires non-empty train and valid partitions");
    TrainResult result{Model(config, Model::feature_dim_for(config)), {}, 0, 0.0};
    Model& model = result.model;
    Model best = model;
    std::uint64_t shuffle_state = config.seed ^ 0x12345678ABCDEFull;

    const std::size_t batch_size = config.batch > 0 ? static_cast<std::size_t>(config.batch) : 16;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        auto order = shuffled_indices(train.size(), shuffle_state);
        double epoch_loss = 0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size(); start += batch_size) {
            std::vector<ExampleT> batch;
            for (std::size_t i = start; i < std::min(start + batch_size, order.size()); ++i)
                batch.push_back(train[order[i]]);
            Gradients g;
            double batch_loss = loss_fn(model, batch, g);
            if (!std::isfinite(batch_loss))
                throw NonFiniteLoss("non-finite loss at epoch " + std::to_string(epoch) +
                                    ", batch starting " + std::to_string(start));
            epoch_loss += batch_loss * static_cast<double>(batch.size());
            seen += batch.size();
            model.head().weights -= config.lr * g.d_weights;
            model.head().bias -= config.lr * g.d_bias;
            if (config.contexts.age) {
                model.age_projection().weight -= config.lr * g.d_age_weight;
                model.age_projection().bias -= config.lr * g.d_age_bias;
            }
        }
        double metric = metric_fn(model, valid);
        result.log.push_back({epoch, epoch_loss / static_cast<double>(seen), metric});
        if (result.log.size() == 1 || metric > result.best_valid_metric) {
            result.best_valid_metric = metric;
            result.best_epoch = epoch;
            best = model;
        }
    }
    model = best; // checkpoint with the best validation metric
    return result;
}

} // namespace

TrainResult train_clone(const std::vector<PairExample>& train,
                        const std::vector<PairExample>& valid, const TrainConfig& config) {
    TrainConfig cfg = config;
    cfg.task = Task::clone;
    return run_training(
        train, valid, cfg,
        [](const Model& m, const std::vector<PairExample>& batch, Gradients& g) {
            return clone_loss_and_grad(m, batch, g);
        },
        [](const Model& m, const std::vector<PairExample>& v) {
            std::vector<int> pred, gold;
            for (const auto& ex : v) {
                pred.push_back(m.predict_clone(ex) > 0.5 ? 1 : 0);
                gold.push_back(ex.label);
            }
            return evalstat::prf1(pred, gold).f1;
        });
}

TrainResult train_classify(const std::vector<Example>& train, const std::vector<Example>& valid,
                           const TrainConfig& config) {
    TrainConfig cfg = config;
    cfg.task = Task::classify;
    return run_training(
        train, valid, cfg,
        [](const Model& m, const std::vector<Example>& batch, Gradients& g) {
            return classify_loss_and_grad(m, batch, g);
        },
        [&config](const Model& m, const std::vector<Example>& v) {
            std::vector<int> pred, gold;
            for (const auto& ex : v) {
                Vector p = m.predict_classify(ex.features);
                Eigen::Index arg = 0;
                p.maxCoeff(&arg);
                pred.push_back(static_cast<int>(arg));
                gold.push_back(ex.label);
            }
            return evalstat::macro_f1(pred, gold, config.classes);
        });
}

} // namespace codectx::represent
