#include "tracelink/neural.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "tracelink/error.hpp"

namespace tracelink {

namespace {

using nlohmann::json;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// out = W x + b, W row-major rows x cols
void affine(std::span<const double> W, std::span<const double> b, std::size_t rows,
            std::size_t cols, std::span<const double> x, std::vector<double>& out) {
    out.resize(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = b[r];
        const double* w = W.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) {
            acc += w[c] * x[c];
        }
        out[r] = acc;
    }
}

void fill_glorot(std::vector<double>& W, std::size_t fan_out, std::size_t fan_in, Rng& rng) {
    W.resize(fan_out * fan_in);
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& w : W) {
        w = rng.uniform(-limit, limit);
    }
}

void draw_mask(std::vector<double>& mask, std::size_t n, double rate, Rng* rng) {
    mask.assign(n, 1.0);
    if (rng == nullptr) {
        return;
    }
    const double keep = 1.0 - rate;
    for (auto& m : mask) {
        m = rng->uniform() < rate ? 0.0 : 1.0 / keep;
    }
}

} // namespace

MlpModel init_mlp(std::size_t input_dim, std::size_t h1, std::size_t h2, double dropout_rate,
                  Rng& rng) {
    if (input_dim == 0 || h1 == 0 || h2 == 0) {
        throw Error(ErrorKind::InvalidConfig, "layer sizes must be positive");
    }
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
        throw Error(ErrorKind::InvalidConfig, "dropout_rate must be in [0, 1)");
    }
    MlpModel model;
    model.input_dim = input_dim;
    model.h1 = h1;
    model.h2 = h2;
    model.dropout_rate = dropout_rate;
    fill_glorot(model.W1, h1, input_dim, rng);
    model.b1.assign(h1, 0.0);
    fill_glorot(model.W2, h2, h1, rng);
    model.b2.assign(h2, 0.0);
    fill_glorot(model.W3, 1, h2, rng);
    model.b3 = 0.0;
    return model;
}

double mlp_forward(const MlpModel& model, std::span<const double> x, ForwardCache* cache,
                   Rng* dropout_rng) {
    if (x.size() != model.input_dim) {
        throw Error(ErrorKind::DimensionMismatch,
                    "input has " + std::to_string(x.size()) + " entries, model expects " +
                        std::to_string(model.input_dim));
    }
    ForwardCache local;
    ForwardCache& c = cache ? *cache : local;
    c.x.assign(x.begin(), x.end());

    affine(model.W1, model.b1, model.h1, model.input_dim, x, c.z1);
    draw_mask(c.mask1, model.h1, model.dropout_rate, dropout_rng);
    c.a1.resize(model.h1);
    for (std::size_t i = 0; i < model.h1; ++i) {
        c.a1[i] = std::max(c.z1[i], 0.0) * c.mask1[i];
    }

    std::vector<double> z2;
    affine(model.W2, model.b2, model.h2, model.h1, c.a1, z2);
    draw_mask(c.mask2, model.h2, model.dropout_rate, dropout_rng);
    c.a2raw.resize(model.h2);
    c.a2.resize(model.h2);
    for (std::size_t i = 0; i < model.h2; ++i) {
        c.a2raw[i] = std::tanh(z2[i]);
        c.a2[i] = c.a2raw[i] * c.mask2[i];
    }

    double z3 = model.b3;
    for (std::size_t i = 0; i < model.h2; ++i) {
        z3 += model.W3[i] * c.a2[i];
    }
    c.p = sigmoid(z3);
    return c.p;
}

double bce_loss(double p, int label) {
    const double pc = std::clamp(p, 1e-7, 1.0 - 1e-7);
    return label == 1 ? -std::log(pc) : -std::log(1.0 - pc);
}

Gradients backward(const MlpModel& model, const ForwardCache& cache, int label) {
    if (cache.x.size() != model.input_dim || cache.z1.size() != model.h1 ||
        cache.a2.size() != model.h2 || cache.mask1.size() != model.h1 ||
        cache.mask2.size() != model.h2) {
        throw Error(ErrorKind::StaleCache, "cache shapes do not match the model");
    }
    Gradients g;
    const double dz3 = cache.p - static_cast<double>(label);

    g.W3.resize(model.h2);
    for (std::size_t i = 0; i < model.h2; ++i) {
        g.W3[i] = dz3 * cache.a2[i];
    }
    g.b3 = dz3;

    // through mask2 and tanh
    std::vector<double> dz2(model.h2);
    for (std::size_t i = 0; i < model.h2; ++i) {
        const double da2raw = model.W3[i] * dz3 * cache.mask2[i];
        dz2[i] = da2raw * (1.0 - cache.a2raw[i] * cache.a2raw[i]);
    }
    g.W2.resize(model.h2 * model.h1);
    g.b2.resize(model.h2);
    for (std::size_t r = 0; r < model.h2; ++r) {
        for (std::size_t c = 0; c < model.h1; ++c) {
            g.W2[r * model.h1 + c] = dz2[r] * cache.a1[c];
        }
        g.b2[r] = dz2[r];
    }

    // through mask1 and ReLU
    std::vector<double> dz1(model.h1, 0.0);
    for (std::size_t c = 0; c < model.h1; ++c) {
        double da1 = 0.0;
        for (std::size_t r = 0; r < model.h2; ++r) {
            da1 += model.W2[r * model.h1 + c] * dz2[r];
        }
        dz1[c] = cache.z1[c] > 0.0 ? da1 * cache.mask1[c] : 0.0;
    }
    g.W1.resize(model.h1 * model.input_dim);
    g.b1.resize(model.h1);
    for (std::size_t r = 0; r < model.h1; ++r) {
        for (std::size_t c = 0; c < model.input_dim; ++c) {
            g.W1[r * model.input_dim + c] = dz1[r] * cache.x[c];
        }
        g.b1[r] = dz1[r];
    }
    return g;
}

void accumulate(Gradients& sum, const Gradients& grads) {
    if (sum.W1.empty()) {
        sum = grads;
        return;
    }
    const auto add = [](std::vector<double>& a, const std::vector<double>& b) {
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] += b[i];
        }
    };
    add(sum.W1, grads.W1);
    add(sum.b1, grads.b1);
    add(sum.W2, grads.W2);
    add(sum.b2, grads.b2);
    add(sum.W3, grads.W3);
    sum.b3 += grads.b3;
}

void scale(Gradients& grads, double factor) {
    const auto mul = [factor](std::vector<double>& a) {
        for (auto& v : a) {
            v *= factor;
        }
    };
    mul(grads.W1);
    mul(grads.b1);
    mul(grads.W2);
    mul(grads.b2);
    mul(grads.W3);
    grads.b3 *= factor;
}

void validate_config(const TrainConfig& config) {
    if (config.learning_rate <= 0.0) {
        throw Error(ErrorKind::InvalidConfig, "learning_rate must be positive");
    }
    if (config.beta1 <= 0.0 || config.beta1 >= 1.0 || config.beta2 <= 0.0 || config.beta2 >= 1.0) {
        throw Error(ErrorKind::InvalidConfig, "beta1 and beta2 must be in (0, 1)");
    }
    if (config.batch_size == 0 || config.negative_ratio == 0) {
        throw Error(ErrorKind::InvalidConfig, "batch_size and negative_ratio must be positive");
    }
    if (config.dropout_rate < 0.0 || config.dropout_rate >= 1.0) {
        throw Error(ErrorKind::InvalidConfig, "dropout_rate must be in [0, 1)");
    }
    if (config.mode.split &&
        (config.mode.train_fraction <= 0.0 || config.mode.train_fraction >= 1.0)) {
        throw Error(ErrorKind::InvalidConfig, "train_fraction must be in (0, 1)");
    }
}

AdamState make_adam_state(const MlpModel& model) {
    AdamState state;
    state.m.W1.assign(model.W1.size(), 0.0);
    state.m.b1.assign(model.b1.size(), 0.0);
    state.m.W2.assign(model.W2.size(), 0.0);
    state.m.b2.assign(model.b2.size(), 0.0);
    state.m.W3.assign(model.W3.size(), 0.0);
    state.m.b3 = 0.0;
    state.v = state.m;
    state.t = 0;
    return state;
}

void adam_step(MlpModel& model, const Gradients& grads, AdamState& state,
               const TrainConfig& config) {
    state.t += 1;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
    const auto update = [&](std::vector<double>& theta, const std::vector<double>& g,
                            std::vector<double>& m, std::vector<double>& v) {
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
            v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            theta[i] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.epsilon);
        }
    };
    update(model.W1, grads.W1, state.m.W1, state.v.W1);
    update(model.b1, grads.b1, state.m.b1, state.v.b1);
    update(model.W2, grads.W2, state.m.W2, state.v.W2);
    update(model.b2, grads.b2, state.m.b2, state.v.b2);
    update(model.W3, grads.W3, state.m.W3, state.v.W3);
    state.m.b3 = config.beta1 * state.m.b3 + (1.0 - config.beta1) * grads.b3;
    state.v.b3 = config.beta2 * state.v.b3 + (1.0 - config.beta2) * grads.b3 * grads.b3;
    model.b3 -= config.learning_rate * (state.m.b3 / bc1) / (std::sqrt(state.v.b3 / bc2) + config.epsilon);
}

std::pair<LinkSet, LinkSet> split_links(const LinkSet& links, double train_fraction,
                                        std::uint64_t seed) {
    if (train_fraction <= 0.0 || train_fraction >= 1.0) {
        throw Error(ErrorKind::InvalidConfig, "train_fraction must be in (0, 1)");
    }
    std::vector<std::pair<std::string, std::string>> ordered(links.begin(), links.end());
    Rng rng = derive_rng(seed, "link-split");
    rng.shuffle(ordered);
    std::size_t train_count = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(ordered.size())));
    train_count = std::clamp<std::size_t>(train_count, 1, ordered.size() > 1 ? ordered.size() - 1 : 1);
    LinkSet train_set(ordered.begin(), ordered.begin() + static_cast<std::ptrdiff_t>(train_count));
    LinkSet eval_set(ordered.begin() + static_cast<std::ptrdiff_t>(train_count), ordered.end());
    return {std::move(train_set), std::move(eval_set)};
}

std::vector<TrainingPair> sample_pairs(const TaskDataset& dataset,
                                       const DocumentVectorMap& vectors,
                                       const TrainConfig& config) {
    const auto vector_of = [](const std::unordered_map<std::string, DocumentVector>& side,
                              const std::string& id) -> const DocumentVector& {
        const auto it = side.find(id);
        if (it == side.end()) {
            throw Error(ErrorKind::MissingId, "no document vector for '" + id + "'");
        }
        return it->second;
    };

    LinkSet active = dataset.links;
    if (config.mode.split) {
        active = split_links(dataset.links, config.mode.train_fraction, config.seed).first;
    }

    // linked target indices per source, against the dataset's target order
    std::unordered_map<std::string, std::size_t> target_index;
    for (std::size_t j = 0; j < dataset.targets.size(); ++j) {
        target_index.emplace(dataset.targets[j].id, j);
    }
    std::unordered_map<std::string, std::set<std::size_t>> linked;
    for (const auto& [src, tgt] : dataset.links) {
        const auto it = target_index.find(tgt);
        if (it != target_index.end()) {
            linked[src].insert(it->second);
        }
    }

    Rng rng = derive_rng(config.seed, "negative-sampling");
    std::vector<TrainingPair> pairs;
    pairs.reserve(active.size() * (1 + config.negative_ratio));
    for (const auto& [src, tgt] : active) {
        const DocumentVector& source_vec = vector_of(vectors.sources, src);
        pairs.push_back({diff_vector(source_vec, vector_of(vectors.targets, tgt)), 1});
        const auto& taken = linked[src];
        if (taken.size() >= dataset.targets.size()) {
            throw Error(ErrorKind::NoNegativesAvailable,
                        "source '" + src + "' is linked to every target");
        }
        for (std::size_t k = 0; k < config.negative_ratio; ++k) {
            std::size_t j = 0;
            do {
                j = static_cast<std::size_t>(rng.uniform_index(dataset.targets.size()));
            } while (taken.count(j));
            pairs.push_back(
                {diff_vector(source_vec, vector_of(vectors.targets, dataset.targets[j].id)), 0});
        }
    }
    return pairs;
}

TrainResult train(const TaskDataset& dataset, const DocumentVectorMap& vectors,
                  const TrainConfig& config) {
    validate_config(config);
    if (dataset.sources.empty() || dataset.targets.empty() || dataset.links.empty()) {
        throw Error(ErrorKind::EmptyDataset, "cannot train on an empty dataset");
    }
    const auto first_vec = vectors.sources.find(dataset.sources.front().id);
    if (first_vec == vectors.sources.end()) {
        throw Error(ErrorKind::MissingId,
                    "no document vector for '" + dataset.sources.front().id + "'");
    }
    const std::size_t input_dim = first_vec->second.vector.size();

    Rng init_rng = derive_rng(config.seed, "mlp-init");
    TrainResult result;
    result.model = init_mlp(input_dim, config.h1, config.h2, config.dropout_rate, init_rng);
    if (config.epochs == 0) {
        return result;
    }

    std::vector<TrainingPair> pairs = sample_pairs(dataset, vectors, config);
    if (pairs.empty()) {
        throw Error(ErrorKind::EmptyDataset, "no training pairs sampled");
    }

    AdamState state = make_adam_state(result.model);
    Rng shuffle_rng = derive_rng(config.seed, "batch-shuffle");
    Rng dropout_rng = derive_rng(config.seed, "dropout");

    std::vector<std::size_t> order(pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::vector<double> x;
    ForwardCache cache;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t batch_count = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            Gradients batch_grads;
            double batch_loss = 0.0;
            for (std::size_t i = start; i < end; ++i) {
                const TrainingPair& pair = pairs[order[i]];
                x.assign(pair.diff.begin(), pair.diff.end());
                const double p = mlp_forward(result.model, x, &cache, &dropout_rng);
                batch_loss += bce_loss(p, pair.label);
                accumulate(batch_grads, backward(result.model, cache, pair.label));
            }
            const double inv = 1.0 / static_cast<double>(end - start);
            scale(batch_grads, inv);
            adam_step(result.model, batch_grads, state, config);
            loss_sum += batch_loss * inv;
            ++batch_count;
        }
        result.epoch_loss.push_back(loss_sum / static_cast<double>(batch_count));
    }
    return result;
}

namespace {

json matrix_to_json(const std::vector<double>& data, std::size_t rows, std::size_t cols) {
    json out = json::array();
    for (std::size_t r = 0; r < rows; ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < cols; ++c) {
            row.push_back(data[r * cols + c]);
        }
        out.push_back(std::move(row));
    }
    return out;
}

std::vector<double> matrix_from_json(const json& value, std::size_t rows, std::size_t cols,
                                     const char* name) {
    if (!value.is_array() || value.size() != rows) {
        throw Error(ErrorKind::ShapeMismatch,
                    std::string(name) + " must have " + std::to_string(rows) + " rows");
    }
    std::vector<double> data;
    data.reserve(rows * cols);
    for (const auto& row : value) {
        if (!row.is_array() || row.size() != cols) {
            throw Error(ErrorKind::ShapeMismatch,
                        std::string(name) + " rows must have " + std::to_string(cols) + " entries");
        }
        for (const auto& v : row) {
            if (!v.is_number()) {
                throw Error(ErrorKind::MalformedModelFile,
                            std::string(name) + " contains a non-numeric entry");
            }
            const double d = v.get<double>();
            if (!std::isfinite(d)) {
                throw Error(ErrorKind::MalformedModelFile,
                            std::string(name) + " contains a non-finite entry");
            }
            data.push_back(d);
        }
    }
    return data;
}

std::vector<double> vector_from_json(const json& value, std::size_t n, const char* name) {
    if (!value.is_array() || value.size() != n) {
        throw Error(ErrorKind::ShapeMismatch,
                    std::string(name) + " must have " + std::to_string(n) + " entries");
    }
    std::vector<double> data;
    data.reserve(n);
    for (const auto& v : value) {
        if (!v.is_number() || !std::isfinite(v.get<double>())) {
            throw Error(ErrorKind::MalformedModelFile,
                        std::string(name) + " contains a bad entry");
        }
        data.push_back(v.get<double>());
    }
    return data;
}

} // namespace

void save_model(const MlpModel& model, const std::string& path) {
    json doc;
    doc["input_dim"] = model.input_dim;
    doc["h1"] = model.h1;
    doc["h2"] = model.h2;
    doc["dropout_rate"] = model.dropout_rate;
    doc["W1"] = matrix_to_json(model.W1, model.h1, model.input_dim);
    doc["b1"] = model.b1;
    doc["W2"] = matrix_to_json(model.W2, model.h2, model.h1);
    doc["b2"] = model.b2;
    doc["W3"] = matrix_to_json(model.W3, 1, model.h2);
    doc["b3"] = model.b3;
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::IoError, "cannot write '" + path + "'");
    }
    out << doc.dump(2) << '\n';
    if (!out) {
        throw Error(ErrorKind::IoError, "failed writing '" + path + "'");
    }
}

MlpModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
    }
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw Error(ErrorKind::MalformedModelFile, path + ": not a JSON object");
    }
    for (const char* key : {"input_dim", "h1", "h2", "dropout_rate", "W1", "b1", "W2", "b2", "W3", "b3"}) {
        if (!doc.contains(key)) {
            throw Error(ErrorKind::MalformedModelFile, path + ": missing field '" + key + "'");
        }
    }
    MlpModel model;
    if (!doc["input_dim"].is_number_unsigned() || !doc["h1"].is_number_unsigned() ||
        !doc["h2"].is_number_unsigned() || !doc["dropout_rate"].is_number()) {
        throw Error(ErrorKind::MalformedModelFile, path + ": bad dimension fields");
    }
    model.input_dim = doc["input_dim"].get<std::size_t>();
    model.h1 = doc["h1"].get<std::size_t>();
    model.h2 = doc["h2"].get<std::size_t>();
    model.dropout_rate = doc["dropout_rate"].get<double>();
    if (model.input_dim == 0 || model.h1 == 0 || model.h2 == 0 || model.dropout_rate < 0.0 ||
        model.dropout_rate >= 1.0) {
        throw Error(ErrorKind::MalformedModelFile, path + ": invalid dimensions");
    }
    model.W1 = matrix_from_json(doc["W1"], model.h1, model.input_dim, "W1");
    model.b1 = vector_from_json(doc["b1"], model.h1, "b1");
    model.W2 = matrix_from_json(doc["W2"], model.h2, model.h1, "W2");
    model.b2 = vector_from_json(doc["b2"], model.h2, "b2");
    model.W3 = matrix_from_json(doc["W3"], 1, model.h2, "W3");
    if (!doc["b3"].is_number() || !std::isfinite(doc["b3"].get<double>())) {
        throw Error(ErrorKind::MalformedModelFile, path + ": bad b3");
    }
    model.b3 = doc["b3"].get<double>();
    return model;
}

} // namespace tracelink
