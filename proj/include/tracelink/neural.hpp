#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tracelink/corpus.hpp"
#include "tracelink/doc_vectors.hpp"
#include "tracelink/rng.hpp"

namespace tracelink {

/// Two-hidden-layer network on embedding differences:
/// ReLU(W1 x + b1) -> tanh(W2 . + b2) -> sigmoid(W3 . + b3).
/// The output is read as the probability that the pair is linked.
struct MlpModel {
    std::size_t input_dim = 0;
    std::size_t h1 = 0;
    std::size_t h2 = 0;
    double dropout_rate = 0.0;
    std::vector<double> W1; // h1 x input_dim, row-major
    std::vector<double> b1; // h1
    std::vector<double> W2; // h2 x h1
    std::vector<double> b2; // h2
    std::vector<double> W3; // 1 x h2
    double b3 = 0.0;
};

/// Glorot-uniform weights, zero biases, drawn from the given stream.
MlpModel init_mlp(std::size_t input_dim, std::size_t h1, std::size_t h2, double dropout_rate,
                  Rng& rng);

/// Intermediate activations of one forward pass, kept for backward.
/// Masks hold 0 or 1/(1 - dropout_rate) (inverted dropout).
struct ForwardCache {
    std::vector<double> x;
    std::vector<double> z1;    // pre-ReLU
    std::vector<double> a1;    // post-ReLU, post-mask
    std::vector<double> mask1;
    std::vector<double> a2raw; // tanh(z2) before mask
    std::vector<double> a2;    // post-mask
    std::vector<double> mask2;
    double p = 0.0;
};

/// Forward pass. With dropout_rng null this is inference: no mask, no
/// scaling. With a generator, inverted-dropout masks are applied to both
/// hidden activations. The cache is filled when given.
double mlp_forward(const MlpModel& model, std::span<const double> x,
                   ForwardCache* cache = nullptr, Rng* dropout_rng = nullptr);

/// Binary cross-entropy with the probability clamped to [1e-7, 1 - 1e-7].
double bce_loss(double p, int label);

struct Gradients {
    std::vector<double> W1;
    std::vector<double> b1;
    std::vector<double> W2;
    std::vector<double> b2;
    std::vector<double> W3;
    double b3 = 0.0;
};

/// Exact gradients of bce_loss(forward(x), label) under the cached masks.
Gradients backward(const MlpModel& model, const ForwardCache& cache, int label);

void accumulate(Gradients& sum, const Gradients& grads);
void scale(Gradients& grads, double factor);

struct TrainMode {
    bool split = false;
    double train_fraction = 0.8; // used only when split
};

struct TrainConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t epochs = 50;
    std::size_t batch_size = 64;
    std::size_t negative_ratio = 1;
    std::uint64_t seed = 0;
    TrainMode mode;
    std::size_t h1 = 256;
    std::size_t h2 = 64;
    double dropout_rate = 0.2;
};

void validate_config(const TrainConfig& config);

struct AdamState {
    Gradients m;
    Gradients v;
    std::uint64_t t = 0;
};

AdamState make_adam_state(const MlpModel& model);

/// One Adam update: m/v moving averages, bias correction, then
/// theta -= lr * mhat / (sqrt(vhat) + eps).
void adam_step(MlpModel& model, const Gradients& grads, AdamState& state,
               const TrainConfig& config);

struct TrainingPair {
    std::vector<float> diff; // source - target document vectors
    int label = 0;           // 1 iff linked
};

using LinkSet = std::set<std::pair<std::string, std::string>>;

/// Deterministic split of the gold links for split-mode runs.
std::pair<LinkSet, LinkSet> split_links(const LinkSet& links, double train_fraction,
                                        std::uint64_t seed);

/// One positive pair per link plus negative_ratio uniformly sampled unlinked
/// targets per positive, all with the same source. In split mode only the
/// training partition contributes.
std::vector<TrainingPair> sample_pairs(const TaskDataset& dataset,
                                       const DocumentVectorMap& vectors,
                                       const TrainConfig& config);

struct TrainResult {
    MlpModel model;
    std::vector<double> epoch_loss; // mean batch loss per epoch
};

/// Seeded-shuffled mini-batch training; fully deterministic for a fixed
/// (seed, config, inputs) triple.
TrainResult train(const TaskDataset& dataset, const DocumentVectorMap& vectors,
                  const TrainConfig& config);

/// JSON schema: {"input_dim","h1","h2","dropout_rate","W1","b1","W2","b2","W3","b3"}
/// with row-major nested arrays; round-trips within 1e-9.
void save_model(const MlpModel& model, const std::string& path);
MlpModel load_model(const std::string& path);

} // namespace tracelink
