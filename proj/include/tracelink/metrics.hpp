#pragma once

#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "tracelink/doc_vectors.hpp"
#include "tracelink/neural.hpp"

namespace tracelink {

/// All-pairs distances, row per source, column per target. Values are f32;
/// every reduction that feeds an entry accumulates in f64.
struct DistanceMatrix {
    std::vector<std::string> source_ids;
    std::vector<std::string> target_ids;
    std::vector<float> values; // row-major, n_sources x n_targets
    std::string metric_tag;

    std::size_t n_sources() const { return source_ids.size(); }
    std::size_t n_targets() const { return target_ids.size(); }
    float at(std::size_t i, std::size_t j) const { return values[i * target_ids.size() + j]; }
};

/// 1 - <x,y>/(|x||y|), in [0, 2]. Either zero norm yields the neutral 1.0.
double cosine_distance(std::span<const float> x, std::span<const float> y);

/// 1 - p where p is the network's link probability (inference mode), in [0, 1].
/// A semi-distance: symmetry and the triangle inequality are not guaranteed.
double nl_distance(const MlpModel& model, std::span<const float> diff);

struct CosineMetric {};
struct NlMetric {
    const MlpModel* model = nullptr;
};
using Metric = std::variant<CosineMetric, NlMetric>;

/// values[i][j] = metric(source i, target j); the nl metric is applied to
/// diff_vector(source, target). Rows are independent and computed on up to
/// `threads` workers.
DistanceMatrix distance_matrix(std::span<const DocumentVector> sources,
                               std::span<const DocumentVector> targets, const Metric& metric,
                               const std::string& metric_tag, unsigned threads = 1);

/// Element-wise arithmetic mean; inputs must agree on ids and order.
DistanceMatrix combine_matrices(std::span<const DistanceMatrix> matrices);

/// The k nearest targets for one source row, ascending distance, ties broken
/// by ascending target index.
std::vector<std::pair<std::string, float>> rank_targets(const DistanceMatrix& m,
                                                        std::size_t source_index, std::size_t k);

/// Binary container: magic "DMAT", u32 n_sources, u32 n_targets, the two id
/// tables (u32 length + UTF-8 bytes each), then row-major little-endian f32.
/// The metric tag is not part of the format; the loader stamps the given tag.
void save_matrix(const DistanceMatrix& m, const std::string& path);
DistanceMatrix load_matrix(const std::string& path, const std::string& metric_tag);

/// CSV export: header row "source_id,<target ids...>", one row per source.
void save_matrix_csv(const DistanceMatrix& m, const std::string& path);

} // namespace tracelink
