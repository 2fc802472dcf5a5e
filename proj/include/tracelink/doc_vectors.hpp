#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tracelink/embedding.hpp"

namespace tracelink {

/// Averaged word-embedding vector of one artifact, with coverage counters.
/// An all-OOV or empty document gets the zero vector.
struct DocumentVector {
    std::string artifact_id;
    std::string model_name;
    std::vector<float> vector;
    std::size_t token_count = 0;
    std::size_t oov_count = 0;
};

/// Vectors keyed by artifact id, one map per role. Ids may repeat across
/// roles (the summary-to-description task uses the ticket id on both sides).
struct DocumentVectorMap {
    std::unordered_map<std::string, DocumentVector> sources;
    std::unordered_map<std::string, DocumentVector> targets;
};

/// Arithmetic mean (with multiplicity) of the in-vocabulary token embeddings.
/// Accumulates in double, stores float.
DocumentVector embed_document(const WordEmbeddingModel& model, const std::string& artifact_id,
                              std::span<const std::string> tokens);

/// source.vector - target.vector, in that fixed order.
std::vector<float> diff_vector(const DocumentVector& source, const DocumentVector& target);

/// Binary container: magic "DVEC", u32 dim, u32 count, then per record
/// u32 id length, id bytes, dim little-endian f32. Coverage counters are not
/// persisted; loaded records carry placeholder counts.
void save_document_vectors(std::span<const DocumentVector> vectors, const std::string& path);
std::vector<DocumentVector> load_document_vectors(const std::string& path,
                                                  const std::string& model_name);

} // namespace tracelink
