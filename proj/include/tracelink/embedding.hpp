#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tracelink {

/// Pretrained word-embedding model, immutable after load. Vectors are stored
/// in one flat row-major block; insertion order is preserved for
/// re-serialization.
class WordEmbeddingModel {
public:
    WordEmbeddingModel(std::string name, std::size_t dim)
        : name_(std::move(name)), dim_(dim) {}

    const std::string& name() const { return name_; }
    std::size_t dim() const { return dim_; }
    std::size_t size() const { return tokens_.size(); }
    std::size_t duplicate_count() const { return duplicate_count_; }

    /// Exact-match lookup; absent tokens yield nullopt, never a default vector.
    std::optional<std::span<const float>> lookup(std::string_view token) const;

    /// Returns false iff the token was already present (first wins).
    bool insert(std::string token, std::span<const float> vector);

    const std::vector<std::string>& tokens() const { return tokens_; }
    std::span<const float> vector_at(std::size_t index) const;

private:
    std::string name_;
    std::size_t dim_;
    std::vector<std::string> tokens_;
    std::vector<float> data_;
    std::unordered_map<std::string, std::uint32_t> index_;
    std::size_t duplicate_count_ = 0;

    friend WordEmbeddingModel load_text_embeddings(const std::string&, std::string);
};

/// Load a model in word2vec text format: first line "<vocab_count> <dim>",
/// then one "<token> <dim reals>" row per word. UTF-8, Unix or Windows line
/// endings. Duplicate tokens keep the first occurrence and are counted.
/// The model name defaults to the file stem.
WordEmbeddingModel load_text_embeddings(const std::string& path, std::string name = "");

/// Write the model back in word2vec text format, vocabulary in load order.
void save_text_embeddings(const WordEmbeddingModel& model, const std::string& path);

} // namespace tracelink
