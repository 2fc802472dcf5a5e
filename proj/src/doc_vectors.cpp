#include "tracelink/doc_vectors.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "tracelink/error.hpp"

namespace tracelink {

DocumentVector embed_document(const WordEmbeddingModel& model, const std::string& artifact_id,
                              std::span<const std::string> tokens) {
    DocumentVector doc;
    doc.artifact_id = artifact_id;
    doc.model_name = model.name();
    doc.token_count = tokens.size();

    std::vector<double> sum(model.dim(), 0.0);
    std::size_t hits = 0;
    for (const auto& token : tokens) {
        const auto vec = model.lookup(token);
        if (!vec) {
            ++doc.oov_count;
            continue;
        }
        for (std::size_t i = 0; i < sum.size(); ++i) {
            sum[i] += (*vec)[i];
        }
        ++hits;
    }

    doc.vector.assign(model.dim(), 0.0f);
    if (hits > 0) {
        for (std::size_t i = 0; i < sum.size(); ++i) {
            doc.vector[i] = static_cast<float>(sum[i] / static_cast<double>(hits));
        }
    }
    return doc;
}

std::vector<float> diff_vector(const DocumentVector& source, const DocumentVector& target) {
    if (source.model_name != target.model_name) {
        throw Error(ErrorKind::ModelMismatch,
                    "'" + source.artifact_id + "' uses model '" + source.model_name +
                        "', '" + target.artifact_id + "' uses '" + target.model_name + "'");
    }
    if (source.vector.size() != target.vector.size()) {
        throw Error(ErrorKind::ModelMismatch,
                    "dimension " + std::to_string(source.vector.size()) + " vs " +
                        std::to_string(target.vector.size()));
    }
    std::vector<float> diff(source.vector.size());
    for (std::size_t i = 0; i < diff.size(); ++i) {
        diff[i] = source.vector[i] - target.vector[i];
    }
    return diff;
}

namespace {

constexpr char kMagic[4] = {'D', 'V', 'E', 'C'};

void write_u32(std::ostream& out, std::uint32_t value) {
    unsigned char bytes[4] = {static_cast<unsigned char>(value & 0xff),
                              static_cast<unsigned char>((value >> 8) & 0xff),
                              static_cast<unsigned char>((value >> 16) & 0xff),
                              static_cast<unsigned char>((value >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

bool read_u32(std::istream& in, std::uint32_t& value) {
    unsigned char bytes[4];
    if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
        return false;
    }
    value = static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
            (static_cast<std::uint32_t>(bytes[2]) << 16) |
            (static_cast<std::uint32_t>(bytes[3]) << 24);
    return true;
}

void write_f32(std::ostream& out, float value) {
    std::uint32_t bits;
    std::memcpy(&bits, &value, 4);
    write_u32(out, bits);
}

bool read_f32(std::istream& in, float& value) {
    std::uint32_t bits;
    if (!read_u32(in, bits)) {
        return false;
    }
    std::memcpy(&value, &bits, 4);
    return true;
}

} // namespace

void save_document_vectors(std::span<const DocumentVector> vectors, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::IoError, "cannot write '" + path + "'");
    }
    const std::uint32_t dim = vectors.empty() ? 0u : static_cast<std::uint32_t>(vectors[0].vector.size());
    out.write(kMagic, 4);
    write_u32(out, dim);
    write_u32(out, static_cast<std::uint32_t>(vectors.size()));
    for (const auto& doc : vectors) {
        if (doc.vector.size() != dim) {
            throw Error(ErrorKind::DimensionMismatch,
                        "'" + doc.artifact_id + "' has dimension " +
                            std::to_string(doc.vector.size()) + ", expected " + std::to_string(dim));
        }
        write_u32(out, static_cast<std::uint32_t>(doc.artifact_id.size()));
        out.write(doc.artifact_id.data(), static_cast<std::streamsize>(doc.artifact_id.size()));
        for (const float v : doc.vector) {
            write_f32(out, v);
        }
    }
    if (!out) {
        throw Error(ErrorKind::IoError, "failed writing '" + path + "'");
    }
}

std::vector<DocumentVector> load_document_vectors(const std::string& path,
                                                  const std::string& model_name) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
    }
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
        throw Error(ErrorKind::MalformedHeader, path + ": not a DVEC file");
    }
    std::uint32_t dim = 0;
    std::uint32_t count = 0;
    if (!read_u32(in, dim) || !read_u32(in, count)) {
        throw Error(ErrorKind::MalformedHeader, path + ": truncated header");
    }
    std::vector<DocumentVector> vectors;
    vectors.reserve(count);
    for (std::uint32_t r = 0; r < count; ++r) {
        std::uint32_t id_len = 0;
        if (!read_u32(in, id_len)) {
            throw Error(ErrorKind::MalformedRecord, path + ": truncated record " + std::to_string(r));
        }
        DocumentVector doc;
        doc.artifact_id.resize(id_len);
        if (id_len > 0 && !in.read(doc.artifact_id.data(), id_len)) {
            throw Error(ErrorKind::MalformedRecord, path + ": truncated id in record " + std::to_string(r));
        }
        doc.model_name = model_name;
        doc.vector.resize(dim);
        for (std::uint32_t i = 0; i < dim; ++i) {
            if (!read_f32(in, doc.vector[i])) {
                throw Error(ErrorKind::MalformedRecord,
                            path + ": truncated vector in record " + std::to_string(r));
            }
        }
        const bool zero = std::all_of(doc.vector.begin(), doc.vector.end(),
                                      [](float v) { return v == 0.0f; });
        doc.token_count = zero ? 0 : 1; // coverage stats are not persisted
        doc.oov_count = 0;
        vectors.push_back(std::move(doc));
    }
    return vectors;
}

} // namespace tracelink
