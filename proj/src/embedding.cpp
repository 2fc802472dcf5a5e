#include "tracelink/embedding.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "tracelink/error.hpp"

namespace tracelink {

namespace {

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
}

// Splits a line on single spaces/tabs, skipping repeated separators.
std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (pos < line.size()) {
        while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) {
            ++pos;
        }
        const std::size_t start = pos;
        while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t') {
            ++pos;
        }
        if (pos > start) {
            fields.push_back(line.substr(start, pos - start));
        }
    }
    return fields;
}

bool parse_u64(std::string_view text, std::uint64_t& out) {
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size();
}

bool parse_float(std::string_view text, float& out) {
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size();
}

} // namespace

std::optional<std::span<const float>> WordEmbeddingModel::lookup(std::string_view token) const {
    const auto it = index_.find(std::string(token));
    if (it == index_.end()) {
        return std::nullopt;
    }
    return vector_at(it->second);
}

std::span<const float> WordEmbeddingModel::vector_at(std::size_t index) const {
    return std::span<const float>(data_.data() + index * dim_, dim_);
}

bool WordEmbeddingModel::insert(std::string token, std::span<const float> vector) {
    if (vector.size() != dim_) {
        throw Error(ErrorKind::DimensionMismatch,
                    "vector for '" + token + "' has " + std::to_string(vector.size()) +
                        " entries, model dimension is " + std::to_string(dim_));
    }
    const auto [it, inserted] =
        index_.emplace(token, static_cast<std::uint32_t>(tokens_.size()));
    if (!inserted) {
        ++duplicate_count_;
        return false;
    }
    tokens_.push_back(std::move(token));
    data_.insert(data_.end(), vector.begin(), vector.end());
    return true;
}

WordEmbeddingModel load_text_embeddings(const std::string& path, std::string name) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::IoError, "cannot open embedding file '" + path + "'");
    }
    if (name.empty()) {
        name = std::filesystem::path(path).stem().string();
    }

    std::string line;
    if (!std::getline(in, line)) {
        throw Error(ErrorKind::MalformedHeader, path + ": empty file");
    }
    strip_cr(line);
    const auto header = split_fields(line);
    std::uint64_t vocab_count = 0;
    std::uint64_t dim = 0;
    if (header.size() != 2 || !parse_u64(header[0], vocab_count) ||
        !parse_u64(header[1], dim) || vocab_count == 0 || dim == 0) {
        throw Error(ErrorKind::MalformedHeader,
                    path + ": first line must be '<vocab_count> <dim>', got '" + line + "'");
    }

    WordEmbeddingModel model(std::move(name), static_cast<std::size_t>(dim));
    std::vector<float> row(dim);
    std::size_t line_no = 1;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) {
            continue;
        }
        const auto fields = split_fields(line);
        if (fields.size() != dim + 1) {
            throw Error(ErrorKind::DimensionMismatch,
                        path + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(dim) + " values, got " +
                            std::to_string(fields.empty() ? 0 : fields.size() - 1));
        }
        for (std::size_t i = 0; i < dim; ++i) {
            if (!parse_float(fields[i + 1], row[i]) || !std::isfinite(row[i])) {
                throw Error(ErrorKind::MalformedValue,
                            path + ":" + std::to_string(line_no) + ": bad value '" +
                                std::string(fields[i + 1]) + "'");
            }
        }
        model.insert(std::string(fields[0]), row);
        ++rows;
    }
    if (rows != vocab_count) {
        throw Error(ErrorKind::CountMismatch,
                    path + ": header declares " + std::to_string(vocab_count) +
                        " rows, file has " + std::to_string(rows));
    }
    return model;
}

void save_text_embeddings(const WordEmbeddingModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::IoError, "cannot write embedding file '" + path + "'");
    }
    out << model.size() << ' ' << model.dim() << '\n';
    char buf[64];
    for (std::size_t i = 0; i < model.size(); ++i) {
        out << model.tokens()[i];
        for (const float v : model.vector_at(i)) {
            const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
            (void)ec;
            out << ' ';
            out.write(buf, end - buf);
        }
        out << '\n';
    }
    if (!out) {
        throw Error(ErrorKind::IoError, "failed writing '" + path + "'");
    }
}

} // namespace tracelink
