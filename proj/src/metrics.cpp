#include "tracelink/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>

#include "tracelink/error.hpp"
#include "tracelink/parallel.hpp"

namespace tracelink {

double cosine_distance(std::span<const float> x, std::span<const float> y) {
    if (x.size() != y.size()) {
        throw Error(ErrorKind::LengthMismatch,
                    std::to_string(x.size()) + " vs " + std::to_string(y.size()));
    }
    double dot = 0.0;
    double nx = 0.0;
    double ny = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double a = x[i];
        const double b = y[i];
        dot += a * b;
        nx += a * a;
        ny += b * b;
    }
    if (nx == 0.0 || ny == 0.0) {
        return 1.0;
    }
    // clamp the similarity so rounding can never push the distance out of [0, 2]
    const double sim = std::clamp(dot / (std::sqrt(nx) * std::sqrt(ny)), -1.0, 1.0);
    return 1.0 - sim;
}

double nl_distance(const MlpModel& model, std::span<const float> diff) {
    if (diff.size() != model.input_dim) {
        throw Error(ErrorKind::DimensionMismatch,
                    "diff has " + std::to_string(diff.size()) + " entries, model expects " +
                        std::to_string(model.input_dim));
    }
    std::vector<double> x(diff.begin(), diff.end());
    return 1.0 - mlp_forward(model, x);
}

DistanceMatrix distance_matrix(std::span<const DocumentVector> sources,
                               std::span<const DocumentVector> targets, const Metric& metric,
                               const std::string& metric_tag, unsigned threads) {
    const auto check_model = [&](const DocumentVector& doc, const std::string& expect) {
        if (doc.model_name != expect) {
            throw Error(ErrorKind::ModelMismatch,
                        "'" + doc.artifact_id + "' uses model '" + doc.model_name +
                            "', expected '" + expect + "'");
        }
    };
    if (!sources.empty()) {
        const std::string& model_name = sources[0].model_name;
        for (const auto& d : sources) check_model(d, model_name);
        for (const auto& d : targets) check_model(d, model_name);
    }

    DistanceMatrix m;
    m.metric_tag = metric_tag;
    m.source_ids.reserve(sources.size());
    for (const auto& d : sources) m.source_ids.push_back(d.artifact_id);
    m.target_ids.reserve(targets.size());
    for (const auto& d : targets) m.target_ids.push_back(d.artifact_id);
    m.values.resize(sources.size() * targets.size());

    parallel_for(sources.size(), threads, [&](std::size_t i) {
        float* row = m.values.data() + i * targets.size();
        for (std::size_t j = 0; j < targets.size(); ++j) {
            try {
                if (std::holds_alternative<CosineMetric>(metric)) {
                    row[j] = static_cast<float>(
                        cosine_distance(sources[i].vector, targets[j].vector));
                } else {
                    const auto& nl = std::get<NlMetric>(metric);
                    row[j] = static_cast<float>(
                        nl_distance(*nl.model, diff_vector(sources[i], targets[j])));
                }
            } catch (const Error& e) {
                throw Error(e.kind(), "at pair (" + std::to_string(i) + "," + std::to_string(j) +
                                          ") = ('" + sources[i].artifact_id + "','" +
                                          targets[j].artifact_id + "'): " + e.what());
            }
        }
    });
    return m;
}

DistanceMatrix combine_matrices(std::span<const DistanceMatrix> matrices) {
    if (matrices.empty()) {
        throw Error(ErrorKind::EmptyDataset, "nothing to combine");
    }
    const DistanceMatrix& first = matrices[0];
    for (const auto& m : matrices.subspan(1)) {
        if (m.n_sources() != first.n_sources() || m.n_targets() != first.n_targets()) {
            throw Error(ErrorKind::ShapeMismatch,
                        m.metric_tag + " is " + std::to_string(m.n_sources()) + "x" +
                            std::to_string(m.n_targets()) + ", " + first.metric_tag + " is " +
                            std::to_string(first.n_sources()) + "x" +
                            std::to_string(first.n_targets()));
        }
        if (m.source_ids != first.source_ids || m.target_ids != first.target_ids) {
            throw Error(ErrorKind::IdOrderMismatch,
                        m.metric_tag + " and " + first.metric_tag + " disagree on ids");
        }
    }

    DistanceMatrix out;
    out.source_ids = first.source_ids;
    out.target_ids = first.target_ids;
    out.values.resize(first.values.size());
    const double inv = 1.0 / static_cast<double>(matrices.size());
    for (std::size_t idx = 0; idx < out.values.size(); ++idx) {
        double acc = 0.0;
        for (const auto& m : matrices) {
            acc += m.values[idx];
        }
        out.values[idx] = static_cast<float>(acc * inv);
    }
    std::string joined;
    for (const auto& m : matrices) {
        if (!joined.empty()) {
            joined += "+";
        }
        joined += m.metric_tag;
    }
    out.metric_tag = "combined(" + joined + ")";
    return out;
}

std::vector<std::pair<std::string, float>> rank_targets(const DistanceMatrix& m,
                                                        std::size_t source_index, std::size_t k) {
    if (source_index >= m.n_sources()) {
        throw Error(ErrorKind::IndexOutOfRange,
                    "source index " + std::to_string(source_index) + " of " +
                        std::to_string(m.n_sources()));
    }
    if (k == 0 || k > m.n_targets()) {
        throw Error(ErrorKind::IndexOutOfRange,
                    "k = " + std::to_string(k) + " with " + std::to_string(m.n_targets()) +
                        " targets");
    }
    const float* row = m.values.data() + source_index * m.n_targets();
    std::vector<std::size_t> idx(m.n_targets());
    std::iota(idx.begin(), idx.end(), 0);
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                      [row](std::size_t a, std::size_t b) {
                          return row[a] != row[b] ? row[a] < row[b] : a < b;
                      });
    std::vector<std::pair<std::string, float>> out;
    out.reserve(k);
    for (std::size_t r = 0; r < k; ++r) {
        out.emplace_back(m.target_ids[idx[r]], row[idx[r]]);
    }
    return out;
}

namespace {

constexpr char kMagic[4] = {'D', 'M', 'A', 'T'};

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

void write_id_table(std::ostream& out, const std::vector<std::string>& ids) {
    for (const auto& id : ids) {
        write_u32(out, static_cast<std::uint32_t>(id.size()));
        out.write(id.data(), static_cast<std::streamsize>(id.size()));
    }
}

std::vector<std::string> read_id_table(std::istream& in, std::uint32_t count,
                                       const std::string& path) {
    std::vector<std::string> ids;
    ids.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint32_t len = 0;
        if (!read_u32(in, len)) {
            throw Error(ErrorKind::MalformedRecord, path + ": truncated id table");
        }
        std::string id(len, '\0');
        if (len > 0 && !in.read(id.data(), len)) {
            throw Error(ErrorKind::MalformedRecord, path + ": truncated id table");
        }
        ids.push_back(std::move(id));
    }
    return ids;
}

} // namespace

void save_matrix(const DistanceMatrix& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::IoError, "cannot write '" + path + "'");
    }
    out.write(kMagic, 4);
    write_u32(out, static_cast<std::uint32_t>(m.n_sources()));
    write_u32(out, static_cast<std::uint32_t>(m.n_targets()));
    write_id_table(out, m.source_ids);
    write_id_table(out, m.target_ids);
    for (const float v : m.values) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        write_u32(out, bits);
    }
    if (!out) {
        throw Error(ErrorKind::IoError, "failed writing '" + path + "'");
    }
}

DistanceMatrix load_matrix(const std::string& path, const std::string& metric_tag) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
    }
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
        throw Error(ErrorKind::MalformedHeader, path + ": not a DMAT file");
    }
    std::uint32_t n_sources = 0;
    std::uint32_t n_targets = 0;
    if (!read_u32(in, n_sources) || !read_u32(in, n_targets)) {
        throw Error(ErrorKind::MalformedHeader, path + ": truncated header");
    }
    DistanceMatrix m;
    m.metric_tag = metric_tag;
    m.source_ids = read_id_table(in, n_sources, path);
    m.target_ids = read_id_table(in, n_targets, path);
    m.values.resize(static_cast<std::size_t>(n_sources) * n_targets);
    for (auto& v : m.values) {
        std::uint32_t bits;
        if (!read_u32(in, bits)) {
            throw Error(ErrorKind::MalformedRecord, path + ": truncated values");
        }
        std::memcpy(&v, &bits, 4);
    }
    return m;
}

void save_matrix_csv(const DistanceMatrix& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::IoError, "cannot write '" + path + "'");
    }
    out << "source_id";
    for (const auto& id : m.target_ids) {
        out << ',' << id;
    }
    out << '\n';
    char buf[64];
    for (std::size_t i = 0; i < m.n_sources(); ++i) {
        out << m.source_ids[i];
        for (std::size_t j = 0; j < m.n_targets(); ++j) {
            const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, m.at(i, j));
            (void)ec;
            out << ',';
            out.write(buf, end - buf);
        }
        out << '\n';
    }
    if (!out) {
        throw Error(ErrorKind::IoError, "failed writing '" + path + "'");
    }
}

} // namespace tracelink
