#include "tracelink/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <unordered_map>
#include <unordered_set>

#include "tracelink/error.hpp"

namespace tracelink {

double AccuracyCurve::at(std::size_t k) const {
    if (values.empty() || k == 0) {
        return 0.0;
    }
    return values[std::min(k, values.size()) - 1];
}

AccuracyCurve accuracy_curve(const DistanceMatrix& m, const GoldLinks& links) {
    std::unordered_map<std::string, std::size_t> source_index;
    for (std::size_t i = 0; i < m.n_sources(); ++i) {
        source_index.emplace(m.source_ids[i], i);
    }
    std::unordered_map<std::string, std::size_t> target_index;
    for (std::size_t j = 0; j < m.n_targets(); ++j) {
        target_index.emplace(m.target_ids[j], j);
    }

    // true target columns per source row
    std::vector<std::vector<std::size_t>> gold(m.n_sources());
    for (const auto& [src, tgt] : links) {
        const auto si = source_index.find(src);
        if (si == source_index.end()) {
            throw Error(ErrorKind::MissingId, "link source '" + src + "' not in matrix");
        }
        const auto ti = target_index.find(tgt);
        if (ti == target_index.end()) {
            throw Error(ErrorKind::MissingId, "link target '" + tgt + "' not in matrix");
        }
        gold[si->second].push_back(ti->second);
    }

    AccuracyCurve curve;
    curve.metric_tag = m.metric_tag;
    curve.values.assign(m.n_targets(), 0.0);
    if (m.n_sources() == 0 || m.n_targets() == 0) {
        return curve;
    }

    // For each source, the rank of its best true target under the tie rule:
    // rank(j) = 1 + |{j' : d[j'] < d[j] or (d[j'] == d[j] and j' < j)}|.
    // A source with no true target never hits.
    std::vector<std::size_t> hits_at(m.n_targets() + 1, 0);
    for (std::size_t i = 0; i < m.n_sources(); ++i) {
        if (gold[i].empty()) {
            continue;
        }
        const float* row = m.values.data() + i * m.n_targets();
        std::size_t best_rank = m.n_targets() + 1;
        for (const std::size_t j : gold[i]) {
            std::size_t rank = 1;
            const float d = row[j];
            for (std::size_t j2 = 0; j2 < m.n_targets(); ++j2) {
                if (row[j2] < d || (row[j2] == d && j2 < j)) {
                    ++rank;
                }
            }
            best_rank = std::min(best_rank, rank);
        }
        if (best_rank <= m.n_targets()) {
            ++hits_at[best_rank];
        }
    }

    std::size_t cumulative = 0;
    for (std::size_t k = 1; k <= m.n_targets(); ++k) {
        cumulative += hits_at[k];
        curve.values[k - 1] =
            static_cast<double>(cumulative) / static_cast<double>(m.n_sources());
    }
    return curve;
}

double auc(const AccuracyCurve& curve) {
    if (curve.values.empty()) {
        throw Error(ErrorKind::EmptyDataset, "empty accuracy curve");
    }
    double sum = 0.0;
    for (const double v : curve.values) {
        sum += v;
    }
    return sum / static_cast<double>(curve.values.size());
}

std::optional<std::size_t> k_dom(const AccuracyCurve& challenger, const AccuracyCurve& baseline) {
    if (challenger.values.size() != baseline.values.size()) {
        throw Error(ErrorKind::LengthMismatch,
                    std::to_string(challenger.values.size()) + " vs " +
                        std::to_string(baseline.values.size()));
    }
    const std::size_t n = challenger.values.size();
    std::size_t last_violation = 0; // 1-based; 0 = none
    for (std::size_t k = 1; k <= n; ++k) {
        if (challenger.values[k - 1] < baseline.values[k - 1]) {
            last_violation = k;
        }
    }
    if (last_violation == 0) {
        return 0;
    }
    if (last_violation == n) {
        return std::nullopt;
    }
    return last_violation + 1;
}

std::optional<std::size_t> k_cross(const AccuracyCurve& nl, const AccuracyCurve& combined) {
    return k_dom(nl, combined);
}

std::string sanitize_tag(const std::string& tag) {
    std::string name;
    name.reserve(tag.size());
    for (const char c : tag) {
        const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                          (c >= '0' && c <= '9') || c == '-' || c == '.';
        name += keep ? c : '_';
    }
    return name;
}

std::string curve_csv_filename(const std::string& tag) {
    return sanitize_tag(tag) + "_curve.csv";
}

namespace {

std::string format_fixed(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", value);
    return buf;
}

std::string format_k(const std::optional<std::size_t>& k) {
    return k ? std::to_string(*k) : "absent";
}

} // namespace

Report report(const std::vector<AccuracyCurve>& curves, const std::vector<CurvePairing>& pairings) {
    std::unordered_map<std::string, const AccuracyCurve*> by_tag;
    for (const auto& curve : curves) {
        by_tag.emplace(curve.metric_tag, &curve);
    }
    const auto resolve = [&](const std::string& tag) -> const AccuracyCurve& {
        const auto it = by_tag.find(tag);
        if (it == by_tag.end()) {
            throw Error(ErrorKind::UnknownTag, "no curve tagged '" + tag + "'");
        }
        return *it->second;
    };

    Report out;
    out.text += "metric";
    // column widths keep the table grep-able and stable for golden tests
    const std::size_t tag_width = [&] {
        std::size_t w = 24;
        for (const auto& c : curves) {
            w = std::max(w, c.metric_tag.size() + 2);
        }
        return w;
    }();
    out.text.append(tag_width - 6, ' ');
    out.text += "AUC       acc@1     acc@5     acc@10\n";
    for (const auto& curve : curves) {
        out.text += curve.metric_tag;
        out.text.append(tag_width - curve.metric_tag.size(), ' ');
        out.text += format_fixed(auc(curve));
        out.text += "  ";
        out.text += format_fixed(curve.at(1));
        out.text += "  ";
        out.text += format_fixed(curve.at(5));
        out.text += "  ";
        out.text += format_fixed(curve.at(10));
        out.text += "\n";
    }
    if (!pairings.empty()) {
        out.text += "\n";
        for (const auto& pairing : pairings) {
            const AccuracyCurve& challenger = resolve(pairing.challenger_tag);
            const AccuracyCurve& baseline = resolve(pairing.baseline_tag);
            const bool crossing = baseline.metric_tag.rfind("combined", 0) == 0;
            out.text += crossing ? "K_cross" : "K_dom";
            out.text += "[";
            out.text += pairing.challenger_tag;
            out.text += " vs ";
            out.text += pairing.baseline_tag;
            out.text += "] = ";
            out.text += format_k(k_dom(challenger, baseline));
            out.text += "\n";
        }
    }

    for (const auto& curve : curves) {
        std::string csv = "k,acc\n";
        for (std::size_t k = 1; k <= curve.length(); ++k) {
            csv += std::to_string(k);
            csv += ",";
            csv += format_fixed(curve.values[k - 1]);
            csv += "\n";
        }
        out.curve_csvs.emplace_back(curve.metric_tag, std::move(csv));
    }
    return out;
}

} // namespace tracelink
