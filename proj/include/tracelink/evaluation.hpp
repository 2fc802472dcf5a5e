#pragma once

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tracelink/metrics.hpp"

namespace tracelink {

/// acc@k for k = 1..n_targets: the fraction of sources with at least one true
/// target among the k nearest. Monotone nondecreasing by construction.
struct AccuracyCurve {
    std::string metric_tag;
    std::vector<double> values; // values[k-1] = acc@k

    std::size_t length() const { return values.size(); }
    double at(std::size_t k) const; // clamped to the final point for k > length
};

using GoldLinks = std::set<std::pair<std::string, std::string>>;

/// Gold links must reference ids present in the matrix. Ranking follows the
/// rank_targets tie rule (ascending distance, then ascending target index).
AccuracyCurve accuracy_curve(const DistanceMatrix& m, const GoldLinks& links);

/// Normalized area: mean of the curve values, in [0, 1].
double auc(const AccuracyCurve& curve);

/// Smallest k such that challenger >= baseline at every k' >= k; 0 when the
/// challenger dominates everywhere; absent when it is still below at the end.
std::optional<std::size_t> k_dom(const AccuracyCurve& challenger, const AccuracyCurve& baseline);

/// k_dom with the non-linear curve as challenger and a combined curve as
/// baseline; identical scan, kept as its own name to match the reports.
std::optional<std::size_t> k_cross(const AccuracyCurve& nl, const AccuracyCurve& combined);

struct CurvePairing {
    std::string challenger_tag;
    std::string baseline_tag;
};

struct Report {
    std::string text;
    // (metric tag, CSV body "k,acc\n...") per curve, in input order
    std::vector<std::pair<std::string, std::string>> curve_csvs;
};

/// Fixed-format text report: per-curve AUC and acc@1/5/10, then one K
/// statistic per pairing (labelled K_cross when the baseline is a combined
/// matrix, K_dom otherwise), plus plottable per-curve CSV bodies.
Report report(const std::vector<AccuracyCurve>& curves,
              const std::vector<CurvePairing>& pairings);

/// Filesystem-hostile characters mapped to '_'; [a-zA-Z0-9.-] survive.
std::string sanitize_tag(const std::string& tag);

/// "<sanitized tag>_curve.csv".
std::string curve_csv_filename(const std::string& tag);

} // namespace tracelink
