#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "compsplit/schema.hpp"

namespace compsplit {

/// Accuracy (percent) and perplexity for one protocol's testing cells.
/// Original carries only the in-distribution pair.
struct ProtocolScores {
    Protocol protocol = Protocol::Original;
    double a_id = 0.0;
    double p_id = 0.0;
    std::optional<double> a_comp;
    std::optional<double> p_comp;
};

/// G = (A_id - A_comp) / A_id, in percentage points. May be negative when
/// compositional accuracy exceeds in-distribution accuracy.
double protocol_gap(double a_id, double a_comp);

struct BenchmarkSummary {
    double a_avg = 0.0;
    double p_avg = 0.0;
    double g_avg = 0.0;
    double g_holdout = 0.0;
    double g_acd = 0.0;
};

/// A_avg / P_avg as the arithmetic mean of the five cells (original id,
/// hold-out id/comp, ACD id/comp); G_avg as the mean of the hold-out and ACD
/// gaps. Few-shot results are reported separately and never averaged in.
BenchmarkSummary aggregate(const ProtocolScores& original, const ProtocolScores& holdout,
                           const ProtocolScores& acd);

/// Cellwise arithmetic mean across splits of one protocol.
ProtocolScores mean_over_bundle(std::span<const ProtocolScores> per_split);

enum class Dist3Mode {
    Pooled,       // distinct trigrams / total trigrams over the whole corpus
    PerTextMean,  // mean of per-text ratios
};

/// Trigram distinctness of a corpus. Tokenization is lowercased whitespace
/// splitting; texts shorter than three tokens contribute nothing.
double dist_3(std::span<const std::string> texts, Dist3Mode mode = Dist3Mode::Pooled);

/// Tab-separated summary row (with header) for the five cells plus the
/// aggregate columns.
std::string summary_table(const ProtocolScores& original, const ProtocolScores& holdout,
                          const ProtocolScores& acd, const BenchmarkSummary& summary);

}  // namespace compsplit
