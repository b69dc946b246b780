#include "compsplit/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace compsplit {

double protocol_gap(double a_id, double a_comp) {
    if (a_id <= 0.0) throw std::invalid_argument("gap needs a_id > 0");
    return (a_id - a_comp) / a_id * 100.0;
}

namespace {

void require_comp(const ProtocolScores& s, const char* which) {
    if (!s.a_comp || !s.p_comp) {
        throw std::invalid_argument(std::string("missing compositional cell for ") + which);
    }
}

}  // namespace

BenchmarkSummary aggregate(const ProtocolScores& original, const ProtocolScores& holdout,
                           const ProtocolScores& acd) {
    require_comp(holdout, "hold-out");
    require_comp(acd, "acd");
    BenchmarkSummary s;
    s.a_avg = (original.a_id + holdout.a_id + *holdout.a_comp + acd.a_id + *acd.a_comp) / 5.0;
    s.p_avg = (original.p_id + holdout.p_id + *holdout.p_comp + acd.p_id + *acd.p_comp) / 5.0;
    s.g_holdout = protocol_gap(holdout.a_id, *holdout.a_comp);
    s.g_acd = protocol_gap(acd.a_id, *acd.a_comp);
    s.g_avg = 0.5 * (s.g_holdout + s.g_acd);
    return s;
}

ProtocolScores mean_over_bundle(std::span<const ProtocolScores> per_split) {
    if (per_split.empty()) throw std::invalid_argument("mean over an empty score list");
    ProtocolScores out;
    out.protocol = per_split.front().protocol;
    const bool has_comp = per_split.front().a_comp.has_value();
    double a_id = 0.0, p_id = 0.0, a_comp = 0.0, p_comp = 0.0;
    for (const auto& s : per_split) {
        if (s.protocol != out.protocol) {
            throw std::invalid_argument("protocol tag mismatch in score bundle");
        }
        if (s.a_comp.has_value() != has_comp || s.p_comp.has_value() != has_comp) {
            throw std::invalid_argument("inconsistent compositional cells in score bundle");
        }
        a_id += s.a_id;
        p_id += s.p_id;
        if (has_comp) {
            a_comp += *s.a_comp;
            p_comp += *s.p_comp;
        }
    }
    const double n = static_cast<double>(per_split.size());
    out.a_id = a_id / n;
    out.p_id = p_id / n;
    if (has_comp) {
        out.a_comp = a_comp / n;
        out.p_comp = p_comp / n;
    }
    return out;
}

namespace {

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : text) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            if (!cur.empty()) tokens.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

}  // namespace

double dist_3(std::span<const std::string> texts, Dist3Mode mode) {
    std::unordered_set<std::string> pooled_distinct;
    std::size_t pooled_total = 0;
    double per_text_sum = 0.0;
    std::size_t texts_counted = 0;

    for (const auto& text : texts) {
        const auto tokens = tokenize(text);
        if (tokens.size() < 3) continue;
        std::unordered_set<std::string> local;
        std::size_t local_total = 0;
        for (std::size_t i = 0; i + 2 < tokens.size(); ++i) {
            std::string gram = tokens[i] + '\x1f' + tokens[i + 1] + '\x1f' + tokens[i + 2];
            ++local_total;
            local.insert(gram);
            pooled_distinct.insert(std::move(gram));
        }
        pooled_total += local_total;
        per_text_sum += static_cast<double>(local.size()) / static_cast<double>(local_total);
        ++texts_counted;
    }
    if (texts_counted == 0) {
        throw std::invalid_argument("dist-3 needs at least one text of three or more tokens");
    }
    if (mode == Dist3Mode::PerTextMean) {
        return per_text_sum / static_cast<double>(texts_counted);
    }
    return static_cast<double>(pooled_distinct.size()) / static_cast<double>(pooled_total);
}

std::string summary_table(const ProtocolScores& original, const ProtocolScores& holdout,
                          const ProtocolScores& acd, const BenchmarkSummary& summary) {
    auto cell = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", v);
        return std::string(buf);
    };
    std::ostringstream os;
    os << "A_id(orig)\tP_id(orig)\tA_id(holdout)\tP_id(holdout)\tA_comp(holdout)\tP_comp(holdout)"
          "\tA_id(acd)\tP_id(acd)\tA_comp(acd)\tP_comp(acd)\tA_avg\tP_avg\tG_avg\n";
    os << cell(original.a_id) << '\t' << cell(original.p_id) << '\t' << cell(holdout.a_id) << '\t'
       << cell(holdout.p_id) << '\t' << cell(*holdout.a_comp) << '\t' << cell(*holdout.p_comp)
       << '\t' << cell(acd.a_id) << '\t' << cell(acd.p_id) << '\t' << cell(*acd.a_comp) << '\t'
       << cell(*acd.p_comp) << '\t' << cell(summary.a_avg) << '\t' << cell(summary.p_avg) << '\t'
       << cell(summary.g_avg) << '\n';
    return os.str();
}

}  // namespace compsplit
