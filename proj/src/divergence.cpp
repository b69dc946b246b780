#include "compsplit/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace compsplit {

double CompoundDistribution::mass() const {
    double total = 0.0;
    for (const auto& [key, w] : weights_) total += w;
    return total;
}

CompoundDistribution compound_frequency(const CombinationSet& set) {
    const auto& schema = set.schema();
    const std::size_t m = schema->aspect_count();
    if (m < 2) throw SchemaError("compound frequency needs at least 2 aspects");
    if (set.empty()) {
        throw std::invalid_argument("undefined distribution: empty combination set");
    }

    std::map<CompoundKey, std::size_t> counts;
    for (const auto& c : set.members()) {
        for (std::size_t i = 0; i + 1 < m; ++i) {
            for (std::size_t j = i + 1; j < m; ++j) {
                CompoundKey key{static_cast<std::int32_t>(i), c.values[i],
                                static_cast<std::int32_t>(j), c.values[j]};
                ++counts[key];
            }
        }
    }

    const double denom = static_cast<double>(m) * static_cast<double>(m - 1) *
                         static_cast<double>(set.size());
    std::map<CompoundKey, double> weights;
    for (const auto& [key, cnt] : counts) {
        weights.emplace_hint(weights.end(), key, 2.0 * static_cast<double>(cnt) / denom);
    }
    return CompoundDistribution(schema, std::move(weights));
}

double chernoff_similarity(const CompoundDistribution& p, const CompoundDistribution& q,
                           double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument("alpha must lie in [0, 1]");
    }
    if (!(*p.schema() == *q.schema())) {
        throw SchemaError("chernoff similarity across mismatching schemas");
    }

    // Terms are collected and summed smallest-first so that symmetric inputs
    // (relabelings, swapped arguments at alpha = 0.5) produce bit-identical
    // sums regardless of key order.
    std::vector<double> terms;
    terms.reserve(p.weights().size() + q.weights().size());

    auto it_p = p.weights().begin();
    auto it_q = q.weights().begin();
    const auto end_p = p.weights().end();
    const auto end_q = q.weights().end();
    auto push_term = [&](double pw, double qw) {
        double term;
        if (alpha == 0.0) {
            term = pw > 0.0 ? qw : 0.0;
        } else if (alpha == 1.0) {
            term = qw > 0.0 ? pw : 0.0;
        } else {
            term = (pw > 0.0 && qw > 0.0) ? std::pow(pw, alpha) * std::pow(qw, 1.0 - alpha) : 0.0;
        }
        if (term > 0.0) terms.push_back(term);
    };
    while (it_p != end_p && it_q != end_q) {
        if (it_p->first < it_q->first) {
            push_term(it_p->second, 0.0);
            ++it_p;
        } else if (it_q->first < it_p->first) {
            push_term(0.0, it_q->second);
            ++it_q;
        } else {
            push_term(it_p->second, it_q->second);
            ++it_p;
            ++it_q;
        }
    }
    for (; it_p != end_p; ++it_p) push_term(it_p->second, 0.0);
    for (; it_q != end_q; ++it_q) push_term(0.0, it_q->second);

    std::sort(terms.begin(), terms.end());
    double s = 0.0;
    for (double t : terms) s += t;
    return std::clamp(s, 0.0, 1.0);
}

double compound_divergence(const CombinationSet& id_set, const CombinationSet& comp_set,
                           double alpha) {
    const double s = chernoff_similarity(compound_frequency(id_set), compound_frequency(comp_set), alpha);
    return std::clamp(1.0 - s, 0.0, 1.0);
}

}  // namespace compsplit
