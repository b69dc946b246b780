#pragma once

// Test-only reference implementations, deliberately naive and kept
// independent of the library's sparse/incremental code paths.

#include <cmath>
#include <functional>
#include <vector>

#include "compsplit/divergence.hpp"
#include "compsplit/meta/matrix.hpp"
#include "compsplit/rng.hpp"
#include "compsplit/schema.hpp"

namespace oracles {

using compsplit::Combination;
using compsplit::CombinationSet;
using compsplit::SchemaPtr;

// Dense compound-frequency vector over the full pair space
// (i < j, t_i, t_j), counted and normalized directly from the definition.
inline std::vector<double> dense_compound_frequency(const CombinationSet& set) {
    const auto& schema = *set.schema();
    const std::size_t m = schema.aspect_count();

    std::vector<std::size_t> offsets;  // start of each (i, j) block
    std::size_t total = 0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            offsets.push_back(total);
            total += schema.value_count(i) * schema.value_count(j);
        }
    }
    std::vector<double> dense(total, 0.0);
    for (const auto& c : set.members()) {
        std::size_t block = 0;
        for (std::size_t i = 0; i + 1 < m; ++i) {
            for (std::size_t j = i + 1; j < m; ++j) {
                const std::size_t idx = offsets[block++] +
                                        static_cast<std::size_t>(c.values[i]) * schema.value_count(j) +
                                        static_cast<std::size_t>(c.values[j]);
                dense[idx] += 1.0;
            }
        }
    }
    const double denom = static_cast<double>(m) * static_cast<double>(m - 1) *
                         static_cast<double>(set.size());
    for (double& v : dense) v = 2.0 * v / denom;
    return dense;
}

inline double dense_chernoff(const std::vector<double>& p, const std::vector<double>& q,
                             double alpha) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (alpha == 0.0) {
            s += p[i] > 0.0 ? q[i] : 0.0;
        } else if (alpha == 1.0) {
            s += q[i] > 0.0 ? p[i] : 0.0;
        } else if (p[i] > 0.0 && q[i] > 0.0) {
            s += std::pow(p[i], alpha) * std::pow(q[i], 1.0 - alpha);
        }
    }
    return s;
}

inline double dense_divergence(const CombinationSet& id_set, const CombinationSet& comp_set,
                               double alpha) {
    return 1.0 - dense_chernoff(dense_compound_frequency(id_set),
                                dense_compound_frequency(comp_set), alpha);
}

// Visits every balanced (id, comp) partition of `all`.
inline void for_each_balanced_partition(
    const CombinationSet& all,
    const std::function<void(const CombinationSet&, const CombinationSet&)>& visit) {
    const auto& members = all.members();
    const std::size_t n = members.size();
    const std::size_t half = n / 2;
    std::vector<std::size_t> pick(half);
    for (std::size_t i = 0; i < half; ++i) pick[i] = i;
    while (true) {
        std::vector<char> in_id(n, 0);
        for (std::size_t i : pick) in_id[i] = 1;
        std::vector<Combination> id_members, comp_members;
        for (std::size_t i = 0; i < n; ++i) {
            (in_id[i] ? id_members : comp_members).push_back(members[i]);
        }
        visit(CombinationSet(all.schema(), std::move(id_members)),
              CombinationSet(all.schema(), std::move(comp_members)));
        std::size_t i = half;
        bool done = false;
        while (i > 0) {
            --i;
            if (pick[i] != i + n - half) break;
            if (i == 0) done = true;
        }
        if (done) return;
        ++pick[i];
        for (std::size_t j = i + 1; j < half; ++j) pick[j] = pick[j - 1] + 1;
    }
}

// Best balanced eligible divergence by exhaustive enumeration, using the
// production divergence so exact-equality comparisons are meaningful.
inline double brute_force_best_divergence(const CombinationSet& all, double alpha, bool maximize) {
    double best = maximize ? -1.0 : 2.0;
    for_each_balanced_partition(all, [&](const CombinationSet& id_set, const CombinationSet& comp_set) {
        if (!compsplit::is_eligible_split(all, id_set, comp_set).eligible) return;
        const double d = compsplit::compound_divergence(id_set, comp_set, alpha);
        if (maximize ? d > best : d < best) best = d;
    });
    return best;
}

// Random schema with m in [2, max_aspects], a_i in [2, max_values].
inline SchemaPtr random_schema(compsplit::Rng& rng, std::size_t max_aspects = 4,
                               std::size_t max_values = 6) {
    const std::size_t m = 2 + static_cast<std::size_t>(rng.below(max_aspects - 1));
    std::vector<std::size_t> sizes;
    for (std::size_t i = 0; i < m; ++i) {
        sizes.push_back(2 + static_cast<std::size_t>(rng.below(max_values - 1)));
    }
    return compsplit::make_schema(sizes);
}

// Random nonempty subset of the full product.
inline CombinationSet random_subset(const CombinationSet& all, compsplit::Rng& rng) {
    std::vector<Combination> members;
    while (members.empty()) {
        for (const auto& c : all.members()) {
            if (rng.below(2) == 0) members.push_back(c);
        }
    }
    return CombinationSet(all.schema(), std::move(members));
}

// Central finite difference of f at x, component by component.
inline compsplit::meta::Matrix finite_difference_gradient(
    const std::function<double(const compsplit::meta::Matrix&)>& f,
    const compsplit::meta::Matrix& x, double h = 1e-6) {
    compsplit::meta::Matrix g(x.rows, x.cols, 0.0);
    compsplit::meta::Matrix probe = x;
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        const double v = x.data[i];
        probe.data[i] = v + h;
        const double up = f(probe);
        probe.data[i] = v - h;
        const double down = f(probe);
        probe.data[i] = v;
        g.data[i] = (up - down) / (2.0 * h);
    }
    return g;
}

inline double relative_error(const compsplit::meta::Matrix& a, const compsplit::meta::Matrix& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        num += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
        den += a.data[i] * a.data[i] + b.data[i] * b.data[i];
    }
    return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

}  // namespace oracles
