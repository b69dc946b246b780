#pragma once

#include <cstdint>
#include <map>
#include <tuple>

#include "compsplit/schema.hpp"

namespace compsplit {

/// Canonical unordered pair of attribute values from two distinct aspects.
struct CompoundKey {
    std::int32_t aspect_a = 0;
    std::int32_t value_a = 0;
    std::int32_t aspect_b = 0;
    std::int32_t value_b = 0;

    static CompoundKey make(std::int32_t aspect_a, std::int32_t value_a, std::int32_t aspect_b,
                            std::int32_t value_b) {
        if (aspect_a == aspect_b) throw SchemaError("compound key needs two distinct aspects");
        if (aspect_a > aspect_b) {
            std::swap(aspect_a, aspect_b);
            std::swap(value_a, value_b);
        }
        return CompoundKey{aspect_a, value_a, aspect_b, value_b};
    }

    friend auto operator<=>(const CompoundKey&, const CompoundKey&) = default;
};

/// Normalized frequency of attribute compounds over a combination set.
/// Sparse: keys with zero weight are omitted, so the stored weights are all
/// positive and sum to 1 when built from a nonempty set.
class CompoundDistribution {
public:
    CompoundDistribution(SchemaPtr schema, std::map<CompoundKey, double> weights)
        : schema_(std::move(schema)), weights_(std::move(weights)) {}

    const SchemaPtr& schema() const { return schema_; }
    const std::map<CompoundKey, double>& weights() const { return weights_; }
    double mass() const;

private:
    SchemaPtr schema_;
    std::map<CompoundKey, double> weights_;
};

/// f(pair) = 2 * (members containing the pair) / (m * (m-1) * |set|).
/// Throws on an empty set ("undefined distribution").
CompoundDistribution compound_frequency(const CombinationSet& set);

/// S(P, Q) = sum_i p_i^alpha * q_i^(1-alpha) over the union of supports.
/// A term vanishes whenever the factor raised to a nonzero exponent is zero;
/// at alpha = 0 (resp. 1) this degenerates to the mass of Q (resp. P) on the
/// other distribution's support. Result is clamped to [0, 1].
double chernoff_similarity(const CompoundDistribution& p, const CompoundDistribution& q,
                           double alpha = 0.5);

/// D = 1 - S(P_id, P_comp) in [0, 1].
double compound_divergence(const CombinationSet& id_set, const CombinationSet& comp_set,
                           double alpha = 0.5);

}  // namespace compsplit
