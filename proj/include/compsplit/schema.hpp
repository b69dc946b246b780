#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace compsplit {

struct SchemaError : std::runtime_error {
    explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

struct AspectDef {
    std::string name;
    std::vector<std::string> values;

    friend bool operator==(const AspectDef&, const AspectDef&) = default;
};

/// The label space: m ordered aspects, each with an ordered set of attribute
/// values. Immutable after construction; construction validates that m >= 2,
/// every aspect has >= 2 values, aspect names are unique and values are
/// unique within their aspect.
class AttributeSchema {
public:
    explicit AttributeSchema(std::vector<AspectDef> aspects);

    std::size_t aspect_count() const { return aspects_.size(); }
    const AspectDef& aspect(std::size_t i) const { return aspects_.at(i); }
    const std::vector<AspectDef>& aspects() const { return aspects_; }
    std::size_t value_count(std::size_t i) const { return aspects_.at(i).values.size(); }

    /// Sum of all a_i; rows of the flattened (aspect, value) table.
    std::size_t total_values() const { return total_values_; }

    /// Flat row index of (aspect, value); rows are laid out aspect-major.
    std::size_t value_row(std::size_t aspect, std::size_t value) const {
        return row_offsets_.at(aspect) + value;
    }

    /// |C| = product of all a_i.
    std::size_t combination_count() const;

    std::optional<std::size_t> aspect_index(std::string_view name) const;
    std::optional<std::size_t> value_index(std::size_t aspect, std::string_view value) const;

    friend bool operator==(const AttributeSchema&, const AttributeSchema&) = default;

private:
    std::vector<AspectDef> aspects_;
    std::vector<std::size_t> row_offsets_;
    std::size_t total_values_ = 0;
};

using SchemaPtr = std::shared_ptr<const AttributeSchema>;

/// Convenience: schema with given aspect sizes and generated names
/// ("aspect1", ... / "a1v1", ...). Used by tests and the meta-train CLI.
SchemaPtr make_schema(const std::vector<std::size_t>& sizes);

/// One attribute value per aspect, stored as value indices.
/// String forms exist only at the I/O boundary.
struct Combination {
    std::vector<std::int32_t> values;

    friend auto operator<=>(const Combination&, const Combination&) = default;
};

/// Immutable set of combinations over one schema. Members are kept sorted
/// (lexicographic by index vector) and deduplicated, so equal sets compare
/// equal and serialize identically.
class CombinationSet {
public:
    CombinationSet() = default;  // empty, schema-less; assign before use
    CombinationSet(SchemaPtr schema, std::vector<Combination> members);

    const SchemaPtr& schema() const { return schema_; }
    const std::vector<Combination>& members() const { return members_; }
    std::size_t size() const { return members_.size(); }
    bool empty() const { return members_.empty(); }
    bool contains(const Combination& c) const;

    CombinationSet set_union(const CombinationSet& other) const;
    CombinationSet set_difference(const CombinationSet& other) const;
    CombinationSet set_intersection(const CombinationSet& other) const;

    friend bool operator==(const CombinationSet& a, const CombinationSet& b) {
        return *a.schema_ == *b.schema_ && a.members_ == b.members_;
    }

private:
    SchemaPtr schema_;
    std::vector<Combination> members_;  // sorted, unique
};

/// All prod(a_i) combinations in lexicographic index order.
CombinationSet full_product(SchemaPtr schema);

/// Per-aspect sorted list of the value indices occurring in the set.
std::vector<std::vector<std::int32_t>> covered_attributes(const CombinationSet& set);

enum class Protocol { Original, HoldOut, Acd, FewShot, Random, MinDivergence };

std::string protocol_name(Protocol p);
std::optional<Protocol> protocol_from_name(std::string_view name);

/// Outcome of the eligible-split predicate. `eligible` is true iff all three
/// clauses hold: (a) id and comp partition C's membership, (b) they are
/// disjoint, (c) every attribute value occurring in comp also occurs in id.
struct EligibilityReport {
    bool eligible = false;
    bool union_is_all = false;                       // clause (a)
    bool disjoint = false;                           // clause (b)
    bool attributes_covered = false;                 // clause (c)
    std::vector<Combination> missing_from_union;     // in C, absent from id+comp
    std::vector<Combination> not_in_universe;        // in id+comp, absent from C
    std::vector<Combination> overlap;                // id intersect comp
    std::vector<std::pair<std::int32_t, std::int32_t>> uncovered;  // (aspect, value) in comp but not id

    std::string describe(const AttributeSchema& schema) const;
};

/// The eligible-split predicate. Throws SchemaError when the three sets do
/// not share one schema. An empty comp set is eligible (the Original
/// protocol).
EligibilityReport is_eligible_split(const CombinationSet& all,
                                    const CombinationSet& id_set,
                                    const CombinationSet& comp_set);

/// A protocol-tagged partition of the combination space.
struct Split {
    Protocol protocol = Protocol::Original;
    CombinationSet id_set;
    CombinationSet comp_set;
    std::optional<double> divergence;  // absent for Original
    std::uint64_t seed = 0;
};

/// Re-checks the Split invariants (partition of the full product plus
/// eligibility); used by protocol tests and the `check` subcommand.
EligibilityReport validate_split(const Split& split);

}  // namespace compsplit
