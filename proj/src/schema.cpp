#include "compsplit/schema.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace compsplit {

AttributeSchema::AttributeSchema(std::vector<AspectDef> aspects) : aspects_(std::move(aspects)) {
    if (aspects_.size() < 2) {
        throw SchemaError("schema needs at least 2 aspects, got " + std::to_string(aspects_.size()));
    }
    std::set<std::string> names;
    row_offsets_.reserve(aspects_.size());
    for (const auto& a : aspects_) {
        if (!names.insert(a.name).second) {
            throw SchemaError("duplicate aspect name '" + a.name + "'");
        }
        if (a.values.size() < 2) {
            throw SchemaError("aspect '" + a.name + "' needs at least 2 values, got " +
                              std::to_string(a.values.size()));
        }
        std::set<std::string> vals;
        for (const auto& v : a.values) {
            if (!vals.insert(v).second) {
                throw SchemaError("duplicate value '" + v + "' in aspect '" + a.name + "'");
            }
        }
        row_offsets_.push_back(total_values_);
        total_values_ += a.values.size();
    }
}

std::size_t AttributeSchema::combination_count() const {
    std::size_t n = 1;
    for (const auto& a : aspects_) n *= a.values.size();
    return n;
}

std::optional<std::size_t> AttributeSchema::aspect_index(std::string_view name) const {
    for (std::size_t i = 0; i < aspects_.size(); ++i) {
        if (aspects_[i].name == name) return i;
    }
    return std::nullopt;
}

std::optional<std::size_t> AttributeSchema::value_index(std::size_t aspect, std::string_view value) const {
    const auto& vals = aspects_.at(aspect).values;
    for (std::size_t i = 0; i < vals.size(); ++i) {
        if (vals[i] == value) return i;
    }
    return std::nullopt;
}

SchemaPtr make_schema(const std::vector<std::size_t>& sizes) {
    std::vector<AspectDef> aspects;
    aspects.reserve(sizes.size());
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        AspectDef def;
        def.name = "aspect" + std::to_string(i + 1);
        for (std::size_t v = 0; v < sizes[i]; ++v) {
            def.values.push_back("a" + std::to_string(i + 1) + "v" + std::to_string(v + 1));
        }
        aspects.push_back(std::move(def));
    }
    return std::make_shared<AttributeSchema>(std::move(aspects));
}

CombinationSet::CombinationSet(SchemaPtr schema, std::vector<Combination> members)
    : schema_(std::move(schema)), members_(std::move(members)) {
    if (!schema_) throw SchemaError("combination set needs a schema");
    const std::size_t m = schema_->aspect_count();
    for (const auto& c : members_) {
        if (c.values.size() != m) {
            throw SchemaError("combination arity " + std::to_string(c.values.size()) +
                              " does not match schema arity " + std::to_string(m));
        }
        for (std::size_t i = 0; i < m; ++i) {
            if (c.values[i] < 0 || static_cast<std::size_t>(c.values[i]) >= schema_->value_count(i)) {
                throw SchemaError("value index " + std::to_string(c.values[i]) +
                                  " out of range for aspect '" + schema_->aspect(i).name + "'");
            }
        }
    }
    std::sort(members_.begin(), members_.end());
    members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
}

bool CombinationSet::contains(const Combination& c) const {
    return std::binary_search(members_.begin(), members_.end(), c);
}

CombinationSet CombinationSet::set_union(const CombinationSet& other) const {
    std::vector<Combination> out;
    out.reserve(members_.size() + other.members_.size());
    std::set_union(members_.begin(), members_.end(), other.members_.begin(), other.members_.end(),
                   std::back_inserter(out));
    return CombinationSet(schema_, std::move(out));
}

CombinationSet CombinationSet::set_difference(const CombinationSet& other) const {
    std::vector<Combination> out;
    std::set_difference(members_.begin(), members_.end(), other.members_.begin(), other.members_.end(),
                        std::back_inserter(out));
    return CombinationSet(schema_, std::move(out));
}

CombinationSet CombinationSet::set_intersection(const CombinationSet& other) const {
    std::vector<Combination> out;
    std::set_intersection(members_.begin(), members_.end(), other.members_.begin(),
                          other.members_.end(), std::back_inserter(out));
    return CombinationSet(schema_, std::move(out));
}

CombinationSet full_product(SchemaPtr schema) {
    if (!schema) throw SchemaError("full_product needs a schema");
    const std::size_t m = schema->aspect_count();
    std::vector<Combination> members;
    members.reserve(schema->combination_count());
    Combination cur;
    cur.values.assign(m, 0);
    while (true) {
        members.push_back(cur);
        // odometer increment, most significant aspect first
        std::size_t i = m;
        while (i > 0) {
            --i;
            if (static_cast<std::size_t>(++cur.values[i]) < schema->value_count(i)) break;
            cur.values[i] = 0;
            if (i == 0) return CombinationSet(std::move(schema), std::move(members));
        }
    }
}

std::vector<std::vector<std::int32_t>> covered_attributes(const CombinationSet& set) {
    const auto& schema = *set.schema();
    std::vector<std::set<std::int32_t>> seen(schema.aspect_count());
    for (const auto& c : set.members()) {
        for (std::size_t i = 0; i < c.values.size(); ++i) seen[i].insert(c.values[i]);
    }
    std::vector<std::vector<std::int32_t>> out(seen.size());
    for (std::size_t i = 0; i < seen.size(); ++i) out[i].assign(seen[i].begin(), seen[i].end());
    return out;
}

std::string protocol_name(Protocol p) {
    switch (p) {
        case Protocol::Original: return "original";
        case Protocol::HoldOut: return "holdout";
        case Protocol::Acd: return "acd";
        case Protocol::FewShot: return "fewshot";
        case Protocol::Random: return "random";
        case Protocol::MinDivergence: return "mindiv";
    }
    return "unknown";
}

std::optional<Protocol> protocol_from_name(std::string_view name) {
    if (name == "original") return Protocol::Original;
    if (name == "holdout") return Protocol::HoldOut;
    if (name == "acd") return Protocol::Acd;
    if (name == "fewshot") return Protocol::FewShot;
    if (name == "random") return Protocol::Random;
    if (name == "mindiv") return Protocol::MinDivergence;
    return std::nullopt;
}

namespace {

std::string combo_to_string(const AttributeSchema& schema, const Combination& c) {
    std::string s;
    for (std::size_t i = 0; i < c.values.size(); ++i) {
        if (i) s += "-";
        s += schema.aspect(i).values.at(static_cast<std::size_t>(c.values[i]));
    }
    return s;
}

}  // namespace

std::string EligibilityReport::describe(const AttributeSchema& schema) const {
    if (eligible) return "eligible";
    std::ostringstream os;
    if (!union_is_all) {
        os << "clause (a) violated: id+comp do not cover the combination space;";
        for (const auto& c : missing_from_union) os << " missing " << combo_to_string(schema, c);
        for (const auto& c : not_in_universe) os << " foreign " << combo_to_string(schema, c);
        os << "\n";
    }
    if (!disjoint) {
        os << "clause (b) violated: id and comp overlap;";
        for (const auto& c : overlap) os << " " << combo_to_string(schema, c);
        os << "\n";
    }
    if (!attributes_covered) {
        os << "clause (c) violated: comp uses attribute values absent from id;";
        for (const auto& [aspect, value] : uncovered) {
            os << " " << schema.aspect(static_cast<std::size_t>(aspect)).name << "="
               << schema.aspect(static_cast<std::size_t>(aspect)).values.at(static_cast<std::size_t>(value));
        }
        os << "\n";
    }
    return os.str();
}

EligibilityReport is_eligible_split(const CombinationSet& all, const CombinationSet& id_set,
                                    const CombinationSet& comp_set) {
    if (!(*all.schema() == *id_set.schema()) || !(*all.schema() == *comp_set.schema())) {
        throw SchemaError("eligibility check across mismatching schemas");
    }
    EligibilityReport report;

    CombinationSet uni = id_set.set_union(comp_set);
    report.missing_from_union = all.set_difference(uni).members();
    report.not_in_universe = uni.set_difference(all).members();
    report.union_is_all = report.missing_from_union.empty() && report.not_in_universe.empty();

    report.overlap = id_set.set_intersection(comp_set).members();
    report.disjoint = report.overlap.empty();

    auto id_cov = covered_attributes(id_set);
    auto comp_cov = covered_attributes(comp_set);
    report.attributes_covered = true;
    for (std::size_t i = 0; i < comp_cov.size(); ++i) {
        for (std::int32_t v : comp_cov[i]) {
            if (!std::binary_search(id_cov[i].begin(), id_cov[i].end(), v)) {
                report.attributes_covered = false;
                report.uncovered.emplace_back(static_cast<std::int32_t>(i), v);
            }
        }
    }

    report.eligible = report.union_is_all && report.disjoint && report.attributes_covered;
    return report;
}

EligibilityReport validate_split(const Split& split) {
    CombinationSet all = full_product(split.id_set.schema());
    return is_eligible_split(all, split.id_set, split.comp_set);
}

}  // namespace compsplit
