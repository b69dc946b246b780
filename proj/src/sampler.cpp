#include "compsplit/sampler.hpp"

#include <algorithm>

namespace compsplit {

CombinationSet recombination_closure(const CombinationSet& combos) {
    if (combos.empty()) throw std::invalid_argument("recombination closure of an empty set");
    const auto covered = covered_attributes(combos);
    std::vector<Combination> members;
    std::size_t total = 1;
    for (const auto& values : covered) total *= values.size();
    members.reserve(total);

    std::vector<std::size_t> odo(covered.size(), 0);
    while (true) {
        Combination c;
        c.values.reserve(covered.size());
        for (std::size_t i = 0; i < covered.size(); ++i) c.values.push_back(covered[i][odo[i]]);
        members.push_back(std::move(c));
        std::size_t i = covered.size();
        while (i > 0) {
            --i;
            if (++odo[i] < covered[i].size()) break;
            odo[i] = 0;
            if (i == 0) return CombinationSet(combos.schema(), std::move(members));
        }
    }
}

Allocation allocate_records(std::span<const LabeledRecord> dataset, const Split& split,
                            std::size_t id_test_per_combination, std::uint64_t seed) {
    Allocation out;
    std::map<Combination, std::vector<std::size_t>> by_combo;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto& c = dataset[i].combination;
        if (!split.id_set.contains(c) && !split.comp_set.contains(c)) {
            throw std::invalid_argument("record " + std::to_string(i) +
                                        " carries a combination outside the split");
        }
        by_combo[c].push_back(i);
    }
    for (auto& [combo, indices] : by_combo) {
        out.counts[combo] = indices.size();
        if (split.comp_set.contains(combo)) {
            for (std::size_t i : indices) out.comp_test.push_back(dataset[i]);
            continue;
        }
        if (id_test_per_combination > 0 && indices.size() > id_test_per_combination) {
            Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(out.counts.size())));
            rng.shuffle(indices);
            for (std::size_t k = 0; k < indices.size(); ++k) {
                auto& bucket = k < id_test_per_combination ? out.id_test : out.train;
                bucket.push_back(dataset[indices[k]]);
            }
        } else {
            for (std::size_t i : indices) out.train.push_back(dataset[i]);
        }
    }
    return out;
}

}  // namespace compsplit
