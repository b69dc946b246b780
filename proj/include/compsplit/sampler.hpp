#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "compsplit/rng.hpp"
#include "compsplit/schema.hpp"

namespace compsplit {

/// One corpus datum: a condition (attribute combination) and its text.
struct LabeledRecord {
    Combination combination;
    std::string text;
};

struct Batch {
    std::vector<LabeledRecord> records;
};

struct NoPcompCandidatesError : std::runtime_error {
    explicit NoPcompCandidatesError(const std::string& what) : std::runtime_error(what) {}
};

struct PoolExhaustedError : std::runtime_error {
    explicit PoolExhaustedError(const std::string& what) : std::runtime_error(what) {}
};

/// Cartesian product of the per-aspect attribute values covered by the input
/// combinations: every recombination reachable from attributes seen together.
CombinationSet recombination_closure(const CombinationSet& combos);

template <class Record>
struct PcompSample {
    std::vector<Record> records;
    bool truncated = false;  // fewer admissible pool records than requested
};

/// Draws a pseudo-compositional batch: records whose combinations lie in
/// recombination_closure(train combinations) minus the train combinations,
/// sampled uniformly without replacement from `pool`. The pool is expected to
/// hold in-distribution records only. Works for any record type carrying a
/// `combination` member (corpus records and the toy trainer's token records).
///
/// Throws NoPcompCandidatesError when the closure minus the train
/// combinations is empty (e.g. a single-combination train batch, or the
/// few-shot regime) and PoolExhaustedError when no pool record carries an
/// admissible combination. When fewer than `size` admissible records exist,
/// returns them all with `truncated` set instead of failing.
template <class Record>
PcompSample<Record> sample_pcomp_batch(const SchemaPtr& schema, std::span<const Record> train_batch,
                                       std::span<const Record> pool, std::size_t size,
                                       std::uint64_t seed) {
    if (train_batch.empty()) throw std::invalid_argument("empty train batch");
    if (size < 1) throw std::invalid_argument("pcomp batch size must be >= 1");

    std::vector<Combination> train_combos;
    train_combos.reserve(train_batch.size());
    for (const auto& r : train_batch) train_combos.push_back(r.combination);
    CombinationSet train_set(schema, std::move(train_combos));

    CombinationSet admissible = recombination_closure(train_set).set_difference(train_set);
    if (admissible.empty()) {
        throw NoPcompCandidatesError(
            "no pseudo-comp candidates: the recombination closure adds nothing beyond the train "
            "combinations");
    }

    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (admissible.contains(pool[i].combination)) candidates.push_back(i);
    }
    if (candidates.empty()) {
        throw PoolExhaustedError("pool exhausted: no pool record carries an admissible combination");
    }

    Rng rng(seed);
    rng.shuffle(candidates);
    PcompSample<Record> out;
    out.truncated = candidates.size() < size;
    const std::size_t take = std::min(size, candidates.size());
    out.records.reserve(take);
    for (std::size_t i = 0; i < take; ++i) out.records.push_back(pool[candidates[i]]);
    return out;
}

/// Record buckets for one split. Records of id-set combinations land in
/// `train` (minus an optional per-combination id-test holdout), comp-set
/// records in `comp_test`; the three buckets partition the input exactly.
struct Allocation {
    std::vector<LabeledRecord> train;
    std::vector<LabeledRecord> id_test;
    std::vector<LabeledRecord> comp_test;
    std::map<Combination, std::size_t> counts;  // input records per combination
};

Allocation allocate_records(std::span<const LabeledRecord> dataset, const Split& split,
                            std::size_t id_test_per_combination = 0, std::uint64_t seed = 0);

}  // namespace compsplit
