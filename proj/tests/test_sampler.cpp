#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "compsplit/protocols.hpp"
#include "compsplit/rng.hpp"
#include "compsplit/sampler.hpp"
#include "oracles.hpp"

using namespace compsplit;

namespace {

Combination combo(std::initializer_list<std::int32_t> values) {
    Combination c;
    c.values.assign(values);
    return c;
}

LabeledRecord record(std::initializer_list<std::int32_t> values, std::string text = "t") {
    return LabeledRecord{combo(values), std::move(text)};
}

// independent membership check: a combination is in the closure iff each of
// its values appears in some train combination at the same aspect
bool in_closure_oracle(const std::vector<Combination>& train, const Combination& c) {
    for (std::size_t i = 0; i < c.values.size(); ++i) {
        bool found = false;
        for (const auto& t : train) {
            if (t.values[i] == c.values[i]) {
                found = true;
                break;
            }
        }
        if (!found) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("recombination closure of the figure example") {
    // {pos-sport-past, neg-movie-present} -> all 8 recombinations
    auto schema = std::make_shared<AttributeSchema>(std::vector<AspectDef>{
        {"sentiment", {"positive", "negative"}},
        {"topic", {"sport", "movie"}},
        {"tense", {"past", "present"}},
    });
    CombinationSet train(schema, {combo({0, 0, 0}), combo({1, 1, 1})});
    const auto closure = recombination_closure(train);
    CHECK(closure.size() == 8);
    CHECK(closure.contains(combo({0, 1, 0})));  // positive-movie-past
    CHECK(closure.contains(combo({1, 0, 1})));  // negative-sport-present
}

TEST_CASE("closure of a single combination is itself") {
    auto schema = make_schema({2, 2, 2});
    CombinationSet train(schema, {combo({1, 0, 1})});
    const auto closure = recombination_closure(train);
    CHECK(closure.size() == 1);
    CHECK(closure.contains(combo({1, 0, 1})));
}

TEST_CASE("closure of the full product is the full product") {
    const auto all = full_product(make_schema({2, 3}));
    CHECK(recombination_closure(all) == all);
}

TEST_CASE("pcomp sampling on the figure example") {
    auto schema = make_schema({2, 2, 2});
    std::vector<LabeledRecord> train = {record({0, 0, 0}), record({1, 1, 1})};
    std::vector<LabeledRecord> pool = {record({0, 1, 0}, "a"), record({1, 0, 1}, "b"),
                                       record({0, 0, 0}, "c"), record({1, 1, 1}, "d")};
    const auto sample = sample_pcomp_batch<LabeledRecord>(schema, train, pool, 2, 1);
    REQUIRE(sample.records.size() == 2);
    std::set<std::string> texts;
    for (const auto& r : sample.records) texts.insert(r.text);
    CHECK(texts == std::set<std::string>{"a", "b"});  // train combos are excluded
}

TEST_CASE("single-combination train batches raise no-pcomp-candidates") {
    auto schema = make_schema({2, 2, 2});
    std::vector<LabeledRecord> train = {record({0, 0, 0}), record({0, 0, 0})};
    std::vector<LabeledRecord> pool = {record({0, 1, 0}), record({1, 0, 1})};
    CHECK_THROWS_WITH_AS(
        (sample_pcomp_batch<LabeledRecord>(schema, train, pool, 2, 1)),
        doctest::Contains("no pseudo-comp candidates"), NoPcompCandidatesError);
}

TEST_CASE("pool without admissible combinations raises pool-exhausted") {
    auto schema = make_schema({2, 2, 2});
    std::vector<LabeledRecord> train = {record({0, 0, 0}), record({1, 1, 1})};
    std::vector<LabeledRecord> pool = {record({0, 0, 0}), record({1, 1, 1})};  // only train combos
    CHECK_THROWS_AS((sample_pcomp_batch<LabeledRecord>(schema, train, pool, 2, 1)),
                    PoolExhaustedError);
}

TEST_CASE("undersized admissible pools truncate with a flag") {
    auto schema = make_schema({2, 2, 2});
    std::vector<LabeledRecord> train = {record({0, 0, 0}), record({1, 1, 1})};
    std::vector<LabeledRecord> pool = {record({0, 1, 0}, "only")};
    const auto sample = sample_pcomp_batch<LabeledRecord>(schema, train, pool, 5, 1);
    CHECK(sample.truncated);
    CHECK(sample.records.size() == 1);
}

TEST_CASE("pcomp sampling is deterministic under the seed") {
    auto schema = make_schema({2, 2, 2});
    std::vector<LabeledRecord> train = {record({0, 0, 0}), record({1, 1, 1})};
    std::vector<LabeledRecord> pool;
    for (int i = 0; i < 50; ++i) {
        pool.push_back(record({0, 1, 0}, "x" + std::to_string(i)));
        pool.push_back(record({1, 0, 1}, "y" + std::to_string(i)));
    }
    const auto a = sample_pcomp_batch<LabeledRecord>(schema, train, pool, 8, 42);
    const auto b = sample_pcomp_batch<LabeledRecord>(schema, train, pool, 8, 42);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].text == b.records[i].text);
    }
}

TEST_CASE("pcomp batches satisfy disjointness and closure membership") {
    Rng rng(808);
    std::size_t batches = 0;
    while (batches < 2000) {
        auto schema = oracles::random_schema(rng, 3, 4);
        const auto all = full_product(schema);
        auto members = all.members();
        rng.shuffle(members);

        // random train batch over a few combinations; pool over all of them
        const std::size_t train_combos = 2 + static_cast<std::size_t>(rng.below(3));
        std::vector<LabeledRecord> train;
        for (std::size_t i = 0; i < train_combos && i < members.size(); ++i) {
            train.push_back(LabeledRecord{members[i], "train"});
        }
        std::vector<LabeledRecord> pool;
        for (const auto& c : members) {
            for (int rep = 0; rep < 3; ++rep) pool.push_back(LabeledRecord{c, "pool"});
        }

        std::vector<Combination> train_combos_list;
        for (const auto& r : train) train_combos_list.push_back(r.combination);
        try {
            const auto sample =
                sample_pcomp_batch<LabeledRecord>(schema, train, pool, 4, rng.next());
            for (const auto& r : sample.records) {
                CHECK(in_closure_oracle(train_combos_list, r.combination));
                CHECK(std::find(train_combos_list.begin(), train_combos_list.end(),
                                r.combination) == train_combos_list.end());
            }
            ++batches;
        } catch (const NoPcompCandidatesError&) {
            // legal when the train combos admit no recombination
        }
    }
}

TEST_CASE("allocation matches the published corpus arithmetic") {
    // Fyelp-shaped corpus: 40 combinations x 1750 records = 70000
    const auto all = full_product(make_schema({2, 2, 5, 2}));
    std::vector<LabeledRecord> dataset;
    dataset.reserve(70000);
    for (const auto& c : all.members()) {
        for (int i = 0; i < 1750; ++i) dataset.push_back(LabeledRecord{c, "r"});
    }

    SUBCASE("few-shot: 8750 train records") {
        const auto bundle = fewshot_splits(all, {});
        const auto alloc = allocate_records(dataset, bundle.splits.front());
        CHECK(alloc.train.size() == 8750);
        CHECK(alloc.comp_test.size() == 61250);
        CHECK(alloc.id_test.empty());
    }
    SUBCASE("hold-out k=1: 68250 train records") {
        const auto bundle = holdout_splits(all, 1);
        const auto alloc = allocate_records(dataset, bundle.splits.front());
        CHECK(alloc.train.size() == 68250);
        CHECK(alloc.comp_test.size() == 1750);
    }
    SUBCASE("balanced acd: 35000 train records") {
        AcdSearchConfig config;
        config.t1_restarts = 5;
        config.eta_threshold = 0.01;
        config.rng_seed = 2;
        const auto bundle = acd_splits(all, config);
        REQUIRE_FALSE(bundle.splits.empty());
        const auto alloc = allocate_records(dataset, bundle.splits.front());
        CHECK(alloc.train.size() == 35000);
        CHECK(alloc.comp_test.size() == 35000);
    }
}

TEST_CASE("allocation partitions the input exactly") {
    const auto all = full_product(make_schema({2, 2}));
    std::vector<LabeledRecord> dataset;
    int n = 0;
    for (const auto& c : all.members()) {
        for (int i = 0; i < 7; ++i) dataset.push_back(LabeledRecord{c, "t" + std::to_string(n++)});
    }
    Split split;
    split.protocol = Protocol::Acd;
    split.id_set = CombinationSet(all.schema(), {combo({0, 0}), combo({1, 1})});
    split.comp_set = CombinationSet(all.schema(), {combo({0, 1}), combo({1, 0})});

    const auto alloc = allocate_records(dataset, split, 2, 99);
    CHECK(alloc.train.size() + alloc.id_test.size() + alloc.comp_test.size() == dataset.size());
    CHECK(alloc.id_test.size() == 4);  // 2 per id combination
    std::multiset<std::string> got, want;
    for (const auto& r : dataset) want.insert(r.text);
    for (const auto& r : alloc.train) got.insert(r.text);
    for (const auto& r : alloc.id_test) got.insert(r.text);
    for (const auto& r : alloc.comp_test) got.insert(r.text);
    CHECK(got == want);
    CHECK(alloc.counts.size() == 4);
    for (const auto& [c, count] : alloc.counts) CHECK(count == 7);
}

TEST_CASE("allocation rejects records outside the split") {
    const auto all = full_product(make_schema({2, 2}));
    Split split;
    split.id_set = CombinationSet(all.schema(), {combo({0, 0}), combo({1, 1})});
    split.comp_set = CombinationSet(all.schema(), {combo({0, 1})});
    std::vector<LabeledRecord> dataset = {record({1, 0})};
    CHECK_THROWS_AS(allocate_records(dataset, split), std::invalid_argument);
}
