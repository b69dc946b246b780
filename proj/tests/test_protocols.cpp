#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include "compsplit/protocols.hpp"
#include "compsplit/rng.hpp"
#include "oracles.hpp"

using namespace compsplit;

namespace {

Combination combo(std::initializer_list<std::int32_t> values) {
    Combination c;
    c.values.assign(values);
    return c;
}

void check_bundle_eligibility(const SplitBundle& bundle, bool balanced) {
    for (const auto& split : bundle.splits) {
        CHECK(validate_split(split).eligible);
        if (balanced) CHECK(split.id_set.size() == split.comp_set.size());
    }
}

}  // namespace

TEST_CASE("hold-out split counts follow the |C| law") {
    CHECK(holdout_splits(full_product(make_schema({2, 2, 5, 2})), 1).splits.size() == 40);
    CHECK(holdout_splits(full_product(make_schema({2, 6})), 1).splits.size() == 12);
    CHECK(holdout_splits(full_product(make_schema({2, 2, 2})), 1).splits.size() == 8);
    CHECK(holdout_splits(full_product(make_schema({2, 4})), 1).splits.size() == 8);
}

TEST_CASE("hold-out splits are eligible with comp size k") {
    const auto all = full_product(make_schema({2, 2, 2}));
    const auto bundle = holdout_splits(all, 2);
    CHECK(bundle.splits.size() == 28);  // C(8,2), all eligible on this shape
    for (const auto& split : bundle.splits) {
        CHECK(split.comp_set.size() == 2);
        CHECK(validate_split(split).eligible);
        CHECK(split.divergence.has_value());
    }
}

TEST_CASE("hold-out rejects degenerate k") {
    const auto all = full_product(make_schema({2, 2}));
    CHECK_THROWS_AS(holdout_splits(all, 0), std::invalid_argument);
    CHECK_THROWS_AS(holdout_splits(all, 4), std::invalid_argument);
    CHECK_THROWS_AS(holdout_splits(all, -1), std::invalid_argument);
}

TEST_CASE("original split is eligible with an empty comp set") {
    const auto all = full_product(make_schema({2, 3}));
    const auto split = original_split(all);
    CHECK(split.comp_set.empty());
    CHECK_FALSE(split.divergence.has_value());
    CHECK(validate_split(split).eligible);
}

TEST_CASE("few-shot on 2x2 returns exactly the two diagonal covers") {
    const auto all = full_product(make_schema({2, 2}));
    const auto bundle = fewshot_splits(all, {});
    REQUIRE(bundle.splits.size() == 2);
    const std::vector<Combination> diag = {combo({0, 0}), combo({1, 1})};
    const std::vector<Combination> anti = {combo({0, 1}), combo({1, 0})};
    CHECK(bundle.splits[0].id_set.members() == diag);
    CHECK(bundle.splits[1].id_set.members() == anti);
    CHECK(*bundle.splits[0].divergence == *bundle.splits[1].divergence);
    check_bundle_eligibility(bundle, false);
}

TEST_CASE("few-shot id size equals the largest aspect cardinality") {
    SUBCASE("fyelp shape: 5 of 40") {
        const auto bundle = fewshot_splits(full_product(make_schema({2, 2, 5, 2})), {});
        REQUIRE_FALSE(bundle.splits.empty());
        for (const auto& split : bundle.splits) {
            CHECK(split.id_set.size() == 5);
            CHECK(split.comp_set.size() == 35);
        }
        check_bundle_eligibility(bundle, false);
    }
    SUBCASE("amazon shape: 6 of 12") {
        const auto bundle = fewshot_splits(full_product(make_schema({2, 6})), {});
        REQUIRE_FALSE(bundle.splits.empty());
        for (const auto& split : bundle.splits) CHECK(split.id_set.size() == 6);
        check_bundle_eligibility(bundle, false);
    }
    SUBCASE("random small shapes") {
        Rng rng(31);
        for (int trial = 0; trial < 20; ++trial) {
            auto schema = oracles::random_schema(rng, 3, 4);
            const auto bundle = fewshot_splits(full_product(schema), {});
            std::size_t m_max = 0;
            for (const auto& a : schema->aspects()) m_max = std::max(m_max, a.values.size());
            REQUIRE_FALSE(bundle.splits.empty());
            for (const auto& split : bundle.splits) CHECK(split.id_set.size() == m_max);
            check_bundle_eligibility(bundle, false);
        }
    }
}

TEST_CASE("few-shot returns only maximal-divergence minimal covers") {
    const auto all = full_product(make_schema({2, 3}));
    const auto bundle = fewshot_splits(all, {});
    REQUIRE_FALSE(bundle.splits.empty());
    // oracle: enumerate every 3-subset, keep covering ones, find max divergence
    double best = -1.0;
    const auto& members = all.members();
    for (std::size_t a = 0; a < members.size(); ++a) {
        for (std::size_t b = a + 1; b < members.size(); ++b) {
            for (std::size_t c = b + 1; c < members.size(); ++c) {
                CombinationSet id_set(all.schema(), {members[a], members[b], members[c]});
                const auto cov = covered_attributes(id_set);
                if (cov[0].size() != 2 || cov[1].size() != 3) continue;
                best = std::max(best, compound_divergence(id_set, all.set_difference(id_set), 0.5));
            }
        }
    }
    for (const auto& split : bundle.splits) {
        CHECK(*split.divergence == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("few-shot rejects non-product universes") {
    const auto all = full_product(make_schema({2, 2}));
    CombinationSet partial(all.schema(), {combo({0, 0}), combo({1, 1})});
    CHECK_THROWS_AS(fewshot_splits(partial, {}), std::invalid_argument);
}

TEST_CASE("few-shot hill-climbing fallback on a large cover space") {
    // 2^5 x 8 shape: way beyond the enumeration budget
    AcdSearchConfig config;
    config.t1_restarts = 8;
    config.t2_steps = 10;
    config.rng_seed = 5;
    const auto all = full_product(make_schema({2, 2, 2, 2, 2, 8}));
    const auto bundle = fewshot_splits(all, config);
    REQUIRE_FALSE(bundle.splits.empty());
    for (const auto& split : bundle.splits) CHECK(split.id_set.size() == 8);
    check_bundle_eligibility(bundle, false);
}

TEST_CASE("acd on 2x2 finds the diagonal split with divergence 1") {
    AcdSearchConfig config;
    config.t1_restarts = 10;
    config.eta_threshold = 0.9;
    config.rng_seed = 17;
    const auto all = full_product(make_schema({2, 2}));
    const auto bundle = acd_splits(all, config);
    REQUIRE_FALSE(bundle.splits.empty());
    const std::vector<Combination> diag = {combo({0, 0}), combo({1, 1})};
    const std::vector<Combination> anti = {combo({0, 1}), combo({1, 0})};
    for (const auto& split : bundle.splits) {
        CHECK(*split.divergence == 1.0);
        const bool is_diag = split.id_set.members() == diag || split.id_set.members() == anti;
        CHECK(is_diag);
    }
    check_bundle_eligibility(bundle, true);
}

TEST_CASE("acd attains the brute-force optimum on small schemas") {
    AcdSearchConfig config;
    config.t1_restarts = 50;
    config.eta_threshold = 0.01;  // keep everything; we compare the best found
    config.rng_seed = 29;
    const std::vector<std::vector<std::size_t>> shapes = {{2, 2, 2}, {2, 4}, {2, 3}};
    for (const auto& shape : shapes) {
        const auto all = full_product(make_schema(shape));
        if (all.size() % 2 != 0) continue;
        const auto bundle = acd_splits(all, config);
        REQUIRE_FALSE(bundle.splits.empty());
        const double best_found = *bundle.splits.front().divergence;
        const double best_true = oracles::brute_force_best_divergence(all, config.alpha, true);
        CHECK(best_found == best_true);
        check_bundle_eligibility(bundle, true);
    }
}

TEST_CASE("acd divergence history is nondecreasing within every restart") {
    AcdSearchConfig config;
    config.t1_restarts = 30;
    config.eta_threshold = 0.01;
    config.rng_seed = 41;
    const auto bundle = acd_splits(full_product(make_schema({2, 2, 2})), config);
    REQUIRE(bundle.restart_reports.size() == 30);
    for (const auto& report : bundle.restart_reports) {
        REQUIRE_FALSE(report.divergence_history.empty());
        CHECK(std::is_sorted(report.divergence_history.begin(), report.divergence_history.end()));
        CHECK(report.final_divergence ==
              doctest::Approx(report.divergence_history.back()).epsilon(1e-12));
    }
}

TEST_CASE("acd rejects odd universes and bad configs") {
    const auto odd = full_product(make_schema({3, 3}));
    CHECK_THROWS_AS(acd_splits(odd, {}), std::invalid_argument);
    AcdSearchConfig bad;
    bad.eta_threshold = 1.5;
    CHECK_THROWS_AS(acd_splits(full_product(make_schema({2, 2})), bad), std::invalid_argument);
}

TEST_CASE("unreachable eta yields an empty bundle with a diagnostic") {
    AcdSearchConfig config;
    config.t1_restarts = 5;
    config.eta_threshold = 0.99;
    config.rng_seed = 3;
    const auto bundle = acd_splits(full_product(make_schema({2, 2, 2})), config);
    CHECK(bundle.splits.empty());
    CHECK(bundle.diagnostic.find("eta") != std::string::npos);
}

TEST_CASE("random splits are deterministic and eligible") {
    const auto all = full_product(make_schema({2, 2, 2}));
    const auto a = random_splits(all, 20, 77);
    const auto b = random_splits(all, 20, 77);
    REQUIRE(a.splits.size() == 20);
    for (std::size_t i = 0; i < a.splits.size(); ++i) {
        CHECK(a.splits[i].id_set.members() == b.splits[i].id_set.members());
        CHECK(*a.splits[i].divergence == *b.splits[i].divergence);
    }
    check_bundle_eligibility(a, true);
}

TEST_CASE("random split on 2x2 is one of the two eligible balanced partitions") {
    const auto all = full_product(make_schema({2, 2}));
    const std::vector<Combination> diag = {combo({0, 0}), combo({1, 1})};
    const std::vector<Combination> anti = {combo({0, 1}), combo({1, 0})};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto bundle = random_splits(all, 1, seed);
        const auto& id = bundle.splits.front().id_set.members();
        CHECK((id == diag || id == anti));
    }
}

TEST_CASE("divergence ordering: min <= random mean < acd max on the 2x2x2 shape") {
    const auto all = full_product(make_schema({2, 2, 2}));

    AcdSearchConfig max_config;
    max_config.t1_restarts = 50;
    max_config.eta_threshold = 0.01;
    max_config.rng_seed = 5;
    const double acd_best = *acd_splits(all, max_config).splits.front().divergence;

    AcdSearchConfig min_config = max_config;
    min_config.objective = SearchObjective::Minimize;
    min_config.eta_threshold = 0.99;  // keep everything on the minimizing side
    const auto min_bundle = acd_splits(all, min_config);
    REQUIRE_FALSE(min_bundle.splits.empty());
    const double min_best = *min_bundle.splits.front().divergence;

    CHECK(min_best == oracles::brute_force_best_divergence(all, 0.5, false));
    CHECK(acd_best == oracles::brute_force_best_divergence(all, 0.5, true));

    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto bundle = random_splits(all, 100, seed);
        double mean = 0.0;
        for (const auto& split : bundle.splits) mean += *split.divergence;
        mean /= static_cast<double>(bundle.splits.size());
        CHECK(mean > min_best);
        CHECK(mean < acd_best);
    }
}

TEST_CASE("minimum-divergence splits sit below the random-sampling mean") {
    const auto all = full_product(make_schema({2, 2, 2}));
    AcdSearchConfig config;
    config.objective = SearchObjective::Minimize;
    config.t1_restarts = 30;
    config.eta_threshold = 0.99;
    config.rng_seed = 13;
    const auto bundle = acd_splits(all, config);
    REQUIRE_FALSE(bundle.splits.empty());
    CHECK(bundle.protocol == Protocol::MinDivergence);

    const auto random_bundle = random_splits(all, 100, 13);
    double mean = 0.0;
    for (const auto& split : random_bundle.splits) mean += *split.divergence;
    mean /= static_cast<double>(random_bundle.splits.size());
    CHECK(*bundle.splits.front().divergence < mean);
    check_bundle_eligibility(bundle, true);
}

TEST_CASE("every protocol emits eligible splits on randomized schemas") {
    std::size_t checked = 0;
    Rng trial_rng(2025);
    while (checked < 1000) {
        auto schema = oracles::random_schema(trial_rng, 4, 6);
        const auto all = full_product(schema);
        if (all.size() > 72) continue;

        if (all.size() <= 40) {
            const auto bundle = holdout_splits(all, 1);
            for (const auto& split : bundle.splits) {
                CHECK(validate_split(split).eligible);
                ++checked;
            }
        }
        if (all.size() % 2 == 0) {
            const auto bundle = random_splits(all, 2, trial_rng.next());
            for (const auto& split : bundle.splits) {
                CHECK(validate_split(split).eligible);
                CHECK(split.id_set.size() == split.comp_set.size());
                ++checked;
            }
            if (all.size() <= 16) {
                AcdSearchConfig config;
                config.t1_restarts = 2;
                config.t2_steps = 5;
                config.eta_threshold = 0.01;
                config.rng_seed = trial_rng.next();
                const auto acd = acd_splits(all, config);
                for (const auto& split : acd.splits) {
                    CHECK(validate_split(split).eligible);
                    CHECK(split.id_set.size() == split.comp_set.size());
                    ++checked;
                }
            }
        }
        if (schema->aspect_count() == 2 && all.size() <= 24) {
            const auto bundle = fewshot_splits(all, {});
            for (const auto& split : bundle.splits) {
                CHECK(validate_split(split).eligible);
                ++checked;
            }
        }
    }
    CHECK(checked >= 1000);
}

TEST_CASE("restart parallelism never changes the result") {
    const auto all = full_product(make_schema({2, 2, 5, 2}));
    AcdSearchConfig config;
    config.t1_restarts = 16;
    config.eta_threshold = 0.2;
    config.rng_seed = 99;

    config.threads = 1;
    const auto sequential = acd_splits(all, config);
    config.threads = 4;
    const auto parallel = acd_splits(all, config);

    REQUIRE(sequential.splits.size() == parallel.splits.size());
    for (std::size_t i = 0; i < sequential.splits.size(); ++i) {
        CHECK(sequential.splits[i].id_set.members() == parallel.splits[i].id_set.members());
        CHECK(*sequential.splits[i].divergence == *parallel.splits[i].divergence);
    }

    // COMPSPLIT_THREADS caps the pool; capping must not change results either
    setenv("COMPSPLIT_THREADS", "2", 1);
    config.threads = 0;
    const auto capped = acd_splits(all, config);
    unsetenv("COMPSPLIT_THREADS");
    REQUIRE(capped.splits.size() == sequential.splits.size());
    for (std::size_t i = 0; i < sequential.splits.size(); ++i) {
        CHECK(capped.splits[i].id_set.members() == sequential.splits[i].id_set.members());
    }
}

TEST_CASE("restart wall time grows roughly linearly in |C|") {
    auto time_restarts = [](std::size_t values) {
        AcdSearchConfig config;
        config.t1_restarts = 40;
        config.t2_steps = 10;
        config.eta_threshold = 0.01;
        config.rng_seed = 9;
        config.threads = 1;
        const auto all = full_product(make_schema({2, values}));
        double best = 1e30;
        for (int rep = 0; rep < 3; ++rep) {
            const auto start = std::chrono::steady_clock::now();
            acd_splits(all, config);
            const auto stop = std::chrono::steady_clock::now();
            best = std::min(best, std::chrono::duration<double>(stop - start).count());
        }
        return best;
    };
    const double small = time_restarts(24);   // |C| = 48
    const double large = time_restarts(48);   // |C| = 96
    CHECK(large / small < 4.0);
}
