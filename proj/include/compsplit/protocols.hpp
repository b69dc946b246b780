#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "compsplit/divergence.hpp"
#include "compsplit/schema.hpp"

namespace compsplit {

enum class SearchObjective { Maximize, Minimize };

/// Knobs for the divergence-guided searches (ACD restarts and the few-shot
/// hill-climbing fallback). The restart count T1, pass count T2 and the keep
/// threshold eta are search hyperparameters; alpha feeds the Chernoff
/// coefficient. Restarts may run in parallel (capped by COMPSPLIT_THREADS);
/// per-restart seeds are derived from rng_seed so results are bit-identical
/// to a sequential run.
struct AcdSearchConfig {
    int t1_restarts = 100;
    int t2_steps = 50;
    double eta_threshold = 0.5;
    double alpha = 0.5;
    std::uint64_t rng_seed = 0;
    SearchObjective objective = SearchObjective::Maximize;
    int threads = 0;  // 0 = hardware concurrency
};

/// Divergence trace of one search restart: the recorded best-so-far value
/// after the initial split and after every committed swap.
struct RestartReport {
    std::uint64_t seed = 0;
    std::vector<double> divergence_history;
    double final_divergence = 0.0;
    bool kept = false;
};

struct SplitBundle {
    Protocol protocol = Protocol::Original;
    SchemaPtr schema;
    std::vector<Split> splits;
    AcdSearchConfig config;
    int holdout_k = 0;
    std::string diagnostic;                  // set when a search returns nothing
    std::vector<RestartReport> restart_reports;  // ACD / min-divergence only
};

/// The trivial no-compositional-testing split: id = C, comp = empty.
Split original_split(const CombinationSet& all);

/// One split per eligible k-subset of C held out as the comp set.
/// k = 1 over a full product yields |C| splits.
SplitBundle holdout_splits(const CombinationSet& all, int k, double alpha = 0.5);

/// Minimal id sets covering every attribute value: |id| = max_i a_i. Among
/// all minimal covers, returns those with maximal compound divergence —
/// exhaustively when the cover count is small, by restart hill climbing
/// otherwise. Requires C to be the full product.
SplitBundle fewshot_splits(const CombinationSet& all, const AcdSearchConfig& config);

/// Balanced-split divergence search: T1 random balanced eligible restarts,
/// each up to T2 first-improvement swap passes (one combination id->comp,
/// one comp->id; moves breaking eligibility are rejected; a one-sided move
/// with no improving counterpart is rolled back). Final splits meeting the
/// eta threshold are kept and deduplicated. objective = Minimize gives the
/// minimum-divergence comparison protocol.
SplitBundle acd_splits(const CombinationSet& all, const AcdSearchConfig& config);

/// n uniformly sampled balanced eligible splits (rejection sampling,
/// deterministic under seed). Duplicates across draws are legal: the bundle
/// models repeated trials, not a set of distinct partitions.
SplitBundle random_splits(const CombinationSet& all, int n, std::uint64_t seed,
                          double alpha = 0.5);

}  // namespace compsplit
