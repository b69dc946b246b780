#include "compsplit/protocols.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <set>
#include <stdexcept>
#include <thread>

#include "compsplit/rng.hpp"

namespace compsplit {

namespace {

constexpr std::size_t kHoldoutEnumerationCap = 2'000'000;
constexpr double kFewshotEnumerationBudget = 200'000.0;
constexpr int kBalancedSampleBudget = 10'000;
constexpr double kTieTolerance = 1e-12;

double binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0.0;
    k = std::min(k, n - k);
    double r = 1.0;
    for (std::size_t i = 1; i <= k; ++i) {
        r *= static_cast<double>(n - k + i) / static_cast<double>(i);
    }
    return r;
}

int effective_threads(int requested, int jobs) {
    int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    if (const char* cap = std::getenv("COMPSPLIT_THREADS")) {
        int c = std::atoi(cap);
        if (c >= 1) n = std::min(n, c);
    }
    return std::min(n, std::max(jobs, 1));
}

// Runs fn(i) for i in [0, jobs) on up to `threads` workers. Each job writes
// only its own slot, so the merged result is independent of scheduling.
template <class Fn>
void parallel_for(int jobs, int threads, Fn&& fn) {
    if (threads <= 1 || jobs <= 1) {
        for (int i = 0; i < jobs; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next.fetch_add(1); i < jobs; i = next.fetch_add(1)) fn(i);
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

bool better(double candidate, double incumbent, SearchObjective objective) {
    return objective == SearchObjective::Maximize ? candidate > incumbent : candidate < incumbent;
}

// ---------------------------------------------------------------------------
// Scratch state for balanced-split hill climbing over one universe.
//
// Pair counts are kept per side in dense tables indexed by flattened
// (aspect, value) rows, together with the raw Chernoff sum
//   T = sum_k f(cnt_id[k], cnt_comp[k]),
// which turns a candidate move evaluation into an O(m^2) delta instead of a
// rescan of all members. S is recovered from T and the side sizes since the
// frequency normalizers factor out of every term.
// ---------------------------------------------------------------------------
class BalancedSearchState {
public:
    BalancedSearchState(const CombinationSet& all, double alpha)
        : universe_(all.members()), schema_(all.schema()), alpha_(alpha) {
        const std::size_t m = schema_->aspect_count();
        rows_ = schema_->total_values();
        combo_rows_.resize(universe_.size());
        combo_keys_.resize(universe_.size());
        for (std::size_t u = 0; u < universe_.size(); ++u) {
            const auto& c = universe_[u];
            for (std::size_t i = 0; i < m; ++i) {
                combo_rows_[u].push_back(schema_->value_row(i, static_cast<std::size_t>(c.values[i])));
            }
            for (std::size_t i = 0; i + 1 < m; ++i) {
                for (std::size_t j = i + 1; j < m; ++j) {
                    combo_keys_[u].push_back(combo_rows_[u][i] * rows_ + combo_rows_[u][j]);
                }
            }
        }
        total_value_count_.assign(rows_, 0);
        for (std::size_t u = 0; u < universe_.size(); ++u) {
            for (std::size_t r : combo_rows_[u]) ++total_value_count_[r];
        }
        for (const auto& keys : combo_keys_) {
            all_keys_.insert(all_keys_.end(), keys.begin(), keys.end());
        }
        std::sort(all_keys_.begin(), all_keys_.end());
        all_keys_.erase(std::unique(all_keys_.begin(), all_keys_.end()), all_keys_.end());
    }

    std::size_t size() const { return universe_.size(); }

    void reset(const std::vector<char>& in_id) {
        in_id_ = in_id;
        cnt_id_.assign(rows_ * rows_, 0);
        cnt_comp_.assign(rows_ * rows_, 0);
        id_value_count_.assign(rows_, 0);
        n_id_ = n_comp_ = 0;
        for (std::size_t u = 0; u < universe_.size(); ++u) {
            auto& cnt = in_id_[u] ? cnt_id_ : cnt_comp_;
            for (std::size_t k : combo_keys_[u]) ++cnt[k];
            if (in_id_[u]) {
                ++n_id_;
                for (std::size_t r : combo_rows_[u]) ++id_value_count_[r];
            } else {
                ++n_comp_;
            }
        }
        rebuild_t();
    }

    bool in_id(std::size_t u) const { return in_id_[u] != 0; }

    // Clause (c) survives removing u from the id side iff u is not the last
    // id holder of any of its attribute values.
    bool removable_from_id(std::size_t u) const {
        for (std::size_t r : combo_rows_[u]) {
            if (id_value_count_[r] <= 1) return false;
        }
        return true;
    }

    // Divergence of the hypothetical state after moving u across. Pure.
    double eval_move(std::size_t u, bool to_comp) const {
        double t = t_sum_;
        for (std::size_t k : combo_keys_[u]) {
            const double x = static_cast<double>(cnt_id_[k]);
            const double y = static_cast<double>(cnt_comp_[k]);
            const double dx = to_comp ? -1.0 : 1.0;
            t += term(x + dx, y - dx) - term(x, y);
        }
        const double ni = static_cast<double>(n_id_) + (to_comp ? -1.0 : 1.0);
        const double nc = static_cast<double>(n_comp_) + (to_comp ? 1.0 : -1.0);
        return divergence_from(t, ni, nc);
    }

    // Divergence after swapping u (id -> comp) against v (comp -> id). Pure.
    double eval_swap(std::size_t u, std::size_t v) const {
        std::vector<std::pair<std::size_t, int>> deltas;  // key -> change of cnt_id
        deltas.reserve(combo_keys_[u].size() + combo_keys_[v].size());
        for (std::size_t k : combo_keys_[u]) deltas.emplace_back(k, -1);
        for (std::size_t k : combo_keys_[v]) deltas.emplace_back(k, +1);
        std::sort(deltas.begin(), deltas.end());
        double t = t_sum_;
        for (std::size_t i = 0; i < deltas.size();) {
            const std::size_t key = deltas[i].first;
            int net = 0;
            while (i < deltas.size() && deltas[i].first == key) net += deltas[i++].second;
            if (net == 0) continue;
            const double x = static_cast<double>(cnt_id_[key]);
            const double y = static_cast<double>(cnt_comp_[key]);
            t += term(x + net, y - net) - term(x, y);
        }
        return divergence_from(t, static_cast<double>(n_id_), static_cast<double>(n_comp_));
    }

    // Clause (c) survives the swap iff v backfills every value u was the last
    // id holder of.
    bool eligible_swap(std::size_t u, std::size_t v) const {
        for (std::size_t r : combo_rows_[u]) {
            if (id_value_count_[r] > 1) continue;
            bool backfilled = false;
            for (std::size_t rv : combo_rows_[v]) backfilled |= rv == r;
            if (!backfilled) return false;
        }
        return true;
    }

    void apply_move(std::size_t u, bool to_comp) {
        auto& from = to_comp ? cnt_id_ : cnt_comp_;
        auto& to = to_comp ? cnt_comp_ : cnt_id_;
        for (std::size_t k : combo_keys_[u]) {
            --from[k];
            ++to[k];
        }
        for (std::size_t r : combo_rows_[u]) id_value_count_[r] += to_comp ? -1 : 1;
        n_id_ += to_comp ? -1 : 1;
        n_comp_ += to_comp ? 1 : -1;
        in_id_[u] = to_comp ? 0 : 1;
        rebuild_t();
    }

    // Exact recompute through the public divergence path; used to confirm
    // improvements before committing and to report final values.
    double fresh_divergence() const {
        auto [id_set, comp_set] = current_sets();
        return compound_divergence(id_set, comp_set, alpha_);
    }

    std::pair<CombinationSet, CombinationSet> current_sets() const {
        std::vector<Combination> id_members, comp_members;
        for (std::size_t u = 0; u < universe_.size(); ++u) {
            (in_id_[u] ? id_members : comp_members).push_back(universe_[u]);
        }
        return {CombinationSet(schema_, std::move(id_members)),
                CombinationSet(schema_, std::move(comp_members))};
    }

    // Balanced eligible start. Plain rejection keeps the draw uniform over
    // eligible balanced splits; with `repair` enabled, clause-c violations are
    // fixed by swapping a violating comp member against a removable id member
    // (non-uniform but robust on shapes where eligible halves are rare).
    bool randomize(Rng& rng, bool repair = false) {
        std::vector<std::size_t> order(universe_.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::vector<char> in_id(universe_.size(), 0);
        const int budget = repair ? 100 : kBalancedSampleBudget;
        for (int attempt = 0; attempt < budget; ++attempt) {
            rng.shuffle(order);
            std::fill(in_id.begin(), in_id.end(), 0);
            for (std::size_t i = 0; i < universe_.size() / 2; ++i) in_id[order[i]] = 1;
            if (repair ? repair_assignment(in_id, rng) : eligible_assignment(in_id)) {
                reset(in_id);
                return true;
            }
        }
        return false;
    }

private:
    double term(double x, double y) const {
        if (alpha_ == 0.0) return x > 0.0 ? y : 0.0;
        if (alpha_ == 1.0) return y > 0.0 ? x : 0.0;
        return (x > 0.0 && y > 0.0) ? std::pow(x, alpha_) * std::pow(y, 1.0 - alpha_) : 0.0;
    }

    double divergence_from(double t, double n_id, double n_comp) const {
        const std::size_t m = schema_->aspect_count();
        const double mm = static_cast<double>(m) * static_cast<double>(m - 1);
        double scale;
        if (alpha_ == 0.0) {
            scale = 2.0 / (mm * n_comp);
        } else if (alpha_ == 1.0) {
            scale = 2.0 / (mm * n_id);
        } else {
            scale = std::pow(2.0 / (mm * n_id), alpha_) * std::pow(2.0 / (mm * n_comp), 1.0 - alpha_);
        }
        return std::clamp(1.0 - scale * t, 0.0, 1.0);
    }

    void rebuild_t() {
        t_sum_ = 0.0;
        for (std::size_t k : all_keys_) {
            t_sum_ += term(static_cast<double>(cnt_id_[k]), static_cast<double>(cnt_comp_[k]));
        }
    }

    bool eligible_assignment(const std::vector<char>& in_id) const {
        std::vector<std::int32_t> idc(rows_, 0);
        for (std::size_t u = 0; u < universe_.size(); ++u) {
            if (!in_id[u]) continue;
            for (std::size_t r : combo_rows_[u]) ++idc[r];
        }
        for (std::size_t r = 0; r < rows_; ++r) {
            if (idc[r] == 0 && total_value_count_[r] > idc[r]) return false;
        }
        return true;
    }

    // Every swap covers one missing value without uncovering any other, so at
    // most `rows_` swaps are needed or the assignment is a dead end.
    bool repair_assignment(std::vector<char>& in_id, Rng& rng) const {
        std::vector<std::int32_t> idc(rows_, 0);
        for (std::size_t u = 0; u < universe_.size(); ++u) {
            if (!in_id[u]) continue;
            for (std::size_t r : combo_rows_[u]) ++idc[r];
        }
        for (std::size_t guard = 0; guard <= rows_; ++guard) {
            std::size_t missing = rows_;
            for (std::size_t r = 0; r < rows_; ++r) {
                if (idc[r] == 0 && total_value_count_[r] > 0) {
                    missing = r;
                    break;
                }
            }
            if (missing == rows_) return true;

            std::vector<std::size_t> donors;    // comp members holding the value
            std::vector<std::size_t> removable;  // id members safe to give up
            for (std::size_t u = 0; u < universe_.size(); ++u) {
                if (!in_id[u]) {
                    for (std::size_t r : combo_rows_[u]) {
                        if (r == missing) {
                            donors.push_back(u);
                            break;
                        }
                    }
                } else {
                    bool safe = true;
                    for (std::size_t r : combo_rows_[u]) safe &= idc[r] >= 2;
                    if (safe) removable.push_back(u);
                }
            }
            if (donors.empty() || removable.empty()) return false;
            const std::size_t in = donors[static_cast<std::size_t>(rng.below(donors.size()))];
            const std::size_t out =
                removable[static_cast<std::size_t>(rng.below(removable.size()))];
            in_id[in] = 1;
            in_id[out] = 0;
            for (std::size_t r : combo_rows_[in]) ++idc[r];
            for (std::size_t r : combo_rows_[out]) --idc[r];
        }
        return false;
    }

    std::vector<Combination> universe_;
    SchemaPtr schema_;
    double alpha_;
    std::size_t rows_ = 0;
    std::vector<std::vector<std::size_t>> combo_rows_;  // per combo: row of each aspect value
    std::vector<std::vector<std::size_t>> combo_keys_;  // per combo: dense pair keys
    std::vector<std::size_t> all_keys_;                 // realizable pair keys, sorted
    std::vector<std::int32_t> total_value_count_;
    std::vector<char> in_id_;
    std::vector<std::int32_t> cnt_id_, cnt_comp_;
    std::vector<std::int32_t> id_value_count_;
    std::size_t n_id_ = 0, n_comp_ = 0;
    double t_sum_ = 0.0;
};

struct RestartOutcome {
    bool valid = false;
    std::vector<Combination> id_members;
    double divergence = 0.0;
    RestartReport report;
};

RestartOutcome run_restart(const CombinationSet& all, const AcdSearchConfig& config,
                           std::uint64_t restart_seed) {
    RestartOutcome out;
    out.report.seed = restart_seed;
    Rng rng(restart_seed);

    BalancedSearchState state(all, config.alpha);
    if (!state.randomize(rng, /*repair=*/true)) return out;

    double d_m = state.fresh_divergence();
    out.report.divergence_history.push_back(d_m);

    std::vector<std::size_t> order(state.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int t2 = 0; t2 < config.t2_steps; ++t2) {
        rng.shuffle(order);

        // id -> comp: first strictly improving, eligibility-preserving move
        std::size_t moved_out = state.size();
        double d_unbalanced = d_m;
        for (std::size_t u : order) {
            if (!state.in_id(u) || !state.removable_from_id(u)) continue;
            if (!better(state.eval_move(u, /*to_comp=*/true), d_m, config.objective)) continue;
            state.apply_move(u, true);
            const double fresh = state.fresh_divergence();
            if (better(fresh, d_m, config.objective)) {
                moved_out = u;
                d_unbalanced = fresh;
                break;
            }
            state.apply_move(u, false);  // incremental estimate not confirmed
        }

        if (moved_out != state.size()) {
            // comp -> id: restore balance, again only on strict improvement
            rng.shuffle(order);
            std::size_t moved_in = state.size();
            for (std::size_t u : order) {
                if (state.in_id(u)) continue;
                if (!better(state.eval_move(u, /*to_comp=*/false), d_unbalanced, config.objective)) {
                    continue;
                }
                state.apply_move(u, false);
                const double fresh = state.fresh_divergence();
                if (better(fresh, d_unbalanced, config.objective)) {
                    moved_in = u;
                    d_m = fresh;
                    out.report.divergence_history.push_back(d_m);
                    break;
                }
                state.apply_move(u, true);
            }
            if (moved_in != state.size()) continue;
            state.apply_move(moved_out, false);  // no counterpart: roll back, stay balanced
        }

        // Plateau of the two-stage rule: sample whole swaps, requiring only the
        // final balanced state to improve. O(|C|) samples keeps the pass linear.
        std::vector<std::size_t> id_side, comp_side;
        for (std::size_t u = 0; u < state.size(); ++u) {
            (state.in_id(u) ? id_side : comp_side).push_back(u);
        }
        for (std::size_t attempt = 0; attempt < state.size(); ++attempt) {
            const std::size_t u = id_side[static_cast<std::size_t>(rng.below(id_side.size()))];
            const std::size_t v = comp_side[static_cast<std::size_t>(rng.below(comp_side.size()))];
            if (!state.eligible_swap(u, v)) continue;
            if (!better(state.eval_swap(u, v), d_m, config.objective)) continue;
            state.apply_move(u, true);
            state.apply_move(v, false);
            const double fresh = state.fresh_divergence();
            if (better(fresh, d_m, config.objective)) {
                d_m = fresh;
                out.report.divergence_history.push_back(d_m);
                break;
            }
            state.apply_move(v, true);
            state.apply_move(u, false);
        }
    }

    auto [id_set, comp_set] = state.current_sets();
    out.valid = true;
    out.id_members = id_set.members();
    out.divergence = state.fresh_divergence();
    out.report.final_divergence = out.divergence;
    return out;
}

}  // namespace

Split original_split(const CombinationSet& all) {
    Split s;
    s.protocol = Protocol::Original;
    s.id_set = all;
    s.comp_set = CombinationSet(all.schema(), {});
    return s;
}

SplitBundle holdout_splits(const CombinationSet& all, int k, double alpha) {
    if (all.empty()) throw std::invalid_argument("hold-out needs a nonempty combination set");
    if (k <= 0) {
        throw std::invalid_argument("hold-out needs k >= 1; use the original protocol for k = 0");
    }
    const std::size_t n = all.size();
    if (static_cast<std::size_t>(k) >= n) {
        throw std::invalid_argument("hold-out needs k < |C| (k=" + std::to_string(k) +
                                    ", |C|=" + std::to_string(n) + ")");
    }
    if (binomial(n, static_cast<std::size_t>(k)) > static_cast<double>(kHoldoutEnumerationCap)) {
        throw std::invalid_argument("hold-out enumeration of C(" + std::to_string(n) + "," +
                                    std::to_string(k) + ") subsets is too large");
    }

    SplitBundle bundle;
    bundle.protocol = Protocol::HoldOut;
    bundle.schema = all.schema();
    bundle.holdout_k = k;
    bundle.config.alpha = alpha;

    const auto& members = all.members();
    std::vector<std::size_t> pick(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < pick.size(); ++i) pick[i] = i;
    while (true) {
        std::vector<Combination> comp_members;
        comp_members.reserve(pick.size());
        std::vector<char> held(n, 0);
        for (std::size_t i : pick) {
            comp_members.push_back(members[i]);
            held[i] = 1;
        }
        std::vector<Combination> id_members;
        id_members.reserve(n - pick.size());
        for (std::size_t i = 0; i < n; ++i) {
            if (!held[i]) id_members.push_back(members[i]);
        }
        CombinationSet id_set(all.schema(), std::move(id_members));
        CombinationSet comp_set(all.schema(), std::move(comp_members));
        if (is_eligible_split(all, id_set, comp_set).eligible) {
            Split s;
            s.protocol = Protocol::HoldOut;
            s.divergence = compound_divergence(id_set, comp_set, alpha);
            s.id_set = std::move(id_set);
            s.comp_set = std::move(comp_set);
            bundle.splits.push_back(std::move(s));
        }
        // next k-subset in lexicographic order
        std::size_t i = pick.size();
        while (i > 0) {
            --i;
            if (pick[i] != i + n - pick.size()) break;
            if (i == 0) {
                if (bundle.splits.empty()) {
                    throw std::runtime_error("no eligible hold-out subset of size " + std::to_string(k));
                }
                return bundle;
            }
        }
        ++pick[i];
        for (std::size_t j = i + 1; j < pick.size(); ++j) pick[j] = pick[j - 1] + 1;
    }
}

namespace {

double surjection_count(std::size_t slots, std::size_t values) {
    double total = 0.0;
    for (std::size_t k = 0; k <= values; ++k) {
        const double ways = binomial(values, k) * std::pow(static_cast<double>(values - k),
                                                           static_cast<double>(slots));
        total += (k % 2 == 0) ? ways : -ways;
    }
    return total;
}

// All surjective slot->value assignments for one aspect, lexicographic.
std::vector<std::vector<std::int32_t>> surjective_assignments(std::size_t slots, std::size_t values) {
    std::vector<std::vector<std::int32_t>> out;
    std::vector<std::int32_t> cur(slots, 0);
    while (true) {
        std::vector<char> seen(values, 0);
        for (std::int32_t v : cur) seen[static_cast<std::size_t>(v)] = 1;
        if (std::find(seen.begin(), seen.end(), 0) == seen.end()) out.push_back(cur);
        std::size_t i = slots;
        while (i > 0) {
            --i;
            if (static_cast<std::size_t>(++cur[i]) < values) break;
            cur[i] = 0;
            if (i == 0) return out;
        }
    }
}

Combination cover_member(const AttributeSchema& schema, std::size_t anchor_aspect,
                         std::int32_t anchor_value,
                         const std::vector<std::vector<std::int32_t>>& assignment,
                         const std::vector<std::size_t>& other_aspects, std::size_t slot) {
    Combination c;
    c.values.assign(schema.aspect_count(), 0);
    c.values[anchor_aspect] = anchor_value;
    for (std::size_t a = 0; a < other_aspects.size(); ++a) {
        c.values[other_aspects[a]] = assignment[a][slot];
    }
    return c;
}

}  // namespace

SplitBundle fewshot_splits(const CombinationSet& all, const AcdSearchConfig& config) {
    const SchemaPtr& schema = all.schema();
    if (!(all == full_product(schema))) {
        throw std::invalid_argument("few-shot construction needs the full combination product");
    }
    const std::size_t m = schema->aspect_count();
    std::size_t anchor = 0;
    for (std::size_t i = 1; i < m; ++i) {
        if (schema->value_count(i) > schema->value_count(anchor)) anchor = i;
    }
    const std::size_t cover_size = schema->value_count(anchor);
    std::vector<std::size_t> other_aspects;
    for (std::size_t i = 0; i < m; ++i) {
        if (i != anchor) other_aspects.push_back(i);
    }

    double cover_count = 1.0;
    for (std::size_t i : other_aspects) {
        cover_count *= surjection_count(cover_size, schema->value_count(i));
    }

    SplitBundle bundle;
    bundle.protocol = Protocol::FewShot;
    bundle.schema = schema;
    bundle.config = config;

    // candidate covers, each as the id-side member list
    std::vector<std::vector<Combination>> covers;
    if (cover_count <= kFewshotEnumerationBudget) {
        std::vector<std::vector<std::vector<std::int32_t>>> per_aspect;
        for (std::size_t i : other_aspects) {
            per_aspect.push_back(surjective_assignments(cover_size, schema->value_count(i)));
        }
        std::vector<std::size_t> odo(per_aspect.size(), 0);
        std::vector<std::vector<std::int32_t>> assignment(per_aspect.size());
        while (true) {
            for (std::size_t a = 0; a < per_aspect.size(); ++a) assignment[a] = per_aspect[a][odo[a]];
            std::vector<Combination> cover;
            cover.reserve(cover_size);
            for (std::size_t slot = 0; slot < cover_size; ++slot) {
                cover.push_back(cover_member(*schema, anchor, static_cast<std::int32_t>(slot),
                                             assignment, other_aspects, slot));
            }
            covers.push_back(std::move(cover));
            std::size_t a = per_aspect.size();
            bool done = per_aspect.empty();
            while (a > 0) {
                --a;
                if (++odo[a] < per_aspect[a].size()) break;
                odo[a] = 0;
                if (a == 0) done = true;
            }
            if (done) break;
        }
    } else {
        // Hill climb over surjective assignments: restart from random covers,
        // first-improvement over single slot reassignments.
        for (int t1 = 0; t1 < config.t1_restarts; ++t1) {
            Rng rng(Rng::derive(config.rng_seed, static_cast<std::uint64_t>(t1)));
            std::vector<std::vector<std::int32_t>> assignment(other_aspects.size());
            for (std::size_t a = 0; a < other_aspects.size(); ++a) {
                const std::size_t values = schema->value_count(other_aspects[a]);
                auto& slots = assignment[a];
                slots.assign(cover_size, 0);
                // one slot per value first (keeps surjectivity), then random fill
                std::vector<std::size_t> order(cover_size);
                for (std::size_t s = 0; s < cover_size; ++s) order[s] = s;
                rng.shuffle(order);
                for (std::size_t v = 0; v < values; ++v) {
                    slots[order[v]] = static_cast<std::int32_t>(v);
                }
                for (std::size_t s = values; s < cover_size; ++s) {
                    slots[order[s]] = static_cast<std::int32_t>(rng.below(values));
                }
            }
            auto build = [&](const std::vector<std::vector<std::int32_t>>& asg) {
                std::vector<Combination> cover;
                cover.reserve(cover_size);
                for (std::size_t slot = 0; slot < cover_size; ++slot) {
                    cover.push_back(cover_member(*schema, anchor, static_cast<std::int32_t>(slot), asg,
                                                 other_aspects, slot));
                }
                return cover;
            };
            auto divergence_of = [&](const std::vector<Combination>& cover) {
                CombinationSet id_set(schema, cover);
                return compound_divergence(id_set, all.set_difference(id_set), config.alpha);
            };
            double best = divergence_of(build(assignment));
            for (int t2 = 0; t2 < config.t2_steps; ++t2) {
                bool improved = false;
                for (std::size_t a = 0; a < other_aspects.size() && !improved; ++a) {
                    const std::size_t values = schema->value_count(other_aspects[a]);
                    for (std::size_t slot = 0; slot < cover_size && !improved; ++slot) {
                        const std::int32_t old = assignment[a][slot];
                        for (std::size_t v = 0; v < values; ++v) {
                            if (static_cast<std::int32_t>(v) == old) continue;
                            assignment[a][slot] = static_cast<std::int32_t>(v);
                            std::vector<char> seen(values, 0);
                            for (std::int32_t x : assignment[a]) seen[static_cast<std::size_t>(x)] = 1;
                            bool surjective = std::find(seen.begin(), seen.end(), 0) == seen.end();
                            double d = surjective ? divergence_of(build(assignment)) : -1.0;
                            if (surjective && d > best) {
                                best = d;
                                improved = true;
                                break;
                            }
                            assignment[a][slot] = old;
                        }
                    }
                }
                if (!improved) break;
            }
            covers.push_back(build(assignment));
        }
    }

    // score covers, keep the max-divergence ties
    double best = -1.0;
    std::vector<std::pair<double, std::vector<Combination>>> scored;
    scored.reserve(covers.size());
    for (auto& cover : covers) {
        CombinationSet id_set(schema, cover);
        const double d = compound_divergence(id_set, all.set_difference(id_set), config.alpha);
        best = std::max(best, d);
        scored.emplace_back(d, std::move(cover));
    }
    std::set<std::vector<Combination>> seen;
    for (auto& [d, cover] : scored) {
        if (d < best - kTieTolerance) continue;
        CombinationSet id_set(schema, cover);
        if (!seen.insert(id_set.members()).second) continue;
        Split s;
        s.protocol = Protocol::FewShot;
        s.divergence = d;
        s.comp_set = all.set_difference(id_set);
        s.id_set = std::move(id_set);
        bundle.splits.push_back(std::move(s));
    }
    std::sort(bundle.splits.begin(), bundle.splits.end(),
              [](const Split& a, const Split& b) { return a.id_set.members() < b.id_set.members(); });
    return bundle;
}

SplitBundle acd_splits(const CombinationSet& all, const AcdSearchConfig& config) {
    if (all.size() % 2 != 0) {
        throw std::invalid_argument("balanced split needs an even |C|, got " + std::to_string(all.size()));
    }
    if (all.size() < 4) throw std::invalid_argument("balanced split needs |C| >= 4");
    if (config.t1_restarts < 1 || config.t2_steps < 1) {
        throw std::invalid_argument("search needs t1 >= 1 and t2 >= 1");
    }
    if (!(config.eta_threshold > 0.0 && config.eta_threshold < 1.0)) {
        throw std::invalid_argument("eta must lie in (0, 1)");
    }

    SplitBundle bundle;
    bundle.protocol =
        config.objective == SearchObjective::Maximize ? Protocol::Acd : Protocol::MinDivergence;
    bundle.schema = all.schema();
    bundle.config = config;

    std::vector<RestartOutcome> outcomes(static_cast<std::size_t>(config.t1_restarts));
    parallel_for(config.t1_restarts, effective_threads(config.threads, config.t1_restarts),
                 [&](int t1) {
                     const std::uint64_t seed =
                         Rng::derive(config.rng_seed, static_cast<std::uint64_t>(t1));
                     outcomes[static_cast<std::size_t>(t1)] = run_restart(all, config, seed);
                 });

    bool any_valid = false;
    double best_seen = config.objective == SearchObjective::Maximize ? 0.0 : 1.0;
    std::set<std::vector<Combination>> seen;
    for (auto& out : outcomes) {
        if (!out.valid) continue;
        any_valid = true;
        if (better(out.divergence, best_seen, config.objective)) best_seen = out.divergence;
        const bool kept = config.objective == SearchObjective::Maximize
                              ? out.divergence >= config.eta_threshold
                              : out.divergence <= config.eta_threshold;
        out.report.kept = kept;
        bundle.restart_reports.push_back(out.report);
        if (!kept || !seen.insert(out.id_members).second) continue;
        Split s;
        s.protocol = bundle.protocol;
        s.divergence = out.divergence;
        s.seed = out.report.seed;
        s.id_set = CombinationSet(all.schema(), out.id_members);
        s.comp_set = all.set_difference(s.id_set);
        bundle.splits.push_back(std::move(s));
    }
    if (!any_valid) {
        throw std::runtime_error("no eligible balanced split found within the sampling budget");
    }
    if (bundle.splits.empty()) {
        bundle.diagnostic = "no restart met eta=" + std::to_string(config.eta_threshold) +
                            "; best divergence found " + std::to_string(best_seen);
    }
    std::sort(bundle.splits.begin(), bundle.splits.end(), [&](const Split& a, const Split& b) {
        if (*a.divergence != *b.divergence) {
            return better(*a.divergence, *b.divergence, config.objective);
        }
        return a.id_set.members() < b.id_set.members();
    });
    return bundle;
}

SplitBundle random_splits(const CombinationSet& all, int n, std::uint64_t seed, double alpha) {
    if (all.size() % 2 != 0) {
        throw std::invalid_argument("balanced split needs an even |C|, got " + std::to_string(all.size()));
    }
    if (all.size() < 4) throw std::invalid_argument("balanced split needs |C| >= 4");
    if (n < 1) throw std::invalid_argument("random sampling needs n >= 1");

    SplitBundle bundle;
    bundle.protocol = Protocol::Random;
    bundle.schema = all.schema();
    bundle.config.rng_seed = seed;
    bundle.config.alpha = alpha;

    BalancedSearchState state(all, alpha);
    for (int i = 0; i < n; ++i) {
        const std::uint64_t draw_seed = Rng::derive(seed, static_cast<std::uint64_t>(i));
        Rng rng(draw_seed);
        if (!state.randomize(rng)) {
            throw std::runtime_error("rejection budget exhausted while sampling balanced eligible splits");
        }
        auto [id_set, comp_set] = state.current_sets();
        Split s;
        s.protocol = Protocol::Random;
        s.divergence = compound_divergence(id_set, comp_set, alpha);
        s.seed = draw_seed;
        s.id_set = std::move(id_set);
        s.comp_set = std::move(comp_set);
        bundle.splits.push_back(std::move(s));
    }
    return bundle;
}

}  // namespace compsplit
