#include "compsplit/meta/trainer.hpp"

#include <cmath>
#include <stdexcept>

#include "compsplit/rng.hpp"
#include "compsplit/sampler.hpp"

namespace compsplit::meta {

std::vector<double> SyntheticScenario::value_token_distribution(std::size_t row) const {
    std::vector<double> p(vocab_size, smoothing / static_cast<double>(vocab_size));
    p[row] += 1.0 - smoothing;
    return p;
}

std::vector<double> SyntheticScenario::combination_distribution(const Combination& c) const {
    const std::size_t m = schema->aspect_count();
    std::vector<double> p(vocab_size, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const auto row_dist = value_token_distribution(planted_token(i, static_cast<std::size_t>(c.values[i])));
        for (std::size_t v = 0; v < vocab_size; ++v) p[v] += row_dist[v] / static_cast<double>(m);
    }
    return p;
}

std::size_t SyntheticScenario::planted_token(std::size_t aspect, std::size_t value) const {
    return schema->value_row(aspect, value);
}

SyntheticScenario make_separable_scenario(const Split& split, std::size_t vocab_size,
                                          std::size_t seq_len, double smoothing,
                                          std::size_t records_per_combination) {
    SyntheticScenario s;
    s.schema = split.id_set.schema();
    s.vocab_size = vocab_size > 0 ? vocab_size : s.schema->total_values() + 2;
    if (s.vocab_size < s.schema->total_values()) {
        throw std::invalid_argument("vocabulary smaller than the attribute value count");
    }
    s.seq_len = seq_len;
    s.smoothing = smoothing;
    s.records_per_combination = records_per_combination;
    s.split = split;
    return s;
}

namespace {

std::int32_t draw_token(const std::vector<double>& dist, Rng& rng) {
    double u = rng.unit();
    for (std::size_t v = 0; v < dist.size(); ++v) {
        u -= dist[v];
        if (u < 0.0) return static_cast<std::int32_t>(v);
    }
    return static_cast<std::int32_t>(dist.size() - 1);
}

}  // namespace

std::vector<TokenRecord> generate_records(const SyntheticScenario& scenario,
                                          const CombinationSet& combos, std::uint64_t seed) {
    std::vector<TokenRecord> out;
    out.reserve(combos.size() * scenario.records_per_combination);
    std::uint64_t stream = 0;
    for (const auto& c : combos.members()) {
        Rng rng(Rng::derive(seed, stream++));
        const auto dist = scenario.combination_distribution(c);
        for (std::size_t r = 0; r < scenario.records_per_combination; ++r) {
            TokenRecord rec;
            rec.combination = c;
            rec.tokens.reserve(scenario.seq_len);
            for (std::size_t t = 0; t < scenario.seq_len; ++t) rec.tokens.push_back(draw_token(dist, rng));
            out.push_back(std::move(rec));
        }
    }
    return out;
}

double decode_accuracy(const ToyGenModel& model, const SyntheticScenario& scenario,
                       const CombinationSet& eval_set) {
    if (eval_set.empty()) return 0.0;
    const std::size_t m = scenario.schema->aspect_count();
    std::size_t correct = 0, total = 0;
    for (const auto& c : eval_set.members()) {
        const auto p = model.token_distribution(c);
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t truth = static_cast<std::size_t>(c.values[i]);
            bool ok = true;
            const double truth_mass = p[scenario.planted_token(i, truth)];
            for (std::size_t v = 0; v < scenario.schema->value_count(i); ++v) {
                if (v == truth) continue;
                if (p[scenario.planted_token(i, v)] >= truth_mass) {
                    ok = false;
                    break;
                }
            }
            correct += ok ? 1 : 0;
            ++total;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(total);
}

namespace {

TokenBatch draw_batch(const std::vector<TokenRecord>& pool, std::size_t size, Rng& rng) {
    TokenBatch batch;
    batch.records.reserve(size);
    for (std::size_t i = 0; i < size; ++i) {
        batch.records.push_back(pool[static_cast<std::size_t>(rng.below(pool.size()))]);
    }
    return batch;
}

}  // namespace

ExperimentResult run_experiment(const SyntheticScenario& scenario, const TrainConfig& config) {
    if (!validate_split(scenario.split).eligible) {
        throw std::invalid_argument("scenario split is not eligible");
    }
    if (config.batch_size < 1 || config.steps < 1) {
        throw std::invalid_argument("experiment needs batch_size >= 1 and steps >= 1");
    }

    const auto& id_set = scenario.split.id_set;
    const auto& comp_set = scenario.split.comp_set;
    const std::vector<TokenRecord> pool =
        generate_records(scenario, id_set, Rng::derive(config.seed, 0x706f6f6cULL));

    ToyGenModel meta_model(scenario.schema, scenario.vocab_size);
    ToyGenModel base_model(scenario.schema, scenario.vocab_size);

    ExperimentResult result{TrainerRun{meta_model, {}, 0}, TrainerRun{base_model, {}, 0}};

    bool any_pcomp = false;
    for (std::size_t step = 0; step < config.steps; ++step) {
        Rng train_rng(Rng::derive(config.seed, 2 * step + 1));
        const TokenBatch train_batch = draw_batch(pool, config.batch_size, train_rng);

        // meta trainer: meta step when lambda is active and a pcomp batch exists
        StepLog meta_log{step, 0.0, std::nullopt, 0.0, 0.0};
        bool did_meta = false;
        if (config.lambda_weight != 0.0) {
            try {
                const auto pcomp = sample_pcomp_batch<TokenRecord>(
                    scenario.schema, train_batch.records, pool, config.batch_size,
                    Rng::derive(config.seed, 2 * step + 2));
                TokenBatch pcomp_batch{pcomp.records};
                const auto report = meta_step(result.meta.model, train_batch, pcomp_batch, config);
                meta_log.train_loss = report.train_loss;
                meta_log.pcomp_loss = report.pcomp_loss;
                did_meta = true;
                any_pcomp = true;
                ++result.meta.pcomp_steps;
            } catch (const NoPcompCandidatesError&) {
            } catch (const PoolExhaustedError&) {
            }
        }
        if (!did_meta) {
            meta_log.train_loss =
                sgd_step(result.meta.model, train_batch, config.beta_lr, config.aux_loss_weight);
        }
        meta_log.id_accuracy = decode_accuracy(result.meta.model, scenario, id_set);
        meta_log.comp_accuracy = decode_accuracy(result.meta.model, scenario, comp_set);
        result.meta.steps.push_back(meta_log);

        // baseline trainer: plain SGD on the identical batch
        StepLog base_log{step, 0.0, std::nullopt, 0.0, 0.0};
        base_log.train_loss =
            sgd_step(result.baseline.model, train_batch, config.beta_lr, config.aux_loss_weight);
        base_log.id_accuracy = decode_accuracy(result.baseline.model, scenario, id_set);
        base_log.comp_accuracy = decode_accuracy(result.baseline.model, scenario, comp_set);
        result.baseline.steps.push_back(base_log);
    }

    if (config.lambda_weight != 0.0 && !any_pcomp) {
        throw std::runtime_error("scenario admitted no pseudo-comp batches in any step");
    }

    result.meta_id_accuracy = decode_accuracy(result.meta.model, scenario, id_set);
    result.meta_comp_accuracy = decode_accuracy(result.meta.model, scenario, comp_set);
    result.baseline_id_accuracy = decode_accuracy(result.baseline.model, scenario, id_set);
    result.baseline_comp_accuracy = decode_accuracy(result.baseline.model, scenario, comp_set);
    auto gap_of = [](double a_id, double a_comp) {
        return a_id > 0.0 ? (a_id - a_comp) / a_id * 100.0 : 0.0;
    };
    result.meta_gap = gap_of(result.meta_id_accuracy * 100.0, result.meta_comp_accuracy * 100.0);
    result.baseline_gap =
        gap_of(result.baseline_id_accuracy * 100.0, result.baseline_comp_accuracy * 100.0);
    return result;
}

}  // namespace compsplit::meta
