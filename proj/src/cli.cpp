#include "compsplit/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "compsplit/io.hpp"
#include "compsplit/meta/trainer.hpp"
#include "compsplit/metrics.hpp"
#include "compsplit/protocols.hpp"
#include "compsplit/sampler.hpp"

namespace compsplit {

namespace {

using ordered_json = nlohmann::ordered_json;

SchemaPtr schema_from_inputs(const std::string& data_path, const std::string& schema_shape) {
    if (!data_path.empty()) {
        return load_dataset_file(data_path).schema;
    }
    std::vector<std::size_t> sizes;
    std::stringstream ss(schema_shape);
    std::string part;
    while (std::getline(ss, part, ',')) {
        const long v = std::strtol(part.c_str(), nullptr, 10);
        if (v < 2) throw std::invalid_argument("--shape needs comma-separated sizes >= 2");
        sizes.push_back(static_cast<std::size_t>(v));
    }
    if (sizes.size() < 2) throw std::invalid_argument("--shape needs at least two aspects");
    return make_schema(sizes);
}

int run_split(const std::string& data_path, const std::string& shape, const std::string& protocol,
              int k, const AcdSearchConfig& config, int n_random, const std::string& out_dir) {
    const SchemaPtr schema = schema_from_inputs(data_path, shape);
    const CombinationSet all = full_product(schema);

    SplitBundle bundle;
    if (protocol == "holdout") {
        bundle = holdout_splits(all, k, config.alpha);
    } else if (protocol == "acd") {
        bundle = acd_splits(all, config);
    } else if (protocol == "mindiv") {
        AcdSearchConfig min_config = config;
        min_config.objective = SearchObjective::Minimize;
        bundle = acd_splits(all, min_config);
    } else if (protocol == "fewshot") {
        bundle = fewshot_splits(all, config);
    } else if (protocol == "random") {
        bundle = random_splits(all, n_random, config.rng_seed, config.alpha);
    } else {
        throw std::invalid_argument("unknown protocol '" + protocol + "'");
    }

    if (bundle.splits.empty()) {
        std::cerr << "no splits produced: " << bundle.diagnostic << "\n";
        return 1;
    }
    const auto paths = write_bundle(out_dir, bundle);
    for (std::size_t i = 0; i < paths.size(); ++i) {
        std::cout << paths[i];
        if (bundle.splits[i].divergence) {
            std::cout << "\tdivergence=" << round_significant(*bundle.splits[i].divergence);
        }
        std::cout << "\n";
    }
    std::cout << protocol_name(bundle.protocol) << ": " << paths.size() << " split(s) written to "
              << out_dir << "\n";
    return 0;
}

int run_divergence(const std::string& manifest_path, double alpha_override, bool has_alpha) {
    const Manifest m = read_manifest_file(manifest_path);
    if (m.split.comp_set.empty()) {
        std::cerr << "manifest has an empty comp set; divergence is undefined\n";
        return 1;
    }
    const double alpha = has_alpha ? alpha_override : m.config.alpha;
    std::cout << round_significant(compound_divergence(m.split.id_set, m.split.comp_set, alpha))
              << "\n";
    return 0;
}

int run_check(const std::string& manifest_path) {
    const Manifest m = read_manifest_file(manifest_path);
    const EligibilityReport report = validate_split(m.split);
    if (report.eligible) {
        std::cout << "eligible\n";
        return 0;
    }
    std::cerr << report.describe(*m.split.id_set.schema());
    return 1;
}

int run_sample_pcomp(const std::string& data_path, const std::string& manifest_path,
                     std::size_t size, std::size_t train_size, std::uint64_t seed,
                     const std::string& out_path) {
    const LoadedDataset dataset = load_dataset_file(data_path);
    const Manifest m = read_manifest_file(manifest_path);
    if (!(*dataset.schema == *m.split.id_set.schema())) {
        throw std::invalid_argument("dataset schema does not match the manifest schema");
    }

    std::vector<LabeledRecord> pool;
    for (const auto& r : dataset.records) {
        if (m.split.id_set.contains(r.combination)) pool.push_back(r);
    }
    if (pool.empty()) throw std::invalid_argument("no in-distribution records in the dataset");

    Rng rng(Rng::derive(seed, 0x747261696eULL));
    std::vector<LabeledRecord> train_batch;
    train_batch.reserve(train_size);
    for (std::size_t i = 0; i < train_size; ++i) {
        train_batch.push_back(pool[static_cast<std::size_t>(rng.below(pool.size()))]);
    }

    PcompSample<LabeledRecord> sample;
    try {
        sample = sample_pcomp_batch<LabeledRecord>(dataset.schema, train_batch, pool, size,
                                                   Rng::derive(seed, 0x70636f6d70ULL));
    } catch (const NoPcompCandidatesError& e) {
        throw std::runtime_error(std::string(e.what()) +
                                 " (try another --seed or a smaller --train-size)");
    } catch (const PoolExhaustedError& e) {
        throw std::runtime_error(std::string(e.what()) +
                                 " (try another --seed or a smaller --train-size)");
    }
    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path, std::ios::binary);
        if (!file) throw ParseError("cannot write batch file '" + out_path + "'");
        out = &file;
    }
    for (const auto& r : sample.records) {
        *out << record_to_json_line(*dataset.schema, r) << "\n";
    }
    if (sample.truncated) {
        std::cerr << "warning: only " << sample.records.size()
                  << " admissible records available (requested " << size << ")\n";
    }
    return 0;
}

int run_metrics(const std::string& scores_path) {
    std::cout << score_table_summary(parse_score_file_path(scores_path));
    return 0;
}

int run_dist3(const std::string& text_path, const std::string& mode) {
    std::ifstream in(text_path);
    if (!in) throw ParseError("cannot open text file '" + text_path + "'");
    std::vector<std::string> texts;
    std::string line;
    while (std::getline(in, line)) texts.push_back(line);
    const Dist3Mode m = mode == "per-text" ? Dist3Mode::PerTextMean : Dist3Mode::Pooled;
    std::cout << round_significant(dist_3(texts, m)) << "\n";
    return 0;
}

int run_meta_train(const std::string& shape, std::size_t vocab, std::size_t seq_len,
                   std::size_t records_per_comb, const meta::TrainConfig& config,
                   const std::string& out_dir) {
    const SchemaPtr schema = schema_from_inputs("", shape);
    const CombinationSet all = full_product(schema);

    AcdSearchConfig split_config;
    split_config.t1_restarts = 50;
    split_config.rng_seed = config.seed;
    split_config.eta_threshold = 0.01;  // keep the best split regardless of threshold
    const SplitBundle bundle = acd_splits(all, split_config);
    if (bundle.splits.empty()) throw std::runtime_error("no balanced eligible split found");
    const Split& split = bundle.splits.front();

    const auto scenario = meta::make_separable_scenario(split, vocab, seq_len, 0.05, records_per_comb);
    const auto result = meta::run_experiment(scenario, config);

    std::printf("split divergence: %.6f (|id|=%zu, |comp|=%zu)\n", *split.divergence,
                split.id_set.size(), split.comp_set.size());
    std::printf("%-10s %-12s %-12s %-8s\n", "trainer", "id-acc", "comp-acc", "gap");
    std::printf("%-10s %-12.4f %-12.4f %-8.4f\n", "meta", result.meta_id_accuracy,
                result.meta_comp_accuracy, result.meta_gap);
    std::printf("%-10s %-12.4f %-12.4f %-8.4f\n", "baseline", result.baseline_id_accuracy,
                result.baseline_comp_accuracy, result.baseline_gap);
    std::printf("pcomp steps: %zu / %zu\n", result.meta.pcomp_steps, config.steps);

    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ofstream log((std::filesystem::path(out_dir) / "steps.jsonl").string(),
                          std::ios::binary);
        for (const auto& run : {std::make_pair("meta", &result.meta),
                                std::make_pair("baseline", &result.baseline)}) {
            for (const auto& s : run.second->steps) {
                ordered_json j;
                j["trainer"] = run.first;
                j["step"] = s.step;
                j["train_loss"] = round_significant(s.train_loss);
                if (s.pcomp_loss) {
                    j["pcomp_loss"] = round_significant(*s.pcomp_loss);
                } else {
                    j["pcomp_loss"] = nullptr;
                }
                j["id_accuracy"] = round_significant(s.id_accuracy);
                j["comp_accuracy"] = round_significant(s.comp_accuracy);
                log << j.dump() << "\n";
            }
        }
        ordered_json summary;
        summary["split_divergence"] = round_significant(*split.divergence);
        summary["meta"] = {{"id_accuracy", round_significant(result.meta_id_accuracy)},
                           {"comp_accuracy", round_significant(result.meta_comp_accuracy)},
                           {"gap", round_significant(result.meta_gap)},
                           {"pcomp_steps", result.meta.pcomp_steps}};
        summary["baseline"] = {{"id_accuracy", round_significant(result.baseline_id_accuracy)},
                               {"comp_accuracy", round_significant(result.baseline_comp_accuracy)},
                               {"gap", round_significant(result.baseline_gap)}};
        std::ofstream sum((std::filesystem::path(out_dir) / "summary.json").string(),
                          std::ios::binary);
        sum << summary.dump(2) << "\n";
    }
    return 0;
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv) {
    CLI::App app{"compositional split construction, scoring and meta-training toolkit"};
    app.require_subcommand(1);

    // split
    auto* split_cmd = app.add_subcommand("split", "construct splits and write manifests");
    std::string data_path, shape, protocol = "holdout", out_dir = "splits";
    int k = 1, n_random = 10;
    AcdSearchConfig search;
    split_cmd->add_option("--data", data_path, "dataset (JSONL) to infer the schema from");
    split_cmd->add_option("--shape", shape, "schema shape, e.g. 2,2,5,2 (alternative to --data)");
    split_cmd->add_option("--protocol", protocol, "holdout|acd|fewshot|random|mindiv")
        ->check(CLI::IsMember({"holdout", "acd", "fewshot", "random", "mindiv"}));
    split_cmd->add_option("--k", k, "hold-out comp-set size (default 1)");
    split_cmd->add_option("--n", n_random, "number of random splits (default 10)");
    split_cmd->add_option("--alpha", search.alpha, "Chernoff alpha (default 0.5)");
    split_cmd->add_option("--eta", search.eta_threshold, "divergence keep threshold (default 0.5)");
    split_cmd->add_option("--t1", search.t1_restarts, "search restarts (default 100)");
    split_cmd->add_option("--t2", search.t2_steps, "improvement passes per restart (default 50)");
    split_cmd->add_option("--seed", search.rng_seed, "random seed");
    split_cmd->add_option("--out", out_dir, "output directory (default ./splits)");

    // divergence
    auto* div_cmd = app.add_subcommand("divergence", "print the divergence of a manifest");
    std::string manifest_path;
    double alpha_override = 0.5;
    div_cmd->add_option("--manifest", manifest_path, "split manifest")->required();
    auto* alpha_opt = div_cmd->add_option("--alpha", alpha_override, "override the manifest alpha");

    // check
    auto* check_cmd = app.add_subcommand("check", "validate a manifest against the split predicate");
    std::string check_path;
    check_cmd->add_option("--manifest", check_path, "split manifest")->required();

    // sample-pcomp
    auto* pcomp_cmd = app.add_subcommand("sample-pcomp", "emit a pseudo-compositional batch");
    std::string pcomp_data, pcomp_manifest, pcomp_out;
    std::size_t pcomp_size = 16, train_size = 0;
    std::uint64_t pcomp_seed = 0;
    pcomp_cmd->add_option("--data", pcomp_data, "dataset (JSONL)")->required();
    pcomp_cmd->add_option("--manifest", pcomp_manifest, "split manifest")->required();
    pcomp_cmd->add_option("--size", pcomp_size, "batch size (default 16)");
    pcomp_cmd->add_option("--train-size", train_size, "train batch size (default --size)");
    pcomp_cmd->add_option("--seed", pcomp_seed, "random seed");
    pcomp_cmd->add_option("--out", pcomp_out, "output file (default stdout)");

    // metrics
    auto* metrics_cmd = app.add_subcommand("metrics", "aggregate a score file into a summary row");
    std::string scores_path;
    metrics_cmd->add_option("--scores", scores_path, "score file (JSON)")->required();

    // dist3
    auto* dist3_cmd = app.add_subcommand("dist3", "trigram distinctness of a text file");
    std::string text_path, dist3_mode = "pooled";
    dist3_cmd->add_option("--texts", text_path, "text file, one document per line")->required();
    dist3_cmd->add_option("--mode", dist3_mode, "pooled|per-text")
        ->check(CLI::IsMember({"pooled", "per-text"}));

    // meta-train
    auto* meta_cmd = app.add_subcommand("meta-train", "run the toy meta-training experiment");
    std::string meta_shape = "2,2,2", meta_out;
    std::size_t vocab = 0, seq_len = 8, records_per_comb = 64;
    meta::TrainConfig train;
    meta_cmd->add_option("--shape", meta_shape, "schema shape (default 2,2,2)");
    meta_cmd->add_option("--vocab", vocab, "vocabulary size (default: value count + 2)");
    meta_cmd->add_option("--seq-len", seq_len, "tokens per record (default 8)");
    meta_cmd->add_option("--records", records_per_comb, "records per combination (default 64)");
    meta_cmd->add_option("--steps", train.steps, "training steps (default 300)");
    meta_cmd->add_option("--batch-size", train.batch_size, "batch size (default 8)");
    meta_cmd->add_option("--lambda", train.lambda_weight, "pseudo-comp weight (default 0.01)");
    meta_cmd->add_option("--alpha-lr", train.alpha_lr, "inner learning rate (default 0.1)");
    auto* beta_opt = meta_cmd->add_option("--beta-lr", train.beta_lr,
                                          "outer learning rate (default: same as --alpha-lr)");
    meta_cmd->add_option("--aux-weight", train.aux_loss_weight,
                         "row-separation penalty weight (default 0)");
    meta_cmd->add_flag("--second-order,!--first-order", train.second_order,
                       "differentiate through the inner step (default on)");
    meta_cmd->add_option("--seed", train.seed, "random seed");
    meta_cmd->add_option("--out", meta_out, "output directory for logs");

    std::vector<std::string> args(argv + 1, argv + argc);
    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (split_cmd->parsed()) {
            if (data_path.empty() == shape.empty()) {
                throw std::invalid_argument("provide exactly one of --data or --shape");
            }
            return run_split(data_path, shape, protocol, k, search, n_random, out_dir);
        }
        if (div_cmd->parsed()) return run_divergence(manifest_path, alpha_override, alpha_opt->count() > 0);
        if (check_cmd->parsed()) return run_check(check_path);
        if (pcomp_cmd->parsed()) {
            return run_sample_pcomp(pcomp_data, pcomp_manifest, pcomp_size,
                                    train_size > 0 ? train_size : pcomp_size, pcomp_seed, pcomp_out);
        }
        if (metrics_cmd->parsed()) return run_metrics(scores_path);
        if (dist3_cmd->parsed()) return run_dist3(text_path, dist3_mode);
        if (meta_cmd->parsed()) {
            if (beta_opt->count() == 0) train.beta_lr = train.alpha_lr;
            return run_meta_train(meta_shape, vocab, seq_len, records_per_comb, train, meta_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace compsplit
