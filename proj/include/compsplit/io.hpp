#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "compsplit/metrics.hpp"
#include "compsplit/protocols.hpp"
#include "compsplit/sampler.hpp"
#include "compsplit/schema.hpp"

namespace compsplit {

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Datasets: line-delimited JSON records
//   {"attributes": {"sentiment": "positive", ...}, "text": "..."}
// Every record must cover exactly the same aspect keys. The inferred schema
// sorts aspects by name and values lexicographically, so shuffling the file
// yields an identical schema.
// ---------------------------------------------------------------------------

struct LoadedDataset {
    SchemaPtr schema;
    std::vector<LabeledRecord> records;
    std::map<Combination, std::size_t> counts;  // records per combination
};

LoadedDataset load_dataset(std::istream& in, const std::string& source_name = "<stream>");
LoadedDataset load_dataset_file(const std::string& path);

struct SchemaReport {
    SchemaPtr schema;
    std::map<Combination, std::size_t> counts;
    std::size_t record_count = 0;
};

/// Schema inference plus per-combination record counts.
SchemaReport infer_schema(std::istream& in, const std::string& source_name = "<stream>");

std::string record_to_json_line(const AttributeSchema& schema, const LabeledRecord& record);

// ---------------------------------------------------------------------------
// Split manifests: one JSON document per split with the fixed field order
// schema / protocol / config / divergence / id_combinations /
// comp_combinations. Combinations are serialized as value-string lists in
// aspect order and kept canonically sorted, so write -> read -> write is
// byte-identical. Real numbers carry 12 significant digits.
// ---------------------------------------------------------------------------

struct Manifest {
    Split split;
    AcdSearchConfig config;
    int holdout_k = 0;
};

std::string manifest_to_json(const Manifest& manifest);
Manifest manifest_from_json(const std::string& text, const std::string& source_name = "<string>");
void write_manifest_file(const std::string& path, const Manifest& manifest);
Manifest read_manifest_file(const std::string& path);

/// Writes one manifest per split into `dir` as <protocol>_<index>.json;
/// returns the file paths.
std::vector<std::string> write_bundle(const std::string& dir, const SplitBundle& bundle);

// ---------------------------------------------------------------------------
// Score files: externally computed accuracy / perplexity per
// (protocol, split, cell). Accuracy may be a single number or a per-aspect
// map, which is averaged on ingestion.
//   {"scores": [{"protocol": "holdout", "split": 0, "cell": "comp",
//                "accuracy": {"sentiment": 75.1, ...}, "perplexity": 51.2}]}
// ---------------------------------------------------------------------------

struct ScoreTable {
    std::map<Protocol, std::vector<ProtocolScores>> per_protocol;  // one entry per split
};

ScoreTable parse_score_file(std::istream& in, const std::string& source_name = "<stream>");
ScoreTable parse_score_file_path(const std::string& path);

/// Bundle means, benchmark aggregation and the tab-separated summary row for
/// a score table holding original, hold-out and ACD cells.
std::string score_table_summary(const ScoreTable& table);

/// Rounds to 12 significant digits (the serialization precision).
double round_significant(double value);

}  // namespace compsplit
