#include "compsplit/io.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace compsplit {

using ordered_json = nlohmann::ordered_json;

double round_significant(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", value);
    return std::strtod(buf, nullptr);
}

namespace {

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& message) {
    throw ParseError(source + ":" + std::to_string(line) + ": " + message);
}

struct RawRecord {
    std::map<std::string, std::string> attributes;
    std::string text;
    std::size_t line_no = 0;
};

std::vector<RawRecord> parse_raw_dataset(std::istream& in, const std::string& source) {
    std::vector<RawRecord> raw;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            fail(source, line_no, std::string("malformed JSON record: ") + e.what());
        }
        if (!j.is_object() || !j.contains("attributes") || !j["attributes"].is_object()) {
            fail(source, line_no, "record needs an 'attributes' object");
        }
        if (!j.contains("text") || !j["text"].is_string()) {
            fail(source, line_no, "record needs a 'text' string");
        }
        RawRecord r;
        r.line_no = line_no;
        for (const auto& [key, value] : j["attributes"].items()) {
            if (!value.is_string()) {
                fail(source, line_no, "attribute '" + key + "' must be a string");
            }
            r.attributes[key] = value.get<std::string>();
        }
        r.text = j["text"].get<std::string>();
        raw.push_back(std::move(r));
    }
    if (raw.empty()) throw ParseError(source + ": empty dataset");
    return raw;
}

}  // namespace

LoadedDataset load_dataset(std::istream& in, const std::string& source_name) {
    const auto raw = parse_raw_dataset(in, source_name);

    // aspect names from the first record; values collected over all records
    std::map<std::string, std::set<std::string>> values_by_aspect;
    for (const auto& [name, value] : raw.front().attributes) values_by_aspect[name];
    for (const auto& rec : raw) {
        for (const auto& [name, value] : rec.attributes) {
            auto it = values_by_aspect.find(name);
            if (it == values_by_aspect.end()) {
                fail(source_name, rec.line_no, "unexpected aspect '" + name + "'");
            }
            it->second.insert(value);
        }
        for (const auto& [name, values] : values_by_aspect) {
            if (!rec.attributes.count(name)) {
                fail(source_name, rec.line_no, "record missing aspect '" + name + "'");
            }
        }
    }

    std::vector<AspectDef> aspects;
    for (const auto& [name, values] : values_by_aspect) {
        AspectDef def;
        def.name = name;
        def.values.assign(values.begin(), values.end());
        aspects.push_back(std::move(def));
    }
    LoadedDataset out;
    out.schema = std::make_shared<AttributeSchema>(std::move(aspects));  // validates a_i >= 2 etc.

    out.records.reserve(raw.size());
    for (const auto& r : raw) {
        LabeledRecord rec;
        rec.combination.values.resize(out.schema->aspect_count());
        for (std::size_t a = 0; a < out.schema->aspect_count(); ++a) {
            const auto& name = out.schema->aspect(a).name;
            const auto idx = out.schema->value_index(a, r.attributes.at(name));
            rec.combination.values[a] = static_cast<std::int32_t>(*idx);
        }
        rec.text = r.text;
        ++out.counts[rec.combination];
        out.records.push_back(std::move(rec));
    }
    return out;
}

LoadedDataset load_dataset_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open dataset file '" + path + "'");
    return load_dataset(in, path);
}

SchemaReport infer_schema(std::istream& in, const std::string& source_name) {
    LoadedDataset dataset = load_dataset(in, source_name);
    SchemaReport report;
    report.schema = dataset.schema;
    report.counts = std::move(dataset.counts);
    report.record_count = dataset.records.size();
    return report;
}

std::string record_to_json_line(const AttributeSchema& schema, const LabeledRecord& record) {
    ordered_json attrs = ordered_json::object();
    for (std::size_t a = 0; a < schema.aspect_count(); ++a) {
        attrs[schema.aspect(a).name] =
            schema.aspect(a).values.at(static_cast<std::size_t>(record.combination.values[a]));
    }
    ordered_json j;
    j["attributes"] = std::move(attrs);
    j["text"] = record.text;
    return j.dump();
}

namespace {

ordered_json schema_to_json(const AttributeSchema& schema) {
    ordered_json aspects = ordered_json::array();
    for (const auto& a : schema.aspects()) {
        ordered_json aspect;
        aspect["name"] = a.name;
        aspect["values"] = a.values;
        aspects.push_back(std::move(aspect));
    }
    ordered_json j;
    j["aspects"] = std::move(aspects);
    return j;
}

SchemaPtr schema_from_json(const ordered_json& j, const std::string& source) {
    if (!j.is_object() || !j.contains("aspects") || !j["aspects"].is_array()) {
        throw ParseError(source + ": schema needs an 'aspects' array");
    }
    std::vector<AspectDef> aspects;
    for (const auto& a : j["aspects"]) {
        AspectDef def;
        def.name = a.at("name").get<std::string>();
        def.values = a.at("values").get<std::vector<std::string>>();
        aspects.push_back(std::move(def));
    }
    return std::make_shared<AttributeSchema>(std::move(aspects));
}

ordered_json combos_to_json(const AttributeSchema& schema, const CombinationSet& set) {
    ordered_json arr = ordered_json::array();
    for (const auto& c : set.members()) {
        ordered_json row = ordered_json::array();
        for (std::size_t a = 0; a < schema.aspect_count(); ++a) {
            row.push_back(schema.aspect(a).values.at(static_cast<std::size_t>(c.values[a])));
        }
        arr.push_back(std::move(row));
    }
    return arr;
}

CombinationSet combos_from_json(const SchemaPtr& schema, const ordered_json& arr,
                                const std::string& source, const std::string& field) {
    if (!arr.is_array()) throw ParseError(source + ": '" + field + "' must be an array");
    std::vector<Combination> members;
    for (const auto& row : arr) {
        if (!row.is_array() || row.size() != schema->aspect_count()) {
            throw ParseError(source + ": combination arity mismatch in '" + field + "'");
        }
        Combination c;
        c.values.reserve(schema->aspect_count());
        for (std::size_t a = 0; a < schema->aspect_count(); ++a) {
            const auto name = row[a].get<std::string>();
            const auto idx = schema->value_index(a, name);
            if (!idx) {
                throw ParseError(source + ": unknown value '" + name + "' for aspect '" +
                                 schema->aspect(a).name + "' in '" + field + "'");
            }
            c.values.push_back(static_cast<std::int32_t>(*idx));
        }
        members.push_back(std::move(c));
    }
    return CombinationSet(schema, std::move(members));
}

}  // namespace

std::string manifest_to_json(const Manifest& manifest) {
    const auto& schema = *manifest.split.id_set.schema();
    ordered_json j;
    j["schema"] = schema_to_json(schema);
    j["protocol"] = protocol_name(manifest.split.protocol);
    ordered_json config;
    config["alpha"] = round_significant(manifest.config.alpha);
    config["eta"] = round_significant(manifest.config.eta_threshold);
    config["t1"] = manifest.config.t1_restarts;
    config["t2"] = manifest.config.t2_steps;
    config["k"] = manifest.holdout_k;
    config["seed"] = manifest.split.seed;
    j["config"] = std::move(config);
    if (manifest.split.divergence) {
        j["divergence"] = round_significant(*manifest.split.divergence);
    } else {
        j["divergence"] = nullptr;
    }
    j["id_combinations"] = combos_to_json(schema, manifest.split.id_set);
    j["comp_combinations"] = combos_to_json(schema, manifest.split.comp_set);
    return j.dump(2) + "\n";
}

Manifest manifest_from_json(const std::string& text, const std::string& source_name) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(source_name + ": malformed manifest: " + e.what());
    }
    Manifest m;
    const SchemaPtr schema = schema_from_json(j.at("schema"), source_name);
    const auto proto = protocol_from_name(j.at("protocol").get<std::string>());
    if (!proto) {
        throw ParseError(source_name + ": unknown protocol '" + j.at("protocol").get<std::string>() + "'");
    }
    m.split.protocol = *proto;
    const auto& config = j.at("config");
    m.config.alpha = config.at("alpha").get<double>();
    m.config.eta_threshold = config.at("eta").get<double>();
    m.config.t1_restarts = config.at("t1").get<int>();
    m.config.t2_steps = config.at("t2").get<int>();
    m.holdout_k = config.at("k").get<int>();
    m.split.seed = config.at("seed").get<std::uint64_t>();
    if (j.at("divergence").is_null()) {
        m.split.divergence.reset();
    } else {
        m.split.divergence = j.at("divergence").get<double>();
    }
    m.split.id_set = combos_from_json(schema, j.at("id_combinations"), source_name, "id_combinations");
    m.split.comp_set =
        combos_from_json(schema, j.at("comp_combinations"), source_name, "comp_combinations");
    return m;
}

void write_manifest_file(const std::string& path, const Manifest& manifest) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write manifest file '" + path + "'");
    out << manifest_to_json(manifest);
}

Manifest read_manifest_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open manifest file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return manifest_from_json(buf.str(), path);
}

std::vector<std::string> write_bundle(const std::string& dir, const SplitBundle& bundle) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> paths;
    paths.reserve(bundle.splits.size());
    for (std::size_t i = 0; i < bundle.splits.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof(name), "%s_%03zu.json", protocol_name(bundle.protocol).c_str(), i);
        Manifest m;
        m.split = bundle.splits[i];
        m.config = bundle.config;
        m.holdout_k = bundle.holdout_k;
        const std::string path = (std::filesystem::path(dir) / name).string();
        write_manifest_file(path, m);
        paths.push_back(path);
    }
    return paths;
}

namespace {

double accuracy_from_json(const ordered_json& j, const std::string& source) {
    if (j.is_number()) return j.get<double>();
    if (j.is_object()) {
        if (j.empty()) throw ParseError(source + ": empty accuracy map");
        double sum = 0.0;
        for (const auto& [aspect, value] : j.items()) {
            if (!value.is_number()) {
                throw ParseError(source + ": accuracy for aspect '" + aspect + "' must be a number");
            }
            sum += value.get<double>();
        }
        return sum / static_cast<double>(j.size());
    }
    throw ParseError(source + ": accuracy must be a number or an aspect map");
}

}  // namespace

ScoreTable parse_score_file(std::istream& in, const std::string& source_name) {
    ordered_json j;
    try {
        j = ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(source_name + ": malformed score file: " + e.what());
    }
    if (!j.is_object() || !j.contains("scores") || !j["scores"].is_array()) {
        throw ParseError(source_name + ": score file needs a 'scores' array");
    }

    struct CellPair {
        std::optional<double> a_id, p_id, a_comp, p_comp;
    };
    std::map<std::pair<Protocol, std::int64_t>, CellPair> cells;
    for (const auto& entry : j["scores"]) {
        const auto proto = protocol_from_name(entry.at("protocol").get<std::string>());
        if (!proto) {
            throw ParseError(source_name + ": unknown protocol '" +
                             entry.at("protocol").get<std::string>() + "' in score entry");
        }
        const std::int64_t split_id = entry.value("split", std::int64_t{0});
        const std::string cell = entry.at("cell").get<std::string>();
        if (cell != "id" && cell != "comp") {
            throw ParseError(source_name + ": cell must be 'id' or 'comp', got '" + cell + "'");
        }
        const double acc = accuracy_from_json(entry.at("accuracy"), source_name);
        const double ppl = entry.at("perplexity").get<double>();
        if (ppl <= 0.0) throw ParseError(source_name + ": perplexity must be positive");
        if (acc < 0.0 || acc > 100.0) {
            throw ParseError(source_name + ": accuracy must lie in [0, 100]");
        }
        auto& pair = cells[{*proto, split_id}];
        if (cell == "id") {
            pair.a_id = acc;
            pair.p_id = ppl;
        } else {
            pair.a_comp = acc;
            pair.p_comp = ppl;
        }
    }

    ScoreTable table;
    for (const auto& [key, pair] : cells) {
        const auto& [proto, split_id] = key;
        if (!pair.a_id || !pair.p_id) {
            throw ParseError(source_name + ": missing id cell for protocol '" + protocol_name(proto) +
                             "' split " + std::to_string(split_id));
        }
        if (proto != Protocol::Original && (!pair.a_comp || !pair.p_comp)) {
            throw ParseError(source_name + ": missing comp cell for protocol '" +
                             protocol_name(proto) + "' split " + std::to_string(split_id));
        }
        ProtocolScores s;
        s.protocol = proto;
        s.a_id = *pair.a_id;
        s.p_id = *pair.p_id;
        s.a_comp = pair.a_comp;
        s.p_comp = pair.p_comp;
        table.per_protocol[proto].push_back(s);
    }
    return table;
}

ScoreTable parse_score_file_path(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open score file '" + path + "'");
    return parse_score_file(in, path);
}

std::string score_table_summary(const ScoreTable& table) {
    auto mean_of = [&](Protocol p) {
        auto it = table.per_protocol.find(p);
        if (it == table.per_protocol.end()) {
            throw std::invalid_argument("score file is missing the '" + protocol_name(p) +
                                        "' protocol");
        }
        return mean_over_bundle(it->second);
    };
    const ProtocolScores original = mean_of(Protocol::Original);
    const ProtocolScores holdout = mean_of(Protocol::HoldOut);
    const ProtocolScores acd = mean_of(Protocol::Acd);
    return summary_table(original, holdout, acd, aggregate(original, holdout, acd));
}

}  // namespace compsplit
