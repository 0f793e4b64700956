#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "radialrouter/errors.hpp"
#include "radialrouter/util.hpp"

namespace radialrouter::data {

using nlohmann::json;

inline constexpr std::size_t kNoRow = std::numeric_limits<std::size_t>::max();

struct LLMEntry {
  std::string name;
  double cost = 0.0;  // average dollars per query
};

/// Ordered candidate pool. The order is the satellite index everywhere.
class LLMCatalog {
 public:
  LLMCatalog() = default;
  explicit LLMCatalog(std::vector<LLMEntry> entries) : entries_(std::move(entries)) { validate(); }

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const LLMEntry& operator[](std::size_t i) const { return entries_.at(i); }
  const std::vector<LLMEntry>& entries() const noexcept { return entries_; }

  std::optional<std::size_t> index_of(std::string_view name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].name == name) return i;
    }
    return std::nullopt;
  }

  /// Order-sensitive fingerprint of names and costs.
  std::string hash() const {
    Fnv1a h;
    for (const auto& e : entries_) {
      h.update(e.name);
      h.update(std::string_view("\x1f", 1));
      h.update(e.cost);
    }
    return h.hex();
  }

  json to_json() const {
    json arr = json::array();
    for (const auto& e : entries_) arr.push_back({{"name", e.name}, {"cost", e.cost}});
    return arr;
  }

  static LLMCatalog from_json(const json& j) {
    if (!j.is_array()) throw FormatError("catalog: expected a JSON array of {name, cost}");
    std::vector<LLMEntry> entries;
    for (const auto& e : j) {
      if (!e.contains("name") || !e.contains("cost")) {
        throw FormatError("catalog: entry missing name or cost: " + e.dump());
      }
      entries.push_back({e.at("name").get<std::string>(), e.at("cost").get<double>()});
    }
    return LLMCatalog(std::move(entries));
  }

 private:
  void validate() const {
    std::set<std::string> seen;
    for (const auto& e : entries_) {
      if (e.name.empty()) throw ValidationError("catalog: empty LLM name");
      if (!seen.insert(e.name).second) throw ValidationError("catalog: duplicate LLM " + e.name);
      if (!(e.cost >= 0.0) || !std::isfinite(e.cost)) {
        throw ValidationError("catalog: invalid cost for " + e.name);
      }
    }
  }

  std::vector<LLMEntry> entries_;
};

inline LLMCatalog load_catalog(const std::filesystem::path& path) {
  try {
    return LLMCatalog::from_json(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw FormatError("catalog " + path.string() + ": " + e.what());
  }
}

inline void save_catalog(const std::filesystem::path& path, const LLMCatalog& catalog) {
  write_file_atomic(path, catalog.to_json().dump(2) + "\n");
}

struct QueryRecord {
  std::string id;
  std::optional<std::string> text;
  std::string dataset_tag;
  std::vector<double> perf;  // aligned with catalog order
  std::size_t embedding_row = kNoRow;
};

// ---------------------------------------------------------------------------
// dataset.jsonl

inline QueryRecord parse_record(const json& j, const LLMCatalog& catalog, std::size_t line) {
  const std::string where = "dataset line " + std::to_string(line);
  if (!j.is_object()) throw FormatError(where + ": not a JSON object");
  if (!j.contains("id") || !j.at("id").is_string()) throw FormatError(where + ": missing string id");
  QueryRecord r;
  r.id = j.at("id").get<std::string>();
  if (j.contains("text") && !j.at("text").is_null()) r.text = j.at("text").get<std::string>();
  r.dataset_tag = j.value("dataset_tag", std::string("default"));
  if (!j.contains("perf") || !j.at("perf").is_object()) {
    throw FormatError(where + ": missing perf object");
  }
  r.perf.assign(catalog.size(), std::numeric_limits<double>::quiet_NaN());
  for (const auto& [name, value] : j.at("perf").items()) {
    const auto idx = catalog.index_of(name);
    if (!idx) throw ValidationError(where + ": unknown LLM '" + name + "' in perf of " + r.id);
    if (!value.is_number()) throw FormatError(where + ": non-numeric perf for " + name);
    const double v = value.get<double>();
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ValidationError(where + ": perf of " + name + " for " + r.id + " outside [0,1]");
    }
    r.perf[*idx] = v;
  }
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    if (std::isnan(r.perf[i])) {
      throw ValidationError(where + ": query " + r.id + " has no performance for LLM '" +
                            catalog[i].name + "'");
    }
  }
  return r;
}

inline json record_to_json(const QueryRecord& r, const LLMCatalog& catalog) {
  json perf = json::object();
  for (std::size_t i = 0; i < catalog.size(); ++i) perf[catalog[i].name] = r.perf.at(i);
  json j = {{"id", r.id}, {"dataset_tag", r.dataset_tag}, {"perf", perf}};
  if (r.text) j["text"] = *r.text;
  return j;
}

/// Reads one QueryRecord per line, validated against the catalog, sorted by id.
inline std::vector<QueryRecord> load_dataset(const std::filesystem::path& path,
                                             const LLMCatalog& catalog) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset " + path.string());
  std::vector<QueryRecord> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw FormatError("dataset line " + std::to_string(lineno) + ": malformed JSON (" + e.what() + ")");
    }
    auto r = parse_record(j, catalog, lineno);
    if (!ids.insert(r.id).second) {
      throw ValidationError("dataset line " + std::to_string(lineno) + ": duplicate id " + r.id);
    }
    out.push_back(std::move(r));
  }
  if (out.empty()) spdlog::warn("dataset {} is empty", path.string());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

inline void write_dataset(const std::filesystem::path& path, std::span<const QueryRecord> records,
                          const LLMCatalog& catalog) {
  std::string body;
  for (const auto& r : records) body += record_to_json(r, catalog).dump() + "\n";
  write_file_atomic(path, body);
}

// ---------------------------------------------------------------------------
// manifest.txt

inline std::vector<std::string> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open manifest " + path.string());
  std::vector<std::string> ids;
  std::set<std::string> seen;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!seen.insert(line).second) throw FormatError("manifest: duplicate id " + line);
    ids.push_back(line);
  }
  return ids;
}

inline void write_manifest(const std::filesystem::path& path, std::span<const std::string> ids) {
  std::string body;
  for (const auto& id : ids) body += id + "\n";
  write_file_atomic(path, body);
}

// ---------------------------------------------------------------------------
// embeddings.bin
//
// Layout (little-endian):
//   bytes 0..3   magic "RRE1"
//   bytes 4..7   uint32 length L of the JSON header
//   bytes 8..8+L JSON header {"encoder_name", "d_enc", "count", "dtype"}
//   zero padding up to the next multiple of 64 bytes (at least 64 in total)
//   count * d_enc floats of dtype ("f32" or "f64"), row-major

struct EmbeddingHeader {
  std::string encoder_name = "unknown";
  std::size_t d_enc = 0;
  std::size_t count = 0;
  std::string dtype = "f64";
  json extra = json::object();  // provenance fields from the writer, kept verbatim
};

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(EmbeddingHeader header, std::vector<double> data)
      : header_(std::move(header)), data_(std::move(data)) {
    if (data_.size() != header_.count * header_.d_enc) {
      throw FormatError("embeddings: " + std::to_string(data_.size()) + " values for " +
                        std::to_string(header_.count) + "x" + std::to_string(header_.d_enc));
    }
  }

  const EmbeddingHeader& header() const noexcept { return header_; }
  std::size_t count() const noexcept { return header_.count; }
  std::size_t dim() const noexcept { return header_.d_enc; }
  std::span<const double> row(std::size_t i) const {
    if (i >= count()) throw IndexError("embeddings: row " + std::to_string(i) + " out of range");
    return std::span<const double>(data_).subspan(i * dim(), dim());
  }
  std::span<const double> data() const noexcept { return data_; }

 private:
  EmbeddingHeader header_;
  std::vector<double> data_;
};

inline constexpr char kEmbeddingMagic[4] = {'R', 'R', 'E', '1'};
inline constexpr std::size_t kEmbeddingAlign = 64;

inline std::size_t embedding_data_offset(std::size_t header_len) {
  const std::size_t raw = 8 + header_len;
  return (raw + kEmbeddingAlign - 1) / kEmbeddingAlign * kEmbeddingAlign;
}

inline void write_embeddings(const std::filesystem::path& path, const EmbeddingTable& table,
                             const std::string& dtype = "f64") {
  if (dtype != "f32" && dtype != "f64") throw ValidationError("embeddings: dtype must be f32 or f64");
  json header = table.header().extra;
  header["encoder_name"] = table.header().encoder_name;
  header["d_enc"] = table.dim();
  header["count"] = table.count();
  header["dtype"] = dtype;
  const std::string h = header.dump();
  const auto len = static_cast<std::uint32_t>(h.size());
  std::string out(embedding_data_offset(h.size()), '\0');
  std::memcpy(out.data(), kEmbeddingMagic, 4);
  for (int i = 0; i < 4; ++i) out[4 + i] = static_cast<char>((len >> (8 * i)) & 0xff);
  std::memcpy(out.data() + 8, h.data(), h.size());
  auto put_le = [&out](std::uint64_t bits, int bytes) {
    for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
  };
  for (double v : table.data()) {
    if (dtype == "f64") {
      put_le(std::bit_cast<std::uint64_t>(v), 8);
    } else {
      put_le(std::bit_cast<std::uint32_t>(static_cast<float>(v)), 4);
    }
  }
  write_file_atomic(path, out);
}

/// Strict loader. `expected_count`, when given, must equal the header count
/// (normally the manifest length).
inline EmbeddingTable load_embeddings(const std::filesystem::path& path,
                                      std::optional<std::size_t> expected_count = std::nullopt) {
  const std::string bytes = read_file(path);
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kEmbeddingMagic, 4) != 0) {
    throw FormatError("embeddings " + path.string() + ": bad magic");
  }
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i) {
    len |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[4 + i])) << (8 * i);
  }
  if (8 + static_cast<std::size_t>(len) > bytes.size()) {
    throw FormatError("embeddings " + path.string() + ": truncated header");
  }
  json hj;
  try {
    hj = json::parse(bytes.substr(8, len));
  } catch (const json::exception& e) {
    throw FormatError("embeddings " + path.string() + ": header is not JSON (" + e.what() + ")");
  }
  EmbeddingHeader header;
  try {
    header.encoder_name = hj.value("encoder_name", std::string("unknown"));
    header.d_enc = hj.at("d_enc").get<std::size_t>();
    header.count = hj.at("count").get<std::size_t>();
    header.dtype = hj.at("dtype").get<std::string>();
  } catch (const json::exception& e) {
    throw FormatError("embeddings " + path.string() + ": header field missing (" + e.what() + ")");
  }
  for (const auto& [k, v] : hj.items()) {
    if (k != "encoder_name" && k != "d_enc" && k != "count" && k != "dtype") header.extra[k] = v;
  }
  if (header.dtype != "f32" && header.dtype != "f64") {
    throw FormatError("embeddings: unsupported dtype " + header.dtype);
  }
  if (expected_count && *expected_count != header.count) {
    throw FormatError("embeddings: header count " + std::to_string(header.count) +
                      " does not match manifest length " + std::to_string(*expected_count));
  }
  const std::size_t width = header.dtype == "f64" ? 8 : 4;
  const std::size_t offset = embedding_data_offset(len);
  const std::size_t need = header.count * header.d_enc * width;
  if (bytes.size() < offset || bytes.size() - offset != need) {
    throw FormatError("embeddings " + path.string() + ": data block holds " +
                      std::to_string(bytes.size() < offset ? 0 : bytes.size() - offset) +
                      " bytes, header implies " + std::to_string(need) + " (corrupt or truncated)");
  }
  std::vector<double> data(header.count * header.d_enc);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + offset);
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::uint64_t bits = 0;
    for (std::size_t b = 0; b < width; ++b) bits |= static_cast<std::uint64_t>(p[i * width + b]) << (8 * b);
    data[i] = width == 8 ? std::bit_cast<double>(bits)
                         : static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(bits)));
    if (!std::isfinite(data[i])) throw FormatError("embeddings: non-finite value at index " + std::to_string(i));
  }
  return EmbeddingTable(std::move(header), std::move(data));
}

// ---------------------------------------------------------------------------

/// Catalog, validated queries and their embeddings, with rows resolved.
struct Corpus {
  LLMCatalog catalog;
  std::vector<QueryRecord> queries;
  EmbeddingTable embeddings;

  std::span<const double> embedding(const QueryRecord& q) const { return embeddings.row(q.embedding_row); }
};

/// Resolves each query's embedding row through the manifest order.
inline void attach_embeddings(std::vector<QueryRecord>& queries, std::span<const std::string> manifest) {
  std::unordered_map<std::string, std::size_t> row;
  for (std::size_t i = 0; i < manifest.size(); ++i) row.emplace(manifest[i], i);
  for (auto& q : queries) {
    const auto it = row.find(q.id);
    if (it == row.end()) throw ValidationError("manifest has no embedding for query " + q.id);
    q.embedding_row = it->second;
  }
}

inline Corpus load_corpus(const std::filesystem::path& catalog_path,
                          const std::filesystem::path& dataset_path,
                          const std::filesystem::path& embeddings_path,
                          const std::filesystem::path& manifest_path) {
  Corpus c;
  c.catalog = load_catalog(catalog_path);
  c.queries = load_dataset(dataset_path, c.catalog);
  const auto manifest = load_manifest(manifest_path);
  c.embeddings = load_embeddings(embeddings_path, manifest.size());
  attach_embeddings(c.queries, manifest);
  return c;
}

/// Writes catalog.json, dataset.jsonl, embeddings.bin and manifest.txt into `dir`.
inline void save_corpus(const std::filesystem::path& dir, const Corpus& c) {
  std::filesystem::create_directories(dir);
  save_catalog(dir / "catalog.json", c.catalog);
  write_dataset(dir / "dataset.jsonl", c.queries, c.catalog);
  std::vector<std::string> manifest(c.embeddings.count());
  for (const auto& q : c.queries) manifest.at(q.embedding_row) = q.id;
  write_manifest(dir / "manifest.txt", manifest);
  write_embeddings(dir / "embeddings.bin", c.embeddings);
}

/// Keeps only the named LLMs, in the given order.
inline Corpus restrict_pool(const Corpus& c, std::span<const std::string> names) {
  std::vector<std::size_t> cols;
  std::vector<LLMEntry> entries;
  for (const auto& n : names) {
    const auto idx = c.catalog.index_of(n);
    if (!idx) throw ValidationError("restrict_pool: unknown LLM " + n);
    cols.push_back(*idx);
    entries.push_back(c.catalog[*idx]);
  }
  Corpus out{LLMCatalog(std::move(entries)), c.queries, c.embeddings};
  for (auto& q : out.queries) {
    std::vector<double> perf;
    for (auto i : cols) perf.push_back(q.perf[i]);
    q.perf = std::move(perf);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic benchmark

struct SynthConfig {
  std::size_t n_llms = 4;
  std::size_t n_groups = 6;
  std::size_t queries_per_group = 40;
  std::size_t d_enc = 32;
  double noise = 0.05;
  std::uint64_t seed = 0;
  double centroid_scale = 4.0;  // std-dev of group centroids
  double spread = 1.0;          // std-dev of queries around their centroid
  double best_perf = 0.9;
  double other_perf = 0.4;
};

struct SynthCorpus {
  Corpus corpus;
  std::vector<std::size_t> designated;  // group -> designated-best LLM index
  std::map<std::string, std::size_t> group_of;  // query id -> construction group
};

/// Gaussian query blobs, one per group; group g's designated LLM is g mod n_llms.
inline SynthCorpus synth_generate(const SynthConfig& cfg) {
  if (cfg.n_llms < 2) throw ConfigError("synth: need at least 2 LLMs");
  if (cfg.n_groups < 2) throw ConfigError("synth: need at least 2 groups");
  if (cfg.queries_per_group == 0 || cfg.d_enc == 0) throw ConfigError("synth: empty configuration");
  if (cfg.noise < 0.0) throw ConfigError("synth: noise must be non-negative");
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<LLMEntry> entries;
  const double lo = std::log(0.1), hi = std::log(7.2);
  for (std::size_t i = 0; i < cfg.n_llms; ++i) {
    entries.push_back({"llm-" + std::to_string(i), std::exp(lo + (hi - lo) * unit(rng))});
  }

  SynthCorpus out;
  out.corpus.catalog = LLMCatalog(std::move(entries));
  std::vector<std::vector<double>> centroids(cfg.n_groups, std::vector<double>(cfg.d_enc));
  for (auto& c : centroids) {
    for (auto& v : c) v = cfg.centroid_scale * normal(rng);
  }
  for (std::size_t g = 0; g < cfg.n_groups; ++g) out.designated.push_back(g % cfg.n_llms);

  const std::size_t count = cfg.n_groups * cfg.queries_per_group;
  std::vector<double> emb;
  emb.reserve(count * cfg.d_enc);
  std::size_t row = 0;
  for (std::size_t g = 0; g < cfg.n_groups; ++g) {
    for (std::size_t j = 0; j < cfg.queries_per_group; ++j) {
      QueryRecord q;
      std::ostringstream id;
      id << "q" << std::setw(2) << std::setfill('0') << g << "-" << std::setw(4) << j;
      q.id = id.str();
      q.text = "synthetic query " + std::to_string(j) + " of group " + std::to_string(g);
      q.dataset_tag = "group-" + std::to_string(g);
      for (std::size_t i = 0; i < cfg.n_llms; ++i) {
        double p = i == out.designated[g] ? cfg.best_perf : cfg.other_perf;
        if (cfg.noise > 0.0) p += cfg.noise * normal(rng);
        q.perf.push_back(std::clamp(p, 0.0, 1.0));
      }
      for (std::size_t k = 0; k < cfg.d_enc; ++k) emb.push_back(centroids[g][k] + cfg.spread * normal(rng));
      q.embedding_row = row++;
      out.group_of[q.id] = g;
      out.corpus.queries.push_back(std::move(q));
    }
  }
  EmbeddingHeader header;
  header.encoder_name = "synthetic-gaussian";
  header.d_enc = cfg.d_enc;
  header.count = count;
  header.dtype = "f64";
  out.corpus.embeddings = EmbeddingTable(std::move(header), std::move(emb));
  return out;
}

// ---------------------------------------------------------------------------
// RouterBench adaptation
//
// Targets the per-query wide CSV export: columns `sample_id`, `prompt`,
// `eval_name`, and per model M a performance column `M` plus a cost column
// `M|total_cost` (dollars for that query). Other columns are ignored.

inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
    } else {
      field += c;
    }
  }
  if (quoted) throw FormatError("csv: unterminated quoted field");
  if (!field.empty() || !row.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Canonical names of the eleven candidate LLMs, in reference-table order.
inline const std::vector<std::string>& routerbench_llm_names() {
  static const std::vector<std::string> names = {
      "WizardLM-13B-V1.2",  "claude-instant-v1",   "claude-v1",        "claude-v2",
      "gpt-3.5-turbo-1106", "gpt-4-1106-preview",  "code-llama-34b-chat", "llama-2-70b-chat",
      "mistral-7b-chat",    "mixtral-8x7b-chat",   "Yi-34B-Chat"};
  return names;
}

inline std::string canonical_llm_name(std::string raw) {
  if (const auto slash = raw.rfind('/'); slash != std::string::npos) raw = raw.substr(slash + 1);
  static const std::map<std::string, std::string> aliases = {
      {"code-llama-instruct-34b-chat", "code-llama-34b-chat"},
      {"WizardLM-13B-V1.2", "WizardLM-13B-V1.2"},
      {"yi-34b-chat", "Yi-34B-Chat"},
  };
  if (const auto it = aliases.find(raw); it != aliases.end()) return it->second;
  return raw;
}

/// Maps a benchmark eval name to one of the six dataset tags, or nullopt.
inline std::optional<std::string> dataset_tag_for(std::string_view eval_name) {
  std::string s(eval_name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  static const std::vector<std::pair<std::string, std::string>> prefixes = {
      {"gsm8k", "GSM8K"},      {"hellaswag", "Hellaswag"}, {"mbpp", "MBPP"},
      {"mmlu", "MMLU"},        {"winogrande", "Winogrande"}, {"arc-challenge", "ARC"},
      {"arc_challenge", "ARC"}};
  for (const auto& [p, tag] : prefixes) {
    if (s.rfind(p, 0) == 0) return tag;
  }
  return std::nullopt;
}

struct AdaptResult {
  LLMCatalog catalog;
  std::vector<QueryRecord> queries;
  std::vector<std::string> warnings;
  std::size_t dropped_queries = 0;
};

/// Converts a wide export into catalog + records. Catalog cost is the
/// macro-average (over dataset tags) of per-query cost times `cost_scale`.
inline AdaptResult routerbench_adapt(const std::string& csv_text, double cost_scale = 1000.0) {
  const auto rows = parse_csv(csv_text);
  if (rows.empty()) throw FormatError("routerbench: empty export");
  const auto& head = rows.front();
  auto col = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < head.size(); ++i) {
      if (head[i] == name) return i;
    }
    return std::nullopt;
  };
  const auto id_col = col("sample_id");
  const auto eval_col = col("eval_name");
  const auto prompt_col = col("prompt");
  if (!id_col || !eval_col) {
    throw FormatError("routerbench: export needs columns sample_id and eval_name");
  }
  struct ModelCols {
    std::string name;
    std::size_t perf;
    std::size_t cost;
  };
  std::vector<ModelCols> models;
  for (std::size_t i = 0; i < head.size(); ++i) {
    const auto& h = head[i];
    if (h == "sample_id" || h == "eval_name" || h == "prompt" || h.find('|') != std::string::npos ||
        h == "oracle_model_to_route_to" || h.empty()) {
      continue;
    }
    const auto cost = col(h + "|total_cost");
    if (!cost) throw FormatError("routerbench: model column '" + h + "' has no '" + h + "|total_cost' column");
    models.push_back({canonical_llm_name(h), i, *cost});
  }
  if (models.empty()) throw FormatError("routerbench: no model performance columns found");

  AdaptResult out;
  const auto& known = routerbench_llm_names();
  std::vector<std::size_t> order;
  for (const auto& k : known) {
    for (std::size_t m = 0; m < models.size(); ++m) {
      if (models[m].name == k) order.push_back(m);
    }
  }
  for (std::size_t m = 0; m < models.size(); ++m) {
    if (std::find(known.begin(), known.end(), models[m].name) == known.end()) {
      out.warnings.push_back("extra LLM '" + models[m].name + "' retained");
      order.push_back(m);
    }
  }
  for (const auto& k : known) {
    bool present = false;
    for (const auto& m : models) present |= m.name == k;
    if (!present) out.warnings.push_back("reference LLM '" + k + "' missing from export");
  }

  std::map<std::string, std::vector<double>> cost_sum;  // tag -> per-model sums
  std::map<std::string, std::size_t> tag_count;
  auto number = [](const std::string& s, std::size_t line, const std::string& what) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw FormatError("routerbench line " + std::to_string(line) + ": bad " + what + " '" + s + "'");
    }
  };
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != head.size()) {
      throw FormatError("routerbench line " + std::to_string(r + 1) + ": expected " +
                        std::to_string(head.size()) + " fields, got " + std::to_string(row.size()));
    }
    const auto tag = dataset_tag_for(row[*eval_col]);
    if (!tag) {
      ++out.dropped_queries;
      continue;
    }
    QueryRecord q;
    q.id = row[*id_col];
    if (prompt_col) q.text = row[*prompt_col];
    q.dataset_tag = *tag;
    auto& sums = cost_sum[*tag];
    sums.resize(order.size(), 0.0);
    ++tag_count[*tag];
    for (std::size_t k = 0; k < order.size(); ++k) {
      const auto& m = models[order[k]];
      const double p = number(row[m.perf], r + 1, "performance for " + m.name);
      if (!(p >= 0.0 && p <= 1.0)) {
        throw ValidationError("routerbench line " + std::to_string(r + 1) + ": performance outside [0,1]");
      }
      q.perf.push_back(p);
      sums[k] += number(row[m.cost], r + 1, "cost for " + m.name);
    }
    out.queries.push_back(std::move(q));
  }
  std::vector<LLMEntry> entries;
  for (std::size_t k = 0; k < order.size(); ++k) {
    double macro = 0.0;
    for (const auto& [tag, sums] : cost_sum) macro += sums[k] / static_cast<double>(tag_count[tag]);
    if (!cost_sum.empty()) macro /= static_cast<double>(cost_sum.size());
    entries.push_back({models[order[k]].name, macro * cost_scale});
  }
  out.catalog = LLMCatalog(std::move(entries));
  std::sort(out.queries.begin(), out.queries.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < out.queries.size(); ++i) {
    if (out.queries[i].id == out.queries[i - 1].id) {
      throw ValidationError("routerbench: duplicate sample_id " + out.queries[i].id);
    }
  }
  if (out.dropped_queries > 0) {
    out.warnings.push_back(std::to_string(out.dropped_queries) + " queries outside the six datasets dropped");
  }
  return out;
}

}  // namespace radialrouter::data
