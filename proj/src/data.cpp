#include "rfair/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "rfair/fairtrain.hpp"

namespace rfair::data {
namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string unquote(std::string s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::string> tokenize(const std::string& line, const std::string& delimiter) {
  std::vector<std::string> out;
  if (delimiter == "whitespace") {
    std::istringstream is(line);
    std::string tok;
    while (is >> tok) out.push_back(unquote(tok));
    return out;
  }
  if (delimiter.size() != 1) throw std::invalid_argument("unsupported delimiter '" + delimiter + "'");
  std::string tok;
  std::istringstream is(line);
  while (std::getline(is, tok, delimiter[0])) out.push_back(unquote(trim(tok)));
  if (!line.empty() && line.back() == delimiter[0]) out.emplace_back();
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

std::uint64_t fnv1a(std::uint64_t h, const std::string& bytes) {
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

double parse_number(const std::string& tok, const std::string& column) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != tok.size() || tok.empty())
    throw std::runtime_error("column '" + column + "': cannot parse '" + tok + "' as a number");
  return v;
}

std::size_t column_index(const std::vector<std::string>& columns, const std::string& name) {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw std::runtime_error("dataset has no column '" + name + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

bool has_missing(const std::vector<std::string>& row, const std::string& token) {
  return !token.empty() && std::find(row.begin(), row.end(), token) != row.end();
}

std::vector<std::vector<std::string>> drop_missing(std::vector<std::vector<std::string>> rows,
                                                   const DatasetSpec& spec, std::size_t& dropped) {
  const std::string token = spec.get("missing_token");
  const std::string policy = spec.get("missing_policy", "drop");
  if (token.empty()) return rows;
  if (policy != "drop") throw std::invalid_argument("unsupported missing_policy '" + policy + "'");
  const auto before = rows.size();
  rows.erase(std::remove_if(rows.begin(), rows.end(),
                            [&](const auto& r) { return has_missing(r, token); }),
             rows.end());
  dropped = before - rows.size();
  return rows;
}

// Maps the raw tokens of one sensitive column to group codes.
struct SensitiveCoder {
  std::string column;
  std::size_t index = 0;
  std::map<std::string, std::string> remap;
  std::vector<std::string> groups;

  std::string group_of(const std::string& raw) const {
    if (remap.empty()) return raw;
    const auto it = remap.find(raw);
    if (it == remap.end())
      throw std::runtime_error("sensitive column '" + column + "': no mapping for '" + raw + "'");
    return it->second;
  }

  int code(const std::string& raw) const {
    const std::string g = group_of(raw);
    const auto it = std::find(groups.begin(), groups.end(), g);
    if (it == groups.end())
      throw std::runtime_error("sensitive column '" + column + "': unknown group '" + g + "'");
    return static_cast<int>(it - groups.begin());
  }
};

SensitiveCoder make_coder(const DatasetSpec& spec, const std::vector<std::string>& columns,
                          const std::string& name,
                          const std::vector<std::vector<std::string>>& train_rows) {
  SensitiveCoder c;
  c.column = name;
  c.index = column_index(columns, name);
  for (const std::string& pair : spec.list("sensitive_map." + name)) {
    const auto colon = pair.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("sensitive_map." + name + ": expected raw:group, got '" + pair + "'");
    c.remap[trim(pair.substr(0, colon))] = trim(pair.substr(colon + 1));
  }
  c.groups = spec.list("sensitive_values." + name);
  if (c.groups.empty()) {
    std::set<std::string> seen;
    for (const auto& r : train_rows) seen.insert(c.group_of(r[c.index]));
    c.groups.assign(seen.begin(), seen.end());
  }
  if (c.groups.size() < 2)
    throw std::runtime_error("sensitive column '" + name + "' has fewer than two groups");
  return c;
}

struct Split {
  std::vector<std::vector<std::string>> train;
  std::vector<std::vector<std::string>> test;
};

Split split_rows(const DatasetSpec& spec, const fs::path& root, RawTable& train_table,
                 std::size_t& dropped_train, std::size_t& dropped_test) {
  const std::string policy = spec.get("split", "files");
  Split out;
  if (policy == "files") {
    RawTable test_table = read_table(root / spec.require("test_file"), spec);
    out.train = drop_missing(std::move(train_table.rows), spec, dropped_train);
    out.test = drop_missing(std::move(test_table.rows), spec, dropped_test);
    return out;
  }
  auto rows = drop_missing(std::move(train_table.rows), spec, dropped_train);
  const auto parts = split_list(policy, ':');
  if (parts.size() == 2 && parts[0] == "head") {
    const std::size_t n_train = std::stoul(parts[1]);
    if (n_train > rows.size()) throw std::runtime_error("split head: not enough rows");
    out.train.assign(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test.assign(rows.begin() + static_cast<std::ptrdiff_t>(n_train), rows.end());
    return out;
  }
  if (parts.size() == 3 && parts[0] == "random") {
    const std::size_t n_train = std::stoul(parts[1]);
    const std::size_t n_test = std::stoul(parts[2]);
    if (n_train + n_test > rows.size())
      throw std::runtime_error("split random: requested " + std::to_string(n_train + n_test) +
                               " rows but only " + std::to_string(rows.size()) + " are available");
    std::vector<std::size_t> perm(rows.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(std::stoull(spec.get("split_seed", "0")));
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::size_t> tr(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> te(perm.begin() + static_cast<std::ptrdiff_t>(n_train),
                                perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_test));
    std::sort(tr.begin(), tr.end());
    std::sort(te.begin(), te.end());
    for (std::size_t i : tr) out.train.push_back(rows[i]);
    for (std::size_t i : te) out.test.push_back(rows[i]);
    return out;
  }
  throw std::invalid_argument("unknown split policy '" + policy + "'");
}

// --- cache -----------------------------------------------------------------

template <class T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
void read_pod(std::istream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof v);
}

void write_batch(std::ostream& os, const model::Batch& b) {
  write_pod(os, static_cast<std::uint64_t>(b.features.rows()));
  write_pod(os, static_cast<std::uint64_t>(b.features.cols()));
  write_pod(os, static_cast<std::uint64_t>(b.classes));
  write_pod(os, static_cast<std::uint64_t>(b.groups));
  os.write(reinterpret_cast<const char*>(b.features.data().data()),
           static_cast<std::streamsize>(b.features.data().size() * sizeof(double)));
  os.write(reinterpret_cast<const char*>(b.labels.data()),
           static_cast<std::streamsize>(b.labels.size() * sizeof(int)));
  os.write(reinterpret_cast<const char*>(b.sensitive.data()),
           static_cast<std::streamsize>(b.sensitive.size() * sizeof(int)));
}

model::Batch read_batch(std::istream& is) {
  std::uint64_t rows = 0, cols = 0, classes = 0, groups = 0;
  read_pod(is, rows);
  read_pod(is, cols);
  read_pod(is, classes);
  read_pod(is, groups);
  model::Batch b;
  b.features = Matrix(rows, cols);
  b.classes = classes;
  b.groups = groups;
  b.labels.resize(rows);
  b.sensitive.resize(rows);
  is.read(reinterpret_cast<char*>(b.features.data().data()),
          static_cast<std::streamsize>(rows * cols * sizeof(double)));
  is.read(reinterpret_cast<char*>(b.labels.data()), static_cast<std::streamsize>(rows * sizeof(int)));
  is.read(reinterpret_cast<char*>(b.sensitive.data()),
          static_cast<std::streamsize>(rows * sizeof(int)));
  if (!is) throw std::runtime_error("truncated dataset cache");
  return b;
}

}  // namespace

DatasetSpec DatasetSpec::parse(const std::string& text) {
  DatasetSpec spec;
  spec.source_text = text;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("dataset spec line " + std::to_string(lineno) + ": expected key = value");
    spec.values[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return spec;
}

DatasetSpec DatasetSpec::from_file(const fs::path& path) { return parse(read_file(path)); }

std::string DatasetSpec::get(const std::string& key, const std::string& fallback) const {
  const auto it = values.find(key);
  return it == values.end() ? fallback : it->second;
}

std::string DatasetSpec::require(const std::string& key) const {
  const auto it = values.find(key);
  if (it == values.end() || it->second.empty())
    throw std::invalid_argument("dataset spec is missing '" + key + "'");
  return it->second;
}

std::vector<std::string> DatasetSpec::list(const std::string& key) const {
  return split_list(get(key), ',');
}

std::string EncodedDataset::decode_category(const std::string& column,
                                            std::span<const double> row) const {
  for (const CategoricalBlock& b : categorical) {
    if (b.column != column) continue;
    for (std::size_t k = 0; k < b.categories.size(); ++k)
      if (row[b.offset + k] == 1.0) return b.categories[k];
    return kUnseenToken;
  }
  throw std::invalid_argument("no categorical column '" + column + "'");
}

fs::path data_root(const fs::path& fallback) {
  if (const char* env = std::getenv(kDataRootEnv); env != nullptr && *env != '\0') return env;
  return fallback;
}

RawTable read_table(const fs::path& path, const DatasetSpec& spec) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read dataset file " + path.string());
  const std::string delimiter = spec.get("delimiter", ",");
  const std::string comment = spec.get("comment_prefix");
  bool need_header = spec.get("header", "false") == "true";
  RawTable table;
  table.columns = spec.list("columns");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (!comment.empty() && line.rfind(comment, 0) == 0) continue;
    auto tokens = tokenize(line, delimiter);
    if (need_header) {
      if (table.columns.empty()) table.columns = tokens;
      need_header = false;
      continue;
    }
    if (tokens.size() != table.columns.size())
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected " +
                               std::to_string(table.columns.size()) + " fields, found " +
                               std::to_string(tokens.size()));
    table.rows.push_back(std::move(tokens));
  }
  if (table.columns.empty()) throw std::runtime_error(path.string() + ": no column names");
  return table;
}

EncodedDataset load_dataset(const DatasetSpec& spec, const fs::path& root) {
  EncodedDataset out;
  RawTable table = read_table(root / spec.require("train_file"), spec);
  const std::vector<std::string> columns = table.columns;
  Split split = split_rows(spec, root, table, out.dropped_train, out.dropped_test);
  if (split.train.empty() || split.test.empty())
    throw std::runtime_error("dataset split produced an empty train or test set");

  const std::size_t label_col = column_index(columns, spec.require("label"));
  const std::string positive = spec.require("label_positive");
  const std::string suffix = spec.get("label_strip_suffix");
  const auto sensitive_names = spec.list("sensitive");
  if (sensitive_names.empty()) throw std::invalid_argument("dataset spec needs a sensitive column");

  std::vector<SensitiveCoder> coders;
  for (const auto& name : sensitive_names)
    coders.push_back(make_coder(spec, columns, name, split.train));

  const bool keep_sensitive = spec.get("keep_sensitive_in_features", "false") == "true";
  std::set<std::size_t> excluded{label_col};
  for (const auto& name : spec.list("drop")) excluded.insert(column_index(columns, name));
  if (!keep_sensitive)
    for (const auto& c : coders) excluded.insert(c.index);
  std::set<std::size_t> categorical;
  for (const auto& name : spec.list("categorical")) categorical.insert(column_index(columns, name));

  // Feature layout in column order.
  struct Slot {
    std::size_t column;
    bool categorical;
    std::size_t block;  // index into out.categorical or out.numeric_columns
  };
  std::vector<Slot> slots;
  std::size_t width = 0;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (excluded.count(c) != 0) continue;
    if (categorical.count(c) != 0) {
      std::set<std::string> seen;
      for (const auto& r : split.train) seen.insert(r[c]);
      CategoricalBlock b{columns[c], width, {seen.begin(), seen.end()}};
      for (const auto& cat : b.categories) out.feature_names.push_back(columns[c] + "=" + cat);
      width += b.categories.size();
      slots.push_back({c, true, out.categorical.size()});
      out.categorical.push_back(std::move(b));
    } else {
      out.feature_names.push_back(columns[c]);
      slots.push_back({c, false, out.numeric_columns.size()});
      out.numeric_columns.push_back(columns[c]);
      ++width;
    }
  }

  // Train statistics for numeric columns.
  out.numeric_mean.assign(out.numeric_columns.size(), 0.0);
  out.numeric_std.assign(out.numeric_columns.size(), 0.0);
  std::vector<std::size_t> numeric_offset(out.numeric_columns.size());
  {
    std::size_t offset = 0;
    for (const Slot& s : slots) {
      if (s.categorical) {
        offset += out.categorical[s.block].categories.size();
      } else {
        numeric_offset[s.block] = offset++;
      }
    }
    for (const Slot& s : slots) {
      if (s.categorical) continue;
      double mean = 0.0;
      for (const auto& r : split.train) mean += parse_number(r[s.column], columns[s.column]);
      mean /= static_cast<double>(split.train.size());
      double var = 0.0;
      for (const auto& r : split.train) {
        const double d = parse_number(r[s.column], columns[s.column]) - mean;
        var += d * d;
      }
      const double sd = std::sqrt(var / static_cast<double>(split.train.size()));
      out.numeric_mean[s.block] = mean;
      out.numeric_std[s.block] = sd > 0.0 ? sd : 1.0;
    }
  }

  std::size_t unseen = 0;
  auto encode = [&](const std::vector<std::vector<std::string>>& rows, bool is_test) {
    model::Batch b;
    b.classes = 2;
    b.features = Matrix(rows.size(), width);
    b.labels.resize(rows.size());
    std::vector<std::vector<int>> sens(coders.size(), std::vector<int>(rows.size()));
    for (std::size_t n = 0; n < rows.size(); ++n) {
      const auto& r = rows[n];
      std::string lab = r[label_col];
      if (!suffix.empty() && lab.size() >= suffix.size() &&
          lab.compare(lab.size() - suffix.size(), suffix.size(), suffix) == 0)
        lab.erase(lab.size() - suffix.size());
      b.labels[n] = lab == positive ? 1 : 0;
      for (std::size_t k = 0; k < coders.size(); ++k) sens[k][n] = coders[k].code(r[coders[k].index]);
      auto row = b.features.row(n);
      for (const Slot& s : slots) {
        if (s.categorical) {
          const CategoricalBlock& blk = out.categorical[s.block];
          const auto it = std::lower_bound(blk.categories.begin(), blk.categories.end(), r[s.column]);
          if (it != blk.categories.end() && *it == r[s.column]) {
            row[blk.offset + static_cast<std::size_t>(it - blk.categories.begin())] = 1.0;
          } else if (is_test) {
            ++unseen;
          }
        } else {
          const double v = parse_number(r[s.column], columns[s.column]);
          row[numeric_offset[s.block]] = (v - out.numeric_mean[s.block]) / out.numeric_std[s.block];
        }
      }
    }
    std::vector<std::size_t> sizes;
    for (const auto& c : coders) sizes.push_back(c.groups.size());
    const auto combined = fairtrain::combine_sensitive(sens, sizes);
    b.sensitive = combined.codes;
    b.groups = combined.alphabet;
    return b;
  };
  out.train = encode(split.train, false);
  out.test = encode(split.test, true);
  if (unseen > 0)
    out.warnings.push_back(std::to_string(unseen) +
                           " test value(s) of categorical columns were not seen in training "
                           "and were encoded as " + kUnseenToken);

  out.sensitive_radices.clear();
  for (const auto& c : coders) out.sensitive_radices.push_back(c.groups.size());
  fairtrain::CombinedSensitive names;
  names.radices = out.sensitive_radices;
  names.alphabet = out.train.groups;
  for (std::size_t code = 0; code < names.alphabet; ++code) {
    const auto digits = names.decode(static_cast<int>(code));
    std::string label;
    for (std::size_t k = 0; k < digits.size(); ++k) {
      if (k > 0) label += "|";
      label += coders[k].groups[static_cast<std::size_t>(digits[k])];
    }
    out.sensitive_names.push_back(label);
  }
  return out;
}

std::string content_key(const DatasetSpec& spec, const fs::path& root) {
  std::uint64_t h = fnv1a(1469598103934665603ULL, spec.source_text);
  h = fnv1a(h, read_file(root / spec.require("train_file")));
  if (spec.has("test_file")) h = fnv1a(h, read_file(root / spec.get("test_file")));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

EncodedDataset load_dataset_cached(const DatasetSpec& spec, const fs::path& root,
                                   const fs::path& cache_dir) {
  const std::string key = content_key(spec, root);
  const fs::path path = cache_dir / (spec.get("name", "dataset") + ".cache");
  using nlohmann::json;
  if (std::ifstream is(path, std::ios::binary); is) {
    std::string magic, stored_key, meta_line;
    std::getline(is, magic);
    std::getline(is, stored_key);
    std::getline(is, meta_line);
    if (magic == "rfair-cache 1" && stored_key == key) {
      const json meta = json::parse(meta_line);
      EncodedDataset ds;
      ds.feature_names = meta.at("feature_names").get<std::vector<std::string>>();
      for (const auto& b : meta.at("categorical"))
        ds.categorical.push_back({b.at("column").get<std::string>(), b.at("offset").get<std::size_t>(),
                                  b.at("categories").get<std::vector<std::string>>()});
      ds.numeric_columns = meta.at("numeric_columns").get<std::vector<std::string>>();
      ds.numeric_mean = meta.at("numeric_mean").get<std::vector<double>>();
      ds.numeric_std = meta.at("numeric_std").get<std::vector<double>>();
      ds.sensitive_names = meta.at("sensitive_names").get<std::vector<std::string>>();
      ds.sensitive_radices = meta.at("sensitive_radices").get<std::vector<std::size_t>>();
      ds.dropped_train = meta.at("dropped_train").get<std::size_t>();
      ds.dropped_test = meta.at("dropped_test").get<std::size_t>();
      ds.warnings = meta.at("warnings").get<std::vector<std::string>>();
      ds.train = read_batch(is);
      ds.test = read_batch(is);
      return ds;
    }
  }
  EncodedDataset ds = load_dataset(spec, root);
  fs::create_directories(cache_dir);
  json meta;
  meta["feature_names"] = ds.feature_names;
  meta["categorical"] = json::array();
  for (const auto& b : ds.categorical)
    meta["categorical"].push_back({{"column", b.column}, {"offset", b.offset}, {"categories", b.categories}});
  meta["numeric_columns"] = ds.numeric_columns;
  meta["numeric_mean"] = ds.numeric_mean;
  meta["numeric_std"] = ds.numeric_std;
  meta["sensitive_names"] = ds.sensitive_names;
  meta["sensitive_radices"] = ds.sensitive_radices;
  meta["dropped_train"] = ds.dropped_train;
  meta["dropped_test"] = ds.dropped_test;
  meta["warnings"] = ds.warnings;
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write dataset cache " + path.string());
  os << "rfair-cache 1\n" << key << '\n' << meta.dump() << '\n';
  write_batch(os, ds.train);
  write_batch(os, ds.test);
  return ds;
}

ClusteringView clustering_view(const DatasetSpec& spec, const fs::path& root) {
  RawTable table = read_table(root / spec.require("train_file"), spec);
  std::size_t dropped = 0;
  const auto rows = drop_missing(std::move(table.rows), spec, dropped);
  ClusteringView view;
  view.feature_names = spec.list("cluster_features");
  if (view.feature_names.empty()) throw std::invalid_argument("dataset spec has no cluster_features");
  std::string sens_name = spec.get("cluster_sensitive");
  if (sens_name.empty()) sens_name = spec.list("sensitive").at(0);
  const SensitiveCoder coder = make_coder(spec, table.columns, sens_name, rows);
  if (coder.groups.size() != 2)
    throw std::runtime_error("clustering needs a binary sensitive column; '" + sens_name + "' has " +
                             std::to_string(coder.groups.size()) + " groups");

  std::vector<std::size_t> idx(rows.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const std::size_t want = std::stoul(spec.get("cluster_samples", "0"));
  if (want > 0 && want < rows.size()) {
    std::mt19937_64 rng(std::stoull(spec.get("cluster_seed", "0")));
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(want);
    std::sort(idx.begin(), idx.end());
  }

  std::vector<std::size_t> cols;
  for (const auto& name : view.feature_names) cols.push_back(column_index(table.columns, name));
  view.points = Matrix(idx.size(), cols.size());
  view.sensitive.resize(idx.size());
  for (std::size_t n = 0; n < idx.size(); ++n) {
    const auto& r = rows[idx[n]];
    for (std::size_t j = 0; j < cols.size(); ++j)
      view.points(n, j) = parse_number(r[cols[j]], table.columns[cols[j]]);
    view.sensitive[n] = coder.code(r[coder.index]);
  }
  for (std::size_t j = 0; j < cols.size(); ++j) {
    double mean = 0.0, var = 0.0;
    for (std::size_t n = 0; n < idx.size(); ++n) mean += view.points(n, j);
    mean /= static_cast<double>(idx.size());
    for (std::size_t n = 0; n < idx.size(); ++n) var += std::pow(view.points(n, j) - mean, 2);
    double sd = std::sqrt(var / static_cast<double>(idx.size()));
    if (sd == 0.0) sd = 1.0;
    for (std::size_t n = 0; n < idx.size(); ++n) view.points(n, j) = (view.points(n, j) - mean) / sd;
  }
  return view;
}

model::Batch synth_yequalss(std::size_t n, std::uint64_t seed, std::size_t dim) {
  if (n == 0 || n % 2 != 0) throw std::invalid_argument("synth_yequalss: n must be positive and even");
  if (dim == 0) throw std::invalid_argument("synth_yequalss: dim must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  model::Batch b;
  b.classes = 2;
  b.groups = 2;
  b.features = Matrix(n, dim);
  b.labels.resize(n);
  b.sensitive.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int blob = i < n / 2 ? 0 : 1;
    const std::size_t slot = order[i];
    b.features(slot, 0) = (blob == 0 ? -2.0 : 2.0) + gauss(rng);
    for (std::size_t j = 1; j < dim; ++j) b.features(slot, j) = gauss(rng);
    b.labels[slot] = blob;
    b.sensitive[slot] = blob;
  }
  return b;
}

XorFixture xor_fixture(std::size_t per_group, std::uint64_t seed) {
  if (per_group == 0) throw std::invalid_argument("xor_fixture: per_group must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> e(per_group), u(per_group);
  for (std::size_t i = 0; i < per_group; ++i) {
    e[i] = gauss(rng);
    u[i] = gauss(rng);
  }
  XorFixture out;
  const std::size_t n = 4 * per_group;
  out.batch.classes = 2;
  out.batch.features = Matrix(n, 2);
  out.batch.labels.resize(n);
  out.s1.resize(n);
  out.s2.resize(n);
  for (std::size_t g = 0; g < 4; ++g) {
    const int a = static_cast<int>(g / 2);
    const int b = static_cast<int>(g % 2);
    const double sign = (a ^ b) == 1 ? 1.0 : -1.0;
    for (std::size_t i = 0; i < per_group; ++i) {
      const std::size_t r = g * per_group + i;
      const double z = sign + 0.5 * e[i];
      out.batch.features(r, 0) = z;
      out.batch.features(r, 1) = u[i];
      out.batch.labels[r] = z + u[i] > 0.0 ? 1 : 0;
      out.s1[r] = a;
      out.s2[r] = b;
    }
  }
  const auto combined = fairtrain::combine_sensitive({out.s1, out.s2}, {2, 2});
  out.batch.sensitive = combined.codes;
  out.batch.groups = combined.alphabet;
  return out;
}

}  // namespace rfair::data
