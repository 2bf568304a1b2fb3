#pragma once

// Tabular dataset loading for the classification and clustering experiments,
// plus the synthetic fixtures used by the tests.
//
// A dataset is described by a small key = value spec file (see data/specs/).
// Recognized keys:
//
//   name, train_file, test_file          paths relative to the data root
//   delimiter                            "," ";" or "whitespace"
//   header                               true if the first line names columns
//   columns                              column names (required without header)
//   comment_prefix                       lines starting with it are skipped
//   missing_token, missing_policy        token marking a missing value; "drop"
//   label, label_positive                label column and its positive token
//   label_strip_suffix                   suffix removed from label tokens
//   sensitive                            one or more sensitive columns
//   sensitive_values.<col>               ordered group names (code = position)
//   sensitive_map.<col>                  raw:group pairs mapping tokens to groups
//   categorical, drop                    column lists
//   keep_sensitive_in_features           default false
//   split                                "files", "head:<n_train>" or
//                                        "random:<n_train>:<n_test>"
//   split_seed
//   cluster_features, cluster_samples, cluster_sensitive, cluster_seed
//
// Every other column is numeric. Numeric features are z-scored with the
// training split's mean and standard deviation; categorical features are
// one-hot encoded over the categories seen in training. A test-time token not
// seen in training encodes as an all-zero block and decodes as "<unseen>".

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rfair/matrix.hpp"
#include "rfair/model.hpp"

namespace rfair::data {

inline constexpr const char* kDataRootEnv = "RFAIR_DATA_ROOT";
inline constexpr const char* kUnseenToken = "<unseen>";

struct DatasetSpec {
  std::map<std::string, std::string> values;
  std::string source_text;

  static DatasetSpec parse(const std::string& text);
  static DatasetSpec from_file(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values.count(key) != 0; }
  std::string get(const std::string& key, const std::string& fallback = "") const;
  std::string require(const std::string& key) const;
  std::vector<std::string> list(const std::string& key) const;
};

// One-hot block for a categorical column.
struct CategoricalBlock {
  std::string column;
  std::size_t offset = 0;
  std::vector<std::string> categories;
};

struct EncodedDataset {
  model::Batch train;
  model::Batch test;
  std::vector<std::string> feature_names;
  std::vector<CategoricalBlock> categorical;
  std::vector<std::string> numeric_columns;
  std::vector<double> numeric_mean;
  std::vector<double> numeric_std;
  // Group names of the (possibly combined) sensitive code.
  std::vector<std::string> sensitive_names;
  std::vector<std::size_t> sensitive_radices;
  std::size_t dropped_train = 0;
  std::size_t dropped_test = 0;
  std::vector<std::string> warnings;

  // Category token of `column` encoded in a feature row.
  std::string decode_category(const std::string& column, std::span<const double> row) const;
};

// Data root: `RFAIR_DATA_ROOT` if set, otherwise `fallback`.
std::filesystem::path data_root(const std::filesystem::path& fallback);

// Raw table after tokenizing; header row removed.
struct RawTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

RawTable read_table(const std::filesystem::path& path, const DatasetSpec& spec);

EncodedDataset load_dataset(const DatasetSpec& spec, const std::filesystem::path& root);

// Same, through an on-disk cache keyed by a content hash of the spec text and
// the source files. The cache file is rewritten when the key changes.
EncodedDataset load_dataset_cached(const DatasetSpec& spec, const std::filesystem::path& root,
                                   const std::filesystem::path& cache_dir);
std::string content_key(const DatasetSpec& spec, const std::filesystem::path& root);

struct ClusteringView {
  Matrix points;
  std::vector<int> sensitive;  // binary
  std::vector<std::string> feature_names;
};

// Continuous columns from the training file, missing rows dropped, seeded
// subsample (kept in file order), z-scored over the subsample.
ClusteringView clustering_view(const DatasetSpec& spec, const std::filesystem::path& root);

// Two unit-variance Gaussian blobs centered at -2 e1 and +2 e1 in `dim`
// dimensions; label = sensitive = blob index. n / 2 points each, shuffled.
model::Batch synth_yequalss(std::size_t n, std::uint64_t seed, std::size_t dim = 2);

// Two binary sensitive attributes whose XOR drives the label through a
// feature z; a second feature u is drawn once and shared by every group.
// Rows of groups with equal XOR have identical features, so any score has
// equal means on groups {00, 11} and on {01, 10}: its linear correlation with
// the combined code 2 s1 + s2 is zero while its dependence on the code is not.
struct XorFixture {
  model::Batch batch;  // sensitive = combined code, 4 groups
  std::vector<int> s1;
  std::vector<int> s2;
};

XorFixture xor_fixture(std::size_t per_group, std::uint64_t seed);

}  // namespace rfair::data
