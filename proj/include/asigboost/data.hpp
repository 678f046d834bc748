#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "asigboost/matrix.hpp"
#include "asigboost/text_io.hpp"

namespace asigboost {

/// Negative count divided by positive count. Always positive and finite.
class ImbalanceRatio {
public:
    explicit ImbalanceRatio(double value);

    static ImbalanceRatio of_counts(std::size_t negatives, std::size_t positives);

    double value() const { return value_; }

    friend bool operator==(ImbalanceRatio, ImbalanceRatio) = default;

private:
    double value_;
};

/// Feature matrix with binary labels. Label 1 marks a positive (defaulter),
/// which is normally the minority class.
struct Dataset {
    Matrix features;
    std::vector<std::uint8_t> labels;
    std::vector<std::string> feature_names;
    std::string source_tag;

    std::size_t size() const { return labels.size(); }
    std::size_t positives() const;
    std::size_t negatives() const { return size() - positives(); }

    /// Throws DataError when the dataset has no positives.
    ImbalanceRatio imbalance_ratio() const;

    /// Checks the structural invariants (label values, shape agreement).
    void validate() const;

    Dataset subset(std::span<const std::size_t> rows) const;
};

enum class ColumnRole { numeric, categorical, drop };

/// How to read a raw CSV. Columns without an explicit role are numeric when
/// every observed value parses as a number, categorical otherwise.
struct IngestSchema {
    std::string label_column;
    std::string positive_value;
    std::map<std::string, ColumnRole> column_roles;
    bool allow_positive_majority = false;

    /// Keys: label, positive, allow_positive_majority, role.<column>.
    static IngestSchema from_doc(const KeyValueDoc& doc);
    static IngestSchema load(const std::filesystem::path& path);
};

/// Categoricals with at most this many distinct observed values are one-hot
/// encoded; larger ones are replaced by their relative frequency.
inline constexpr std::size_t kOneHotMaxDistinct = 16;

/// Median-imputes numerics, encodes categoricals, drops unlabeled rows.
Dataset ingest(const CsvTable& table, const IngestSchema& schema, std::string source_tag = "");
Dataset ingest(const std::filesystem::path& csv_path, const IngestSchema& schema);

/// Keeps every negative and floor(negatives / target) uniformly chosen
/// positives. Row order of the survivors is preserved.
Dataset resample_to_ir(const Dataset& dataset, ImbalanceRatio target, std::uint64_t seed);

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Per-class shuffle, round(fraction * class_count) rows of each class go to
/// train. Both index lists are ascending.
SplitIndices stratified_split_indices(const Dataset& dataset, double train_fraction, std::uint64_t seed);
std::pair<Dataset, Dataset> stratified_split(const Dataset& dataset, double train_fraction, std::uint64_t seed);

struct PcaResult {
    Matrix scores;                               // rows x components
    std::vector<std::vector<double>> components; // unit loadings, one per component
    std::vector<double> eigenvalues;
    std::vector<double> explained_variance_ratio;
};

/// Principal components of the z-scored features by power iteration with
/// deflation. `components` must be 1 or 2.
PcaResult pca_project(const Dataset& dataset, int components);

/// Processed dataset persistence: CSV of the features followed by a
/// `label` column, plus a `<path>.meta` key-value sidecar.
void save_dataset(const Dataset& dataset, const std::filesystem::path& path, const KeyValueDoc& metadata = {});
Dataset load_dataset(const std::filesystem::path& path);

std::filesystem::path metadata_path(const std::filesystem::path& dataset_path);

}  // namespace asigboost
