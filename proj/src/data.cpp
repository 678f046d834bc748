#include "asigboost/data.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_map>

#include "asigboost/error.hpp"
#include "asigboost/random.hpp"

namespace asigboost {

namespace {

bool is_missing_token(std::string_view raw) {
    const auto v = trim(raw);
    return v.empty() || v == "NA" || v == "N/A" || v == "NaN" || v == "nan" || v == "null" || v == "NULL" ||
           v == "?";
}

double median_of(std::vector<double> values) {
    const std::size_t n = values.size();
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(values.begin(), mid, values.end());
    const double upper = *mid;
    if (n % 2 == 1) return upper;
    const double lower = *std::max_element(values.begin(), mid);
    return lower + (upper - lower) / 2.0;
}

ColumnRole parse_role(const std::string& text, const std::string& column) {
    if (text == "numeric") return ColumnRole::numeric;
    if (text == "categorical") return ColumnRole::categorical;
    if (text == "drop") return ColumnRole::drop;
    throw ConfigError("schema: column '" + column + "' has unknown role '" + text + "'");
}

void check_class_balance(const Dataset& ds, bool allow_positive_majority) {
    const std::size_t pos = ds.positives();
    const std::size_t neg = ds.negatives();
    if (pos == 0) throw DataError("dataset '" + ds.source_tag + "' has no positive rows");
    if (neg == 0) throw DataError("dataset '" + ds.source_tag + "' has no negative rows");
    if (pos > neg && !allow_positive_majority)
        throw DataError("dataset '" + ds.source_tag + "': positives (" + std::to_string(pos) +
                        ") outnumber negatives (" + std::to_string(neg) +
                        "); set allow_positive_majority to accept");
}

}  // namespace

ImbalanceRatio::ImbalanceRatio(double value) : value_{value} {
    if (!std::isfinite(value) || value <= 0.0)
        throw ConfigError("imbalance ratio must be positive and finite, got " + format_double(value));
}

ImbalanceRatio ImbalanceRatio::of_counts(std::size_t negatives, std::size_t positives) {
    if (positives == 0) throw DataError("imbalance ratio undefined: no positive rows");
    if (negatives == 0) throw DataError("imbalance ratio undefined: no negative rows");
    return ImbalanceRatio(static_cast<double>(negatives) / static_cast<double>(positives));
}

std::size_t Dataset::positives() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
}

ImbalanceRatio Dataset::imbalance_ratio() const { return ImbalanceRatio::of_counts(negatives(), positives()); }

void Dataset::validate() const {
    if (features.rows() != labels.size())
        throw DataError("dataset: " + std::to_string(features.rows()) + " feature rows but " +
                        std::to_string(labels.size()) + " labels");
    if (features.cols() != feature_names.size())
        throw DataError("dataset: " + std::to_string(features.cols()) + " feature columns but " +
                        std::to_string(feature_names.size()) + " names");
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] > 1) throw DataError("dataset: label at row " + std::to_string(i) + " is not 0/1");
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    Dataset out;
    out.features = features.select_rows(rows);
    out.labels.reserve(rows.size());
    for (const auto r : rows) out.labels.push_back(labels[r]);
    out.feature_names = feature_names;
    out.source_tag = source_tag;
    return out;
}

IngestSchema IngestSchema::from_doc(const KeyValueDoc& doc) {
    IngestSchema schema;
    schema.label_column = doc.require("label");
    schema.positive_value = doc.require("positive");
    schema.allow_positive_majority = doc.get_bool("allow_positive_majority", false);
    for (const auto& [key, value] : doc.entries()) {
        if (key.starts_with("role.")) {
            const std::string column = key.substr(5);
            if (column.empty()) throw ConfigError("schema: empty column name in '" + key + "'");
            if (column == schema.label_column)
                throw ConfigError("schema: label column '" + column + "' cannot also have a role");
            schema.column_roles.emplace(column, parse_role(value, column));
        } else if (key != "label" && key != "positive" && key != "allow_positive_majority") {
            throw ConfigError("schema: unknown key '" + key + "'");
        }
    }
    return schema;
}

IngestSchema IngestSchema::load(const std::filesystem::path& path) { return from_doc(KeyValueDoc::load(path)); }

Dataset ingest(const CsvTable& table, const IngestSchema& schema, std::string source_tag) {
    const auto& header = table.header;
    const auto label_it = std::find(header.begin(), header.end(), schema.label_column);
    if (label_it == header.end()) throw DataError("ingest: label column '" + schema.label_column + "' not in header");
    const auto label_col = static_cast<std::size_t>(label_it - header.begin());

    {
        std::set<std::string> seen;
        for (const auto& h : header)
            if (!seen.insert(h).second) throw DataError("ingest: duplicate header column '" + h + "'");
    }
    for (const auto& [column, role] : schema.column_roles) {
        if (std::find(header.begin(), header.end(), column) == header.end())
            throw ConfigError("schema: role given for column '" + column + "' which is not in the header");
    }

    // Rows with a missing label are dropped before any statistics are taken.
    std::vector<std::size_t> kept;
    kept.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r)
        if (!is_missing_token(table.rows[r][label_col])) kept.push_back(r);

    const std::string positive(trim(schema.positive_value));
    Dataset ds;
    ds.source_tag = std::move(source_tag);
    ds.labels.reserve(kept.size());
    for (const auto r : kept) ds.labels.push_back(trim(table.rows[r][label_col]) == positive ? 1 : 0);

    std::vector<std::vector<double>> columns;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c == label_col) continue;
        const std::string& name = header[c];

        ColumnRole role{};
        if (const auto it = schema.column_roles.find(name); it != schema.column_roles.end()) {
            role = it->second;
        } else {
            role = ColumnRole::numeric;
            for (const auto r : kept) {
                const auto& cell = table.rows[r][c];
                if (!is_missing_token(cell) && !parse_double(cell)) {
                    role = ColumnRole::categorical;
                    break;
                }
            }
        }

        if (role == ColumnRole::drop) continue;

        if (role == ColumnRole::numeric) {
            std::vector<double> values(kept.size(), std::numeric_limits<double>::quiet_NaN());
            std::vector<double> observed;
            observed.reserve(kept.size());
            for (std::size_t i = 0; i < kept.size(); ++i) {
                const auto& cell = table.rows[kept[i]][c];
                if (is_missing_token(cell)) continue;
                const auto v = parse_double(cell);
                if (!v || !std::isfinite(*v))
                    throw DataError("ingest: column '" + name + "' row " + std::to_string(kept[i] + 2) +
                                    ": cannot parse '" + cell + "' as a number");
                values[i] = *v;
                observed.push_back(*v);
            }
            if (observed.empty()) throw DataError("ingest: numeric column '" + name + "' has no observed values");
            if (observed.size() < values.size()) {
                const double median = median_of(observed);
                for (auto& v : values)
                    if (std::isnan(v)) v = median;
            }
            ds.feature_names.push_back(name);
            columns.push_back(std::move(values));
            continue;
        }

        // Categorical. Missing cells get all-zero indicators / frequency 0.
        std::map<std::string, std::size_t> counts;
        std::size_t observed = 0;
        for (const auto r : kept) {
            const auto& cell = table.rows[r][c];
            if (is_missing_token(cell)) continue;
            ++counts[std::string(trim(cell))];
            ++observed;
        }
        if (counts.size() <= kOneHotMaxDistinct) {
            for (const auto& [value, count] : counts) {
                std::vector<double> indicator(kept.size(), 0.0);
                for (std::size_t i = 0; i < kept.size(); ++i) {
                    const auto& cell = table.rows[kept[i]][c];
                    if (!is_missing_token(cell) && trim(cell) == value) indicator[i] = 1.0;
                }
                ds.feature_names.push_back(name + "=" + value);
                columns.push_back(std::move(indicator));
            }
        } else {
            std::vector<double> freq(kept.size(), 0.0);
            for (std::size_t i = 0; i < kept.size(); ++i) {
                const auto& cell = table.rows[kept[i]][c];
                if (is_missing_token(cell)) continue;
                freq[i] = static_cast<double>(counts.at(std::string(trim(cell)))) / static_cast<double>(observed);
            }
            ds.feature_names.push_back(name);
            columns.push_back(std::move(freq));
        }
    }

    ds.features = Matrix(kept.size(), columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j)
        for (std::size_t i = 0; i < kept.size(); ++i) ds.features(i, j) = columns[j][i];

    check_class_balance(ds, schema.allow_positive_majority);
    return ds;
}

Dataset ingest(const std::filesystem::path& csv_path, const IngestSchema& schema) {
    return ingest(read_csv(csv_path), schema, csv_path.filename().string());
}

Dataset resample_to_ir(const Dataset& dataset, ImbalanceRatio target, std::uint64_t seed) {
    const std::size_t pos = dataset.positives();
    const std::size_t neg = dataset.negatives();
    const double current = ImbalanceRatio::of_counts(neg, pos).value();
    if (target.value() < current * (1.0 - 1e-12))
        throw DataError("resample: target IR " + format_double(target.value()) + " is below the current IR " +
                        format_double(current) + "; undersampling positives can only raise it");

    // Tolerance guards target == current IR, where neg / target can land a
    // hair below the positive count.
    auto keep = static_cast<std::size_t>(std::floor(static_cast<double>(neg) / target.value() + 1e-9));
    keep = std::min(keep, pos);
    if (keep == 0)
        throw DataError("resample: target IR " + format_double(target.value()) + " would retain zero positives");

    std::vector<std::size_t> positive_rows;
    positive_rows.reserve(pos);
    for (std::size_t i = 0; i < dataset.size(); ++i)
        if (dataset.labels[i] == 1) positive_rows.push_back(i);

    // Partial Fisher-Yates: the first `keep` slots become a uniform subset.
    CounterRng rng(seed, 0x5245534D504C45ULL);
    for (std::size_t i = 0; i < keep; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(pos - i));
        std::swap(positive_rows[i], positive_rows[j]);
    }
    std::vector<std::uint8_t> retain(dataset.size(), 0);
    for (std::size_t i = 0; i < keep; ++i) retain[positive_rows[i]] = 1;

    std::vector<std::size_t> rows;
    rows.reserve(neg + keep);
    for (std::size_t i = 0; i < dataset.size(); ++i)
        if (dataset.labels[i] == 0 || retain[i]) rows.push_back(i);

    Dataset out = dataset.subset(rows);
    out.source_tag = dataset.source_tag + "@ir" + format_double(target.value());
    return out;
}

SplitIndices stratified_split_indices(const Dataset& dataset, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ConfigError("split: train fraction must lie in (0, 1), got " + format_double(train_fraction));

    SplitIndices out;
    for (std::uint8_t cls : {std::uint8_t{0}, std::uint8_t{1}}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < dataset.size(); ++i)
            if (dataset.labels[i] == cls) members.push_back(i);
        const std::string cls_name = cls ? "positive" : "negative";
        if (members.size() < 2)
            throw DataError("split: " + cls_name + " class has " + std::to_string(members.size()) +
                            " rows, at least 2 are required");
        const auto n_train =
            static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(members.size())));
        if (n_train == 0 || n_train == members.size())
            throw DataError("split: " + cls_name + " class would get zero " + (n_train == 0 ? "train" : "test") +
                            " rows at fraction " + format_double(train_fraction));

        CounterRng rng(seed, 0x53504C4954ULL + cls);
        for (std::size_t i = members.size() - 1; i > 0; --i) {
            const auto j = static_cast<std::size_t>(rng.below(i + 1));
            std::swap(members[i], members[j]);
        }
        out.train.insert(out.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
        out.test.insert(out.test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

std::pair<Dataset, Dataset> stratified_split(const Dataset& dataset, double train_fraction, std::uint64_t seed) {
    const auto idx = stratified_split_indices(dataset, train_fraction, seed);
    return {dataset.subset(idx.train), dataset.subset(idx.test)};
}

std::filesystem::path metadata_path(const std::filesystem::path& dataset_path) {
    auto p = dataset_path;
    p += ".meta";
    return p;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path, const KeyValueDoc& metadata) {
    dataset.validate();
    if (std::find(dataset.feature_names.begin(), dataset.feature_names.end(), "label") != dataset.feature_names.end())
        throw DataError("save_dataset: a feature is named 'label', which is reserved");

    std::string csv;
    for (const auto& name : dataset.feature_names) {
        csv += csv_field(name);
        csv += ',';
    }
    csv += "label\n";
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        for (const double v : dataset.features.row(i)) {
            csv += format_double(v);
            csv += ',';
        }
        csv += dataset.labels[i] ? "1\n" : "0\n";
    }
    write_file(path, csv);

    KeyValueDoc meta;
    meta.set("source_tag", dataset.source_tag);
    meta.set("rows", std::to_string(dataset.size()));
    meta.set("features", std::to_string(dataset.features.cols()));
    meta.set("positives", std::to_string(dataset.positives()));
    meta.set("negatives", std::to_string(dataset.negatives()));
    if (dataset.positives() > 0 && dataset.negatives() > 0)
        meta.set("achieved_ir", format_double(dataset.imbalance_ratio().value()));
    for (const auto& [k, v] : metadata.entries()) meta.set(k, v);
    write_file(metadata_path(path), meta.to_string());
}

Dataset load_dataset(const std::filesystem::path& path) {
    const CsvTable table = read_csv(path);
    if (table.header.empty() || table.header.back() != "label")
        throw DataError(path.string() + ": processed dataset must end with a 'label' column");

    Dataset ds;
    ds.source_tag = path.stem().string();
    if (const auto meta_file = metadata_path(path); std::filesystem::exists(meta_file)) {
        const auto meta = KeyValueDoc::load(meta_file);
        if (auto tag = meta.get("source_tag")) ds.source_tag = *tag;
    }
    const std::size_t cols = table.header.size() - 1;
    ds.feature_names.assign(table.header.begin(), table.header.end() - 1);
    ds.features = Matrix(table.rows.size(), cols);
    ds.labels.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        for (std::size_t c = 0; c < cols; ++c) {
            const auto v = parse_double(row[c]);
            if (!v || !std::isfinite(*v))
                throw DataError(path.string() + ": row " + std::to_string(r + 2) + " column '" + table.header[c] +
                                "' is not a finite number: '" + row[c] + "'");
            ds.features(r, c) = *v;
        }
        const auto label = trim(row.back());
        if (label != "0" && label != "1")
            throw DataError(path.string() + ": row " + std::to_string(r + 2) + " label is not 0/1");
        ds.labels.push_back(label == "1" ? 1 : 0);
    }
    return ds;
}

}  // namespace asigboost
