#include "asigboost/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "asigboost/error.hpp"
#include "asigboost/parallel.hpp"

namespace asigboost {

double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) throw DataError("auc: scores and labels differ in length");
    const std::size_t n = scores.size();
    std::uint64_t positives = 0;
    for (const auto y : labels) positives += y ? 1 : 0;
    const std::uint64_t negatives = n - positives;
    if (positives == 0 || negatives == 0) throw DataError("auc: both classes must be present");
    for (const double s : scores)
        if (std::isnan(s)) throw DataError("auc: NaN score");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Twice the rank sum of the positives, in integers: a tie group spanning
    // sorted positions [start, end) has average 1-based rank (start+end+1)/2.
    std::uint64_t twice_rank_sum = 0;
    for (std::size_t start = 0; start < n;) {
        std::size_t end = start + 1;
        while (end < n && scores[order[end]] == scores[order[start]]) ++end;
        std::uint64_t group_positives = 0;
        for (std::size_t k = start; k < end; ++k) group_positives += labels[order[k]] ? 1 : 0;
        twice_rank_sum += group_positives * (start + end + 1);
        start = end;
    }
    const std::uint64_t twice_u = twice_rank_sum - positives * (positives + 1);
    return static_cast<double>(twice_u) / static_cast<double>(2 * positives * negatives);
}

std::string classifier_name(const LossSpec& spec) {
    switch (spec.kind) {
        case LossKind::cross_entropy: return "CE";
        case LossKind::focal: return "Focal";
        case LossKind::asig_focal: return "ASIG";
    }
    return "?";
}

EvalRecord evaluate(const Dataset& dataset, const BoostConfig& config, const LossSpec& spec, int repeats,
                    double train_fraction, std::uint64_t base_seed, int jobs) {
    if (repeats < 1) throw ConfigError("evaluate: repeats must be >= 1");
    spec.validate();

    EvalRecord record;
    record.classifier_name = classifier_name(spec);
    record.ir_achieved = dataset.imbalance_ratio().value();
    record.repeats = repeats;
    record.aucs.assign(static_cast<std::size_t>(repeats), 0.0);
    for (int r = 0; r < repeats; ++r) record.seeds.push_back(base_seed + static_cast<std::uint64_t>(r));

    parallel_for(static_cast<std::size_t>(repeats), jobs, [&](std::size_t r) {
        const auto [train_part, test_part] = stratified_split(dataset, train_fraction, record.seeds[r]);
        LossSpec fold_spec = spec;
        if (spec.kind == LossKind::asig_focal) fold_spec = spec.with_ir(train_part.imbalance_ratio());
        const BoostedModel model = train(train_part, config, fold_spec);
        record.aucs[r] = auc(model.predict_raw(test_part.features), test_part.labels);
    });

    double sum = 0.0;
    for (const double a : record.aucs) sum += a;
    record.auc_mean = sum / repeats;
    double sq = 0.0;
    for (const double a : record.aucs) sq += (a - record.auc_mean) * (a - record.auc_mean);
    record.auc_std = std::sqrt(sq / repeats);
    return record;
}

std::string format_auc_cell(double mean, double std) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.1f ± %.1f", mean * 100.0, std * 100.0);
    return buf;
}

ReportTable aggregate_report(const std::vector<EvalRecord>& records, const std::vector<FailedCell>& failures) {
    ReportTable table;
    auto column_of = [&](const std::string& name) {
        const auto it = std::find(table.classifiers.begin(), table.classifiers.end(), name);
        if (it != table.classifiers.end()) return static_cast<std::size_t>(it - table.classifiers.begin());
        table.classifiers.push_back(name);
        return table.classifiers.size() - 1;
    };
    for (const auto& r : records) {
        column_of(r.classifier_name);
        table.irs.push_back(r.ir_achieved);
    }
    for (const auto& f : failures) {
        column_of(f.classifier_name);
        table.irs.push_back(f.ir);
    }
    std::sort(table.irs.begin(), table.irs.end());
    table.irs.erase(std::unique(table.irs.begin(), table.irs.end()), table.irs.end());
    table.cells.assign(table.irs.size(), std::vector<ReportTable::Cell>(table.classifiers.size()));

    auto cell_at = [&](const std::string& name, double ir) -> ReportTable::Cell& {
        const auto row = static_cast<std::size_t>(std::lower_bound(table.irs.begin(), table.irs.end(), ir) - table.irs.begin());
        auto& cell = table.cells[row][column_of(name)];
        if (cell.present)
            throw ConfigError("aggregate_report: duplicate cell for classifier '" + name + "' at IR " + format_double(ir));
        cell.present = true;
        return cell;
    };
    for (const auto& r : records) {
        auto& cell = cell_at(r.classifier_name, r.ir_achieved);
        cell.mean = r.auc_mean;
        cell.std = r.auc_std;
    }
    for (const auto& f : failures) {
        auto& cell = cell_at(f.classifier_name, f.ir);
        cell.failed = true;
        cell.reason = f.reason;
    }
    return table;
}

std::string ReportTable::to_csv() const {
    std::string out = "ir";
    for (const auto& c : classifiers) out += "," + csv_field(c + "_mean") + "," + csv_field(c + "_std");
    out += "\n";
    for (std::size_t i = 0; i < irs.size(); ++i) {
        out += format_double(irs[i]);
        for (const auto& cell : cells[i]) {
            if (!cell.present)
                out += ",,";
            else if (cell.failed)
                out += ",NA,NA";
            else
                out += "," + format_double(cell.mean) + "," + format_double(cell.std);
        }
        out += "\n";
    }
    return out;
}

std::string ReportTable::to_markdown() const {
    std::vector<std::vector<std::string>> grid;
    std::vector<std::string> head{"IR"};
    head.insert(head.end(), classifiers.begin(), classifiers.end());
    grid.push_back(head);
    std::vector<std::string> notes;
    for (std::size_t i = 0; i < irs.size(); ++i) {
        char ir_text[32];
        std::snprintf(ir_text, sizeof ir_text, "%.1f", irs[i]);
        std::vector<std::string> row{ir_text};
        for (std::size_t c = 0; c < classifiers.size(); ++c) {
            const auto& cell = cells[i][c];
            if (!cell.present) {
                row.emplace_back("");
            } else if (cell.failed) {
                row.emplace_back("NA");
                notes.push_back(classifiers[c] + " at IR " + ir_text + ": " + cell.reason);
            } else {
                row.push_back(format_auc_cell(cell.mean, cell.std));
            }
        }
        grid.push_back(std::move(row));
    }

    // "±" is two bytes but one column wide.
    auto width = [](const std::string& s) {
        std::size_t w = 0;
        for (const unsigned char ch : s) w += (ch & 0xC0) != 0x80 ? 1 : 0;
        return w;
    };
    std::vector<std::size_t> widths(head.size(), 3);
    for (const auto& row : grid)
        for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], width(row[c]));

    std::string out;
    auto emit = [&](const std::vector<std::string>& row) {
        out += "|";
        for (std::size_t c = 0; c < row.size(); ++c) out += " " + row[c] + std::string(widths[c] - width(row[c]), ' ') + " |";
        out += "\n";
    };
    emit(grid.front());
    out += "|";
    for (const auto w : widths) out += std::string(w + 2, '-') + "|";
    out += "\n";
    for (std::size_t r = 1; r < grid.size(); ++r) emit(grid[r]);
    if (!notes.empty()) {
        out += "\n";
        for (const auto& n : notes) out += "- " + n + "\n";
    }
    return out;
}

}  // namespace asigboost
