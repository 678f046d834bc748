#include "asigboost/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include "CLI11.hpp"
#include "asigboost/activation_loss.hpp"
#include "asigboost/data.hpp"
#include "asigboost/error.hpp"
#include "asigboost/gbdt.hpp"
#include "asigboost/manifest.hpp"
#include "asigboost/metrics.hpp"
#include "asigboost/parallel.hpp"
#include "asigboost/pretrain.hpp"
#include "asigboost/synthetic.hpp"

namespace asigboost {

namespace {

namespace fs = std::filesystem;

constexpr std::string_view kJobsVariable = "ASIGBOOST_JOBS";

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// One CLI invocation: its arguments, streams and clock.
struct Run {
    const std::vector<std::string>& args;
    std::ostream& out;
    std::ostream& err;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    std::string started_utc = utc_now();

    RunManifest manifest(std::string command) const {
        RunManifest m;
        m.command = std::move(command);
        m.args = args;
        m.started_utc = started_utc;
        return m;
    }

    void finish(RunManifest& m, const fs::path& path) const {
        m.wall_clock_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        m.write(path);
        out << "manifest: " << path.string() << "\n";
    }
};

int resolve_jobs(const std::optional<int>& flag) {
    if (flag) {
        if (*flag < 1) throw ConfigError("--jobs must be >= 1");
        return *flag;
    }
    if (const char* env = std::getenv(kJobsVariable.data())) {
        const auto v = parse_int(env);
        if (!v || *v < 1) throw ConfigError(std::string(kJobsVariable) + " must be a positive integer, got '" + env + "'");
        return static_cast<int>(*v);
    }
    return 1;
}

void require_file(const std::string& path, const char* what) {
    if (!fs::is_regular_file(path)) throw DataError(std::string(what) + " not found: " + path);
}

// Outputs may never overwrite an input.
void ensure_distinct(const fs::path& output, std::initializer_list<fs::path> inputs) {
    const auto target = fs::weakly_canonical(output);
    for (const auto& in : inputs)
        if (!in.empty() && fs::weakly_canonical(in) == target)
            throw ConfigError("output " + output.string() + " would overwrite input " + in.string());
}

void check_targets(const std::vector<double>& targets) {
    if (targets.empty()) throw ConfigError("no target IRs given");
    for (const double t : targets) (void)ImbalanceRatio(t);
}

void ensure_parent(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

struct BoostFlags {
    std::string config_file;
    std::optional<int> rounds, max_leaves, max_depth, min_samples_leaf, max_bins;
    std::optional<double> learning_rate, l2_lambda, max_delta_step;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> init_score;

    void attach(CLI::App* app) {
        app->add_option("--config", config_file, "Boosting config file (key = value); flags override it");
        app->add_option("--rounds", rounds, "Boosting rounds");
        app->add_option("--learning-rate", learning_rate, "Shrinkage per tree");
        app->add_option("--max-leaves", max_leaves, "Leaves per tree");
        app->add_option("--max-depth", max_depth, "Tree depth cap");
        app->add_option("--min-samples-leaf", min_samples_leaf, "Minimum training rows per leaf");
        app->add_option("--lambda", l2_lambda, "L2 penalty on leaf values");
        app->add_option("--max-bins", max_bins, "Histogram bins per feature (2..256)");
        app->add_option("--max-delta-step", max_delta_step, "Cap on |leaf output| before shrinkage; 0 = off");
        app->add_option("--init-score", init_score, "Starting score: auto, newton or zero");
        app->add_option("--boost-seed", seed, "Seed recorded in the boosting config");
    }

    BoostConfig resolve(RunManifest& m) const {
        BoostConfig c;
        if (!config_file.empty()) {
            c = BoostConfig::from_doc(KeyValueDoc::load(config_file));
            m.add_input(config_file);
        }
        if (rounds) c.num_rounds = *rounds;
        if (learning_rate) c.learning_rate = *learning_rate;
        if (max_leaves) c.max_leaves = *max_leaves;
        if (max_depth) c.max_depth = *max_depth;
        if (min_samples_leaf) c.min_samples_leaf = *min_samples_leaf;
        if (l2_lambda) c.l2_lambda = *l2_lambda;
        if (max_bins) c.max_bins = *max_bins;
        if (max_delta_step) c.max_delta_step = *max_delta_step;
        if (seed) c.seed = *seed;
        if (init_score) c.init_score = parse_init_score(*init_score);
        c.validate();
        const KeyValueDoc doc = c.to_doc();
        for (const auto& [k, v] : doc.entries()) m.settings.emplace_back("boost." + k, v);
        return c;
    }
};

struct LossFlags {
    std::string asig_params;
    bool allow_negative_slope = false;
    double gamma = 2.0;
    double alpha = 0.25;

    void attach(CLI::App* app) {
        app->add_option("--asig-params", asig_params,
                        "Pretrain result file, or 'slope,intercept' (use --asig-params=a,b for negative values)");
        app->add_flag("--allow-negative-slope", allow_negative_slope, "Accept a shift that decreases with IR");
        app->add_option("--focal-gamma", gamma, "Focusing exponent of the focal losses");
        app->add_option("--focal-alpha", alpha, "Positive-class weight of the focal losses");
    }

    std::optional<AsigParams> params(RunManifest& m) const {
        if (asig_params.empty()) return std::nullopt;
        double slope = 0.0, intercept = 0.0;
        const auto parts = split(asig_params, ',');
        const auto a = parts.size() == 2 ? parse_double(parts[0]) : std::nullopt;
        const auto b = parts.size() == 2 ? parse_double(parts[1]) : std::nullopt;
        if (a && b) {
            slope = *a;
            intercept = *b;
        } else {
            if (!fs::is_regular_file(asig_params))
                throw ConfigError("--asig-params: not 'slope,intercept' and no such file: " + asig_params);
            const auto result = PretrainResult::parse(read_file(asig_params));
            m.add_input(asig_params);
            slope = result.asig.slope();
            intercept = result.asig.intercept();
        }
        AsigParams p(slope, intercept, allow_negative_slope);
        m.settings.emplace_back("asig_slope", format_double(p.slope()));
        m.settings.emplace_back("asig_intercept", format_double(p.intercept()));
        return p;
    }

    LossSpec spec(LossKind kind, const std::optional<AsigParams>& params, ImbalanceRatio ir) const {
        switch (kind) {
            case LossKind::cross_entropy: return LossSpec::cross_entropy();
            case LossKind::focal: return LossSpec::focal(gamma, alpha);
            case LossKind::asig_focal:
                if (!params) throw ConfigError("--loss asig requires --asig-params");
                return LossSpec::asig_focal(*params, ir, gamma, alpha);
        }
        throw ConfigError("unknown loss");
    }
};

struct ProtocolFlags {
    int repeats = 3;
    double train_fraction = 0.7;
    std::uint64_t base_seed = 0;

    void attach(CLI::App* app) {
        app->add_option("--repeats", repeats, "Repeated stratified splits per cell")->check(CLI::PositiveNumber);
        app->add_option("--train-fraction", train_fraction, "Training share of each split");
        app->add_option("--base-seed", base_seed, "Split seed of repeat 0; repeat r uses base + r");
    }
};

// ---------------------------------------------------------------- ingest

struct IngestFlags {
    std::string input, schema, output;
};

int cmd_ingest(const Run& run, const IngestFlags& f) {
    RunManifest m = run.manifest("ingest");
    const IngestSchema schema = IngestSchema::load(f.schema);
    require_file(f.input, "input CSV");
    ensure_distinct(f.output, {f.input, f.schema});
    m.add_input(f.input);
    m.add_input(f.schema);

    const Dataset ds = ingest(fs::path(f.input), schema);
    KeyValueDoc meta;
    meta.set("source", f.input);
    meta.set("source_digest", m.inputs.front().second);
    meta.set("schema", f.schema);
    ensure_parent(f.output);
    save_dataset(ds, f.output, meta);

    const double ir = ds.imbalance_ratio().value();
    m.achieved_irs.emplace_back(fs::path(f.output).filename().string(), ir);
    m.outputs = {f.output, metadata_path(f.output).string()};
    run.out << "rows " << ds.size() << ", features " << ds.features.cols() << ", positives " << ds.positives()
            << ", IR " << format_double(ir) << "\n";
    run.finish(m, manifest_path_for(f.output));
    return kExitOk;
}

// ---------------------------------------------------------------- resample

struct ResampleFlags {
    std::string input, outdir;
    std::vector<double> irs;
    std::uint64_t seed = 0;
};

int cmd_resample(const Run& run, const ResampleFlags& f) {
    RunManifest m = run.manifest("resample");
    require_file(f.input, "input dataset");
    check_targets(f.irs);
    const Dataset ds = load_dataset(f.input);
    m.add_input(f.input);
    m.seeds.emplace_back("resample", f.seed);
    fs::create_directories(f.outdir);

    const std::string stem = fs::path(f.input).stem().string();
    std::size_t failed = 0;
    for (const double target : f.irs) {
        const fs::path path = fs::path(f.outdir) / (stem + "_ir" + format_double(target) + ".csv");
        try {
            const Dataset sub = resample_to_ir(ds, ImbalanceRatio(target), f.seed);
            ensure_distinct(path, {f.input});
            KeyValueDoc meta;
            meta.set("source", f.input);
            meta.set("target_ir", format_double(target));
            meta.set("seed", std::to_string(f.seed));
            save_dataset(sub, path, meta);
            m.outputs.push_back(path.string());
            m.outputs.push_back(metadata_path(path).string());
            m.achieved_irs.emplace_back(path.filename().string(), sub.imbalance_ratio().value());
            run.out << path.string() << ": " << sub.positives() << " positives, IR "
                    << format_double(sub.imbalance_ratio().value()) << "\n";
        } catch (const DataError& e) {
            ++failed;
            run.err << "target IR " << format_double(target) << ": " << e.what() << "\n";
        }
    }
    run.finish(m, fs::path(f.outdir) / (stem + "_resample.manifest"));
    if (failed == 0) return kExitOk;
    return failed == f.irs.size() ? kExitData : kExitPartial;
}

// ---------------------------------------------------------------- pretrain

struct PretrainFlags {
    std::string baseline, out, grid = ShiftGrid{}.to_string();
    std::vector<double> targets;
    std::uint64_t seed = 0;
    std::optional<int> jobs;
    BoostFlags boost;
    ProtocolFlags protocol;
    double gamma = 2.0, alpha = 0.25;
};

int cmd_pretrain(const Run& run, const PretrainFlags& f) {
    RunManifest m = run.manifest("pretrain");
    const ShiftGrid grid = ShiftGrid::parse(f.grid);
    const auto targets = f.targets.empty() ? log_spaced(20.0, 200.0, 10) : f.targets;
    check_targets(targets);
    const BoostConfig config = f.boost.resolve(m);
    require_file(f.baseline, "baseline dataset");
    ensure_distinct(f.out, {f.baseline});
    const Dataset baseline = load_dataset(f.baseline);
    m.add_input(f.baseline);

    EvalProtocol protocol;
    protocol.repeats = f.protocol.repeats;
    protocol.train_fraction = f.protocol.train_fraction;
    protocol.base_seed = f.protocol.base_seed;
    protocol.focal_gamma = f.gamma;
    protocol.focal_alpha = f.alpha;
    protocol.jobs = resolve_jobs(f.jobs);
    m.seeds.emplace_back("resample", f.seed);
    m.seeds.emplace_back("split_base", protocol.base_seed);
    m.settings.emplace_back("grid", grid.to_string());

    const PretrainResult result = pretrain_asig(baseline, targets, grid, config, protocol, f.seed);
    ensure_parent(f.out);
    write_file(f.out, result.serialize());

    for (std::size_t i = 0; i < result.points.size(); ++i)
        m.achieved_irs.emplace_back("point" + std::to_string(i), result.points[i].ir);
    m.settings.emplace_back("alpha", format_double(result.asig.slope()));
    m.settings.emplace_back("beta", format_double(result.asig.intercept()));
    m.settings.emplace_back("r_squared", format_double(result.r_squared));
    m.outputs = {f.out};
    for (const auto& p : result.points)
        run.out << "IR " << format_double(p.ir) << ": best shift " << format_double(p.best_shift) << " (AUC "
                << format_double(p.best_auc) << ")\n";
    for (const auto& s : result.skipped) run.err << "skipped IR " << s << "\n";
    run.out << "alpha " << format_double(result.asig.slope()) << ", beta " << format_double(result.asig.intercept())
            << ", R^2 " << format_double(result.r_squared) << "\n";
    run.finish(m, manifest_path_for(f.out));
    return result.skipped.empty() ? kExitOk : kExitPartial;
}

// ---------------------------------------------------------------- train

struct TrainFlags {
    std::string data, out, loss = "ce";
    std::optional<int> jobs;
    BoostFlags boost;
    LossFlags loss_flags;
};

int cmd_train(const Run& run, const TrainFlags& f) {
    RunManifest m = run.manifest("train");
    const LossKind kind = parse_loss_kind(f.loss);
    const auto params = f.loss_flags.params(m);
    if (kind == LossKind::asig_focal && !params) throw ConfigError("--loss asig requires --asig-params");
    BoostConfig config = f.boost.resolve(m);
    config.workers = resolve_jobs(f.jobs);
    require_file(f.data, "training dataset");
    ensure_distinct(f.out, {f.data});
    const Dataset ds = load_dataset(f.data);
    m.add_input(f.data);

    const LossSpec spec = f.loss_flags.spec(kind, params, ds.imbalance_ratio());
    const BoostedModel model = train(ds, config, spec);
    ensure_parent(f.out);
    write_file(f.out, model.serialize());

    m.achieved_irs.emplace_back("train", ds.imbalance_ratio().value());
    m.settings.emplace_back("loss", std::string(to_string(kind)));
    m.settings.emplace_back("shift", format_double(model.shift));
    m.settings.emplace_back("base_score", format_double(model.base_score));
    m.outputs = {f.out};
    run.out << "trained " << model.trees.size() << " trees, loss " << to_string(kind) << ", IR "
            << format_double(ds.imbalance_ratio().value()) << ", shift " << format_double(model.shift) << "\n";
    run.finish(m, manifest_path_for(f.out));
    return kExitOk;
}

// ---------------------------------------------------------------- predict

struct PredictFlags {
    std::string model, data, out;
};

int cmd_predict(const Run& run, const PredictFlags& f) {
    RunManifest m = run.manifest("predict");
    require_file(f.model, "model");
    require_file(f.data, "dataset");
    ensure_distinct(f.out, {f.model, f.data});
    const BoostedModel model = BoostedModel::deserialize(read_file(f.model));
    const Dataset ds = load_dataset(f.data);
    m.add_input(f.model);
    m.add_input(f.data);

    const auto raw = model.predict_raw(ds.features);
    const auto proba = model.predict_proba(ds.features);
    std::string csv = "raw,proba,label\n";
    for (std::size_t i = 0; i < raw.size(); ++i)
        csv += format_double(raw[i]) + "," + format_double(proba[i]) + "," + std::to_string(ds.labels[i]) + "\n";
    ensure_parent(f.out);
    write_file(f.out, csv);
    m.outputs = {f.out};
    if (ds.positives() > 0 && ds.negatives() > 0) {
        const double a = auc(raw, ds.labels);
        m.settings.emplace_back("auc", format_double(a));
        run.out << "AUC " << format_double(a) << " over " << ds.size() << " rows\n";
    }
    run.finish(m, manifest_path_for(f.out));
    return kExitOk;
}

// ---------------------------------------------------------------- pca

struct PcaFlags {
    std::string data, out;
    int components = 2;
};

int cmd_pca(const Run& run, const PcaFlags& f) {
    RunManifest m = run.manifest("pca");
    require_file(f.data, "dataset");
    ensure_distinct(f.out, {f.data});
    const Dataset ds = load_dataset(f.data);
    m.add_input(f.data);
    const PcaResult pca = pca_project(ds, f.components);

    std::string csv = f.components == 2 ? "pc1,pc2,label\n" : "pc1,label\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (std::size_t c = 0; c < pca.scores.cols(); ++c) csv += format_double(pca.scores(i, c)) + ",";
        csv += std::to_string(ds.labels[i]) + "\n";
    }
    ensure_parent(f.out);
    write_file(f.out, csv);
    for (std::size_t c = 0; c < pca.explained_variance_ratio.size(); ++c)
        m.settings.emplace_back("explained_variance_ratio.pc" + std::to_string(c + 1),
                                format_double(pca.explained_variance_ratio[c]));
    m.outputs = {f.out};
    run.finish(m, manifest_path_for(f.out));
    return kExitOk;
}

// ---------------------------------------------------------------- synth

struct SynthFlags {
    TwoGaussianOptions options;
    std::string output;
};

int cmd_synth(const Run& run, const SynthFlags& f) {
    RunManifest m = run.manifest("synth");
    const Dataset ds = make_two_gaussian(f.options);
    KeyValueDoc meta;
    meta.set("generator", "two_gaussian");
    meta.set("separation", format_double(f.options.separation));
    meta.set("seed", std::to_string(f.options.seed));
    ensure_parent(f.output);
    save_dataset(ds, f.output, meta);
    m.seeds.emplace_back("generator", f.options.seed);
    m.achieved_irs.emplace_back(fs::path(f.output).filename().string(), ds.imbalance_ratio().value());
    m.outputs = {f.output, metadata_path(f.output).string()};
    run.finish(m, manifest_path_for(f.output));
    return kExitOk;
}

// ---------------------------------------------------------------- benchmark

struct BenchmarkFlags {
    std::vector<std::string> datasets, losses = {"ce", "focal", "asig"};
    std::vector<double> irs;
    std::string outdir;
    std::uint64_t seed = 0;
    std::optional<int> jobs;
    BoostFlags boost;
    LossFlags loss_flags;
    ProtocolFlags protocol;
};

struct SubDataset {
    std::size_t dataset = 0;
    double target = 0.0;
    std::optional<Dataset> data;
    std::string failure;  // set when every cell of this subset is NA
};

struct CellResult {
    std::optional<EvalRecord> record;
    std::string failure;
};

int cmd_benchmark(const Run& run, const BenchmarkFlags& f) {
    RunManifest m = run.manifest("benchmark");
    std::vector<LossKind> kinds;
    for (const auto& l : f.losses) {
        const LossKind k = parse_loss_kind(l);
        if (std::find(kinds.begin(), kinds.end(), k) != kinds.end()) throw ConfigError("--losses lists '" + l + "' twice");
        kinds.push_back(k);
    }
    std::vector<double> targets = f.irs;
    std::sort(targets.begin(), targets.end());
    if (std::adjacent_find(targets.begin(), targets.end()) != targets.end()) throw ConfigError("--irs has duplicates");
    check_targets(targets);
    const auto params = f.loss_flags.params(m);
    if (std::find(kinds.begin(), kinds.end(), LossKind::asig_focal) != kinds.end() && !params)
        throw ConfigError("--losses includes asig, which requires --asig-params");
    BoostConfig config = f.boost.resolve(m);
    config.workers = 1;
    const int jobs = resolve_jobs(f.jobs);

    std::vector<std::string> names;
    std::vector<Dataset> datasets;
    for (const auto& path : f.datasets) {
        require_file(path, "dataset");
        const std::string name = fs::path(path).stem().string();
        if (std::find(names.begin(), names.end(), name) != names.end())
            throw ConfigError("two datasets share the name '" + name + "'");
        names.push_back(name);
        datasets.push_back(load_dataset(path));
        m.add_input(path);
    }
    m.seeds.emplace_back("resample", f.seed);
    m.seeds.emplace_back("split_base", f.protocol.base_seed);
    m.settings.emplace_back("repeats", std::to_string(f.protocol.repeats));
    m.settings.emplace_back("train_fraction", format_double(f.protocol.train_fraction));
    m.settings.emplace_back("jobs", std::to_string(jobs));

    std::vector<SubDataset> subsets;
    for (std::size_t d = 0; d < datasets.size(); ++d) {
        for (const double target : targets) {
            SubDataset s;
            s.dataset = d;
            s.target = target;
            try {
                Dataset sub = resample_to_ir(datasets[d], ImbalanceRatio(target), f.seed);
                if (sub.positives() < static_cast<std::size_t>(config.min_samples_leaf))
                    s.failure = "retained positives " + std::to_string(sub.positives()) + " < min_samples_leaf " +
                                std::to_string(config.min_samples_leaf);
                s.data = std::move(sub);
            } catch (const DataError& e) {
                s.failure = e.what();
            }
            subsets.push_back(std::move(s));
        }
    }

    const std::size_t k = kinds.size();
    std::vector<CellResult> cells(subsets.size() * k);
    parallel_for(cells.size(), jobs, [&](std::size_t i) {
        const SubDataset& s = subsets[i / k];
        if (!s.failure.empty()) {
            cells[i].failure = s.failure;
            return;
        }
        try {
            const LossSpec spec = f.loss_flags.spec(kinds[i % k], params, s.data->imbalance_ratio());
            cells[i].record = evaluate(*s.data, config, spec, f.protocol.repeats, f.protocol.train_fraction,
                                       f.protocol.base_seed);
        } catch (const DataError& e) {
            cells[i].failure = e.what();
        }
    });

    fs::create_directories(f.outdir);
    const fs::path out(f.outdir);
    std::string plot = "dataset,ir,classifier,repeat,auc\n";
    std::string defaulters = "dataset,target_ir,achieved_ir,positives,negatives\n";
    std::size_t failed = 0;
    for (std::size_t d = 0; d < datasets.size(); ++d) {
        std::vector<EvalRecord> records;
        std::vector<FailedCell> failures;
        for (std::size_t s = 0; s < subsets.size(); ++s) {
            const SubDataset& sub = subsets[s];
            if (sub.dataset != d) continue;
            const double ir = sub.data ? sub.data->imbalance_ratio().value() : sub.target;
            if (sub.data) {
                defaulters += csv_field(names[d]) + "," + format_double(sub.target) + "," + format_double(ir) + "," +
                              std::to_string(sub.data->positives()) + "," + std::to_string(sub.data->negatives()) + "\n";
                m.achieved_irs.emplace_back(names[d] + "@" + format_double(sub.target), ir);
            } else {
                defaulters += csv_field(names[d]) + "," + format_double(sub.target) + ",NA,NA,NA\n";
            }
            for (std::size_t j = 0; j < k; ++j) {
                const CellResult& cell = cells[s * k + j];
                const LossSpec probe = f.loss_flags.spec(kinds[j], params, ImbalanceRatio(1.0));
                if (!cell.record) {
                    ++failed;
                    failures.push_back({classifier_name(probe), ir, cell.failure});
                    continue;
                }
                for (std::size_t r = 0; r < cell.record->aucs.size(); ++r)
                    plot += csv_field(names[d]) + "," + format_double(ir) + "," + cell.record->classifier_name + "," +
                            std::to_string(r) + "," + format_double(cell.record->aucs[r]) + "\n";
                records.push_back(*cell.record);
            }
        }
        const ReportTable table = aggregate_report(records, failures);
        const fs::path csv_path = out / (names[d] + "_report.csv");
        const fs::path md_path = out / (names[d] + "_report.md");
        write_file(csv_path, table.to_csv());
        write_file(md_path, table.to_markdown());
        m.outputs.push_back(csv_path.string());
        m.outputs.push_back(md_path.string());
        run.out << "## " << names[d] << "\n\n" << table.to_markdown() << "\n";
    }
    write_file(out / "plot.csv", plot);
    write_file(out / "defaulters.csv", defaulters);
    m.outputs.push_back((out / "plot.csv").string());
    m.outputs.push_back((out / "defaulters.csv").string());
    m.settings.emplace_back("failed_cells", std::to_string(failed));
    run.finish(m, out / "benchmark.manifest");

    if (failed == 0) return kExitOk;
    return failed == cells.size() ? kExitData : kExitPartial;
}

// ---------------------------------------------------------------- replay

int cmd_replay(const Run& run, const std::string& manifest_file) {
    const RunManifest m = RunManifest::load(manifest_file);
    if (m.args.empty() || m.args.front() == "replay") throw ConfigError("manifest has no replayable command");
    for (const auto& [path, digest] : m.inputs) {
        if (!fs::is_regular_file(path)) throw DataError("replay: input missing: " + path);
        if (file_digest(path) != digest) throw DataError("replay: input changed since the run: " + path);
    }
    return run_cli(m.args, run.out, run.err);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"asigboost: imbalance-aware gradient boosting with a shifted-sigmoid focal loss"};
    app.name("asigboost");
    app.require_subcommand(1);

    IngestFlags ingest_f;
    auto* ingest_cmd = app.add_subcommand("ingest", "Preprocess a raw CSV into a processed dataset");
    ingest_cmd->add_option("--input", ingest_f.input, "Raw CSV")->required();
    ingest_cmd->add_option("--schema", ingest_f.schema, "Schema file (label, positive, role.<column>)")->required();
    ingest_cmd->add_option("--output", ingest_f.output, "Processed dataset CSV")->required();

    ResampleFlags resample_f;
    auto* resample_cmd = app.add_subcommand("resample", "Undersample positives to target imbalance ratios");
    resample_cmd->add_option("--input", resample_f.input, "Processed dataset")->required();
    resample_cmd->add_option("--ir", resample_f.irs, "Target IRs, comma separated")->required()->delimiter(',');
    resample_cmd->add_option("--seed", resample_f.seed, "Resampling seed");
    resample_cmd->add_option("--outdir", resample_f.outdir, "Output directory")->required();

    PretrainFlags pretrain_f;
    auto* pretrain_cmd = app.add_subcommand("pretrain", "Fit the shift g = alpha ln(IR) + beta by grid search");
    pretrain_cmd->add_option("--baseline", pretrain_f.baseline, "Processed baseline dataset")->required();
    pretrain_cmd->add_option("--ir-targets", pretrain_f.targets, "Target IRs (default: 10 log-spaced in [20, 200])")
        ->delimiter(',');
    pretrain_cmd->add_option("--grid", pretrain_f.grid, "Shift grid lo:hi:step (use --grid=-3:3:0.3)");
    pretrain_cmd->add_option("--seed", pretrain_f.seed, "Resampling seed");
    pretrain_cmd->add_option("--out", pretrain_f.out, "Pretrain result file")->required();
    pretrain_cmd->add_option("--jobs", pretrain_f.jobs, "Worker threads (default $ASIGBOOST_JOBS or 1)");
    pretrain_cmd->add_option("--focal-gamma", pretrain_f.gamma, "Focusing exponent");
    pretrain_cmd->add_option("--focal-alpha", pretrain_f.alpha, "Positive-class weight");
    pretrain_f.boost.attach(pretrain_cmd);
    pretrain_f.protocol.attach(pretrain_cmd);

    TrainFlags train_f;
    auto* train_cmd = app.add_subcommand("train", "Train one model");
    train_cmd->add_option("--data", train_f.data, "Processed training dataset")->required();
    train_cmd->add_option("--loss", train_f.loss, "ce, focal or asig");
    train_cmd->add_option("--out", train_f.out, "Model file")->required();
    train_cmd->add_option("--jobs", train_f.jobs, "Histogram worker threads (default $ASIGBOOST_JOBS or 1)");
    train_f.boost.attach(train_cmd);
    train_f.loss_flags.attach(train_cmd);

    PredictFlags predict_f;
    auto* predict_cmd = app.add_subcommand("predict", "Score a processed dataset with a model");
    predict_cmd->add_option("--model", predict_f.model, "Model file")->required();
    predict_cmd->add_option("--data", predict_f.data, "Processed dataset")->required();
    predict_cmd->add_option("--out", predict_f.out, "Scores CSV (raw, proba, label)")->required();

    PcaFlags pca_f;
    auto* pca_cmd = app.add_subcommand("pca", "Project a processed dataset onto its principal components");
    pca_cmd->add_option("--data", pca_f.data, "Processed dataset")->required();
    pca_cmd->add_option("--out", pca_f.out, "Projection CSV")->required();
    pca_cmd->add_option("--components", pca_f.components, "1 or 2")->check(CLI::Range(1, 2));

    SynthFlags synth_f;
    auto* synth_cmd = app.add_subcommand("synth", "Write a two-Gaussian synthetic dataset");
    synth_cmd->add_option("--negatives", synth_f.options.negatives, "Negative rows");
    synth_cmd->add_option("--positives", synth_f.options.positives, "Positive rows");
    synth_cmd->add_option("--features", synth_f.options.features, "Feature count");
    synth_cmd->add_option("--separation", synth_f.options.separation, "Mean offset of positives per feature");
    synth_cmd->add_option("--seed", synth_f.options.seed, "Generator seed");
    synth_cmd->add_option("--output", synth_f.output, "Processed dataset CSV")->required();

    BenchmarkFlags bench_f;
    auto* bench_cmd = app.add_subcommand("benchmark", "Sweep datasets x IRs x losses and write AUC reports");
    bench_cmd->add_option("--datasets", bench_f.datasets, "Processed datasets, comma separated")
        ->required()
        ->delimiter(',');
    bench_cmd->add_option("--irs", bench_f.irs, "Target IRs, comma separated")->required()->delimiter(',');
    bench_cmd->add_option("--losses", bench_f.losses, "Losses, comma separated (default ce,focal,asig)")
        ->delimiter(',');
    bench_cmd->add_option("--seed", bench_f.seed, "Resampling seed");
    bench_cmd->add_option("--outdir", bench_f.outdir, "Output directory")->required();
    bench_cmd->add_option("--jobs", bench_f.jobs, "Concurrent cells (default $ASIGBOOST_JOBS or 1)");
    bench_f.boost.attach(bench_cmd);
    bench_f.loss_flags.attach(bench_cmd);
    bench_f.protocol.attach(bench_cmd);

    std::string replay_manifest;
    auto* replay_cmd = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
    replay_cmd->add_option("--manifest", replay_manifest, "Manifest file")->required();

    std::vector<std::string> argv_storage;
    argv_storage.reserve(args.size() + 1);
    argv_storage.emplace_back("asigboost");
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_storage) argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    const Run run{args, out, err};
    try {
        if (ingest_cmd->parsed()) return cmd_ingest(run, ingest_f);
        if (resample_cmd->parsed()) return cmd_resample(run, resample_f);
        if (pretrain_cmd->parsed()) return cmd_pretrain(run, pretrain_f);
        if (train_cmd->parsed()) return cmd_train(run, train_f);
        if (predict_cmd->parsed()) return cmd_predict(run, predict_f);
        if (pca_cmd->parsed()) return cmd_pca(run, pca_f);
        if (synth_cmd->parsed()) return cmd_synth(run, synth_f);
        if (bench_cmd->parsed()) return cmd_benchmark(run, bench_f);
        if (replay_cmd->parsed()) return cmd_replay(run, replay_manifest);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DataError& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitConfig;
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run_cli(args, std::cout, std::cerr);
}

}  // namespace asigboost
