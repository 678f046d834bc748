#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>

#include "doctest.h"

#include "asigboost/data.hpp"
#include "asigboost/error.hpp"
#include "asigboost/random.hpp"
#include "support/oracles.hpp"

using namespace asigboost;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("asigboost_test_data_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

IngestSchema schema(std::string label, std::string positive) {
    IngestSchema s;
    s.label_column = std::move(label);
    s.positive_value = std::move(positive);
    return s;
}

Dataset counted(std::size_t neg, std::size_t pos) {
    Dataset ds;
    ds.features = Matrix(neg + pos, 1);
    ds.feature_names = {"row"};
    for (std::size_t i = 0; i < neg + pos; ++i) {
        ds.features(i, 0) = static_cast<double>(i);
        ds.labels.push_back(i < pos ? 1 : 0);
    }
    return ds;
}

std::multiset<std::vector<double>> negative_rows(const Dataset& ds) {
    std::multiset<std::vector<double>> out;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (!ds.labels[i]) out.insert(std::vector<double>(ds.features.row(i).begin(), ds.features.row(i).end()));
    return out;
}

}  // namespace

TEST_CASE("number formatting round-trips") {
    CounterRng rng(5);
    for (int i = 0; i < 2000; ++i) {
        const double v = (rng.uniform() - 0.5) * std::pow(10.0, static_cast<double>(rng.below(40)) - 20.0);
        CHECK(*parse_double(format_double(v)) == v);
    }
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(20.0) == "20");
    CHECK(!parse_double("1.5x"));
    CHECK(!parse_double(""));
    CHECK(*parse_double(" 2.5 ") == 2.5);
    CHECK(*parse_int("+7") == 7);
    CHECK(!parse_int("7.0"));
}

TEST_CASE("CSV parsing: quotes, CRLF, BOM, blank lines") {
    const auto t = parse_csv("\xEF\xBB\xBF" "a,b,c\r\n1,\"x, y\",\"he said \"\"hi\"\"\"\r\n\r\n2,,z\n");
    REQUIRE(t.header == std::vector<std::string>{"a", "b", "c"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0][1] == "x, y");
    CHECK(t.rows[0][2] == "he said \"hi\"");
    CHECK(t.rows[1][1] == "");
    CHECK_THROWS_AS(parse_csv("a,b\n1,2,3\n"), DataError);
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("q\"") == "\"q\"\"\"");
}

TEST_CASE("key-value documents") {
    const auto doc = KeyValueDoc::parse("# comment\nlabel = y\n\npositive= bad \n");
    CHECK(doc.require("label") == "y");
    CHECK(*doc.get("positive") == "bad");
    CHECK(!doc.contains("role.x"));
    CHECK_THROWS_AS(KeyValueDoc::parse("a = 1\na = 2\n"), ConfigError);
    CHECK_THROWS_AS(KeyValueDoc::parse("no equals sign\n"), ConfigError);
    CHECK(KeyValueDoc::parse(doc.to_string()).entries() == doc.entries());
    CHECK_THROWS_AS(KeyValueDoc::load("/nonexistent/schema.txt"), ConfigError);
}

TEST_CASE("ImbalanceRatio") {
    CHECK(ImbalanceRatio::of_counts(30, 10).value() == 3.0);
    CHECK_THROWS_AS(ImbalanceRatio(0.0), ConfigError);
    CHECK_THROWS_AS(ImbalanceRatio(-1.0), ConfigError);
    CHECK_THROWS_AS(ImbalanceRatio(std::nan("")), ConfigError);
    CHECK_THROWS_AS(ImbalanceRatio::of_counts(5, 0), DataError);
}

TEST_CASE("ingest: labels mapped and IR counted") {
    const auto t = parse_csv("x,status\n1,bad\n2,good\n3,good\n4,good\n");
    const Dataset ds = ingest(t, schema("status", "bad"));
    CHECK(ds.labels == std::vector<std::uint8_t>{1, 0, 0, 0});
    CHECK(ds.imbalance_ratio().value() == 3.0);
    CHECK(ds.feature_names == std::vector<std::string>{"x"});
}

TEST_CASE("ingest: numeric median imputation") {
    const auto t = parse_csv("v,y\n1,1\n,0\n3,0\nNA,0\n");
    const Dataset ds = ingest(t, schema("y", "1"));
    CHECK(ds.features(0, 0) == 1.0);
    CHECK(ds.features(1, 0) == 2.0);
    CHECK(ds.features(2, 0) == 3.0);
    CHECK(ds.features(3, 0) == 2.0);
}

TEST_CASE("ingest: unlabeled rows are dropped before statistics") {
    const auto t = parse_csv("v,y\n1,1\n100,\n3,0\n,0\n5,0\n");
    const Dataset ds = ingest(t, schema("y", "1"));
    REQUIRE(ds.size() == 4);
    CHECK(ds.features(2, 0) == 3.0);  // median of {1, 3, 5}
}

TEST_CASE("ingest: categorical encodings") {
    std::string small = "c,y\n";
    for (int i = 0; i < 8; ++i) small += std::string(i % 2 ? "b" : "a") + "," + (i == 0 ? "1" : "0") + "\n";
    small += ",0\n";
    const Dataset one_hot = ingest(parse_csv(small), schema("y", "1"));
    CHECK(one_hot.feature_names == std::vector<std::string>{"c=a", "c=b"});
    CHECK(one_hot.features(0, 0) == 1.0);
    CHECK(one_hot.features(1, 1) == 1.0);
    CHECK(one_hot.features(8, 0) == 0.0);
    CHECK(one_hot.features(8, 1) == 0.0);

    std::string wide = "c,y\n";
    for (int i = 0; i < 20; ++i) wide += "k" + std::to_string(i) + "," + (i == 0 ? "1" : "0") + "\n";
    wide += "k0,0\nk0,0\n,0\n";
    const Dataset freq = ingest(parse_csv(wide), schema("y", "1"));
    REQUIRE(freq.features.cols() == 1);
    CHECK(freq.features(0, 0) == doctest::Approx(3.0 / 22.0));
    CHECK(freq.features(1, 0) == doctest::Approx(1.0 / 22.0));
    CHECK(freq.features(22, 0) == 0.0);
}

TEST_CASE("ingest: exactly 16 distinct values stay one-hot, 17 switch to frequency") {
    for (const std::size_t distinct : {kOneHotMaxDistinct, kOneHotMaxDistinct + 1}) {
        std::string csv = "c,y\n";
        for (std::size_t i = 0; i < distinct; ++i) csv += "v" + std::to_string(i) + "," + (i == 0 ? "1" : "0") + "\n";
        const Dataset ds = ingest(parse_csv(csv), schema("y", "1"));
        CHECK(ds.features.cols() == (distinct <= kOneHotMaxDistinct ? distinct : 1));
    }
}

TEST_CASE("ingest: explicit roles") {
    IngestSchema s = schema("y", "1");
    s.column_roles["id"] = ColumnRole::drop;
    s.column_roles["code"] = ColumnRole::categorical;
    const Dataset ds = ingest(parse_csv("id,code,y\n1,10,1\n2,20,0\n3,10,0\n"), s);
    CHECK(ds.feature_names == std::vector<std::string>{"code=10", "code=20"});

    IngestSchema bad = schema("y", "1");
    bad.column_roles["v"] = ColumnRole::numeric;
    CHECK_THROWS_AS(ingest(parse_csv("v,y\n1,1\nabc,0\n"), bad), DataError);
    bad.column_roles["missing"] = ColumnRole::numeric;
    CHECK_THROWS_AS(ingest(parse_csv("v,y\n1,1\n2,0\n"), bad), ConfigError);
}

TEST_CASE("ingest: error cases") {
    CHECK_THROWS_AS(ingest(parse_csv("v,y\n1,1\n2,0\n"), schema("label", "1")), DataError);
    CHECK_THROWS_AS(ingest(parse_csv("v,y\n1,0\n2,0\n"), schema("y", "1")), DataError);
    CHECK_THROWS_AS(ingest(parse_csv("v,y\n1,1\n2,1\n"), schema("y", "1")), DataError);
    CHECK_THROWS_AS(ingest(parse_csv("v,y\n1,1\n2,1\n3,0\n"), schema("y", "1")), DataError);
    IngestSchema over = schema("y", "1");
    over.allow_positive_majority = true;
    CHECK(ingest(parse_csv("v,y\n1,1\n2,1\n3,0\n"), over).positives() == 2);
    CHECK_THROWS_AS(ingest(parse_csv("v,y\n,1\nNA,0\n"), schema("y", "1")), DataError);
    CHECK_THROWS_AS(ingest(parse_csv("v,y\ninf,1\n2,0\n"), schema("y", "1")), DataError);
}

TEST_CASE("ingest: GMC-shaped counts give IR 13.96") {
    CsvTable t;
    t.header = {"SeriousDlqin2yrs", "income"};
    for (int i = 0; i < 150000; ++i) t.rows.push_back({i < 10026 ? "1" : "0", std::to_string(i % 97)});
    const Dataset ds = ingest(t, schema("SeriousDlqin2yrs", "1"));
    CHECK(ds.positives() == 10026);
    CHECK(ds.imbalance_ratio().value() == doctest::Approx(139974.0 / 10026.0).epsilon(1e-15));
    CHECK(std::abs(ds.imbalance_ratio().value() - 13.96) < 0.005);
}

TEST_CASE("ingest passes clean numeric data through value-identical") {
    CounterRng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        CsvTable t;
        t.header = {"a", "b", "y"};
        std::vector<std::vector<double>> values;
        for (int i = 0; i < 40; ++i) {
            const double a = (rng.uniform() - 0.5) * 1e6, b = rng.normal() * 1e-7;
            values.push_back({a, b});
            t.rows.push_back({format_double(a), format_double(b), i % 5 == 0 ? "1" : "0"});
        }
        const Dataset ds = ingest(t, schema("y", "1"));
        for (std::size_t i = 0; i < values.size(); ++i) {
            CHECK(ds.features(i, 0) == values[i][0]);
            CHECK(ds.features(i, 1) == values[i][1]);
        }
    }
}

TEST_CASE("ingest from files and schema documents") {
    const auto dir = scratch_dir("ingest");
    write_file(dir / "raw.csv", "id,amount,grade,target\n1,10.5,A,yes\n2,,B,no\n3,7,A,no\n4,3,C,no\n");
    write_file(dir / "schema.txt", "label = target\npositive = yes\nrole.id = drop\n");
    const Dataset ds = ingest(dir / "raw.csv", IngestSchema::load(dir / "schema.txt"));
    CHECK(ds.feature_names == std::vector<std::string>{"amount", "grade=A", "grade=B", "grade=C"});
    CHECK(ds.features(1, 0) == 7.0);
    CHECK_THROWS_AS(IngestSchema::from_doc(KeyValueDoc::parse("label = y\npositive = 1\nrole.v = weird\n")), ConfigError);
    CHECK_THROWS_AS(IngestSchema::from_doc(KeyValueDoc::parse("label = y\npositive = 1\ncolour = red\n")), ConfigError);
    CHECK_THROWS_AS(IngestSchema::from_doc(KeyValueDoc::parse("label = y\npositive = 1\nrole.y = drop\n")), ConfigError);
    CHECK_THROWS_AS(IngestSchema::from_doc(KeyValueDoc::parse("positive = 1\n")), ConfigError);
}

TEST_CASE("resample_to_ir examples") {
    const Dataset base = counted(1000, 100);
    const Dataset r = resample_to_ir(base, ImbalanceRatio(20.0), 1);
    CHECK(r.negatives() == 1000);
    CHECK(r.positives() == 50);
    CHECK(r.imbalance_ratio().value() == 20.0);

    const Dataset same = resample_to_ir(base, ImbalanceRatio(10.0), 1);
    CHECK(same.positives() == 100);
    CHECK(same.negatives() == 1000);

    const Dataset gmc = resample_to_ir(counted(139974, 10026), ImbalanceRatio(300.0), 3);
    CHECK(gmc.positives() == 466);

    CHECK_THROWS_AS(resample_to_ir(base, ImbalanceRatio(5.0), 1), DataError);
    CHECK_THROWS_AS(resample_to_ir(base, ImbalanceRatio(1001.0), 1), DataError);
}

TEST_CASE("resample_to_ir properties") {
    CounterRng rng(99);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t pos = 5 + rng.below(60);
        const std::size_t neg = pos + rng.below(2000);
        const Dataset base = oracle::gaussian_dataset(neg, pos, 3, 0.5, trial);
        const double current = base.imbalance_ratio().value();
        const double target = current * (1.0 + 4.0 * rng.uniform());
        const std::uint64_t seed = rng.next();
        Dataset r;
        try {
            r = resample_to_ir(base, ImbalanceRatio(target), seed);
        } catch (const DataError&) {
            CHECK(std::floor(static_cast<double>(neg) / target) == 0.0);
            continue;
        }
        CHECK(negative_rows(r) == negative_rows(base));
        CHECK(r.positives() == std::min<std::size_t>(pos, static_cast<std::size_t>(std::floor(neg / target + 1e-9))));
        const double kept = static_cast<double>(r.positives());
        CHECK(std::abs(static_cast<double>(neg) / kept - target) <= target / kept + 1e-9);
        const Dataset again = resample_to_ir(base, ImbalanceRatio(target), seed);
        CHECK(again.features == r.features);
        CHECK(again.labels == r.labels);
    }
}

TEST_CASE("resample_to_ir picks positives uniformly") {
    // 10 positives, keep 5: each should be kept about half the time.
    const Dataset base = counted(100, 10);
    std::map<double, int> kept;
    const int trials = 4000;
    for (int s = 0; s < trials; ++s) {
        const Dataset r = resample_to_ir(base, ImbalanceRatio(20.0), static_cast<std::uint64_t>(s));
        for (std::size_t i = 0; i < r.size(); ++i)
            if (r.labels[i]) ++kept[r.features(i, 0)];
    }
    REQUIRE(kept.size() == 10);
    for (const auto& [row, count] : kept) CHECK(std::abs(count - trials / 2) < 200);  // ~6.3 sigma
}

TEST_CASE("stratified_split examples") {
    const Dataset ds = counted(100, 10);
    const auto [train, test] = stratified_split(ds, 0.7, 4);
    CHECK(train.positives() == 7);
    CHECK(train.negatives() == 70);
    CHECK(test.positives() == 3);
    CHECK(test.negatives() == 30);

    const auto a = stratified_split_indices(ds, 0.7, 9);
    const auto b = stratified_split_indices(ds, 0.7, 9);
    CHECK(a.train == b.train);
    CHECK(a.test == b.test);

    const Dataset tiny = counted(3, 3);
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto [tr, te] = stratified_split(tiny, 0.5, s);
        CHECK(tr.positives() >= 1);
        CHECK(tr.negatives() >= 1);
        CHECK(te.positives() >= 1);
        CHECK(te.negatives() >= 1);
    }
}

TEST_CASE("stratified_split errors") {
    CHECK_THROWS_AS(stratified_split(counted(10, 1), 0.7, 0), DataError);
    CHECK_THROWS_AS(stratified_split(counted(10, 2), 0.1, 0), DataError);
    CHECK_THROWS_AS(stratified_split(counted(10, 2), 0.95, 0), DataError);
    CHECK_THROWS_AS(stratified_split(counted(10, 5), 1.0, 0), ConfigError);
    CHECK_THROWS_AS(stratified_split(counted(10, 5), 0.0, 0), ConfigError);
}

TEST_CASE("stratified_split partitions exactly and keeps class proportions") {
    CounterRng rng(123);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t pos = 2 + rng.below(40);
        const std::size_t neg = 2 + rng.below(400);
        const Dataset ds = counted(neg, pos);
        const double fraction = 0.3 + 0.5 * rng.uniform();
        SplitIndices s;
        try {
            s = stratified_split_indices(ds, fraction, rng.next());
        } catch (const DataError&) {
            continue;
        }
        std::vector<std::size_t> all = s.train;
        all.insert(all.end(), s.test.begin(), s.test.end());
        std::sort(all.begin(), all.end());
        CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());
        CHECK(all.size() == ds.size());
        CHECK(std::is_sorted(s.train.begin(), s.train.end()));
        std::size_t train_pos = 0;
        for (const auto i : s.train) train_pos += ds.labels[i];
        CHECK(std::abs(static_cast<double>(train_pos) - fraction * static_cast<double>(pos)) <= 1.0);
        const double train_rate = static_cast<double>(train_pos) / static_cast<double>(s.train.size());
        const double rate = static_cast<double>(pos) / static_cast<double>(ds.size());
        CHECK(std::abs(train_rate - rate) * static_cast<double>(s.train.size()) <= 1.0 + 1e-9);
    }
}

TEST_CASE("pca: points on a line") {
    Dataset ds;
    ds.features = Matrix(50, 2);
    for (std::size_t i = 0; i < 50; ++i) {
        ds.features(i, 0) = static_cast<double>(i);
        ds.features(i, 1) = 3.0 - 2.0 * static_cast<double>(i);
        ds.labels.push_back(i % 5 == 0);
    }
    ds.feature_names = {"a", "b"};
    const auto pca = pca_project(ds, 2);
    CHECK(std::abs(pca.explained_variance_ratio[0] - 1.0) <= 1e-9);
    CHECK(pca.scores.cols() == 2);
}

TEST_CASE("pca: isotropic sample matches the exact 2x2 eigendecomposition") {
    const Dataset ds = oracle::gaussian_dataset(4000, 400, 2, 0.0, 8);
    // Correlation matrix of the z-scored columns, by hand.
    const std::size_t n = ds.size();
    double m0 = 0, m1 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        m0 += ds.features(i, 0);
        m1 += ds.features(i, 1);
    }
    m0 /= n;
    m1 /= n;
    double s00 = 0, s11 = 0, s01 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = ds.features(i, 0) - m0, b = ds.features(i, 1) - m1;
        s00 += a * a;
        s11 += b * b;
        s01 += a * b;
    }
    const double r = s01 / std::sqrt(s00 * s11);
    const auto [l1, l2] = oracle::eigen2x2(1.0, r, 1.0);
    const auto pca = pca_project(ds, 2);
    CHECK(pca.eigenvalues[0] == doctest::Approx(l1).epsilon(1e-9));
    CHECK(pca.eigenvalues[1] == doctest::Approx(l2).epsilon(1e-9));
    CHECK(std::abs(pca.explained_variance_ratio[0] - 0.5) < 0.05);
}

TEST_CASE("pca: components orthonormal, sign convention, row-order invariance") {
    CounterRng rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        Dataset ds = oracle::gaussian_dataset(300, 30, 4, 0.8, trial);
        for (std::size_t i = 0; i < ds.size(); ++i) ds.features(i, 2) += 2.0 * ds.features(i, 0);
        const auto pca = pca_project(ds, 2);
        for (std::size_t a = 0; a < 2; ++a) {
            double norm = 0.0, dot = 0.0, biggest = 0.0;
            for (std::size_t j = 0; j < 4; ++j) {
                norm += pca.components[a][j] * pca.components[a][j];
                dot += pca.components[0][j] * pca.components[1][j];
                if (std::abs(pca.components[a][j]) > std::abs(biggest)) biggest = pca.components[a][j];
            }
            CHECK(std::abs(norm - 1.0) < 1e-8);
            CHECK(std::abs(dot) < 1e-8);
            CHECK(biggest > 0.0);
        }
        std::vector<std::size_t> perm(ds.size());
        for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
        for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
        const auto shuffled = pca_project(ds.subset(perm), 2);
        for (std::size_t i = 0; i < perm.size(); ++i)
            for (std::size_t c = 0; c < 2; ++c) CHECK(shuffled.scores(i, c) == doctest::Approx(pca.scores(perm[i], c)).epsilon(1e-8));
    }
}

TEST_CASE("pca errors") {
    Dataset flat;
    flat.features = Matrix(10, 2, 1.0);
    flat.labels.assign(10, 0);
    flat.labels[0] = 1;
    flat.feature_names = {"a", "b"};
    CHECK_THROWS_AS(pca_project(flat, 2), DataError);
    const Dataset ds = oracle::gaussian_dataset(20, 5, 2, 1.0, 1);
    CHECK_THROWS_AS(pca_project(ds, 3), ConfigError);
    CHECK_THROWS_AS(pca_project(ds, 0), ConfigError);
}

TEST_CASE("processed datasets round-trip through disk") {
    const auto dir = scratch_dir("persist");
    Dataset ds = oracle::gaussian_dataset(30, 6, 3, 1.0, 2);
    ds.feature_names = {"x,1", "y", "z"};
    ds.source_tag = "unit";
    KeyValueDoc meta;
    meta.set("seed", "42");
    save_dataset(ds, dir / "d.csv", meta);
    const Dataset back = load_dataset(dir / "d.csv");
    CHECK(back.features == ds.features);
    CHECK(back.labels == ds.labels);
    CHECK(back.feature_names == ds.feature_names);
    CHECK(back.source_tag == "unit");
    const auto sidecar = KeyValueDoc::load(metadata_path(dir / "d.csv"));
    CHECK(sidecar.require("seed") == "42");
    CHECK(sidecar.require("positives") == "6");
    CHECK(*parse_double(sidecar.require("achieved_ir")) == 5.0);

    ds.feature_names[1] = "label";
    CHECK_THROWS_AS(save_dataset(ds, dir / "bad.csv"), DataError);
    write_file(dir / "broken.csv", "a,label\n1,2\n");
    CHECK_THROWS_AS(load_dataset(dir / "broken.csv"), DataError);
}
