#include "e2e.hpp"
#include "oracles/map_oracle.hpp"
#include "support.hpp"

#include "uwqa/error.hpp"
#include "uwqa/image.hpp"
#include "uwqa/io.hpp"
#include "uwqa/pipeline.hpp"

#include <doctest.h>

#include <fstream>

using namespace uwqa;
namespace fs = std::filesystem;

namespace {

Error error_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e;
    }
    return Error(ErrorKind::Usage, "no error");
}

// original + 2 enhancers, 3 images each.
void make_layout(const fs::path& root)
{
    int shade = 0;
    for (const char* model : {"original", "enh_a", "enh_b"}) {
        fs::create_directories(root / model);
        for (const char* id : {"x1", "x2", "x3"}) {
            shade += 13;
            const auto img = testing::checkerboard(24, 20, 3 + shade % 5, {static_cast<std::uint8_t>(shade), 80, 120},
                                                   {200, static_cast<std::uint8_t>(255 - shade), 30});
            const auto png = encode_png(img);
            io::write_text(root / model / (std::string(id) + ".png"), std::string(png.begin(), png.end()));
        }
    }
}

void write_table(const fs::path& path, const std::string& body)
{
    io::write_text(path, "model,image_id,uiqm,uciqe,ccf,entropy\n" + body);
}

} // namespace

TEST_SUITE("pipeline") {

TEST_CASE("layout scan")
{
    const DatasetLayout layout = scan_layout(testing::fixture("e2e/dataset"));
    CHECK(layout.models == std::vector<std::string>{"original", "enh_alpha", "enh_beta"});
    CHECK(layout.image_ids.size() == 6);
    CHECK(layout.image_path("enh_beta", "img03").filename() == "img03.png");
    CHECK(error_of([&] { layout.image_path("nope", "img03"); }).kind() == ErrorKind::UnknownModel);

    testing::TempDir dir("layout");
    CHECK(error_of([&] { scan_layout(dir.path()); }).kind() == ErrorKind::Layout);
    make_layout(dir.path());
    CHECK(scan_layout(dir.path()).models.size() == 3);

    fs::remove(dir / "enh_a/x2.png");
    Error e = error_of([&] { scan_layout(dir.path()); });
    CHECK(e.kind() == ErrorKind::Layout);
    CHECK(std::string(e.what()).find("x2") != std::string::npos);

    fs::copy_file(dir / "enh_b/x1.png", dir / "enh_a/x2.png");
    fs::copy_file(dir / "enh_b/x1.png", dir / "enh_b/extra.png");
    e = error_of([&] { scan_layout(dir.path()); });
    CHECK(std::string(e.what()).find("extra") != std::string::npos);

    fs::remove(dir / "enh_b/extra.png");
    fs::copy_file(dir / "original/x1.png", dir / "original/x1.jpg");
    e = error_of([&] { scan_layout(dir.path()); });
    CHECK(e.kind() == ErrorKind::Layout);
}

TEST_CASE("metrics resume from the journal")
{
    testing::TempDir dir("resume");
    make_layout(dir / "data");
    const DatasetLayout layout = scan_layout(dir / "data");
    const ToolkitConfig cfg;
    const MetricsRun first = cmd_metrics(layout, cfg, dir / "out", 2);
    CHECK(first.computed == 9);
    CHECK(first.skipped == 0);
    CHECK(first.failures.empty());

    const MetricsRun second = cmd_metrics(layout, cfg, dir / "out", 2);
    CHECK(second.computed == 0);
    CHECK(second.skipped == 9);
    CHECK(second.table == first.table);

    // simulate an interrupted run: drop the last row and tear the line before it
    std::vector<std::string> lines;
    {
        std::ifstream in(dir / "out" / std::string(metrics_journal_name));
        for (std::string l; std::getline(in, l);)
            lines.push_back(l);
    }
    REQUIRE(lines.size() == 9);
    {
        std::ofstream out(dir / "out" / std::string(metrics_journal_name), std::ios::trunc);
        for (std::size_t i = 0; i < 7; ++i)
            out << lines[i] << '\n';
        out << lines[7].substr(0, lines[7].size() / 2);
    }
    std::vector<std::string> logged;
    const MetricsRun third = cmd_metrics(layout, cfg, dir / "out", 1, [&](const std::string& s) { logged.push_back(s); });
    CHECK(third.computed == 2);
    CHECK(third.skipped == 7);
    CHECK(third.table == first.table);
    CHECK_FALSE(logged.empty());
    const MetricsRun fourth = cmd_metrics(layout, cfg, dir / "out", 1);
    CHECK(fourth.skipped == 9);

    // export layout: metric table, summaries, manifest
    CHECK(fs::exists(dir / "out/metric_table.csv"));
    CHECK(fs::exists(dir / "out/model_summaries.json"));
    CHECK(fs::exists(dir / "out" / std::string(manifest_file_name)));
    CHECK(io::load_metric_table(dir / "out/metric_table.json") == first.table);
}

TEST_CASE("thread count does not change results")
{
    testing::TempDir dir("threads");
    make_layout(dir / "data");
    const DatasetLayout layout = scan_layout(dir / "data");
    const auto one = cmd_metrics(layout, {}, dir / "one", 1);
    const auto many = cmd_metrics(layout, {}, dir / "many", 8);
    CHECK(one.table == many.table);
    CHECK(testing::slurp(dir / "one/metric_table.csv") == testing::slurp(dir / "many/metric_table.csv"));
}

TEST_CASE("a corrupt image is skipped and the CLI exits 2")
{
    testing::TempDir dir("corrupt");
    make_layout(dir / "data");
    io::write_text(dir / "data/enh_b/x3.png", "not a png");
    const MetricsRun run = cmd_metrics(scan_layout(dir / "data"), {}, dir / "out", 2);
    CHECK(run.computed == 8);
    REQUIRE(run.failures.size() == 1);
    CHECK(run.failures[0].find("enh_b/x3") != std::string::npos);
    CHECK_FALSE(run.table.contains("enh_b", "x3"));

    CHECK(testing::run_cli("--out \"" + (dir / "cli").string() + "\" metrics \"" + (dir / "data").string() + "\"",
                           dir / "log") == 2);
    CHECK(testing::slurp(dir / "log").find("enh_b/x3") != std::string::npos);
    // qindex on the partial table drops the incomplete image and also exits 2
    CHECK(testing::run_cli("--out \"" + (dir / "q").string() + "\" qindex \"" + (dir / "cli/metric_table.csv").string() +
                               "\"",
                           dir / "log") == 2);
    CHECK(testing::slurp(dir / "q/qindex.csv").find("x3") == std::string::npos);
}

TEST_CASE("qindex command errors")
{
    testing::TempDir dir("qerr");
    write_table(dir / "empty.csv", "");
    CHECK(error_of([&] { cmd_qindex(dir / "empty.csv", {}, 0, dir / "o1"); }).kind() == ErrorKind::EmptyInput);
    write_table(dir / "noorig.csv", "a,x,1,1,1,1\nb,x,2,2,2,2\n");
    const Error e = error_of([&] { cmd_qindex(dir / "noorig.csv", {}, 0, dir / "o2"); });
    CHECK(e.kind() == ErrorKind::UnknownModel);
    CHECK(std::string(e.what()).find("original") != std::string::npos);
    write_table(dir / "ok.csv", "original,x,1,1,1,1\nenh,x,2,2,2,2\noriginal,y,1.5,1,3,1\nenh,y,2,1.5,2,2\n");
    const QIndexRun run = cmd_qindex(dir / "ok.csv", {}, 3, dir / "o3");
    CHECK(run.dropped_images.empty());
    CHECK(run.deltas.size() == 2);
    for (const char* f : {"qindex.csv", "delta_qindex.csv", "bin_samples.csv", "distributions.csv", "qindex_extrema.csv"})
        CHECK(fs::exists(dir / "o3" / f));
    CHECK(testing::run_cli("qindex \"" + (dir / "missing.csv").string() + "\"", dir / "log") == 1);
}

TEST_CASE("map command")
{
    testing::TempDir dir("map");
    const auto d = testing::fixture("e2e/dataset");
    const auto results =
        cmd_map(d / "ground_truth.json", {d / "detections/original.json", d / "detections/enh_beta.json"}, std::nullopt,
                io::BoxFormat::Corners, dir / "all");
    REQUIRE(results.size() == 2);
    CHECK(results[0].first == "original");
    CHECK(results[0].second.overall == 1.0);

    const auto fish = cmd_map(d / "ground_truth.json", {d / "detections/enh_beta.json"},
                              std::vector<std::string>{"fish"}, io::BoxFormat::Corners, dir / "fish");
    CHECK(fish[0].second.classes.size() == 1);

    Error e = error_of([&] {
        cmd_map(d / "ground_truth.json", {d / "detections/enh_beta.json"}, std::vector<std::string>{"kelp"},
                io::BoxFormat::Corners, dir / "kelp");
    });
    CHECK(e.kind() == ErrorKind::UnknownClass);
    CHECK(std::string(e.what()).find("kelp") != std::string::npos);
    e = error_of([&] {
        cmd_map(d / "ground_truth.json", {d / "detections/enh_beta.json", d / "detections/enh_beta.json"}, std::nullopt,
                io::BoxFormat::Corners, dir / "dup");
    });
    CHECK(e.kind() == ErrorKind::Schema);
}

TEST_CASE("map agrees with the independent evaluator on the bundled dataset")
{
    const auto d = testing::fixture("e2e/dataset");
    const auto gt = io::load_ground_truth(d / "ground_truth.json");
    std::vector<oracle::Gt> gts;
    std::vector<std::int64_t> classes;
    for (const auto& a : gt.annotations)
        gts.push_back({a.image_id, a.class_id, {a.box.x_min, a.box.y_min, a.box.x_max, a.box.y_max}});
    for (const auto& c : gt.classes)
        classes.push_back(c.id);
    for (const char* model : {"original", "enh_alpha", "enh_beta"}) {
        const auto f = io::load_detections(d / "detections" / (std::string(model) + ".json"), &gt);
        std::vector<oracle::Det> dets;
        for (const auto& x : f.detections)
            dets.push_back({x.image_id, x.class_id, {x.box.x_min, x.box.y_min, x.box.x_max, x.box.y_max}, x.confidence});
        const double expected = oracle::evaluate(dets, gts, classes).overall;
        CHECK(std::abs(map_50_95(f.detections, gt.annotations, gt.classes).overall - expected) < 1e-12);
    }
}

TEST_CASE("correlate command")
{
    testing::TempDir dir("corr");
    const auto p = testing::fixture("tables");
    const auto report = cmd_correlate(p / "ruod_summaries.csv", {p / "ruod_map.csv"}, dir / "ok");
    CHECK(report.metrics[0].n == 10);
    CHECK(fs::exists(dir / "ok/correlation.csv"));
    CHECK(fs::exists(dir / "ok/scatter.json"));

    Error e = error_of([&] { cmd_correlate(p / "ruod_summaries.csv", {p / "ruod_map.csv", p / "ruod_map.csv"}, dir / "dup"); });
    CHECK(e.kind() == ErrorKind::Schema);
    io::write_text(dir / "other.csv", "model,fish,overall\nzeta,0.5,0.5\n");
    e = error_of([&] { cmd_correlate(p / "ruod_summaries.csv", {dir / "other.csv"}, dir / "none"); });
    CHECK(e.kind() == ErrorKind::NoOverlap);
}

TEST_CASE("audit command")
{
    testing::TempDir dir("audit");
    const auto d = testing::fixture("e2e/dataset");
    const auto c = cmd_audit(d / "ground_truth.json",
                             {"enh_alpha=" + (d / "detections/enh_alpha.json").string(),
                              (d / "detections/enh_beta.json").string()},
                             {}, io::BoxFormat::Corners, dir / "a");
    REQUIRE(c.size() == 1);
    CHECK(c[0].agreement == 2);
    CHECK(c[0].image_id == 4);
    CHECK(io::load_candidates(dir / "a/audit_candidates.json").size() == 1);

    AuditOptions strict;
    strict.conf_min = 1.01;
    CHECK(cmd_audit(d / "ground_truth.json", {(d / "detections/enh_alpha.json").string()}, strict,
                    io::BoxFormat::Corners, dir / "b")
              .empty());
    CHECK(error_of([&] {
              cmd_audit(d / "ground_truth.json",
                        {(d / "detections/enh_alpha.json").string(), (d / "detections/enh_alpha.json").string()}, {},
                        io::BoxFormat::Corners, dir / "c");
          }).kind() == ErrorKind::Schema);
}

TEST_CASE("CLI usage errors exit 1")
{
    testing::TempDir dir("usage");
    CHECK(testing::run_cli("", dir / "log") == 1);
    CHECK(testing::run_cli("frobnicate", dir / "log") == 1);
    CHECK(testing::run_cli("--seed notanumber qindex x.csv", dir / "log") == 1);
    CHECK(testing::run_cli("--help", dir / "log") == 0);
}

TEST_CASE("end-to-end run reproduces the goldens")
{
    testing::TempDir dir("e2e");
    REQUIRE(testing::run_e2e(dir.path()) == "");
    const auto diffs = testing::diff_against_goldens(dir.path());
    for (const auto& d : diffs)
        MESSAGE(d);
    CHECK(diffs.empty());
}

TEST_CASE("golden metric table matches the metric oracle")
{
    const auto table = io::load_metric_table(testing::fixture("e2e/golden/metrics/metric_table.json"));
    const DatasetLayout layout = scan_layout(testing::fixture("e2e/dataset"));
    const oracle::Params params;
    for (const auto& row : table.rows()) {
        const auto img = testing::to_oracle(read_image(layout.image_path(row.model, row.image_id).string()));
        CHECK(std::abs(row.metrics.uiqm - oracle::uiqm(img, params)) < 1e-9);
        CHECK(std::abs(row.metrics.uciqe - oracle::uciqe(img, params)) < 1e-9);
        CHECK(std::abs(row.metrics.ccf - oracle::ccf(img, params)) < 1e-9);
        CHECK(std::abs(row.metrics.entropy - oracle::entropy(img)) < 1e-9);
    }
}

TEST_CASE("golden Q-index matches the reference implementation")
{
    const auto qt = nlohmann::json::parse(testing::slurp(testing::fixture("e2e/golden/qindex/qindex.json")));
    const auto ref = csv::parse(testing::slurp(testing::fixture("e2e/golden/oracle/qindex.golden.csv")));
    REQUIRE(ref.rows.size() == 18);
    const QIndexTable fresh = compute_qindex(io::load_metric_table(testing::fixture("e2e/golden/metrics/metric_table.csv")));
    for (const auto& r : ref.rows)
        CHECK(std::abs(fresh.at(r[0], r[1]) - std::stod(r[2])) < 1e-9);
    CHECK(qt.contains("models"));
}

}
