#include "uwqa/config.hpp"
#include "uwqa/error.hpp"
#include "uwqa/kernels.hpp"
#include "uwqa/pipeline.hpp"
#include "uwqa/review_service.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

void log_line(const std::string& msg)
{
    std::cerr << "uwqa: " << msg << '\n';
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Underwater image quality and detection evaluation toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    std::optional<std::string> config_path;
    std::uint64_t seed = 0;
    std::string out_dir = "uwqa-out";
    bool xywh = false;
    app.add_option("--config", config_path, "Configuration file (falls back to $UWQA_CONFIG)");
    app.add_option("--seed", seed, "Seed for bin sampling")->capture_default_str();
    app.add_option("--out", out_dir, "Output directory")->capture_default_str();
    app.add_flag("--xywh", xywh, "Boxes are [x, y, width, height] instead of corners");

    auto* metrics = app.add_subcommand("metrics", "Score every image of a dataset layout");
    std::string dataset;
    unsigned threads = 0;
    metrics->add_option("dataset", dataset, "Dataset root containing original/ and one directory per model")->required();
    metrics->add_option("--threads", threads, "Worker threads (0 = hardware concurrency)");

    auto* qindex = app.add_subcommand("qindex", "Compute Q-index, deltas, bins and distributions");
    std::string table_path;
    qindex->add_option("table", table_path, "Metric table (.csv or .json)")->required()->check(CLI::ExistingFile);

    auto* map = app.add_subcommand("map", "COCO-style mAP50:95 for one or more detection files");
    std::string gt_path;
    std::vector<std::string> det_files;
    std::string classes;
    map->add_option("--gt", gt_path, "Ground-truth JSON")->required()->check(CLI::ExistingFile);
    map->add_option("detections", det_files, "Detection JSON files, one per model")->required();
    map->add_option("--classes", classes, "Comma-separated class names to evaluate");

    auto* correlate = app.add_subcommand("correlate", "Correlate per-model metric means with mAP");
    std::string summaries;
    std::vector<std::string> eval_files;
    correlate->add_option("summaries", summaries, "Model summaries (.csv or .json)")->required()->check(CLI::ExistingFile);
    correlate->add_option("evals", eval_files, "Evaluation tables (.csv or .json)")->required();

    auto* audit = app.add_subcommand("audit", "Mine detections unmatched by ground truth");
    std::string audit_gt;
    std::vector<std::string> specs;
    std::optional<double> conf_min, iou_max;
    audit->add_option("--gt", audit_gt, "Ground-truth JSON")->required()->check(CLI::ExistingFile);
    audit->add_option("detections", specs, "Detection files as model=path or path")->required();
    audit->add_option("--conf-min", conf_min, "Minimum confidence of a candidate");
    audit->add_option("--iou-max", iou_max, "Maximum IoU against ground truth");

    auto* serve = app.add_subcommand("serve", "Run the candidate review service");
    std::string serve_root, candidates_path, verdict_log, bind = "127.0.0.1:8080", static_dir, serve_gt;
    serve->add_option("dataset", serve_root, "Dataset root")->required();
    serve->add_option("--candidates", candidates_path, "Audit candidates JSON")->required()->check(CLI::ExistingFile);
    serve->add_option("--log", verdict_log, "Verdict log (JSONL, appended)")->required();
    serve->add_option("--bind", bind, "host:port")->capture_default_str();
    serve->add_option("--static", static_dir, "Directory with the review UI build");
    serve->add_option("--gt", serve_gt, "Ground-truth JSON (default <dataset>/ground_truth.json)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        const uwqa::ToolkitConfig cfg =
            uwqa::resolve_config(config_path ? std::optional<fs::path>(*config_path) : std::nullopt);
        const auto format = xywh ? uwqa::io::BoxFormat::XYWH : uwqa::io::BoxFormat::Corners;

        if (*metrics) {
            const auto layout = uwqa::scan_layout(dataset);
            log_line("kernels: " + std::string(uwqa::kernels::active().name));
            const auto run = uwqa::cmd_metrics(layout, cfg, out_dir, threads, log_line);
            std::cerr << "uwqa: computed " << run.computed << ", reused " << run.skipped << ", failed "
                      << run.failures.size() << '\n';
            return run.failures.empty() ? 0 : 2;
        }
        if (*qindex) {
            const auto run = uwqa::cmd_qindex(table_path, cfg, seed, out_dir, log_line);
            std::cerr << "uwqa: " << run.qindex.models.size() << " models x " << run.qindex.image_ids.size()
                      << " images\n";
            return run.dropped_images.empty() ? 0 : 2;
        }
        if (*map) {
            std::vector<fs::path> files(det_files.begin(), det_files.end());
            std::optional<std::vector<std::string>> names;
            if (!classes.empty())
                names = split_list(classes);
            for (const auto& [model, result] : uwqa::cmd_map(gt_path, files, names, format, out_dir))
                std::cout << model << '\t' << result.overall << '\n';
            return 0;
        }
        if (*correlate) {
            std::vector<fs::path> files(eval_files.begin(), eval_files.end());
            const auto report = uwqa::cmd_correlate(summaries, files, out_dir);
            for (const auto& r : report.metrics) {
                std::cout << r.metric << '\t' << r.n;
                if (r.coefficients)
                    std::cout << '\t' << r.coefficients->pearson_r << '\t' << r.coefficients->spearman_rho;
                else
                    std::cout << '\t' << r.error;
                std::cout << '\n';
            }
            return 0;
        }
        if (*audit) {
            uwqa::AuditOptions options = cfg.audit;
            if (conf_min)
                options.conf_min = *conf_min;
            if (iou_max)
                options.iou_max = *iou_max;
            const auto candidates = uwqa::cmd_audit(audit_gt, specs, options, format, out_dir);
            std::cerr << "uwqa: " << candidates.size() << " candidates\n";
            return 0;
        }
        if (*serve) {
            uwqa::ReviewServiceOptions options;
            options.layout = uwqa::scan_layout(serve_root);
            const fs::path gt = serve_gt.empty() ? options.layout.ground_truth_path() : fs::path(serve_gt);
            if (fs::exists(gt))
                options.ground_truth = uwqa::io::load_ground_truth(gt, format);
            else
                log_line("no ground truth at " + gt.string() + "; corrected-gt export starts empty");
            options.candidates = uwqa::io::load_candidates(candidates_path);
            options.verdict_log = verdict_log;
            if (!static_dir.empty())
                options.static_dir = fs::path(static_dir);
            options.log = log_line;

            const auto colon = bind.rfind(':');
            if (colon == std::string::npos)
                throw uwqa::Error(uwqa::ErrorKind::Usage, "--bind expects host:port");
            const std::string host = bind.substr(0, colon);
            const int port = std::stoi(bind.substr(colon + 1));

            uwqa::ReviewService service(std::move(options));
            log_line("replayed " + std::to_string(service.verdicts_replayed()) + " verdicts; listening on " + bind);
            service.listen(host, port);
            return 0;
        }
    } catch (const uwqa::Error& e) {
        std::cerr << "uwqa: " << uwqa::to_string(e.kind()) << ": " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "uwqa: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
