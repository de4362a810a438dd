#include "uwqa/pipeline.hpp"

#include "uwqa/error.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace uwqa {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool is_image_file(const fs::path& p)
{
    std::string e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return e == ".png" || e == ".jpg" || e == ".jpeg";
}

std::map<std::string, fs::path> list_images(const fs::path& dir)
{
    std::map<std::string, fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file() || !is_image_file(entry.path()))
            continue;
        const std::string stem = entry.path().stem().string();
        if (!out.emplace(stem, entry.path()).second)
            throw Error(ErrorKind::Layout, dir.string() + ": two images share the stem '" + stem + "'");
    }
    return out;
}

void emit(const LogSink& log, const std::string& message)
{
    if (log)
        log(message);
}

} // namespace

fs::path DatasetLayout::image_path(const std::string& model, const std::string& image_id) const
{
    auto m = files.find(model);
    if (m == files.end())
        throw Error(ErrorKind::UnknownModel, "unknown model '" + model + "'");
    auto f = m->second.find(image_id);
    if (f == m->second.end())
        throw Error(ErrorKind::UnknownModel, "model '" + model + "' has no image '" + image_id + "'");
    return f->second;
}

DatasetLayout scan_layout(const fs::path& root)
{
    DatasetLayout layout;
    layout.root = root;
    const fs::path original = root / std::string(original_model_id);
    if (!fs::is_directory(original))
        throw Error(ErrorKind::Layout, root.string() + ": missing '" + std::string(original_model_id) + "/' directory");

    const auto originals = list_images(original);
    if (originals.empty())
        throw Error(ErrorKind::Layout, original.string() + ": no PNG or JPEG images");
    for (const auto& [stem, path] : originals)
        layout.image_ids.push_back(stem);
    layout.models.push_back(std::string(original_model_id));
    layout.files[std::string(original_model_id)] = originals;

    std::vector<std::string> enhancers;
    for (const auto& entry : fs::directory_iterator(root)) {
        const std::string name = entry.path().filename().string();
        if (!entry.is_directory() || name == original_model_id || name == "detections" || name.starts_with("."))
            continue;
        enhancers.push_back(name);
    }
    std::sort(enhancers.begin(), enhancers.end());
    for (const auto& model : enhancers) {
        auto images = list_images(root / model);
        std::vector<std::string> missing, extra;
        for (const auto& id : layout.image_ids)
            if (!images.count(id))
                missing.push_back(id);
        for (const auto& [stem, path] : images)
            if (!originals.count(stem))
                extra.push_back(stem);
        if (!missing.empty() || !extra.empty()) {
            std::string msg = "model '" + model + "' does not mirror original/:";
            if (!missing.empty())
                msg += " missing " + missing.front() + (missing.size() > 1 ? " (+" + std::to_string(missing.size() - 1) + ")" : "");
            if (!extra.empty())
                msg += " extra " + extra.front() + (extra.size() > 1 ? " (+" + std::to_string(extra.size() - 1) + ")" : "");
            throw Error(ErrorKind::Layout, msg);
        }
        layout.models.push_back(model);
        layout.files[model] = std::move(images);
    }
    return layout;
}

// --- metrics --------------------------------------------------------------

namespace {

json journal_row(const std::string& model, const std::string& image_id, const MetricVector& v)
{
    return {{"model", model}, {"image_id", image_id}, {"uiqm", v.uiqm}, {"uciqe", v.uciqe}, {"ccf", v.ccf},
            {"entropy", v.entropy}};
}

std::map<std::pair<std::string, std::string>, MetricVector> read_journal(const fs::path& path, const LogSink& log)
{
    std::map<std::pair<std::string, std::string>, MetricVector> rows;
    std::ifstream in(path);
    if (!in)
        return rows;
    std::string line;
    for (int n = 1; std::getline(in, line); ++n) {
        if (line.empty())
            continue;
        try {
            const json j = json::parse(line);
            MetricVector v;
            for (std::size_t k = 0; k < 4; ++k)
                v[k] = j.at(std::string(metric_names[k])).get<double>();
            rows[{j.at("model").get<std::string>(), j.at("image_id").get<std::string>()}] = v;
        } catch (const std::exception&) {
            // An interrupted run can leave a partial final line.
            emit(log, path.string() + ":" + std::to_string(n) + ": ignoring unreadable journal line");
        }
    }
    return rows;
}

} // namespace

MetricsRun cmd_metrics(const DatasetLayout& layout, const ToolkitConfig& cfg, const fs::path& out_dir, unsigned threads,
                       const LogSink& log)
{
    cfg.metrics.validate();
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec)
        throw Error(ErrorKind::Io, "cannot create " + out_dir.string() + ": " + ec.message());

    const fs::path journal_path = out_dir / std::string(metrics_journal_name);
    auto done = read_journal(journal_path, log);

    struct Task {
        std::string model;
        std::string image_id;
    };
    std::vector<Task> todo;
    MetricsRun run;
    for (const auto& model : layout.models)
        for (const auto& id : layout.image_ids) {
            if (done.count({model, id}))
                ++run.skipped;
            else
                todo.push_back({model, id});
        }

    bool torn = false;
    if (std::ifstream tail(journal_path, std::ios::binary | std::ios::ate); tail && tail.tellg() > 0) {
        tail.seekg(-1, std::ios::end);
        torn = tail.get() != '\n';
    }
    std::ofstream journal(journal_path, std::ios::app);
    if (!journal)
        throw Error(ErrorKind::Io, "cannot open " + journal_path.string());
    if (torn)
        journal << '\n';

    std::mutex writer;
    std::atomic<std::size_t> next{0};
    std::vector<std::pair<std::size_t, std::string>> failures;
    const auto worker = [&] {
        for (std::size_t i = next++; i < todo.size(); i = next++) {
            const Task& t = todo[i];
            try {
                const ImageBuffer img = read_image(layout.image_path(t.model, t.image_id).string());
                const MetricVector v = metric_vector(img, cfg.metrics);
                std::lock_guard lock(writer);
                journal << journal_row(t.model, t.image_id, v).dump() << '\n';
                journal.flush();
                done[{t.model, t.image_id}] = v;
                ++run.computed;
            } catch (const std::exception& e) {
                std::lock_guard lock(writer);
                failures.emplace_back(i, t.model + "/" + t.image_id + ": " + e.what());
            }
        }
    };

    if (threads == 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, todo.size())));
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 1; t < threads; ++t)
            pool.emplace_back(worker);
        worker();
    }
    if (!journal)
        throw Error(ErrorKind::Io, "write failed for " + journal_path.string());

    std::sort(failures.begin(), failures.end());
    for (auto& [i, msg] : failures) {
        emit(log, "failed: " + msg);
        run.failures.push_back(std::move(msg));
    }

    for (const auto& model : layout.models)
        for (const auto& id : layout.image_ids)
            if (auto it = done.find({model, id}); it != done.end())
                run.table.add(model, id, it->second);

    std::vector<Artifact> artifacts{io::metric_table_artifact(run.table)};
    if (!run.table.empty())
        artifacts.push_back(io::summaries_artifact(summarize_models(run.table)));
    export_report(artifacts, out_dir);
    return run;
}

// --- qindex ---------------------------------------------------------------

QIndexRun cmd_qindex(const fs::path& metric_table, const ToolkitConfig& cfg, std::uint64_t seed, const fs::path& out_dir,
                     const LogSink& log)
{
    const MetricTable raw = io::load_metric_table(metric_table);
    if (raw.empty())
        throw Error(ErrorKind::EmptyInput, metric_table.string() + ": metric table is empty");
    const auto& models = raw.models();
    if (std::find(models.begin(), models.end(), original_model_id) == models.end())
        throw Error(ErrorKind::UnknownModel,
                    metric_table.string() + ": reserved model id '" + std::string(original_model_id) + "' is missing");

    QIndexRun run;
    const MetricTable table = raw.aligned(&run.dropped_images);
    for (const auto& id : run.dropped_images)
        emit(log, "dropping image '" + id + "': not scored for every model");
    if (table.empty())
        throw Error(ErrorKind::EmptyInput, "no image is scored for every model");

    run.qindex = compute_qindex(table, cfg.qindex);
    run.deltas = delta_qindex(run.qindex, original_model_id);
    export_report({io::qindex_artifact(run.qindex), io::deltas_artifact(run.deltas),
                   io::bin_samples_artifact(run.qindex, seed),
                   io::distributions_artifact(run.qindex, run.deltas, cfg.histogram_bins),
                   io::extrema_artifact(run.qindex)},
                  out_dir);
    return run;
}

// --- map ------------------------------------------------------------------

std::vector<std::pair<std::string, EvalResult>> cmd_map(const fs::path& ground_truth,
                                                        const std::vector<fs::path>& detection_files,
                                                        const std::optional<std::vector<std::string>>& class_names,
                                                        io::BoxFormat format, const fs::path& out_dir)
{
    if (detection_files.empty())
        throw Error(ErrorKind::Usage, "at least one detections file is required");
    const io::GroundTruth gt = io::load_ground_truth(ground_truth, format);

    std::vector<ClassInfo> classes = gt.classes;
    if (class_names) {
        classes.clear();
        for (const auto& name : *class_names) {
            auto it = std::find_if(gt.classes.begin(), gt.classes.end(), [&](const ClassInfo& c) { return c.name == name; });
            if (it == gt.classes.end())
                throw Error(ErrorKind::UnknownClass, "class '" + name + "' is not declared in " + ground_truth.string());
            classes.push_back(*it);
        }
    }

    std::set<ClassId> selected;
    for (const auto& c : classes)
        selected.insert(c.id);
    std::vector<Annotation> annotations;
    std::copy_if(gt.annotations.begin(), gt.annotations.end(), std::back_inserter(annotations),
                 [&](const Annotation& a) { return selected.count(a.class_id) > 0; });

    std::vector<std::pair<std::string, EvalResult>> results;
    std::set<std::string> seen;
    for (const auto& path : detection_files) {
        io::DetectionFile file = io::load_detections(path, &gt, format);
        std::erase_if(file.detections, [&](const Detection& d) { return selected.count(d.class_id) == 0; });
        if (!seen.insert(file.model).second)
            throw Error(ErrorKind::Schema, path.string() + ": duplicate model id '" + file.model + "'");
        try {
            results.emplace_back(file.model, map_50_95(file.detections, annotations, classes));
        } catch (const Error& e) {
            throw Error(e.kind(), path.string() + ": " + e.what());
        }
    }
    export_report({io::eval_artifact(results)}, out_dir);
    return results;
}

// --- correlate ------------------------------------------------------------

ScatterReport cmd_correlate(const fs::path& summaries, const std::vector<fs::path>& eval_files, const fs::path& out_dir)
{
    const auto sums = io::load_summaries(summaries);
    std::map<std::string, double> overall;
    for (const auto& path : eval_files)
        for (const auto& [model, value] : io::load_eval_table(path).overall_by_model())
            if (!overall.emplace(model, value).second)
                throw Error(ErrorKind::Schema, path.string() + ": duplicate model id '" + model + "'");
    ScatterReport report = build_scatter(sums, overall);
    export_report({io::correlation_artifact(report), io::scatter_artifact(report)}, out_dir);
    return report;
}

// --- audit ----------------------------------------------------------------

std::vector<AuditCandidate> cmd_audit(const fs::path& ground_truth, const std::vector<std::string>& detection_specs,
                                      const AuditOptions& options, io::BoxFormat format, const fs::path& out_dir)
{
    const io::GroundTruth gt = io::load_ground_truth(ground_truth, format);
    std::map<std::string, std::vector<Detection>> by_model;
    for (const auto& spec : detection_specs) {
        std::string model;
        fs::path path = spec;
        if (const auto eq = spec.find('='); eq != std::string::npos && !fs::exists(spec)) {
            model = spec.substr(0, eq);
            path = spec.substr(eq + 1);
        }
        io::DetectionFile file = io::load_detections(path, &gt, format);
        if (!model.empty())
            file.model = model;
        if (by_model.count(file.model))
            throw Error(ErrorKind::Schema, path.string() + ": duplicate model id '" + file.model + "'");
        by_model[file.model] = std::move(file.detections);
    }
    auto candidates = mine_audit_candidates(by_model, gt.annotations, options);
    export_report({io::candidates_artifact(candidates)}, out_dir);
    return candidates;
}

} // namespace uwqa
