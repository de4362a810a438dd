#include "uwqa/io.hpp"

#include "uwqa/error.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace uwqa::io {

using nlohmann::json;

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << text;
    if (!out)
        throw Error(ErrorKind::Io, "write failed for " + path.string());
}

json read_json(const std::filesystem::path& path)
{
    const std::string text = read_text(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Schema, path.string() + ": " + e.what());
    }
}

namespace {

const json& field(const json& j, const char* key, const std::string& context)
{
    if (!j.is_object() || !j.contains(key))
        throw Error(ErrorKind::Schema, context + ": missing field '" + key + "'");
    return j.at(key);
}

double number(const json& j, const char* key, const std::string& context)
{
    const json& v = field(j, key, context);
    if (!v.is_number())
        throw Error(ErrorKind::Schema, context + ": field '" + key + "' must be a number");
    return v.get<double>();
}

std::int64_t integer(const json& j, const char* key, const std::string& context)
{
    const json& v = field(j, key, context);
    if (!v.is_number_integer())
        throw Error(ErrorKind::Schema, context + ": field '" + key + "' must be an integer");
    return v.get<std::int64_t>();
}

std::string text(const json& j, const char* key, const std::string& context)
{
    const json& v = field(j, key, context);
    if (!v.is_string())
        throw Error(ErrorKind::Schema, context + ": field '" + key + "' must be a string");
    return v.get<std::string>();
}

const json& array(const json& j, const char* key, const std::string& context)
{
    const json& v = field(j, key, context);
    if (!v.is_array())
        throw Error(ErrorKind::Schema, context + ": field '" + key + "' must be an array");
    return v;
}

std::string ext_of(const std::filesystem::path& path)
{
    std::string e = path.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return e;
}

std::string ctx(const char* array_name, std::size_t i)
{
    return std::string(array_name) + "[" + std::to_string(i) + "]";
}

} // namespace

// --- metric tables --------------------------------------------------------

csv::Table metric_table_csv(const MetricTable& table)
{
    csv::Table t;
    t.header = {"model", "image_id", "uiqm", "uciqe", "ccf", "entropy"};
    for (const auto& row : table.rows()) {
        std::vector<std::string> r{row.model, row.image_id};
        for (std::size_t k = 0; k < MetricVector::size; ++k)
            r.push_back(csv::format_number(row.metrics[k]));
        t.rows.push_back(std::move(r));
    }
    return t;
}

json metric_table_json(const MetricTable& table)
{
    json rows = json::array();
    for (const auto& row : table.rows())
        rows.push_back({{"model", row.model},
                        {"image_id", row.image_id},
                        {"uiqm", row.metrics.uiqm},
                        {"uciqe", row.metrics.uciqe},
                        {"ccf", row.metrics.ccf},
                        {"entropy", row.metrics.entropy}});
    return {{"models", table.models()}, {"rows", rows}};
}

MetricTable metric_table_from_csv(const csv::Table& t)
{
    const std::size_t cm = t.column("model"), ci = t.column("image_id");
    std::array<std::size_t, 4> cols{};
    for (std::size_t k = 0; k < 4; ++k)
        cols[k] = t.column(metric_names[k]);
    MetricTable table;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        MetricVector v;
        for (std::size_t k = 0; k < 4; ++k)
            v[k] = csv::parse_number(t.rows[r][cols[k]], r, metric_names[k]);
        table.add(t.rows[r][cm], t.rows[r][ci], v);
    }
    return table;
}

MetricTable metric_table_from_json(const json& j)
{
    MetricTable table;
    const json& rows = array(j, "rows", "metric table");
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::string c = ctx("rows", i);
        MetricVector v;
        for (std::size_t k = 0; k < 4; ++k)
            v[k] = number(rows[i], std::string(metric_names[k]).c_str(), c);
        table.add(text(rows[i], "model", c), text(rows[i], "image_id", c), v);
    }
    return table;
}

MetricTable load_metric_table(const std::filesystem::path& path)
{
    if (ext_of(path) == ".csv")
        return metric_table_from_csv(csv::parse(read_text(path)));
    return metric_table_from_json(read_json(path));
}

Artifact metric_table_artifact(const MetricTable& table, std::string name)
{
    return Artifact{std::move(name), metric_table_csv(table), metric_table_json(table)};
}

// --- model summaries ------------------------------------------------------

Artifact summaries_artifact(const std::vector<ModelSummary>& summaries, std::string name)
{
    csv::Table t;
    t.header = {"model", "count"};
    for (auto m : metric_names) {
        t.header.push_back(std::string(m) + "_mean");
        t.header.push_back(std::string(m) + "_std");
    }
    json rows = json::array();
    for (const auto& s : summaries) {
        std::vector<std::string> r{s.model, std::to_string(s.count)};
        json jr{{"model", s.model}, {"count", s.count}};
        for (std::size_t k = 0; k < 4; ++k) {
            r.push_back(csv::format_number(s.metrics[k].mean));
            r.push_back(csv::format_number(s.metrics[k].std));
            jr[std::string(metric_names[k])] = {{"mean", s.metrics[k].mean}, {"std", s.metrics[k].std}};
        }
        t.rows.push_back(std::move(r));
        rows.push_back(std::move(jr));
    }
    return Artifact{std::move(name), std::move(t), json{{"summaries", rows}}};
}

namespace {

void reject_duplicate_models(const std::vector<std::string>& models)
{
    std::set<std::string> seen;
    for (const auto& m : models)
        if (!seen.insert(m).second)
            throw Error(ErrorKind::Schema, "duplicate model id '" + m + "'");
}

} // namespace

std::vector<ModelSummary> summaries_from_csv(const csv::Table& t)
{
    const std::size_t cm = t.column("model"), cc = t.column("count");
    std::vector<ModelSummary> out;
    std::vector<std::string> ids;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        ModelSummary s;
        s.model = t.rows[r][cm];
        const double count = csv::parse_number(t.rows[r][cc], r, "count");
        if (count < 1 || count != static_cast<double>(static_cast<std::size_t>(count)))
            throw Error(ErrorKind::Schema, "row " + std::to_string(r + 1) + ": count must be a positive integer");
        s.count = static_cast<std::size_t>(count);
        for (std::size_t k = 0; k < 4; ++k) {
            const std::string mean_col = std::string(metric_names[k]) + "_mean";
            const std::string std_col = std::string(metric_names[k]) + "_std";
            s.metrics[k].mean = csv::parse_number(t.rows[r][t.column(mean_col)], r, mean_col);
            s.metrics[k].std = csv::parse_number(t.rows[r][t.column(std_col)], r, std_col);
            if (s.metrics[k].std < 0.0)
                throw Error(ErrorKind::Schema, "row " + std::to_string(r + 1) + ": negative standard deviation");
        }
        ids.push_back(s.model);
        out.push_back(std::move(s));
    }
    reject_duplicate_models(ids);
    return out;
}

std::vector<ModelSummary> summaries_from_json(const json& j)
{
    const json& rows = array(j, "summaries", "summaries");
    std::vector<ModelSummary> out;
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::string c = ctx("summaries", i);
        ModelSummary s;
        s.model = text(rows[i], "model", c);
        s.count = static_cast<std::size_t>(integer(rows[i], "count", c));
        for (std::size_t k = 0; k < 4; ++k) {
            const json& m = field(rows[i], std::string(metric_names[k]).c_str(), c);
            s.metrics[k] = MeanStd{number(m, "mean", c), number(m, "std", c)};
        }
        ids.push_back(s.model);
        out.push_back(std::move(s));
    }
    reject_duplicate_models(ids);
    return out;
}

std::vector<ModelSummary> load_summaries(const std::filesystem::path& path)
{
    if (ext_of(path) == ".csv")
        return summaries_from_csv(csv::parse(read_text(path)));
    return summaries_from_json(read_json(path));
}

// --- Q-index outputs ------------------------------------------------------

Artifact qindex_artifact(const QIndexTable& qt, std::string name)
{
    csv::Table t;
    t.header = {"model", "image_id", "q", "bin"};
    json rows = json::array();
    for (std::size_t m = 0; m < qt.models.size(); ++m)
        for (std::size_t i = 0; i < qt.image_ids.size(); ++i) {
            const double q = qt.q[m][i];
            const int bin = assign_bin(q);
            t.rows.push_back({qt.models[m], qt.image_ids[i], csv::format_number(q), std::to_string(bin)});
            rows.push_back({{"model", qt.models[m]}, {"image_id", qt.image_ids[i]}, {"q", q}, {"bin", bin}});
        }
    json extrema = json::object();
    for (std::size_t k = 0; k < 4; ++k)
        extrema[std::string(metric_names[k])] = {{"min", qt.global_extrema[k].min}, {"max", qt.global_extrema[k].max}};
    json replaced = json::object();
    for (std::size_t m = 0; m < qt.models.size(); ++m)
        for (std::size_t k = 0; k < 4; ++k)
            replaced[qt.models[m]][std::string(metric_names[k])] = qt.replaced[m][k];
    return Artifact{std::move(name), std::move(t),
                    json{{"models", qt.models},
                         {"image_ids", qt.image_ids},
                         {"global_extrema", extrema},
                         {"replaced", replaced},
                         {"rows", rows}}};
}

Artifact deltas_artifact(const std::vector<DeltaRecord>& deltas, std::string name)
{
    csv::Table t;
    t.header = {"image_id", "model", "delta"};
    json rows = json::array();
    for (const auto& d : deltas) {
        t.rows.push_back({d.image_id, d.model, csv::format_number(d.delta)});
        rows.push_back({{"image_id", d.image_id}, {"model", d.model}, {"delta", d.delta}});
    }
    return Artifact{std::move(name), std::move(t), json{{"deltas", rows}}};
}

Artifact bin_samples_artifact(const QIndexTable& qt, std::uint64_t seed, std::string name)
{
    csv::Table t;
    t.header = {"model", "bin", "lower", "upper", "count", "image_id"};
    json rows = json::array();
    for (std::size_t m = 0; m < qt.models.size(); ++m) {
        const auto picks = sample_bins(qt, qt.models[m], seed);
        std::array<std::size_t, quality_bin_count> counts{};
        for (double q : qt.q[m])
            ++counts[static_cast<std::size_t>(assign_bin(q))];
        for (int b = 0; b < quality_bin_count; ++b) {
            const double lower = b / 10.0, upper = (b + 1) / 10.0;
            const auto& pick = picks[static_cast<std::size_t>(b)];
            t.rows.push_back({qt.models[m], std::to_string(b), csv::format_number(lower), csv::format_number(upper),
                              std::to_string(counts[static_cast<std::size_t>(b)]), pick.value_or("")});
            rows.push_back({{"model", qt.models[m]},
                            {"bin", b},
                            {"lower", lower},
                            {"upper", upper},
                            {"count", counts[static_cast<std::size_t>(b)]},
                            {"image_id", pick ? json(*pick) : json(nullptr)}});
        }
    }
    return Artifact{std::move(name), std::move(t), json{{"seed", seed}, {"bins", rows}}};
}

namespace {

void add_distribution(csv::Table& t, json& rows, const std::string& kind, const std::string& model,
                      const std::vector<double>& values, int bins)
{
    const DistributionSummary s = distribution_summary(values, bins);
    std::string counts;
    for (std::size_t i = 0; i < s.counts.size(); ++i)
        counts += (i ? ";" : "") + std::to_string(s.counts[i]);
    t.rows.push_back({kind, model, std::to_string(values.size()), csv::format_number(s.min), csv::format_number(s.q1),
                      csv::format_number(s.median), csv::format_number(s.q3), csv::format_number(s.max), counts});
    rows.push_back({{"kind", kind},
                    {"model", model},
                    {"n", values.size()},
                    {"min", s.min},
                    {"q1", s.q1},
                    {"median", s.median},
                    {"q3", s.q3},
                    {"max", s.max},
                    {"histogram", s.counts}});
}

} // namespace

Artifact distributions_artifact(const QIndexTable& qt, const std::vector<DeltaRecord>& deltas, int bins,
                                std::string name)
{
    csv::Table t;
    t.header = {"kind", "model", "n", "min", "q1", "median", "q3", "max", "histogram"};
    json rows = json::array();
    for (std::size_t m = 0; m < qt.models.size(); ++m)
        add_distribution(t, rows, "q", qt.models[m], qt.q[m], bins);
    std::map<std::string, std::vector<double>> by_model;
    std::vector<std::string> order;
    for (const auto& d : deltas) {
        if (!by_model.count(d.model))
            order.push_back(d.model);
        by_model[d.model].push_back(d.delta);
    }
    for (const auto& model : order)
        add_distribution(t, rows, "delta", model, by_model[model], bins);
    return Artifact{std::move(name), std::move(t), json{{"bins", bins}, {"series", rows}}};
}

Artifact extrema_artifact(const QIndexTable& qt, std::string name)
{
    csv::Table t;
    t.header = {"metric", "global_min", "global_max"};
    json rows = json::array();
    for (std::size_t k = 0; k < 4; ++k) {
        t.rows.push_back({std::string(metric_names[k]), csv::format_number(qt.global_extrema[k].min),
                          csv::format_number(qt.global_extrema[k].max)});
        rows.push_back({{"metric", metric_names[k]},
                        {"global_min", qt.global_extrema[k].min},
                        {"global_max", qt.global_extrema[k].max}});
    }
    return Artifact{std::move(name), std::move(t), json{{"extrema", rows}}};
}

// --- detection schema -----------------------------------------------------

const ImageInfo* GroundTruth::find_image(ImageId id) const
{
    auto it = std::find_if(images.begin(), images.end(), [id](const ImageInfo& i) { return i.id == id; });
    return it == images.end() ? nullptr : &*it;
}

BoundingBox parse_box(const json& j, BoxFormat format, const std::string& context)
{
    if (!j.is_array() || j.size() != 4 || !std::all_of(j.begin(), j.end(), [](const json& v) { return v.is_number(); }))
        throw Error(ErrorKind::Schema, context + ": box must be an array of 4 numbers");
    const double a = j[0].get<double>(), b = j[1].get<double>(), c = j[2].get<double>(), d = j[3].get<double>();
    BoundingBox box = format == BoxFormat::XYWH ? BoundingBox{a, b, a + c, b + d} : BoundingBox{a, b, c, d};
    if (!std::isfinite(box.x_min) || !std::isfinite(box.y_min) || !std::isfinite(box.x_max) ||
        !std::isfinite(box.y_max) || !box.valid())
        throw Error(ErrorKind::Schema, context + ": box must have strictly positive area");
    return box;
}

json box_json(const BoundingBox& box)
{
    return json::array({box.x_min, box.y_min, box.x_max, box.y_max});
}

GroundTruth parse_ground_truth(const json& j, BoxFormat format)
{
    GroundTruth gt;
    const json& classes = array(j, "classes", "ground truth");
    std::set<ClassId> class_ids;
    for (std::size_t i = 0; i < classes.size(); ++i) {
        const std::string c = ctx("classes", i);
        ClassInfo info{integer(classes[i], "id", c), text(classes[i], "name", c)};
        if (!class_ids.insert(info.id).second)
            throw Error(ErrorKind::Schema, c + ": duplicate class id " + std::to_string(info.id));
        gt.classes.push_back(std::move(info));
    }
    const json& images = array(j, "images", "ground truth");
    std::set<ImageId> image_ids;
    for (std::size_t i = 0; i < images.size(); ++i) {
        const std::string c = ctx("images", i);
        ImageInfo info{integer(images[i], "id", c), static_cast<int>(integer(images[i], "width", c)),
                       static_cast<int>(integer(images[i], "height", c)), text(images[i], "file_name", c)};
        if (!image_ids.insert(info.id).second)
            throw Error(ErrorKind::Schema, c + ": duplicate image id " + std::to_string(info.id));
        gt.images.push_back(std::move(info));
    }
    const json& anns = array(j, "annotations", "ground truth");
    for (std::size_t i = 0; i < anns.size(); ++i) {
        const std::string c = ctx("annotations", i);
        Annotation a{integer(anns[i], "image_id", c), integer(anns[i], "class_id", c),
                     parse_box(field(anns[i], "box", c), format, c)};
        if (!image_ids.count(a.image_id))
            throw Error(ErrorKind::Schema, c + ": unknown image_id " + std::to_string(a.image_id));
        if (!class_ids.count(a.class_id))
            throw Error(ErrorKind::UnknownClass, c + ": undeclared class_id " + std::to_string(a.class_id));
        gt.annotations.push_back(a);
    }
    return gt;
}

json ground_truth_json(const GroundTruth& gt)
{
    json classes = json::array(), images = json::array(), anns = json::array();
    for (const auto& c : gt.classes)
        classes.push_back({{"id", c.id}, {"name", c.name}});
    for (const auto& i : gt.images)
        images.push_back({{"id", i.id}, {"width", i.width}, {"height", i.height}, {"file_name", i.file_name}});
    for (const auto& a : gt.annotations)
        anns.push_back({{"image_id", a.image_id}, {"class_id", a.class_id}, {"box", box_json(a.box)}});
    return {{"classes", classes}, {"images", images}, {"annotations", anns}};
}

GroundTruth load_ground_truth(const std::filesystem::path& path, BoxFormat format)
{
    try {
        return parse_ground_truth(read_json(path), format);
    } catch (const Error& e) {
        throw Error(e.kind(), path.string() + ": " + e.what());
    }
}

DetectionFile parse_detections(const json& j, const GroundTruth* gt, BoxFormat format)
{
    DetectionFile file;
    const json* list = &j;
    if (j.is_object()) {
        if (j.contains("model") && j.at("model").is_string())
            file.model = j.at("model").get<std::string>();
        list = &array(j, "detections", "detections file");
    } else if (!j.is_array()) {
        throw Error(ErrorKind::Schema, "detections file must be an object or an array");
    }
    for (std::size_t i = 0; i < list->size(); ++i) {
        const json& r = (*list)[i];
        const std::string c = ctx("detections", i);
        Detection d{integer(r, "image_id", c), integer(r, "class_id", c), parse_box(field(r, "box", c), format, c),
                    number(r, "confidence", c)};
        if (!(d.confidence >= 0.0 && d.confidence <= 1.0))
            throw Error(ErrorKind::Schema, c + ": confidence must be in [0, 1]");
        if (gt != nullptr) {
            if (gt->find_image(d.image_id) == nullptr)
                throw Error(ErrorKind::Schema, c + ": unknown image_id " + std::to_string(d.image_id));
            if (std::none_of(gt->classes.begin(), gt->classes.end(),
                             [&](const ClassInfo& ci) { return ci.id == d.class_id; }))
                throw Error(ErrorKind::UnknownClass, c + ": undeclared class_id " + std::to_string(d.class_id));
        }
        file.detections.push_back(d);
    }
    return file;
}

DetectionFile load_detections(const std::filesystem::path& path, const GroundTruth* gt, BoxFormat format)
{
    try {
        DetectionFile file = parse_detections(read_json(path), gt, format);
        if (file.model.empty())
            file.model = path.stem().string();
        return file;
    } catch (const Error& e) {
        throw Error(e.kind(), path.string() + ": " + e.what());
    }
}

json detections_json(const DetectionFile& file)
{
    json dets = json::array();
    for (const auto& d : file.detections)
        dets.push_back({{"image_id", d.image_id},
                        {"class_id", d.class_id},
                        {"box", box_json(d.box)},
                        {"confidence", d.confidence}});
    return {{"model", file.model}, {"detections", dets}};
}

// --- evaluation tables ----------------------------------------------------

std::map<std::string, double> EvalTable::overall_by_model() const
{
    std::map<std::string, double> out;
    for (const auto& r : rows)
        out.emplace(r.model, r.overall);
    return out;
}

EvalTable eval_table(const std::vector<std::pair<std::string, EvalResult>>& results)
{
    EvalTable t;
    if (!results.empty())
        for (const auto& c : results.front().second.classes)
            t.classes.push_back(c.name);
    for (const auto& [model, ev] : results) {
        EvalTableRow row{model, {}, ev.overall};
        for (const auto& c : ev.classes)
            row.per_class.push_back(c.map);
        t.rows.push_back(std::move(row));
    }
    return t;
}

namespace {

csv::Table eval_csv(const EvalTable& et)
{
    csv::Table t;
    t.header = {"model"};
    for (const auto& c : et.classes)
        t.header.push_back(c);
    t.header.push_back("overall");
    for (const auto& r : et.rows) {
        std::vector<std::string> row{r.model};
        for (const auto& v : r.per_class)
            row.push_back(v ? csv::format_number(*v) : "");
        row.push_back(csv::format_number(r.overall));
        t.rows.push_back(std::move(row));
    }
    return t;
}

} // namespace

Artifact eval_table_artifact(const EvalTable& et, std::string name)
{
    json models = json::array();
    for (const auto& r : et.rows) {
        json classes = json::array();
        for (std::size_t c = 0; c < et.classes.size(); ++c)
            classes.push_back({{"name", et.classes[c]},
                               {"map_50_95", r.per_class[c] ? json(*r.per_class[c]) : json(nullptr)}});
        models.push_back({{"model", r.model}, {"overall", r.overall}, {"classes", classes}});
    }
    return Artifact{std::move(name), eval_csv(et), json{{"models", models}}};
}

Artifact eval_artifact(const std::vector<std::pair<std::string, EvalResult>>& results, std::string name)
{
    csv::Table t = eval_csv(eval_table(results));
    json models = json::array();
    for (const auto& [model, ev] : results) {
        json classes = json::array();
        for (const auto& c : ev.classes)
            classes.push_back({{"class_id", c.class_id},
                               {"name", c.name},
                               {"gt_count", c.gt_count},
                               {"det_count", c.det_count},
                               {"ap", c.ap},
                               {"map_50_95", c.map ? json(*c.map) : json(nullptr)},
                               {"tp50", c.tp50},
                               {"fp50", c.fp50},
                               {"fn50", c.fn50}});
        models.push_back({{"model", model},
                          {"overall", ev.overall},
                          {"tp50", ev.tp50},
                          {"fp50", ev.fp50},
                          {"fn50", ev.fn50},
                          {"classes", classes}});
    }
    std::vector<double> thresholds(iou_thresholds.begin(), iou_thresholds.end());
    return Artifact{std::move(name), std::move(t), json{{"iou_thresholds", thresholds}, {"models", models}}};
}

EvalTable eval_table_from_csv(const csv::Table& t)
{
    if (t.header.size() < 2 || t.header.front() != "model" || t.header.back() != "overall")
        throw Error(ErrorKind::Schema, "evaluation CSV must have columns model, <classes...>, overall");
    EvalTable et;
    et.classes.assign(t.header.begin() + 1, t.header.end() - 1);
    std::vector<std::string> ids;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        EvalTableRow row;
        row.model = t.rows[r].front();
        for (std::size_t c = 1; c + 1 < t.header.size(); ++c)
            row.per_class.push_back(t.rows[r][c].empty()
                                        ? std::nullopt
                                        : std::optional<double>(csv::parse_number(t.rows[r][c], r, t.header[c])));
        row.overall = csv::parse_number(t.rows[r].back(), r, "overall");
        ids.push_back(row.model);
        et.rows.push_back(std::move(row));
    }
    reject_duplicate_models(ids);
    return et;
}

EvalTable load_eval_table(const std::filesystem::path& path)
{
    try {
        if (ext_of(path) == ".csv")
            return eval_table_from_csv(csv::parse(read_text(path)));
        const json j = read_json(path);
        EvalTable et;
        const json& models = array(j, "models", "evaluation");
        std::vector<std::string> ids;
        for (std::size_t i = 0; i < models.size(); ++i) {
            const std::string c = ctx("models", i);
            EvalTableRow row{text(models[i], "model", c), {}, number(models[i], "overall", c)};
            const json& classes = array(models[i], "classes", c);
            for (const auto& cl : classes) {
                if (i == 0)
                    et.classes.push_back(text(cl, "name", c));
                const json& v = field(cl, "map_50_95", c);
                row.per_class.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
            }
            ids.push_back(row.model);
            et.rows.push_back(std::move(row));
        }
        reject_duplicate_models(ids);
        return et;
    } catch (const Error& e) {
        throw Error(e.kind(), path.string() + ": " + e.what());
    }
}

// --- correlation ----------------------------------------------------------

Artifact correlation_artifact(const ScatterReport& report, std::string name)
{
    csv::Table t;
    t.header = {"metric", "n", "pearson_r", "spearman_rho", "error"};
    json rows = json::array();
    for (const auto& cr : report.metrics) {
        const bool ok = cr.coefficients.has_value();
        t.rows.push_back({cr.metric, std::to_string(cr.n), ok ? csv::format_number(cr.coefficients->pearson_r) : "",
                          ok ? csv::format_number(cr.coefficients->spearman_rho) : "", cr.error});
        rows.push_back({{"metric", cr.metric},
                        {"n", cr.n},
                        {"pearson_r", ok ? json(cr.coefficients->pearson_r) : json(nullptr)},
                        {"spearman_rho", ok ? json(cr.coefficients->spearman_rho) : json(nullptr)},
                        {"error", cr.error.empty() ? json(nullptr) : json(cr.error)}});
    }
    return Artifact{std::move(name), std::move(t), json{{"correlations", rows}, {"excluded", report.excluded}}};
}

Artifact scatter_artifact(const ScatterReport& report, std::string name)
{
    csv::Table t;
    t.header = {"metric", "model", "metric_mean", "map_50_95"};
    json rows = json::array();
    for (const auto& cr : report.metrics)
        for (const auto& p : cr.scatter) {
            t.rows.push_back({cr.metric, p.model, csv::format_number(p.metric_mean), csv::format_number(p.map)});
            rows.push_back({{"metric", cr.metric}, {"model", p.model}, {"metric_mean", p.metric_mean}, {"map_50_95", p.map}});
        }
    return Artifact{std::move(name), std::move(t), json{{"points", rows}}};
}

// --- audit candidates -----------------------------------------------------

std::string_view to_string(AuditStatus status)
{
    switch (status) {
    case AuditStatus::Accepted: return "accepted";
    case AuditStatus::Rejected: return "rejected";
    case AuditStatus::Pending: break;
    }
    return "pending";
}

AuditStatus parse_status(std::string_view text)
{
    if (text == "pending")
        return AuditStatus::Pending;
    if (text == "accepted")
        return AuditStatus::Accepted;
    if (text == "rejected")
        return AuditStatus::Rejected;
    throw Error(ErrorKind::Schema, "unknown status '" + std::string(text) + "'");
}

json candidate_json(const AuditCandidate& c)
{
    json members = json::array();
    for (const auto& m : c.members)
        members.push_back({{"model", m.model},
                           {"box", box_json(m.detection.box)},
                           {"confidence", m.detection.confidence},
                           {"best_iou", m.best_iou}});
    return {{"id", c.id},
            {"image_id", c.image_id},
            {"class_id", c.detection.class_id},
            {"model", c.model},
            {"box", box_json(c.detection.box)},
            {"confidence", c.detection.confidence},
            {"best_iou", c.best_iou},
            {"agreement", c.agreement},
            {"models", c.models},
            {"members", members},
            {"status", to_string(c.status)}};
}

AuditCandidate candidate_from_json(const json& j)
{
    const std::string c = j.is_object() && j.contains("id") && j["id"].is_string() ? j["id"].get<std::string>()
                                                                                   : std::string("candidate");
    AuditCandidate cand;
    cand.id = text(j, "id", c);
    cand.image_id = integer(j, "image_id", c);
    cand.model = text(j, "model", c);
    cand.detection = Detection{cand.image_id, integer(j, "class_id", c), parse_box(field(j, "box", c), BoxFormat::Corners, c),
                               number(j, "confidence", c)};
    cand.best_iou = number(j, "best_iou", c);
    cand.agreement = static_cast<std::size_t>(integer(j, "agreement", c));
    for (const auto& m : array(j, "models", c))
        cand.models.push_back(m.get<std::string>());
    if (j.contains("members"))
        for (const auto& m : array(j, "members", c))
            cand.members.push_back(AuditMember{text(m, "model", c),
                                               Detection{cand.image_id, cand.detection.class_id,
                                                         parse_box(field(m, "box", c), BoxFormat::Corners, c),
                                                         number(m, "confidence", c)},
                                               number(m, "best_iou", c)});
    if (j.contains("status"))
        cand.status = parse_status(text(j, "status", c));
    return cand;
}

Artifact candidates_artifact(const std::vector<AuditCandidate>& candidates, std::string name)
{
    csv::Table t;
    t.header = {"id", "image_id", "class_id", "model", "confidence", "best_iou", "agreement", "models",
                "x_min", "y_min", "x_max", "y_max"};
    json list = json::array();
    for (const auto& c : candidates) {
        std::string models;
        for (std::size_t i = 0; i < c.models.size(); ++i)
            models += (i ? ";" : "") + c.models[i];
        const auto& b = c.detection.box;
        t.rows.push_back({c.id, std::to_string(c.image_id), std::to_string(c.detection.class_id), c.model,
                          csv::format_number(c.detection.confidence), csv::format_number(c.best_iou),
                          std::to_string(c.agreement), models, csv::format_number(b.x_min), csv::format_number(b.y_min),
                          csv::format_number(b.x_max), csv::format_number(b.y_max)});
        list.push_back(candidate_json(c));
    }
    return Artifact{std::move(name), std::move(t), json{{"candidates", list}}};
}

std::vector<AuditCandidate> load_candidates(const std::filesystem::path& path)
{
    try {
        const json j = read_json(path);
        std::vector<AuditCandidate> out;
        std::set<std::string> ids;
        for (const auto& c : array(j, "candidates", "candidates file")) {
            out.push_back(candidate_from_json(c));
            if (!ids.insert(out.back().id).second)
                throw Error(ErrorKind::Schema, "duplicate candidate id '" + out.back().id + "'");
        }
        return out;
    } catch (const Error& e) {
        throw Error(e.kind(), path.string() + ": " + e.what());
    }
}

} // namespace uwqa::io
