#include "uwqa/report.hpp"

#include "uwqa/error.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace uwqa {

std::vector<ModelSummary> summarize_models(const MetricTable& table)
{
    if (table.empty())
        throw Error(ErrorKind::EmptyInput, "cannot summarize an empty table");
    std::vector<ModelSummary> out;
    for (const auto& model : table.models()) {
        ModelSummary s;
        s.model = model;
        std::array<std::vector<double>, 4> columns;
        for (const auto& row : table.rows())
            if (row.model == model)
                for (std::size_t k = 0; k < MetricVector::size; ++k)
                    columns[k].push_back(row.metrics[k]);
        s.count = columns[0].size();
        for (std::size_t k = 0; k < MetricVector::size; ++k) {
            // sorted before summing
            auto& col = columns[k];
            std::sort(col.begin(), col.end());
            const double n = static_cast<double>(col.size());
            const double mean = std::accumulate(col.begin(), col.end(), 0.0) / n;
            double ss = 0.0;
            for (double v : col)
                ss += (v - mean) * (v - mean);
            s.metrics[k] = MeanStd{mean, std::sqrt(ss / n)};
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<double> fractional_ranks(std::span<const double> values)
{
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]])
            ++j;
        const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k)
            ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

namespace {

double pearson(std::span<const double> x, std::span<const double> y)
{
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw Error(ErrorKind::ConstantInput, "correlation undefined: zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

bool constant(std::span<const double> v)
{
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

} // namespace

Correlation correlate(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size())
        throw Error(ErrorKind::OutOfRange, "x and y lengths differ");
    if (x.size() < 3)
        throw Error(ErrorKind::OutOfRange, "correlation needs at least 3 points, got " + std::to_string(x.size()));
    if (constant(x) || constant(y))
        throw Error(ErrorKind::ConstantInput, std::string("correlation undefined: ") + (constant(x) ? "x" : "y") +
                                                  " is constant");
    const auto rx = fractional_ranks(x);
    const auto ry = fractional_ranks(y);
    return Correlation{pearson(x, y), pearson(rx, ry)};
}

ScatterReport build_scatter(const std::vector<ModelSummary>& summaries, const std::map<std::string, double>& overall_map)
{
    ScatterReport report;
    std::vector<const ModelSummary*> shared;
    for (const auto& s : summaries) {
        if (overall_map.count(s.model))
            shared.push_back(&s);
        else
            report.excluded.push_back(s.model);
    }
    for (const auto& [model, value] : overall_map)
        if (std::none_of(summaries.begin(), summaries.end(), [&](const ModelSummary& s) { return s.model == model; }))
            report.excluded.push_back(model);
    if (shared.empty())
        throw Error(ErrorKind::NoOverlap, "no model id is shared between summaries and evaluations");

    for (std::size_t k = 0; k < MetricVector::size; ++k) {
        CorrelationResult cr;
        cr.metric = std::string(metric_names[k]);
        std::vector<double> xs, ys;
        for (const ModelSummary* s : shared) {
            const double m = overall_map.at(s->model);
            cr.scatter.push_back(ScatterPoint{s->model, s->metrics[k].mean, m});
            xs.push_back(s->metrics[k].mean);
            ys.push_back(m);
        }
        cr.n = cr.scatter.size();
        try {
            cr.coefficients = correlate(xs, ys);
        } catch (const Error& e) {
            cr.error = std::string(to_string(e.kind())) + ": " + e.what();
        }
        report.metrics.push_back(std::move(cr));
    }
    return report;
}

ScatterReport build_scatter(const std::vector<ModelSummary>& summaries, const std::map<std::string, EvalResult>& evals)
{
    std::map<std::string, double> overall;
    for (const auto& [model, ev] : evals)
        overall.emplace(model, ev.overall);
    return build_scatter(summaries, overall);
}

nlohmann::json Manifest::to_json() const
{
    nlohmann::json files = nlohmann::json::array();
    for (const auto& e : entries)
        files.push_back({{"file", e.file}, {"rows", e.rows}, {"sha256", e.sha256}});
    return {{"files", files}};
}

std::string sha256_hex(std::string_view data)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error(ErrorKind::Io, "sha256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << content;
    out.close();
    if (!out)
        throw Error(ErrorKind::Io, "write failed for " + path.string());
}

} // namespace

Manifest export_report(const std::vector<Artifact>& artifacts, const std::filesystem::path& dest)
{
    std::error_code ec;
    std::filesystem::create_directories(dest, ec);
    if (ec)
        throw Error(ErrorKind::Io, "cannot create " + dest.string() + ": " + ec.message());

    Manifest manifest;
    for (const auto& a : artifacts) {
        const std::string csv_text = csv::write(a.table);
        const std::string json_text = a.json.dump(2) + "\n";
        write_file(dest / (a.name + ".csv"), csv_text);
        write_file(dest / (a.name + ".json"), json_text);
        manifest.entries.push_back({a.name + ".csv", a.table.rows.size(), sha256_hex(csv_text)});
        manifest.entries.push_back({a.name + ".json", a.table.rows.size(), sha256_hex(json_text)});
    }
    write_file(dest / std::string(manifest_file_name), manifest.to_json().dump(2) + "\n");
    return manifest;
}

} // namespace uwqa
