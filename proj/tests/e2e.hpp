#pragma once

#include "support.hpp"

#include "uwqa/csv.hpp"
#include "uwqa/io.hpp"

#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

namespace testing {

inline int run_cli(const std::string& args, const std::filesystem::path& log)
{
    const std::string cmd = std::string("\"") + UWQA_CLI + "\" " + args + " >>\"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// metrics -> qindex -> map -> correlate -> audit into out/<stage>; returns the
// first failing step or an empty string.
inline std::string run_e2e(const std::filesystem::path& out)
{
    const std::string d = fixture("e2e/dataset").string();
    const std::string o = out.string();
    const std::filesystem::path log = out / "cli.log";
    std::filesystem::create_directories(out);
    const std::vector<std::pair<std::string, std::string>> steps{
        {"metrics", "--out \"" + o + "/metrics\" metrics \"" + d + "\""},
        {"qindex", "--out \"" + o + "/qindex\" --seed 7 qindex \"" + o + "/metrics/metric_table.csv\""},
        {"map", "--out \"" + o + "/map\" map --gt \"" + d + "/ground_truth.json\" \"" + d + "/detections/enh_alpha.json\" \"" +
                    d + "/detections/enh_beta.json\" \"" + d + "/detections/original.json\""},
        {"correlate", "--out \"" + o + "/correlate\" correlate \"" + o + "/metrics/model_summaries.csv\" \"" + o +
                          "/map/map_50_95.json\""},
        {"audit", "--out \"" + o + "/audit\" audit --gt \"" + d + "/ground_truth.json\" \"" + d +
                      "/detections/enh_alpha.json\" \"" + d + "/detections/enh_beta.json\""},
    };
    for (const auto& [name, args] : steps)
        if (const int rc = run_cli(args, log); rc != 0)
            return name + " exited " + std::to_string(rc) + ": " + slurp(log);
    return {};
}

inline bool numbers_close(double a, double b, double rel)
{
    return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

inline void compare_json(const nlohmann::json& a, const nlohmann::json& b, const std::string& where,
                         std::vector<std::string>& diffs)
{
    if (a.is_number() && b.is_number()) {
        if (!numbers_close(a.get<double>(), b.get<double>(), 1e-9))
            diffs.push_back(where + ": " + a.dump() + " vs " + b.dump());
        return;
    }
    if (a.type() != b.type()) {
        diffs.push_back(where + ": type differs");
        return;
    }
    if (a.is_object()) {
        if (a.size() != b.size())
            diffs.push_back(where + ": key count differs");
        for (const auto& [k, v] : a.items()) {
            if (!b.contains(k))
                diffs.push_back(where + "." + k + ": missing");
            else
                compare_json(v, b.at(k), where + "." + k, diffs);
        }
    } else if (a.is_array()) {
        if (a.size() != b.size()) {
            diffs.push_back(where + ": length " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
            return;
        }
        for (std::size_t i = 0; i < a.size(); ++i)
            compare_json(a[i], b[i], where + "[" + std::to_string(i) + "]", diffs);
    } else if (a != b) {
        diffs.push_back(where + ": " + a.dump() + " vs " + b.dump());
    }
}

// CSV cells compare exactly unless both are numbers, which may differ in the
// sixth significant digit when the full-precision value sits on a rounding edge.
inline void compare_csv(const std::string& a, const std::string& b, const std::string& where,
                        std::vector<std::string>& diffs)
{
    const auto ta = uwqa::csv::parse(a), tb = uwqa::csv::parse(b);
    if (ta.header != tb.header || ta.rows.size() != tb.rows.size()) {
        diffs.push_back(where + ": shape differs");
        return;
    }
    for (std::size_t r = 0; r < ta.rows.size(); ++r)
        for (std::size_t c = 0; c < ta.rows[r].size() && c < tb.rows[r].size(); ++c) {
            const std::string& x = ta.rows[r][c];
            const std::string& y = tb.rows[r][c];
            if (x == y)
                continue;
            char* ex = nullptr;
            char* ey = nullptr;
            const double vx = std::strtod(x.c_str(), &ex), vy = std::strtod(y.c_str(), &ey);
            if (x.empty() || y.empty() || *ex != '\0' || *ey != '\0' || !numbers_close(vx, vy, 2e-6))
                diffs.push_back(where + " row " + std::to_string(r + 1) + " col " + ta.header[c] + ": " + x + " vs " + y);
        }
}

// Every golden file under e2e/golden/<stage>/ against out/<stage>/.
inline std::vector<std::string> diff_against_goldens(const std::filesystem::path& out)
{
    std::vector<std::string> diffs;
    const auto golden = fixture("e2e/golden");
    for (const char* stage : {"metrics", "qindex", "map", "correlate", "audit"})
        for (const auto& entry : std::filesystem::directory_iterator(golden / stage)) {
            const auto rel = std::string(stage) + "/" + entry.path().filename().string();
            const auto produced = out / stage / entry.path().filename();
            if (!std::filesystem::exists(produced)) {
                diffs.push_back(rel + ": not produced");
                continue;
            }
            if (entry.path().extension() == ".json")
                compare_json(nlohmann::json::parse(slurp(produced)), nlohmann::json::parse(slurp(entry.path())), rel,
                             diffs);
            else
                compare_csv(slurp(produced), slurp(entry.path()), rel, diffs);
        }
    return diffs;
}

} // namespace testing
