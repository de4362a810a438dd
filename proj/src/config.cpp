#include "uwqa/config.hpp"

#include "uwqa/error.hpp"
#include "uwqa/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

namespace uwqa {

namespace {

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<double> numbers(const std::string& value, std::size_t expected, const std::string& where)
{
    std::istringstream in(value);
    std::vector<double> out;
    std::string token;
    while (in >> token) {
        double v = 0.0;
        const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
        if (ec != std::errc{} || end != token.data() + token.size() || !std::isfinite(v))
            throw Error(ErrorKind::Config, where + ": '" + token + "' is not a number");
        out.push_back(v);
    }
    if (out.size() != expected)
        throw Error(ErrorKind::Config, where + ": expected " + std::to_string(expected) + " number(s), got " +
                                           std::to_string(out.size()));
    return out;
}

template <std::size_t N>
void assign(std::array<double, N>& dst, const std::vector<double>& src)
{
    std::copy(src.begin(), src.end(), dst.begin());
}

int as_int(double v, const std::string& where)
{
    if (v != static_cast<double>(static_cast<int>(v)))
        throw Error(ErrorKind::Config, where + ": expected an integer");
    return static_cast<int>(v);
}

using Setter = std::function<void(ToolkitConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters()
{
    static const std::map<std::string, Setter> table = {
        {"alpha_trim", [](auto& c, auto& v, auto& w) { c.metrics.alpha_trim = numbers(v, 1, w)[0]; }},
        {"blocks_k1", [](auto& c, auto& v, auto& w) { c.metrics.blocks_k1 = as_int(numbers(v, 1, w)[0], w); }},
        {"blocks_k2", [](auto& c, auto& v, auto& w) { c.metrics.blocks_k2 = as_int(numbers(v, 1, w)[0], w); }},
        {"uiqm_weights", [](auto& c, auto& v, auto& w) { assign(c.metrics.uiqm_weights, numbers(v, 3, w)); }},
        {"uicm_mean_weight", [](auto& c, auto& v, auto& w) { c.metrics.uicm_mean_weight = numbers(v, 1, w)[0]; }},
        {"uicm_variance_weight",
         [](auto& c, auto& v, auto& w) { c.metrics.uicm_variance_weight = numbers(v, 1, w)[0]; }},
        {"uism_channel_weights",
         [](auto& c, auto& v, auto& w) { assign(c.metrics.uism_channel_weights, numbers(v, 3, w)); }},
        {"uciqe_weights", [](auto& c, auto& v, auto& w) { assign(c.metrics.uciqe_weights, numbers(v, 3, w)); }},
        {"luminance_percentile",
         [](auto& c, auto& v, auto& w) { c.metrics.luminance_percentile = numbers(v, 1, w)[0]; }},
        {"lab_scale", [](auto& c, auto& v, auto& w) { c.metrics.lab_scale = numbers(v, 1, w)[0]; }},
        {"ccf_weights", [](auto& c, auto& v, auto& w) { assign(c.metrics.ccf_weights, numbers(v, 3, w)); }},
        {"ccf_colorfulness_mean_weight",
         [](auto& c, auto& v, auto& w) { c.metrics.ccf_colorfulness_mean_weight = numbers(v, 1, w)[0]; }},
        {"ccf_dark_channel_radius",
         [](auto& c, auto& v, auto& w) { c.metrics.ccf_dark_channel_radius = as_int(numbers(v, 1, w)[0], w); }},
        {"qindex_extrema_order",
         [](auto& c, auto& v, auto& w) {
             if (v == "after_replacement")
                 c.qindex.extrema_order = ExtremaOrder::AfterReplacement;
             else if (v == "before_replacement")
                 c.qindex.extrema_order = ExtremaOrder::BeforeReplacement;
             else
                 throw Error(ErrorKind::Config, w + ": expected after_replacement or before_replacement");
         }},
        {"audit_conf_min", [](auto& c, auto& v, auto& w) { c.audit.conf_min = numbers(v, 1, w)[0]; }},
        {"audit_iou_max", [](auto& c, auto& v, auto& w) { c.audit.iou_max = numbers(v, 1, w)[0]; }},
        {"audit_cluster_iou", [](auto& c, auto& v, auto& w) { c.audit.cluster_iou = numbers(v, 1, w)[0]; }},
        {"histogram_bins", [](auto& c, auto& v, auto& w) { c.histogram_bins = as_int(numbers(v, 1, w)[0], w); }},
    };
    return table;
}

std::string join(std::initializer_list<double> values)
{
    std::string out;
    for (double v : values) {
        if (!out.empty())
            out += ' ';
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out += buf;
    }
    return out;
}

} // namespace

ToolkitConfig parse_config(std::string_view text, std::string_view origin)
{
    ToolkitConfig cfg;
    std::istringstream in{std::string(text)};
    std::string line;
    for (int line_no = 1; std::getline(in, line); ++line_no) {
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        const std::string stripped = trim(line);
        if (stripped.empty())
            continue;
        const std::string where = std::string(origin) + ":" + std::to_string(line_no);
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorKind::Config, where + ": expected 'key = value'");
        const std::string key = trim(std::string_view(stripped).substr(0, eq));
        const std::string value = trim(std::string_view(stripped).substr(eq + 1));
        auto it = setters().find(key);
        if (it == setters().end())
            throw Error(ErrorKind::Config, where + ": unknown key '" + key + "'");
        it->second(cfg, value, where + " (" + key + ")");
    }
    cfg.metrics.validate();
    if (cfg.histogram_bins < 1)
        throw Error(ErrorKind::Config, std::string(origin) + ": histogram_bins must be >= 1");
    return cfg;
}

ToolkitConfig load_config(const std::filesystem::path& path)
{
    return parse_config(io::read_text(path), path.string());
}

ToolkitConfig resolve_config(const std::optional<std::filesystem::path>& explicit_path)
{
    if (explicit_path)
        return load_config(*explicit_path);
    if (const char* env = std::getenv("UWQA_CONFIG"); env != nullptr && *env != '\0')
        return load_config(env);
    return ToolkitConfig{};
}

std::string render_config(const ToolkitConfig& cfg)
{
    const auto& m = cfg.metrics;
    std::string out;
    const auto line = [&](const char* key, const std::string& value) { out += std::string(key) + " = " + value + "\n"; };
    line("alpha_trim", join({m.alpha_trim}));
    line("blocks_k1", std::to_string(m.blocks_k1));
    line("blocks_k2", std::to_string(m.blocks_k2));
    line("uiqm_weights", join({m.uiqm_weights[0], m.uiqm_weights[1], m.uiqm_weights[2]}));
    line("uicm_mean_weight", join({m.uicm_mean_weight}));
    line("uicm_variance_weight", join({m.uicm_variance_weight}));
    line("uism_channel_weights", join({m.uism_channel_weights[0], m.uism_channel_weights[1], m.uism_channel_weights[2]}));
    line("uciqe_weights", join({m.uciqe_weights[0], m.uciqe_weights[1], m.uciqe_weights[2]}));
    line("luminance_percentile", join({m.luminance_percentile}));
    line("lab_scale", join({m.lab_scale}));
    line("ccf_weights", join({m.ccf_weights[0], m.ccf_weights[1], m.ccf_weights[2]}));
    line("ccf_colorfulness_mean_weight", join({m.ccf_colorfulness_mean_weight}));
    line("ccf_dark_channel_radius", std::to_string(m.ccf_dark_channel_radius));
    line("qindex_extrema_order",
         cfg.qindex.extrema_order == ExtremaOrder::AfterReplacement ? "after_replacement" : "before_replacement");
    line("audit_conf_min", join({cfg.audit.conf_min}));
    line("audit_iou_max", join({cfg.audit.iou_max}));
    line("audit_cluster_iou", join({cfg.audit.cluster_iou}));
    line("histogram_bins", std::to_string(cfg.histogram_bins));
    return out;
}

} // namespace uwqa
