#include "uwqa/review_service.hpp"

#include "uwqa/error.hpp"

#include <httplib.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <set>
#include <sstream>
#include <thread>

namespace uwqa {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Decision d)
{
    return d == Decision::Accepted ? "accepted" : "rejected";
}

json verdict_json(const Verdict& v)
{
    json j{{"candidate_id", v.candidate_id},
           {"decision", to_string(v.decision)},
           {"annotator", v.annotator},
           {"timestamp", v.timestamp}};
    if (v.annotation)
        j["annotation"] = {{"class_id", v.annotation->class_id}, {"box", io::box_json(v.annotation->box)}};
    if (v.supersede)
        j["supersede"] = true;
    return j;
}

struct ReviewService::State {
    std::vector<AuditStatus> status;                        // parallel to candidates
    std::vector<std::optional<Annotation>> accepted;        // annotation of the deciding verdict
    std::map<std::pair<std::string, std::string>, Verdict> latest; // (candidate, annotator)
    std::size_t verdict_count = 0;
};

struct ReviewService::Server {
    httplib::Server http;
    std::thread thread;
};

namespace {

HttpResponse json_response(int status, const json& body)
{
    return HttpResponse{status, "application/json", body.dump()};
}

HttpResponse error_response(int status, const std::string& message)
{
    return json_response(status, json{{"error", message}});
}

struct BadVerdict : std::runtime_error {
    using std::runtime_error::runtime_error;
};

const json& member(const json& j, const char* key)
{
    if (!j.contains(key))
        throw BadVerdict(std::string("missing field '") + key + "'");
    return j.at(key);
}

std::string nonempty_string(const json& j, const char* key)
{
    const json& v = member(j, key);
    if (!v.is_string() || v.get<std::string>().empty())
        throw BadVerdict(std::string("field '") + key + "' must be a non-empty string");
    return v.get<std::string>();
}

// Everything except the candidate lookup, which the caller maps to 404.
Verdict parse_verdict(const json& j)
{
    if (!j.is_object())
        throw BadVerdict("verdict must be a JSON object");
    Verdict v;
    v.candidate_id = nonempty_string(j, "candidate_id");
    v.annotator = nonempty_string(j, "annotator");
    const std::string decision = nonempty_string(j, "decision");
    if (decision == "accepted")
        v.decision = Decision::Accepted;
    else if (decision == "rejected")
        v.decision = Decision::Rejected;
    else
        throw BadVerdict("decision must be 'accepted' or 'rejected'");
    if (j.contains("timestamp")) {
        const json& t = j["timestamp"];
        if (!t.is_number_integer() || t.get<std::int64_t>() < 0)
            throw BadVerdict("timestamp must be a non-negative integer");
        v.timestamp = t.get<std::int64_t>();
    }
    if (j.contains("supersede")) {
        if (!j["supersede"].is_boolean())
            throw BadVerdict("supersede must be a boolean");
        v.supersede = j["supersede"].get<bool>();
    }
    if (j.contains("annotation") && !j["annotation"].is_null()) {
        if (v.decision != Decision::Accepted)
            throw BadVerdict("only accepted verdicts carry an annotation");
        const json& a = j["annotation"];
        if (!a.is_object())
            throw BadVerdict("annotation must be an object");
        Annotation ann;
        const json& cls = member(a, "class_id");
        if (!cls.is_number_integer())
            throw BadVerdict("annotation.class_id must be an integer");
        ann.class_id = cls.get<ClassId>();
        try {
            ann.box = io::parse_box(member(a, "box"), io::BoxFormat::Corners, "annotation");
        } catch (const Error& e) {
            throw BadVerdict(e.what());
        }
        v.annotation = ann;
    }
    return v;
}

std::string content_type_for(const fs::path& p)
{
    std::string e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (e == ".png")
        return "image/png";
    if (e == ".jpg" || e == ".jpeg")
        return "image/jpeg";
    if (e == ".html")
        return "text/html; charset=utf-8";
    if (e == ".js" || e == ".mjs")
        return "text/javascript; charset=utf-8";
    if (e == ".css")
        return "text/css; charset=utf-8";
    if (e == ".json")
        return "application/json";
    if (e == ".svg")
        return "image/svg+xml";
    return "application/octet-stream";
}

std::optional<std::string> slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in)
        return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::optional<std::size_t> parse_size(const std::string& s)
{
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        return std::nullopt;
    return v;
}

} // namespace

ReviewService::ReviewService(ReviewServiceOptions options) : options_(std::move(options))
{
    if (!options_.clock)
        options_.clock = [] {
            return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
                .count();
        };
    for (std::size_t i = 0; i < options_.candidates.size(); ++i)
        if (!candidate_index_.emplace(options_.candidates[i].id, i).second)
            throw Error(ErrorKind::Schema, "duplicate candidate id '" + options_.candidates[i].id + "'");

    auto state = std::make_shared<State>();
    state->status.assign(options_.candidates.size(), AuditStatus::Pending);
    state->accepted.assign(options_.candidates.size(), std::nullopt);
    std::shared_ptr<const State> current = state;

    bool needs_newline = false;
    if (auto content = slurp(options_.verdict_log)) {
        needs_newline = !content->empty() && content->back() != '\n';
        std::istringstream lines(*content);
        std::string line;
        for (std::size_t n = 1; std::getline(lines, line); ++n) {
            if (line.empty())
                continue;
            try {
                const Verdict v = parse_verdict(json::parse(line));
                auto next = apply(*current, v);
                if (auto* resp = std::get_if<HttpResponse>(&next)) {
                    if (resp->status != 200)
                        throw BadVerdict(resp->body);
                    continue;
                }
                current = std::get<std::shared_ptr<const State>>(next);
                ++replayed_;
            } catch (const std::exception& e) {
                ++skipped_;
                if (options_.log)
                    options_.log(options_.verdict_log.string() + ":" + std::to_string(n) + ": skipped: " + e.what());
            }
        }
    }
    state_ = current;

    if (options_.verdict_log.has_parent_path())
        fs::create_directories(options_.verdict_log.parent_path());
    log_.open(options_.verdict_log, std::ios::app | std::ios::binary);
    if (!log_)
        throw Error(ErrorKind::Io, "cannot open verdict log " + options_.verdict_log.string());
    if (needs_newline)
        log_ << '\n' << std::flush;
}

ReviewService::~ReviewService()
{
    stop();
}

std::shared_ptr<const ReviewService::State> ReviewService::snapshot() const
{
    std::lock_guard lock(snapshot_mutex_);
    return state_;
}

std::variant<std::shared_ptr<const ReviewService::State>, HttpResponse> ReviewService::apply(const State& state,
                                                                                              const Verdict& in) const
{
    auto it = candidate_index_.find(in.candidate_id);
    if (it == candidate_index_.end())
        return error_response(404, "unknown candidate '" + in.candidate_id + "'");
    const std::size_t idx = it->second;
    const AuditCandidate& cand = options_.candidates[idx];

    Verdict v = in;
    if (v.decision == Decision::Accepted) {
        if (!v.annotation)
            v.annotation = Annotation{cand.image_id, cand.detection.class_id, cand.detection.box};
        v.annotation->image_id = cand.image_id;
        const auto& classes = options_.ground_truth.classes;
        if (!classes.empty() && std::none_of(classes.begin(), classes.end(),
                                             [&](const ClassInfo& c) { return c.id == v.annotation->class_id; }))
            return error_response(400, "unknown class_id " + std::to_string(v.annotation->class_id));
    }

    const auto key = std::make_pair(v.candidate_id, v.annotator);
    if (auto prev = state.latest.find(key); prev != state.latest.end()) {
        const Verdict& p = prev->second;
        if (p.decision == v.decision && (!v.supersede || p.annotation == v.annotation))
            return json_response(200, json{{"result", "duplicate"}, {"verdict", verdict_json(p)}});
        if (p.decision != v.decision && !v.supersede)
            return error_response(409, "annotator '" + v.annotator + "' already " + std::string(to_string(p.decision)) +
                                           " candidate '" + v.candidate_id + "'; resend with supersede=true");
    }

    auto next = std::make_shared<State>(state);
    next->latest[key] = v;
    next->status[idx] = v.decision == Decision::Accepted ? AuditStatus::Accepted : AuditStatus::Rejected;
    next->accepted[idx] = v.annotation;
    ++next->verdict_count;
    return std::shared_ptr<const State>(std::move(next));
}

HttpResponse ReviewService::post_verdict(const std::string& body) const
{
    Verdict v;
    try {
        v = parse_verdict(json::parse(body));
    } catch (const json::exception& e) {
        return error_response(400, std::string("malformed JSON: ") + e.what());
    } catch (const BadVerdict& e) {
        return error_response(400, e.what());
    }
    if (v.timestamp == 0)
        v.timestamp = options_.clock();

    std::lock_guard writer(writer_mutex_);
    auto next = apply(*snapshot(), v);
    if (auto* resp = std::get_if<HttpResponse>(&next))
        return *resp;
    auto state = std::get<std::shared_ptr<const State>>(next);
    const Verdict& stored = state->latest.at({v.candidate_id, v.annotator});
    log_ << verdict_json(stored).dump() << '\n' << std::flush;
    if (!log_)
        return error_response(500, "failed to append to the verdict log");
    {
        std::lock_guard lock(snapshot_mutex_);
        state_ = state;
    }
    const std::size_t idx = candidate_index_.at(v.candidate_id);
    return json_response(201, json{{"result", "recorded"},
                                   {"verdict", verdict_json(stored)},
                                   {"status", io::to_string(state->status[idx])}});
}

json ReviewService::candidates(const std::optional<AuditStatus>& status, std::size_t page, std::size_t page_size) const
{
    const auto state = snapshot();
    std::vector<std::size_t> selected;
    for (std::size_t i = 0; i < options_.candidates.size(); ++i)
        if (!status || state->status[i] == *status)
            selected.push_back(i);

    json items = json::array();
    const std::size_t begin = std::min(selected.size(), (page - 1) * page_size);
    const std::size_t end = std::min(selected.size(), begin + page_size);
    for (std::size_t k = begin; k < end; ++k) {
        const std::size_t i = selected[k];
        const AuditCandidate& c = options_.candidates[i];
        json item = io::candidate_json(c);
        item["status"] = io::to_string(state->status[i]);
        if (const auto* info = options_.ground_truth.find_image(c.image_id))
            item["file_name"] = info->file_name;
        json verdicts = json::array();
        for (auto it = state->latest.lower_bound({c.id, std::string()}); it != state->latest.end() && it->first.first == c.id;
             ++it)
            verdicts.push_back(verdict_json(it->second));
        item["verdicts"] = verdicts;
        items.push_back(std::move(item));
    }
    return {{"items", items}, {"total", selected.size()}, {"page", page}, {"page_size", page_size}};
}

json ReviewService::progress() const
{
    const auto state = snapshot();
    const auto zero = [] { return json{{"pending", 0}, {"accepted", 0}, {"rejected", 0}}; };
    json totals = zero();
    json by_model = json::object();
    for (std::size_t i = 0; i < options_.candidates.size(); ++i) {
        const std::string key(io::to_string(state->status[i]));
        totals[key] = totals[key].get<std::size_t>() + 1;
        json& m = by_model[options_.candidates[i].model];
        if (m.is_null())
            m = zero();
        m[key] = m[key].get<std::size_t>() + 1;
    }
    json out = totals;
    out["total"] = options_.candidates.size();
    out["verdicts"] = state->verdict_count;
    out["by_model"] = by_model;
    return out;
}

json ReviewService::corrected_ground_truth() const
{
    const auto state = snapshot();
    io::GroundTruth gt = options_.ground_truth;
    for (std::size_t i = 0; i < options_.candidates.size(); ++i) {
        if (state->status[i] != AuditStatus::Accepted || !state->accepted[i])
            continue;
        const Annotation& a = *state->accepted[i];
        if (std::find(gt.annotations.begin(), gt.annotations.end(), a) == gt.annotations.end())
            gt.annotations.push_back(a);
    }
    return io::ground_truth_json(gt);
}

HttpResponse ReviewService::image(const std::string& model, const std::string& image_id) const
{
    const auto& files = options_.layout.files;
    auto m = files.find(model);
    if (m == files.end())
        return error_response(404, "unknown model '" + model + "'");

    std::string stem = image_id;
    ImageId numeric = 0;
    auto [p, ec] = std::from_chars(image_id.data(), image_id.data() + image_id.size(), numeric);
    if (ec == std::errc() && p == image_id.data() + image_id.size())
        if (const auto* info = options_.ground_truth.find_image(numeric))
            stem = fs::path(info->file_name).stem().string();

    auto f = m->second.find(stem);
    if (f == m->second.end())
        return error_response(404, "unknown image '" + image_id + "' for model '" + model + "'");
    auto bytes = slurp(f->second);
    if (!bytes)
        return error_response(404, "cannot read " + f->second.filename().string());
    return HttpResponse{200, content_type_for(f->second), std::move(*bytes)};
}

HttpResponse ReviewService::handle(const HttpRequest& req) const
{
    try {
        const std::string& path = req.path;
        if (req.method == "GET" && path == "/api/candidates") {
            std::optional<AuditStatus> status;
            std::size_t page = 1, page_size = 50;
            if (auto it = req.query.find("status"); it != req.query.end() && !it->second.empty()) {
                try {
                    status = io::parse_status(it->second);
                } catch (const Error&) {
                    return error_response(400, "unknown status '" + it->second + "'");
                }
            }
            if (auto it = req.query.find("page"); it != req.query.end()) {
                auto v = parse_size(it->second);
                if (!v || *v == 0)
                    return error_response(400, "page must be a positive integer");
                page = *v;
            }
            if (auto it = req.query.find("page_size"); it != req.query.end()) {
                auto v = parse_size(it->second);
                if (!v || *v == 0 || *v > 1000)
                    return error_response(400, "page_size must be in [1, 1000]");
                page_size = *v;
            }
            return json_response(200, candidates(status, page, page_size));
        }
        if (req.method == "GET" && path == "/api/progress")
            return json_response(200, progress());
        if (req.method == "GET" && path == "/api/export/corrected-gt")
            return json_response(200, corrected_ground_truth());
        if (req.method == "POST" && path == "/api/verdicts")
            return post_verdict(req.body);
        if (req.method == "GET" && path.starts_with("/api/images/")) {
            const std::string rest = path.substr(std::string("/api/images/").size());
            const auto slash = rest.find('/');
            if (slash == std::string::npos || slash == 0 || slash + 1 == rest.size() ||
                rest.find('/', slash + 1) != std::string::npos)
                return error_response(404, "expected /api/images/{model}/{image-id}");
            return image(rest.substr(0, slash), rest.substr(slash + 1));
        }
        if (path.starts_with("/api/"))
            return error_response(404, "no route for " + req.method + " " + path);

        if (req.method == "GET" && options_.static_dir) {
            fs::path rel = path == "/" ? fs::path("index.html") : fs::path(path.substr(1));
            for (const auto& part : rel)
                if (part == "..")
                    return error_response(404, "not found");
            const fs::path file = *options_.static_dir / rel;
            if (fs::is_regular_file(file))
                if (auto bytes = slurp(file))
                    return HttpResponse{200, content_type_for(file), std::move(*bytes)};
        }
        return error_response(404, "not found");
    } catch (const std::exception& e) {
        return error_response(500, e.what());
    }
}

namespace {

void bridge(const ReviewService& svc, const httplib::Request& in, httplib::Response& out)
{
    HttpRequest req{in.method, in.path, {}, in.body};
    for (const auto& [k, v] : in.params)
        req.query.emplace(k, v);
    HttpResponse resp = svc.handle(req);
    out.status = resp.status;
    out.set_content(resp.body, resp.content_type);
}

} // namespace

void ReviewService::listen(const std::string& host, int port)
{
    server_ = std::make_unique<Server>();
    auto handler = [this](const httplib::Request& in, httplib::Response& out) { bridge(*this, in, out); };
    server_->http.Get(".*", handler);
    server_->http.Post(".*", handler);
    if (!server_->http.listen(host, port))
        throw Error(ErrorKind::Io, "cannot listen on " + host + ":" + std::to_string(port));
}

int ReviewService::start_background(const std::string& host)
{
    server_ = std::make_unique<Server>();
    auto handler = [this](const httplib::Request& in, httplib::Response& out) { bridge(*this, in, out); };
    server_->http.Get(".*", handler);
    server_->http.Post(".*", handler);
    const int port = server_->http.bind_to_any_port(host);
    if (port <= 0)
        throw Error(ErrorKind::Io, "cannot bind " + host);
    server_->thread = std::thread([this] { server_->http.listen_after_bind(); });
    server_->http.wait_until_ready();
    return port;
}

void ReviewService::stop()
{
    if (!server_)
        return;
    server_->http.stop();
    if (server_->thread.joinable())
        server_->thread.join();
}

} // namespace uwqa
