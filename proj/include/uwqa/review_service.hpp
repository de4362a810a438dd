#pragma once

// HTTP review service for audit candidates. Verdicts are appended to a JSONL
// log which is replayed on start; request handling is exposed through
// ReviewService::handle so it can be driven without a socket.

#include "uwqa/det_eval.hpp"
#include "uwqa/io.hpp"
#include "uwqa/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace uwqa {

enum class Decision { Accepted, Rejected };

std::string_view to_string(Decision d);

struct Verdict {
    std::string candidate_id;
    Decision decision = Decision::Rejected;
    std::string annotator;
    std::int64_t timestamp = 0; // UTC seconds
    std::optional<Annotation> annotation; // set iff accepted
    bool supersede = false;

    bool operator==(const Verdict&) const = default;
};

nlohmann::json verdict_json(const Verdict& v);

struct HttpRequest {
    std::string method;
    std::string path;
    std::map<std::string, std::string> query;
    std::string body;
};

struct HttpResponse {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

struct ReviewServiceOptions {
    DatasetLayout layout;
    io::GroundTruth ground_truth;
    std::vector<AuditCandidate> candidates;
    std::filesystem::path verdict_log;
    std::optional<std::filesystem::path> static_dir;
    std::function<std::int64_t()> clock; // defaults to system_clock
    LogSink log;
};

class ReviewService {
public:
    explicit ReviewService(ReviewServiceOptions options);
    ~ReviewService();

    ReviewService(const ReviewService&) = delete;
    ReviewService& operator=(const ReviewService&) = delete;

    HttpResponse handle(const HttpRequest& request) const;

    nlohmann::json candidates(const std::optional<AuditStatus>& status, std::size_t page, std::size_t page_size) const;
    nlohmann::json progress() const;
    nlohmann::json corrected_ground_truth() const;
    HttpResponse post_verdict(const std::string& body) const;
    HttpResponse image(const std::string& model, const std::string& image_id) const;

    std::size_t verdicts_replayed() const { return replayed_; }
    std::size_t log_lines_skipped() const { return skipped_; }

    // Blocks until stop() is called from another thread.
    void listen(const std::string& host, int port);
    // Binds to an ephemeral port; returns the port and serves on a background thread.
    int start_background(const std::string& host);
    void stop();

private:
    struct State;
    struct Server;

    std::shared_ptr<const State> snapshot() const;
    // Returns the new state, or an error response.
    std::variant<std::shared_ptr<const State>, HttpResponse> apply(const State& state, const Verdict& v) const;

    ReviewServiceOptions options_;
    std::map<std::string, std::size_t> candidate_index_;
    mutable std::mutex snapshot_mutex_;
    mutable std::mutex writer_mutex_;
    mutable std::shared_ptr<const State> state_;
    mutable std::ofstream log_;
    std::size_t replayed_ = 0;
    std::size_t skipped_ = 0;
    std::unique_ptr<Server> server_;
};

} // namespace uwqa
