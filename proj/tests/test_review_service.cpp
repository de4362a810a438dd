#include "review_fixture.hpp"

#include "uwqa/error.hpp"
#include "uwqa/review_service.hpp"

#include <doctest.h>
#include <httplib.h>

#include <fstream>
#include <thread>

using namespace uwqa;
using nlohmann::json;

namespace {

HttpResponse get(const ReviewService& s, const std::string& path, std::map<std::string, std::string> query = {})
{
    return s.handle({"GET", path, std::move(query), ""});
}

HttpResponse post(const ReviewService& s, const std::string& body)
{
    return s.handle({"POST", "/api/verdicts", {}, body});
}

json body(const HttpResponse& r)
{
    return json::parse(r.body);
}

std::size_t line_count(const std::filesystem::path& p)
{
    std::ifstream in(p);
    std::size_t n = 0;
    for (std::string l; std::getline(in, l);)
        n += !l.empty();
    return n;
}

} // namespace

TEST_SUITE("review_service") {

TEST_CASE("progress follows verdicts")
{
    testing::TempDir dir("review");
    ReviewService s(testing::review_options(dir / "verdicts.jsonl"));
    json p = body(get(s, "/api/progress"));
    CHECK(p["pending"] == 5);
    CHECK(p["total"] == 5);
    CHECK(p["verdicts"] == 0);

    HttpResponse r = post(s, testing::verdict_body("cand-0001", "accepted", "ana"));
    CHECK(r.status == 201);
    CHECK(body(r)["status"] == "accepted");
    p = body(get(s, "/api/progress"));
    CHECK(p["accepted"] == 1);
    CHECK(p["pending"] == 4);
    CHECK(p["by_model"]["enh_alpha"]["accepted"] == 1);

    r = post(s, testing::verdict_body("cand-0002", "rejected", "ana"));
    CHECK(r.status == 201);
    p = body(get(s, "/api/progress"));
    CHECK(p["rejected"] == 1);
    CHECK(p["verdicts"] == 2);
}

TEST_CASE("verdict validation")
{
    testing::TempDir dir("review-bad");
    ReviewService s(testing::review_options(dir / "verdicts.jsonl"));
    CHECK(post(s, "{not json").status == 400);
    CHECK(post(s, "[]").status == 400);
    CHECK(post(s, R"({"candidate_id":"cand-0001","decision":"accepted"})").status == 400);
    CHECK(post(s, R"({"candidate_id":"cand-0001","decision":"maybe","annotator":"a"})").status == 400);
    CHECK(post(s, R"({"candidate_id":"cand-0001","decision":"rejected","annotator":"a",
                      "annotation":{"class_id":1,"box":[0,0,1,1]}})")
              .status == 400);
    CHECK(post(s, R"({"candidate_id":"cand-0001","decision":"accepted","annotator":"a",
                      "annotation":{"class_id":1,"box":[5,5,1,1]}})")
              .status == 400);
    CHECK(post(s, R"({"candidate_id":"cand-0001","decision":"accepted","annotator":"a",
                      "annotation":{"class_id":42,"box":[0,0,1,1]}})")
              .status == 400);
    CHECK(post(s, R"({"candidate_id":"cand-0001","decision":"accepted","annotator":"a","timestamp":-3})").status ==
          400);
    const HttpResponse missing = post(s, testing::verdict_body("cand-9999", "accepted", "a"));
    CHECK(missing.status == 404);
    CHECK(body(missing)["error"].get<std::string>().find("cand-9999") != std::string::npos);
    CHECK(line_count(dir / "verdicts.jsonl") == 0);
    CHECK(body(get(s, "/api/progress"))["verdicts"] == 0);
}

TEST_CASE("conflicts, duplicates and supersede")
{
    testing::TempDir dir("review-conflict");
    ReviewService s(testing::review_options(dir / "verdicts.jsonl"));
    CHECK(post(s, testing::verdict_body("cand-0003", "accepted", "ana")).status == 201);
    const HttpResponse dup = post(s, testing::verdict_body("cand-0003", "accepted", "ana"));
    CHECK(dup.status == 200);
    CHECK(body(dup)["result"] == "duplicate");
    CHECK(line_count(dir / "verdicts.jsonl") == 1);

    const HttpResponse conflict = post(s, testing::verdict_body("cand-0003", "rejected", "ana"));
    CHECK(conflict.status == 409);
    CHECK(body(get(s, "/api/progress"))["accepted"] == 1);

    // another annotator is independent
    CHECK(post(s, testing::verdict_body("cand-0003", "rejected", "ben")).status == 201);
    CHECK(post(s, testing::verdict_body("cand-0003", "accepted", "ana", true)).status == 200);
    CHECK(post(s, testing::verdict_body("cand-0003", "rejected", "ana", true)).status == 201);
    CHECK(body(get(s, "/api/progress"))["rejected"] == 1);
    CHECK(post(s, testing::verdict_body("cand-0003", "accepted", "ana", true)).status == 201);
    CHECK(body(get(s, "/api/progress"))["accepted"] == 1);
    CHECK(line_count(dir / "verdicts.jsonl") == 4);

    // a corrected box supersedes the earlier acceptance
    CHECK(post(s, R"({"candidate_id":"cand-0004","decision":"accepted","annotator":"ana"})").status == 201);
    const std::string moved = R"({"candidate_id":"cand-0004","decision":"accepted","annotator":"ana","supersede":true,
                                 "annotation":{"class_id":2,"box":[1,1,9,9]}})";
    CHECK(post(s, moved).status == 201);
    CHECK(post(s, moved).status == 200);
    const json gt = s.corrected_ground_truth();
    bool found = false;
    for (const auto& a : gt["annotations"])
        found |= a["image_id"] == 4 && a["class_id"] == 2 && a["box"] == json::array({1, 1, 9, 9});
    CHECK(found);

    const json progress = body(get(s, "/api/progress"));
    ReviewService again(testing::review_options(dir / "verdicts.jsonl"));
    CHECK(again.log_lines_skipped() == 0);
    CHECK(again.verdicts_replayed() == line_count(dir / "verdicts.jsonl"));
    CHECK(body(get(again, "/api/progress")) == progress);
    CHECK(again.corrected_ground_truth() == gt);
}

TEST_CASE("corrected ground truth adds accepted annotations once")
{
    testing::TempDir dir("review-gt");
    ReviewService s(testing::review_options(dir / "verdicts.jsonl"));
    const auto base = io::load_ground_truth(testing::fixture("e2e/dataset/ground_truth.json"));
    CHECK(body(get(s, "/api/export/corrected-gt"))["annotations"].size() == base.annotations.size());

    CHECK(post(s, testing::verdict_body("cand-0002", "accepted", "ana")).status == 201);
    CHECK(post(s, testing::verdict_body("cand-0002", "accepted", "ben")).status == 201);
    CHECK(post(s, testing::verdict_body("cand-0005", "rejected", "ana")).status == 201);
    const io::GroundTruth corrected = io::parse_ground_truth(body(get(s, "/api/export/corrected-gt")));
    REQUIRE(corrected.annotations.size() == base.annotations.size() + 1);
    const Annotation& added = corrected.annotations.back();
    CHECK(added.image_id == 2);
    CHECK(added.class_id == 1);
    CHECK(added.box == testing::review_candidates()[1].detection.box);
    CHECK(corrected.classes.size() == base.classes.size());
    CHECK(corrected.images.size() == base.images.size());
}

TEST_CASE("verdicts survive a restart")
{
    testing::TempDir dir("review-restart");
    json before_progress, before_candidates, before_gt;
    {
        ReviewService s(testing::review_options(dir / "verdicts.jsonl"));
        const char* annotators[] = {"ana", "ben"};
        int recorded = 0;
        for (int i = 0; i < 10; ++i) {
            const std::string cand = "cand-000" + std::to_string(1 + i % 5);
            const std::string decision = (i * 7) % 3 ? "accepted" : "rejected";
            recorded += post(s, testing::verdict_body(cand, decision, annotators[i / 5])).status == 201;
        }
        CHECK(recorded == 10);
        before_progress = body(get(s, "/api/progress"));
        before_candidates = body(get(s, "/api/candidates", {{"page_size", "100"}}));
        before_gt = body(get(s, "/api/export/corrected-gt"));
    }
    CHECK(line_count(dir / "verdicts.jsonl") == 10);
    ReviewService again(testing::review_options(dir / "verdicts.jsonl"));
    CHECK(again.verdicts_replayed() == 10);
    CHECK(again.log_lines_skipped() == 0);
    CHECK(body(get(again, "/api/progress")) == before_progress);
    CHECK(body(get(again, "/api/candidates", {{"page_size", "100"}})) == before_candidates);
    CHECK(body(get(again, "/api/export/corrected-gt")) == before_gt);
}

TEST_CASE("a torn final log line is skipped and repaired")
{
    testing::TempDir dir("review-torn");
    {
        ReviewService s(testing::review_options(dir / "verdicts.jsonl"));
        CHECK(post(s, testing::verdict_body("cand-0001", "accepted", "ana")).status == 201);
        CHECK(post(s, testing::verdict_body("cand-0002", "accepted", "ana")).status == 201);
    }
    std::string text = testing::slurp(dir / "verdicts.jsonl");
    text.resize(text.size() - 12);
    io::write_text(dir / "verdicts.jsonl", text);

    std::vector<std::string> logged;
    auto options = testing::review_options(dir / "verdicts.jsonl");
    options.log = [&](const std::string& s) { logged.push_back(s); };
    {
        ReviewService s(options);
        CHECK(s.verdicts_replayed() == 1);
        CHECK(s.log_lines_skipped() == 1);
        CHECK(logged.size() == 1);
        CHECK(body(get(s, "/api/progress"))["accepted"] == 1);
        CHECK(post(s, testing::verdict_body("cand-0003", "rejected", "ana")).status == 201);
    }
    ReviewService third(testing::review_options(dir / "verdicts.jsonl"));
    CHECK(third.verdicts_replayed() == 2);
    CHECK(third.log_lines_skipped() == 1);
}

TEST_CASE("candidate listing and paging")
{
    testing::TempDir dir("review-page");
    ReviewService s(testing::review_options(dir / "verdicts.jsonl"));
    json page = body(get(s, "/api/candidates", {{"page", "2"}, {"page_size", "2"}}));
    CHECK(page["total"] == 5);
    REQUIRE(page["items"].size() == 2);
    CHECK(page["items"][0]["id"] == "cand-0003");
    CHECK(page["items"][0]["status"] == "pending");
    CHECK(page["items"][0]["file_name"] == "img03.png");
    CHECK(body(get(s, "/api/candidates", {{"page", "3"}, {"page_size", "2"}}))["items"].size() == 1);
    CHECK(body(get(s, "/api/candidates", {{"page", "4"}, {"page_size", "2"}}))["items"].empty());

    CHECK(post(s, testing::verdict_body("cand-0004", "rejected", "ana")).status == 201);
    page = body(get(s, "/api/candidates", {{"status", "rejected"}}));
    REQUIRE(page["items"].size() == 1);
    CHECK(page["items"][0]["id"] == "cand-0004");
    CHECK(page["items"][0]["verdicts"].size() == 1);
    CHECK(body(get(s, "/api/candidates", {{"status", "pending"}}))["total"] == 4);

    CHECK(get(s, "/api/candidates", {{"page", "0"}}).status == 400);
    CHECK(get(s, "/api/candidates", {{"page_size", "1001"}}).status == 400);
    CHECK(get(s, "/api/candidates", {{"page_size", "x"}}).status == 400);
    CHECK(get(s, "/api/candidates", {{"status", "lost"}}).status == 400);
    CHECK(get(s, "/api/nothing").status == 404);
    CHECK(s.handle({"DELETE", "/api/verdicts", {}, ""}).status == 404);
}

TEST_CASE("image bytes and content types")
{
    testing::TempDir dir("review-img");
    ReviewService s(testing::review_options(dir / "verdicts.jsonl"));
    const auto expected = testing::slurp(testing::fixture("e2e/dataset/enh_beta/img02.png"));
    HttpResponse r = get(s, "/api/images/enh_beta/img02");
    CHECK(r.status == 200);
    CHECK(r.content_type == "image/png");
    CHECK(r.body == expected);
    r = get(s, "/api/images/enh_beta/2");
    CHECK(r.status == 200);
    CHECK(r.body == expected);
    CHECK(get(s, "/api/images/enh_gamma/img02").status == 404);
    CHECK(get(s, "/api/images/enh_beta/img99").status == 404);
    CHECK(get(s, "/api/images/enh_beta").status == 404);
}

TEST_CASE("static files")
{
    testing::TempDir dir("review-static");
    std::filesystem::create_directories(dir / "ui");
    io::write_text(dir / "ui/index.html", "<html></html>");
    io::write_text(dir / "secret.txt", "no");
    auto options = testing::review_options(dir / "verdicts.jsonl");
    options.static_dir = dir / "ui";
    ReviewService s(options);
    const HttpResponse r = get(s, "/");
    CHECK(r.status == 200);
    CHECK(r.content_type.starts_with("text/html"));
    CHECK(get(s, "/../secret.txt").status == 404);
    CHECK(get(s, "/missing.js").status == 404);
}

TEST_CASE("duplicate candidate ids are rejected")
{
    testing::TempDir dir("review-dup");
    auto options = testing::review_options(dir / "verdicts.jsonl");
    options.candidates.push_back(options.candidates.front());
    CHECK_THROWS_AS(ReviewService{options}, uwqa::Error);
}

TEST_CASE("concurrent verdicts are all recorded")
{
    testing::TempDir dir("review-threads");
    ReviewService s(testing::review_options(dir / "verdicts.jsonl"));
    std::atomic<int> created{0};
    {
        std::vector<std::jthread> pool;
        for (int t = 0; t < 8; ++t)
            pool.emplace_back([&, t] {
                for (int c = 1; c <= 5; ++c)
                    if (post(s, testing::verdict_body("cand-000" + std::to_string(c), "accepted", "a" + std::to_string(t)))
                            .status == 201)
                        ++created;
            });
    }
    CHECK(created == 40);
    CHECK(line_count(dir / "verdicts.jsonl") == 40);
    CHECK(body(get(s, "/api/progress"))["verdicts"] == 40);
    ReviewService again(testing::review_options(dir / "verdicts.jsonl"));
    CHECK(again.verdicts_replayed() == 40);
}

TEST_CASE("serves over HTTP")
{
    testing::TempDir dir("review-http");
    ReviewService s(testing::review_options(dir / "verdicts.jsonl"));
    const int port = s.start_background("127.0.0.1");
    REQUIRE(port > 0);
    httplib::Client client("127.0.0.1", port);
    auto res = client.Get("/api/progress");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(json::parse(res->body)["pending"] == 5);

    res = client.Post("/api/verdicts", testing::verdict_body("cand-0001", "accepted", "ana"), "application/json");
    REQUIRE(res);
    CHECK(res->status == 201);
    res = client.Get("/api/candidates?status=accepted&page_size=5");
    REQUIRE(res);
    CHECK(json::parse(res->body)["total"] == 1);
    res = client.Get("/api/images/original/img01");
    REQUIRE(res);
    CHECK(res->get_header_value("Content-Type") == "image/png");
    s.stop();
}

}
