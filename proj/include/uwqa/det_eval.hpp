#pragma once

// COCO-style detection evaluation and audit-candidate mining.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace uwqa {

using ImageId = std::int64_t;
using ClassId = std::int64_t;

struct BoundingBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;

    bool valid() const { return x_min < x_max && y_min < y_max; }
    double area() const { return (x_max - x_min) * (y_max - y_min); }
    bool operator==(const BoundingBox&) const = default;
};

struct Annotation {
    ImageId image_id = 0;
    ClassId class_id = 0;
    BoundingBox box;
    bool operator==(const Annotation&) const = default;
};

struct Detection {
    ImageId image_id = 0;
    ClassId class_id = 0;
    BoundingBox box;
    double confidence = 0.0;
    bool operator==(const Detection&) const = default;
};

double iou(const BoundingBox& a, const BoundingBox& b);

struct MatchResult {
    // Parallel to the input detections (not the confidence order).
    std::vector<bool> true_positive;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
};

// Greedy matching in descending confidence (ties by input order); each
// detection takes the unmatched same-class ground truth with the highest
// IoU >= threshold. Throws Error{MixedImage} if image ids differ.
MatchResult match_detections(const std::vector<Detection>& dets, const std::vector<Annotation>& gts, double threshold);

// 101-point interpolated AP over confidence-ordered labels (true = TP).
// nullopt when gt_count == 0 and there are no detections (class not scored).
std::optional<double> average_precision(const std::vector<bool>& labels, std::size_t gt_count);

inline constexpr std::array<double, 10> iou_thresholds{0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95};

struct ClassEval {
    ClassId class_id = 0;
    std::string name;
    std::size_t gt_count = 0;
    std::size_t det_count = 0;
    // Empty when the class is not scored (no ground truth and no detections).
    std::vector<double> ap;
    std::optional<double> map;
    std::size_t tp50 = 0;
    std::size_t fp50 = 0;
    std::size_t fn50 = 0;
};

struct EvalResult {
    std::vector<ClassEval> classes;
    double overall = 0.0;
    std::size_t tp50 = 0;
    std::size_t fp50 = 0;
    std::size_t fn50 = 0;
};

struct ClassInfo {
    ClassId id = 0;
    std::string name;
};

// Throws Error{UnknownClass} when a record uses a class outside `classes`.
EvalResult map_50_95(const std::vector<Detection>& dets, const std::vector<Annotation>& gts,
                     const std::vector<ClassInfo>& classes);

enum class AuditStatus { Pending, Accepted, Rejected };

struct AuditMember {
    std::string model;
    Detection detection;
    double best_iou = 0.0;
};

// A confident detection matched by no ground truth; detections from several
// enhancer-domain detectors that overlap are clustered into one candidate.
struct AuditCandidate {
    std::string id;
    ImageId image_id = 0;
    std::string model;      // model of the representative (highest confidence) member
    Detection detection;    // representative detection
    double best_iou = 0.0;  // representative's best IoU against same-class ground truth
    std::size_t agreement = 0; // distinct models in the cluster
    std::vector<std::string> models;
    std::vector<AuditMember> members;
    AuditStatus status = AuditStatus::Pending;
};

struct AuditOptions {
    double conf_min = 0.5;
    double iou_max = 0.5;
    double cluster_iou = 0.5;
};

// Candidates sorted by agreement (desc), confidence (desc), image, class.
std::vector<AuditCandidate> mine_audit_candidates(const std::map<std::string, std::vector<Detection>>& dets_by_model,
                                                  const std::vector<Annotation>& gts, const AuditOptions& options = {});

} // namespace uwqa
