#include "uwqa/det_eval.hpp"

#include "uwqa/error.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <set>

namespace uwqa {

double iou(const BoundingBox& a, const BoundingBox& b)
{
    const double ix = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
    const double iy = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
    const double inter = ix * iy;
    if (inter <= 0.0)
        return 0.0;
    const double uni = a.area() + b.area() - inter;
    return std::clamp(inter / uni, 0.0, 1.0);
}

namespace {

// Indices ordered by descending confidence; equal confidences keep input order.
template <typename Confidence>
std::vector<std::size_t> confidence_order(std::size_t n, Confidence&& conf)
{
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return conf(a) > conf(b); });
    return order;
}

} // namespace

MatchResult match_detections(const std::vector<Detection>& dets, const std::vector<Annotation>& gts, double threshold)
{
    std::optional<ImageId> image;
    const auto check = [&](ImageId id) {
        if (image && *image != id)
            throw Error(ErrorKind::MixedImage, "match_detections expects records from one image");
        image = id;
    };
    for (const auto& d : dets)
        check(d.image_id);
    for (const auto& g : gts)
        check(g.image_id);

    MatchResult result;
    result.true_positive.assign(dets.size(), false);
    std::vector<bool> gt_taken(gts.size(), false);
    for (std::size_t di : confidence_order(dets.size(), [&](std::size_t i) { return dets[i].confidence; })) {
        const Detection& d = dets[di];
        double best = threshold;
        std::optional<std::size_t> best_gt;
        for (std::size_t gi = 0; gi < gts.size(); ++gi) {
            if (gt_taken[gi] || gts[gi].class_id != d.class_id)
                continue;
            const double v = iou(d.box, gts[gi].box);
            if (v >= best && (!best_gt || v > best)) {
                best = v;
                best_gt = gi;
            }
        }
        if (best_gt) {
            gt_taken[*best_gt] = true;
            result.true_positive[di] = true;
            ++result.tp;
        } else {
            ++result.fp;
        }
    }
    result.fn = gts.size() - result.tp;
    return result;
}

std::optional<double> average_precision(const std::vector<bool>& labels, std::size_t gt_count)
{
    if (gt_count == 0)
        return labels.empty() ? std::nullopt : std::optional<double>(0.0);
    if (labels.empty())
        return 0.0;

    const std::size_t n = labels.size();
    std::vector<double> precision(n), recall(n);
    std::size_t tp = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i])
            ++tp;
        precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
        recall[i] = static_cast<double>(tp) / static_cast<double>(gt_count);
    }
    for (std::size_t i = n - 1; i > 0; --i)
        precision[i - 1] = std::max(precision[i - 1], precision[i]);

    double total = 0.0;
    for (int k = 0; k <= 100; ++k) {
        const double r = k / 100.0;
        auto it = std::lower_bound(recall.begin(), recall.end(), r);
        if (it != recall.end())
            total += precision[static_cast<std::size_t>(it - recall.begin())];
    }
    return total / 101.0;
}

EvalResult map_50_95(const std::vector<Detection>& dets, const std::vector<Annotation>& gts,
                     const std::vector<ClassInfo>& classes)
{
    std::map<ClassId, std::size_t> class_slot;
    for (std::size_t i = 0; i < classes.size(); ++i)
        class_slot.emplace(classes[i].id, i);
    const auto slot_of = [&](ClassId id, const char* what) {
        auto it = class_slot.find(id);
        if (it == class_slot.end())
            throw Error(ErrorKind::UnknownClass, std::string(what) + " references undeclared class " + std::to_string(id));
        return it->second;
    };

    struct PerImage {
        std::vector<std::size_t> det_idx;
        std::vector<Detection> dets;
        std::vector<Annotation> gts;
    };
    std::map<ImageId, PerImage> images;
    for (std::size_t i = 0; i < dets.size(); ++i) {
        slot_of(dets[i].class_id, "detection");
        auto& img = images[dets[i].image_id];
        img.det_idx.push_back(i);
        img.dets.push_back(dets[i]);
    }
    for (const auto& g : gts) {
        slot_of(g.class_id, "annotation");
        images[g.image_id].gts.push_back(g);
    }

    EvalResult result;
    result.classes.resize(classes.size());
    for (std::size_t c = 0; c < classes.size(); ++c) {
        result.classes[c].class_id = classes[c].id;
        result.classes[c].name = classes[c].name;
    }
    for (const auto& g : gts)
        ++result.classes[class_slot[g.class_id]].gt_count;
    for (const auto& d : dets)
        ++result.classes[class_slot[d.class_id]].det_count;

    // Per class: detections in global confidence order (ties by input order).
    std::vector<std::vector<std::size_t>> class_order(classes.size());
    for (std::size_t i : confidence_order(dets.size(), [&](std::size_t i) { return dets[i].confidence; }))
        class_order[class_slot[dets[i].class_id]].push_back(i);

    std::vector<bool> is_tp(dets.size());
    for (std::size_t t = 0; t < iou_thresholds.size(); ++t) {
        std::fill(is_tp.begin(), is_tp.end(), false);
        for (const auto& [id, img] : images) {
            const MatchResult m = match_detections(img.dets, img.gts, iou_thresholds[t]);
            for (std::size_t k = 0; k < img.det_idx.size(); ++k)
                is_tp[img.det_idx[k]] = m.true_positive[k];
        }
        for (std::size_t c = 0; c < classes.size(); ++c) {
            ClassEval& ce = result.classes[c];
            std::vector<bool> labels;
            labels.reserve(class_order[c].size());
            for (std::size_t i : class_order[c])
                labels.push_back(is_tp[i]);
            const auto ap = average_precision(labels, ce.gt_count);
            if (ap)
                ce.ap.push_back(*ap);
            if (t == 0) {
                ce.tp50 = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
                ce.fp50 = labels.size() - ce.tp50;
                ce.fn50 = ce.gt_count - ce.tp50;
            }
        }
    }

    double total = 0.0;
    std::size_t scored = 0;
    for (auto& ce : result.classes) {
        result.tp50 += ce.tp50;
        result.fp50 += ce.fp50;
        result.fn50 += ce.fn50;
        if (ce.ap.empty())
            continue;
        ce.map = std::accumulate(ce.ap.begin(), ce.ap.end(), 0.0) / static_cast<double>(ce.ap.size());
        total += *ce.map;
        ++scored;
    }
    result.overall = scored == 0 ? 0.0 : total / static_cast<double>(scored);
    return result;
}

namespace {

struct DisjointSets {
    std::vector<std::size_t> parent;
    explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x)
    {
        while (parent[x] != x)
            x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b)
    {
        a = find(a);
        b = find(b);
        if (a != b)
            parent[std::max(a, b)] = std::min(a, b);
    }
};

} // namespace

std::vector<AuditCandidate> mine_audit_candidates(const std::map<std::string, std::vector<Detection>>& dets_by_model,
                                                  const std::vector<Annotation>& gts, const AuditOptions& options)
{
    std::map<std::pair<ImageId, ClassId>, std::vector<BoundingBox>> gt_boxes;
    for (const auto& g : gts)
        gt_boxes[{g.image_id, g.class_id}].push_back(g.box);

    // Cluster every unmatched detection; conf_min only filters members.
    std::map<std::pair<ImageId, ClassId>, std::vector<AuditMember>> unmatched;
    for (const auto& [model, dets] : dets_by_model)
        for (const auto& d : dets) {
            double best = 0.0;
            if (auto it = gt_boxes.find({d.image_id, d.class_id}); it != gt_boxes.end())
                for (const auto& box : it->second)
                    best = std::max(best, iou(d.box, box));
            if (best < options.iou_max)
                unmatched[{d.image_id, d.class_id}].push_back(AuditMember{model, d, best});
        }

    std::vector<AuditCandidate> out;
    for (const auto& [key, members] : unmatched) {
        DisjointSets sets(members.size());
        for (std::size_t i = 0; i < members.size(); ++i)
            for (std::size_t j = i + 1; j < members.size(); ++j)
                if (iou(members[i].detection.box, members[j].detection.box) >= options.cluster_iou)
                    sets.unite(i, j);

        std::map<std::size_t, std::vector<std::size_t>> clusters;
        for (std::size_t i = 0; i < members.size(); ++i)
            if (members[i].detection.confidence >= options.conf_min)
                clusters[sets.find(i)].push_back(i);

        for (const auto& [root, idx] : clusters) {
            AuditCandidate cand;
            cand.image_id = key.first;
            std::set<std::string> models;
            std::size_t rep = idx.front();
            for (std::size_t i : idx) {
                cand.members.push_back(members[i]);
                models.insert(members[i].model);
                if (members[i].detection.confidence > members[rep].detection.confidence)
                    rep = i;
            }
            cand.model = members[rep].model;
            cand.detection = members[rep].detection;
            cand.best_iou = members[rep].best_iou;
            cand.models.assign(models.begin(), models.end());
            cand.agreement = models.size();
            out.push_back(std::move(cand));
        }
    }

    std::stable_sort(out.begin(), out.end(), [](const AuditCandidate& a, const AuditCandidate& b) {
        if (a.agreement != b.agreement)
            return a.agreement > b.agreement;
        if (a.detection.confidence != b.detection.confidence)
            return a.detection.confidence > b.detection.confidence;
        if (a.image_id != b.image_id)
            return a.image_id < b.image_id;
        return a.detection.class_id < b.detection.class_id;
    });
    for (std::size_t i = 0; i < out.size(); ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "cand-%04zu", i + 1);
        out[i].id = id;
    }
    return out;
}

} // namespace uwqa
