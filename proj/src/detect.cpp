#include "tinyplan/detect.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <queue>

#include "json.hpp"

namespace tinyplan::detect {

using nlohmann::json;

double iou(const Box& a, const Box& b) {
    const double ix1 = std::max(a.x1, b.x1), iy1 = std::max(a.y1, b.y1);
    const double ix2 = std::min(a.x2, b.x2), iy2 = std::min(a.y2, b.y2);
    const double iw = ix2 - ix1, ih = iy2 - iy1;
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

std::vector<Anchor> generate_anchors(const AnchorSpec& spec) {
    std::vector<Anchor> out;
    for (const auto& fm : spec.feature_maps) {
        for (int i = 0; i < fm.grid_h; ++i) {
            for (int j = 0; j < fm.grid_w; ++j) {
                const double cx = (j + 0.5) / fm.grid_w;
                const double cy = (i + 0.5) / fm.grid_h;
                for (double s : fm.scales)
                    for (double r : fm.aspect_ratios) {
                        const double sq = std::sqrt(r);
                        out.push_back({cx, cy, s * sq, s / sq});
                    }
            }
        }
    }
    return out;
}

std::vector<Detection> decode_ssd(const std::vector<float>& raw_boxes,
                                  const std::vector<float>& raw_scores,
                                  const std::vector<Anchor>& anchors, const AnchorSpec& spec,
                                  int num_classes) {
    const size_t n = anchors.size();
    const size_t cols = size_t(num_classes) + 1;
    if (raw_boxes.size() != n * 4) throw DomainError("raw box count does not match anchors");
    if (raw_scores.size() != n * cols) throw DomainError("raw score count does not match anchors");

    std::vector<Detection> out;
    for (size_t a = 0; a < n; ++a) {
        const Anchor& an = anchors[a];
        const double dx = raw_boxes[a * 4 + 0], dy = raw_boxes[a * 4 + 1];
        const double dw = raw_boxes[a * 4 + 2], dh = raw_boxes[a * 4 + 3];
        const double cx = an.cx + dx * spec.variance_center * an.w;
        const double cy = an.cy + dy * spec.variance_center * an.h;
        const double w = an.w * std::exp(dw * spec.variance_size);
        const double h = an.h * std::exp(dh * spec.variance_size);
        Box b{cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2};
        b.x1 = std::clamp(b.x1, 0.0, 1.0);
        b.y1 = std::clamp(b.y1, 0.0, 1.0);
        b.x2 = std::clamp(b.x2, 0.0, 1.0);
        b.y2 = std::clamp(b.y2, 0.0, 1.0);
        b = {b.x1 * spec.image_w, b.y1 * spec.image_h, b.x2 * spec.image_w, b.y2 * spec.image_h};

        // stable softmax over background + classes
        double mx = raw_scores[a * cols];
        for (size_t c = 1; c < cols; ++c) mx = std::max(mx, double(raw_scores[a * cols + c]));
        double denom = 0.0;
        for (size_t c = 0; c < cols; ++c) denom += std::exp(double(raw_scores[a * cols + c]) - mx);
        for (int c = 0; c < num_classes; ++c) {
            const double p = std::exp(double(raw_scores[a * cols + c + 1]) - mx) / denom;
            out.push_back({b, c, p});
        }
    }
    return out;
}

std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_thr, double score_thr,
                           int top_k) {
    std::vector<size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return dets[a].score > dets[b].score; });

    std::vector<size_t> kept;
    for (size_t idx : order) {
        const Detection& d = dets[idx];
        if (d.score < score_thr) continue;
        bool keep = true;
        for (size_t k : kept) {
            if (dets[k].class_id != d.class_id) continue;
            if (iou(dets[k].box, d.box) > iou_thr) {
                keep = false;
                break;
            }
        }
        if (keep) kept.push_back(idx);
    }
    if (top_k >= 0 && int(kept.size()) > top_k) kept.resize(size_t(top_k));
    std::vector<Detection> out;
    for (size_t k : kept) out.push_back(dets[k]);
    return out;
}

std::vector<FomoDetection> decode_fomo(const FomoGrid& g, double score_thr) {
    std::vector<FomoDetection> out;
    auto score_at = [&](int i, int j, int c) -> double {
        return g.scores[(size_t(i) * g.gw + j) * g.classes + c];
    };
    for (int c = 1; c < g.classes; ++c) {  // 0 = background
        std::vector<char> hot(size_t(g.gh) * g.gw, 0);
        for (int i = 0; i < g.gh; ++i)
            for (int j = 0; j < g.gw; ++j)
                if (score_at(i, j, c) >= score_thr) hot[size_t(i) * g.gw + j] = 1;

        std::vector<char> seen(hot.size(), 0);
        for (int i = 0; i < g.gh; ++i) {
            for (int j = 0; j < g.gw; ++j) {
                if (!hot[size_t(i) * g.gw + j] || seen[size_t(i) * g.gw + j]) continue;
                // flood a 4-connected component
                std::queue<std::pair<int, int>> q;
                q.push({i, j});
                seen[size_t(i) * g.gw + j] = 1;
                int min_i = i, max_i = i, min_j = j, max_j = j;
                double best = 0.0, wsum = 0.0, cx = 0.0, cy = 0.0;
                while (!q.empty()) {
                    auto [y, x] = q.front();
                    q.pop();
                    const double s = score_at(y, x, c);
                    best = std::max(best, s);
                    wsum += s;
                    cx += s * (x + 0.5) * g.stride;
                    cy += s * (y + 0.5) * g.stride;
                    min_i = std::min(min_i, y);
                    max_i = std::max(max_i, y);
                    min_j = std::min(min_j, x);
                    max_j = std::max(max_j, x);
                    const int dy[4] = {-1, 1, 0, 0}, dx[4] = {0, 0, -1, 1};
                    for (int d = 0; d < 4; ++d) {
                        int ny = y + dy[d], nx = x + dx[d];
                        if (ny < 0 || ny >= g.gh || nx < 0 || nx >= g.gw) continue;
                        size_t off = size_t(ny) * g.gw + nx;
                        if (hot[off] && !seen[off]) {
                            seen[off] = 1;
                            q.push({ny, nx});
                        }
                    }
                }
                FomoDetection fd;
                fd.det.box = {double(min_j) * g.stride, double(min_i) * g.stride,
                              double(max_j + 1) * g.stride, double(max_i + 1) * g.stride};
                fd.det.class_id = c - 1;  // background column dropped
                fd.det.score = best;
                fd.centroid_x = cx / wsum;
                fd.centroid_y = cy / wsum;
                out.push_back(fd);
            }
        }
    }
    return out;
}

static double ap_from_matches(std::vector<std::pair<double, bool>>& scored, size_t n_gt) {
    // scored: (score, is_tp) in pooled input order
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<double> precision, recall;
    double tp = 0, fp = 0;
    for (const auto& [s, is_tp] : scored) {
        (is_tp ? tp : fp) += 1;
        precision.push_back(tp / (tp + fp));
        recall.push_back(tp / double(n_gt));
    }
    // precision envelope, all-points interpolation
    for (int i = int(precision.size()) - 2; i >= 0; --i)
        precision[size_t(i)] = std::max(precision[size_t(i)], precision[size_t(i) + 1]);
    double ap = 0.0, prev_r = 0.0;
    for (size_t i = 0; i < precision.size(); ++i) {
        ap += (recall[i] - prev_r) * precision[i];
        prev_r = recall[i];
    }
    return ap;
}

EvalResult evaluate_map(const std::map<std::string, std::vector<Detection>>& dets_by_image,
                        const std::map<std::string, std::vector<GroundTruth>>& gts_by_image,
                        double iou_thr) {
    // class universe = classes with at least one ground truth
    std::map<int, size_t> gt_count;
    for (const auto& [img, gts] : gts_by_image)
        for (const auto& gt : gts) gt_count[gt.class_id] += 1;

    EvalResult res;
    if (gt_count.empty()) return res;

    for (const auto& [cls, n_gt] : gt_count) {
        // pooled detections for this class, matched greedily per image
        struct Pooled {
            const Detection* d;
            const std::string* img;
        };
        std::vector<Pooled> pool;
        for (const auto& [img, dets] : dets_by_image)
            for (const auto& d : dets)
                if (d.class_id == cls) pool.push_back({&d, &img});
        std::stable_sort(pool.begin(), pool.end(),
                         [](const Pooled& a, const Pooled& b) { return a.d->score > b.d->score; });

        std::map<std::string, std::vector<char>> matched;
        std::vector<std::pair<double, bool>> scored;
        for (const auto& p : pool) {
            bool tp = false;
            auto git = gts_by_image.find(*p.img);
            if (git != gts_by_image.end()) {
                auto& used = matched[*p.img];
                used.resize(git->second.size(), 0);
                double best = 0.0;
                int best_i = -1;
                for (size_t i = 0; i < git->second.size(); ++i) {
                    const GroundTruth& gt = git->second[i];
                    if (gt.class_id != cls || used[i]) continue;
                    const double v = iou(p.d->box, gt.box);
                    if (v > best) {
                        best = v;
                        best_i = int(i);
                    }
                }
                if (best_i >= 0 && best >= iou_thr) {
                    used[size_t(best_i)] = 1;
                    tp = true;
                }
            }
            scored.emplace_back(p.d->score, tp);
        }
        res.ap_per_class[cls] = ap_from_matches(scored, n_gt);
    }
    double sum = 0.0;
    for (const auto& [cls, ap] : res.ap_per_class) sum += ap;
    res.map = sum / double(res.ap_per_class.size());
    return res;
}

// ---- IO ---------------------------------------------------------------------

static json parse_line(const std::string& line, const std::string& path, size_t no) {
    try {
        return json::parse(line);
    } catch (const json::exception& e) {
        throw IoError(path + ":" + std::to_string(no) + ": " + e.what());
    }
}

std::map<std::string, std::vector<Detection>> load_detections(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError(path + ": file not found");
    std::map<std::string, std::vector<Detection>> out;
    std::string line;
    size_t no = 0;
    while (std::getline(f, line)) {
        ++no;
        if (line.empty()) continue;
        json j = parse_line(line, path, no);
        Detection d;
        d.class_id = j.at("class_id").get<int>();
        d.score = j.value("score", 1.0);
        const auto& b = j.at("box");
        d.box = {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                 b.at(3).get<double>()};
        out[j.at("image_id").is_string() ? j["image_id"].get<std::string>()
                                         : j["image_id"].dump()]
            .push_back(d);
    }
    return out;
}

std::map<std::string, std::vector<GroundTruth>> load_ground_truths(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError(path + ": file not found");
    std::map<std::string, std::vector<GroundTruth>> out;
    std::string line;
    size_t no = 0;
    while (std::getline(f, line)) {
        ++no;
        if (line.empty()) continue;
        json j = parse_line(line, path, no);
        GroundTruth g;
        g.class_id = j.at("class_id").get<int>();
        const auto& b = j.at("box");
        g.box = {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                 b.at(3).get<double>()};
        out[j.at("image_id").is_string() ? j["image_id"].get<std::string>()
                                         : j["image_id"].dump()]
            .push_back(g);
    }
    return out;
}

void save_detections(const std::string& path,
                     const std::map<std::string, std::vector<Detection>>& dets) {
    std::ofstream f(path);
    if (!f) throw IoError(path + ": cannot open for writing");
    for (const auto& [img, ds] : dets)
        for (const auto& d : ds) {
            json j;
            j["image_id"] = img;
            j["class_id"] = d.class_id;
            j["box"] = {d.box.x1, d.box.y1, d.box.x2, d.box.y2};
            j["score"] = d.score;
            f << j.dump() << "\n";
        }
}

AnchorSpec load_anchor_spec(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError(path + ": file not found");
    json j;
    try {
        j = json::parse(f);
    } catch (const json::exception& e) {
        throw IoError(path + ": " + e.what());
    }
    AnchorSpec s;
    s.image_w = j.at("image_width").get<int>();
    s.image_h = j.at("image_height").get<int>();
    s.variance_center = j.at("variances").at(0).get<double>();
    s.variance_size = j.at("variances").at(1).get<double>();
    for (const auto& fm : j.at("feature_maps")) {
        FeatureMapSpec m;
        m.grid_h = fm.at("grid").at(0).get<int>();
        m.grid_w = fm.at("grid").at(1).get<int>();
        for (const auto& v : fm.at("scales")) m.scales.push_back(v.get<double>());
        for (const auto& v : fm.at("aspect_ratios")) m.aspect_ratios.push_back(v.get<double>());
        s.feature_maps.push_back(m);
    }
    return s;
}

}  // namespace tinyplan::detect
