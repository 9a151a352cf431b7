#pragma once

#include <map>
#include <string>
#include <vector>

#include "tinyplan/graph.hpp"

namespace tinyplan::detect {

struct Box {
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;  // corners, x1<=x2, y1<=y2

    double area() const { return (x2 - x1) * (y2 - y1); }
};

struct Detection {
    Box box;
    int class_id = 0;
    double score = 0.0;
};

struct GroundTruth {
    Box box;
    int class_id = 0;
};

struct Anchor {
    double cx = 0, cy = 0, w = 0, h = 0;  // normalized center format
};

struct FeatureMapSpec {
    int grid_h = 0, grid_w = 0;
    std::vector<double> scales;
    std::vector<double> aspect_ratios;
};

struct AnchorSpec {
    int image_w = 0, image_h = 0;
    double variance_center = 0.1;
    double variance_size = 0.2;
    std::vector<FeatureMapSpec> feature_maps;
};

struct FomoGrid {
    int gh = 0, gw = 0;
    int stride = 8;
    int classes = 0;                // including background at column 0
    std::vector<float> scores;      // gh*gw*classes row-major
};

struct FomoDetection {
    Detection det;
    double centroid_x = 0, centroid_y = 0;  // score-weighted cell-center mean
};

double iou(const Box& a, const Box& b);

// Row-major over the grid, scale-major over (scale, ratio) pairs per cell.
std::vector<Anchor> generate_anchors(const AnchorSpec& spec);

// raw_boxes: per anchor (dx,dy,dw,dh); raw_scores: per anchor, classes+1
// logits with background in column 0. Softmax over classes, background
// dropped, boxes clipped to the image.
std::vector<Detection> decode_ssd(const std::vector<float>& raw_boxes,
                                  const std::vector<float>& raw_scores,
                                  const std::vector<Anchor>& anchors, const AnchorSpec& spec,
                                  int num_classes);

// Greedy per-class suppression; ties broken by lower input index; final list
// truncated to top_k overall by score.
std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_thr, double score_thr,
                           int top_k);

// Threshold cells per non-background class, group 4-connected components,
// one detection per component (bounding rectangle, max score).
std::vector<FomoDetection> decode_fomo(const FomoGrid& grid, double score_thr);

struct EvalResult {
    std::map<int, double> ap_per_class;  // classes with >= 1 ground truth
    double map = 0.0;
};

// Pooled detections per class, greedy IoU matching at iou_thr, all-points
// precision-envelope AP, mAP over classes with ground truth.
EvalResult evaluate_map(const std::map<std::string, std::vector<Detection>>& dets_by_image,
                        const std::map<std::string, std::vector<GroundTruth>>& gts_by_image,
                        double iou_thr = 0.5);

// JSON-lines IO: {"image_id":..,"class_id":..,"box":[x1,y1,x2,y2],"score":..}
std::map<std::string, std::vector<Detection>> load_detections(const std::string& path);
std::map<std::string, std::vector<GroundTruth>> load_ground_truths(const std::string& path);
void save_detections(const std::string& path,
                     const std::map<std::string, std::vector<Detection>>& dets);

AnchorSpec load_anchor_spec(const std::string& path);

}  // namespace tinyplan::detect
