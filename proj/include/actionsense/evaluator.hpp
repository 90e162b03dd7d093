#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "actionsense/dataset.hpp"
#include "actionsense/mlp_head.hpp"

namespace actionsense {

struct FramePrediction {
    std::string video_id;
    int64_t frame_index = 0;
    std::vector<double> probabilities;
    int predicted_index = 0; // argmax, lowest index on exact ties
};

struct VideoDecision {
    std::string video_id;
    std::string predicted_label;
    int predicted_index = 0;
    std::vector<int> vote_counts;           // per class, sums to frame count
    std::vector<double> mean_probabilities; // per class, over all frames
    bool tie_broken = false;
};

// Inference on a batch of one. The feature must already be normalized with
// the model's embedded stats.
FramePrediction predict_frame(const HeadModel& model, std::span<const float> feature,
                              const std::string& video_id, int64_t frame_index);

// The majority-vote rule: strictly largest vote count wins; vote ties go to
// the tied class with the highest mean probability, then the lowest index.
VideoDecision decide_video(const std::string& video_id,
                           const std::vector<FramePrediction>& predictions,
                           const LabelVocabulary& vocabulary);

VideoDecision classify_video(const HeadModel& model, const std::string& video_id,
                             const std::vector<std::vector<float>>& frame_features);

// rows = true class, columns = predicted class
std::vector<std::vector<int>> confusion_matrix(
    const std::vector<std::pair<int, int>>& true_predicted_pairs, int num_classes);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct MetricSummary {
    std::vector<ClassMetrics> per_class;
    ClassMetrics macro; // unweighted means
};

// precision = diag/colsum, recall = diag/rowsum, F1 = 2PR/(P+R); 0/0 -> 0.
MetricSummary per_class_metrics(const std::vector<std::vector<int>>& confusion);

struct EvaluationReport {
    std::string model_name; // backbone identity for the model-level row
    LabelVocabulary vocabulary;
    std::vector<std::vector<int>> confusion;
    MetricSummary metrics;
    double video_accuracy = 0.0;
    int n_videos = 0;
    std::vector<std::string> degenerate_classes; // no true and no predicted videos
};

EvaluationReport build_report(const std::string& model_name, const LabelVocabulary& vocabulary,
                              const std::vector<std::pair<int, int>>& true_predicted_pairs);

// Text layout: one model-level row of macro percentages (one decimal), then a
// per-action block (two decimals), then the confusion matrix.
std::string render_report_text(const EvaluationReport& report);
std::string render_report_json(const EvaluationReport& report);
EvaluationReport parse_report_json(const std::string& text);
std::string confusion_csv(const EvaluationReport& report);

} // namespace actionsense
