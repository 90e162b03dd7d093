#include "actionsense/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "actionsense/error.hpp"

namespace actionsense {

using nlohmann::json;

FramePrediction predict_frame(const HeadModel& model, std::span<const float> feature,
                              const std::string& video_id, int64_t frame_index) {
    if (feature.size() != static_cast<size_t>(model.config.input_dim)) {
        throw DimensionMismatch("feature has " + std::to_string(feature.size()) +
                                " dimensions, model '" + model.backbone_name + "' expects " +
                                std::to_string(model.config.input_dim));
    }
    Matrix batch(1, feature.size());
    for (size_t i = 0; i < feature.size(); ++i) batch.a[i] = static_cast<double>(feature[i]);
    const ForwardResult result = forward(model, batch, RunMode::infer, nullptr);

    FramePrediction prediction;
    prediction.video_id = video_id;
    prediction.frame_index = frame_index;
    prediction.probabilities.assign(result.probabilities.a.begin(), result.probabilities.a.end());
    size_t best = 0;
    for (size_t j = 1; j < prediction.probabilities.size(); ++j) {
        if (prediction.probabilities[j] > prediction.probabilities[best]) best = j;
    }
    prediction.predicted_index = static_cast<int>(best);
    return prediction;
}

VideoDecision decide_video(const std::string& video_id,
                           const std::vector<FramePrediction>& predictions,
                           const LabelVocabulary& vocabulary) {
    if (predictions.empty()) {
        throw EmptyFrameList("video '" + video_id + "' has no frame predictions");
    }
    const size_t num_classes = static_cast<size_t>(vocabulary.size());
    VideoDecision decision;
    decision.video_id = video_id;
    decision.vote_counts.assign(num_classes, 0);
    decision.mean_probabilities.assign(num_classes, 0.0);

    for (const auto& prediction : predictions) {
        if (prediction.probabilities.size() != num_classes) {
            throw DimensionMismatch("frame prediction for '" + video_id + "' has " +
                                    std::to_string(prediction.probabilities.size()) +
                                    " classes, vocabulary has " + std::to_string(num_classes));
        }
        if (prediction.predicted_index < 0 ||
            prediction.predicted_index >= static_cast<int>(num_classes)) {
            throw IndexOutOfRange("predicted index outside vocabulary");
        }
        decision.vote_counts[static_cast<size_t>(prediction.predicted_index)] += 1;
        for (size_t k = 0; k < num_classes; ++k) {
            decision.mean_probabilities[k] += prediction.probabilities[k];
        }
    }
    for (double& v : decision.mean_probabilities) {
        v /= static_cast<double>(predictions.size());
    }

    const int top_votes = *std::max_element(decision.vote_counts.begin(),
                                            decision.vote_counts.end());
    std::vector<size_t> tied;
    for (size_t k = 0; k < num_classes; ++k) {
        if (decision.vote_counts[k] == top_votes) tied.push_back(k);
    }
    size_t winner = tied.front();
    if (tied.size() > 1) {
        decision.tie_broken = true;
        for (size_t k : tied) {
            if (decision.mean_probabilities[k] > decision.mean_probabilities[winner]) winner = k;
        }
    }
    decision.predicted_index = static_cast<int>(winner);
    decision.predicted_label = vocabulary.name(static_cast<int>(winner));
    return decision;
}

VideoDecision classify_video(const HeadModel& model, const std::string& video_id,
                             const std::vector<std::vector<float>>& frame_features) {
    if (frame_features.empty()) {
        throw EmptyFrameList("video '" + video_id + "' has no frame features");
    }
    std::vector<FramePrediction> predictions;
    predictions.reserve(frame_features.size());
    for (size_t i = 0; i < frame_features.size(); ++i) {
        predictions.push_back(predict_frame(model, frame_features[i], video_id,
                                            static_cast<int64_t>(i)));
    }
    return decide_video(video_id, predictions, model.vocabulary);
}

std::vector<std::vector<int>> confusion_matrix(
    const std::vector<std::pair<int, int>>& true_predicted_pairs, int num_classes) {
    if (num_classes <= 0) throw ValidationError("confusion matrix needs at least one class");
    std::vector<std::vector<int>> matrix(static_cast<size_t>(num_classes),
                                         std::vector<int>(static_cast<size_t>(num_classes), 0));
    for (const auto& [truth, predicted] : true_predicted_pairs) {
        if (truth < 0 || truth >= num_classes || predicted < 0 || predicted >= num_classes) {
            throw IndexOutOfRange("class pair (" + std::to_string(truth) + "," +
                                  std::to_string(predicted) + ") outside [0," +
                                  std::to_string(num_classes) + ")");
        }
        matrix[static_cast<size_t>(truth)][static_cast<size_t>(predicted)] += 1;
    }
    return matrix;
}

MetricSummary per_class_metrics(const std::vector<std::vector<int>>& confusion) {
    const size_t num_classes = confusion.size();
    MetricSummary summary;
    summary.per_class.resize(num_classes);
    for (size_t k = 0; k < num_classes; ++k) {
        if (confusion[k].size() != num_classes) {
            throw ValidationError("confusion matrix is not square");
        }
        int row_sum = 0;
        int col_sum = 0;
        for (size_t j = 0; j < num_classes; ++j) {
            if (confusion[k][j] < 0 || confusion[j][k] < 0) {
                throw ValidationError("confusion matrix entries must be non-negative");
            }
            row_sum += confusion[k][j];
            col_sum += confusion[j][k];
        }
        const int diag = confusion[k][k];
        ClassMetrics& m = summary.per_class[k];
        m.precision = col_sum > 0 ? static_cast<double>(diag) / col_sum : 0.0;
        m.recall = row_sum > 0 ? static_cast<double>(diag) / row_sum : 0.0;
        m.f1 = (m.precision + m.recall) > 0.0
                   ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                   : 0.0;
        summary.macro.precision += m.precision;
        summary.macro.recall += m.recall;
        summary.macro.f1 += m.f1;
    }
    if (num_classes > 0) {
        summary.macro.precision /= static_cast<double>(num_classes);
        summary.macro.recall /= static_cast<double>(num_classes);
        summary.macro.f1 /= static_cast<double>(num_classes);
    }
    return summary;
}

EvaluationReport build_report(const std::string& model_name, const LabelVocabulary& vocabulary,
                              const std::vector<std::pair<int, int>>& true_predicted_pairs) {
    EvaluationReport report;
    report.model_name = model_name;
    report.vocabulary = vocabulary;
    report.confusion = confusion_matrix(true_predicted_pairs, vocabulary.size());
    report.metrics = per_class_metrics(report.confusion);
    report.n_videos = static_cast<int>(true_predicted_pairs.size());
    int trace = 0;
    for (size_t k = 0; k < report.confusion.size(); ++k) trace += report.confusion[k][k];
    report.video_accuracy =
        report.n_videos > 0 ? static_cast<double>(trace) / report.n_videos : 0.0;
    for (int k = 0; k < vocabulary.size(); ++k) {
        int row_sum = 0, col_sum = 0;
        for (int j = 0; j < vocabulary.size(); ++j) {
            row_sum += report.confusion[static_cast<size_t>(k)][static_cast<size_t>(j)];
            col_sum += report.confusion[static_cast<size_t>(j)][static_cast<size_t>(k)];
        }
        if (row_sum == 0 && col_sum == 0) {
            report.degenerate_classes.push_back(vocabulary.name(k));
        }
    }
    return report;
}

namespace {

std::string fixed(double v, int decimals) {
    char buf[32];
    snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return std::string(buf);
}

} // namespace

std::string render_report_text(const EvaluationReport& report) {
    std::ostringstream out;
    const auto& vocab = report.vocabulary;

    out << "model performance (macro averages, %)\n";
    out << "model            precision   f1-score   recall\n";
    {
        char line[128];
        snprintf(line, sizeof(line), "%-16s %-11s %-10s %s\n", report.model_name.c_str(),
                 fixed(report.metrics.macro.precision * 100.0, 1).c_str(),
                 fixed(report.metrics.macro.f1 * 100.0, 1).c_str(),
                 fixed(report.metrics.macro.recall * 100.0, 1).c_str());
        out << line;
    }
    out << "\nper-action performance\n";
    out << "action           precision   f1-score   recall\n";
    for (int k = 0; k < vocab.size(); ++k) {
        const ClassMetrics& m = report.metrics.per_class[static_cast<size_t>(k)];
        char line[128];
        snprintf(line, sizeof(line), "%-16s %-11s %-10s %s\n", vocab.name(k).c_str(),
                 fixed(m.precision, 2).c_str(), fixed(m.f1, 2).c_str(),
                 fixed(m.recall, 2).c_str());
        out << line;
    }

    out << "\nconfusion matrix (rows = true, columns = predicted)\n";
    out << "        ";
    for (int k = 0; k < vocab.size(); ++k) {
        char cell[32];
        snprintf(cell, sizeof(cell), "%8s", vocab.name(k).c_str());
        out << cell;
    }
    out << "\n";
    for (int i = 0; i < vocab.size(); ++i) {
        char head[32];
        snprintf(head, sizeof(head), "%-8s", vocab.name(i).c_str());
        out << head;
        for (int j = 0; j < vocab.size(); ++j) {
            char cell[32];
            snprintf(cell, sizeof(cell), "%8d",
                     report.confusion[static_cast<size_t>(i)][static_cast<size_t>(j)]);
            out << cell;
        }
        out << "\n";
    }

    int trace = 0;
    for (size_t k = 0; k < report.confusion.size(); ++k) trace += report.confusion[k][k];
    out << "\nvideo accuracy: " << fixed(report.video_accuracy, 4) << " (" << trace << "/"
        << report.n_videos << ")\n";
    if (!report.degenerate_classes.empty()) {
        out << "note: classes with no true or predicted videos:";
        for (const auto& name : report.degenerate_classes) out << " " << name;
        out << "\n";
    }
    return out.str();
}

std::string render_report_json(const EvaluationReport& report) {
    json per_class = json::array();
    for (int k = 0; k < report.vocabulary.size(); ++k) {
        const ClassMetrics& m = report.metrics.per_class[static_cast<size_t>(k)];
        per_class.push_back({{"label", report.vocabulary.name(k)},
                             {"precision", m.precision},
                             {"f1", m.f1},
                             {"recall", m.recall}});
    }
    json doc{{"format", "actionsense-report"},
             {"version", 1},
             {"model", report.model_name},
             {"labels", report.vocabulary.labels()},
             {"confusion", report.confusion},
             {"per_class", per_class},
             {"macro",
              {{"precision", report.metrics.macro.precision},
               {"f1", report.metrics.macro.f1},
               {"recall", report.metrics.macro.recall}}},
             {"video_accuracy", report.video_accuracy},
             {"n_videos", report.n_videos},
             {"degenerate_classes", report.degenerate_classes}};
    return doc.dump(2) + "\n";
}

EvaluationReport parse_report_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("invalid report JSON: ") + e.what());
    }
    if (doc.value("format", "") != "actionsense-report" || doc.value("version", 0) != 1) {
        throw FormatError("not an actionsense report (bad format id or version)");
    }
    EvaluationReport report;
    try {
        report.model_name = doc.at("model").get<std::string>();
        report.vocabulary = LabelVocabulary(doc.at("labels").get<std::vector<std::string>>());
        report.confusion = doc.at("confusion").get<std::vector<std::vector<int>>>();
        report.metrics.per_class.clear();
        for (const auto& entry : doc.at("per_class")) {
            ClassMetrics m;
            m.precision = entry.at("precision").get<double>();
            m.f1 = entry.at("f1").get<double>();
            m.recall = entry.at("recall").get<double>();
            report.metrics.per_class.push_back(m);
        }
        report.metrics.macro.precision = doc.at("macro").at("precision").get<double>();
        report.metrics.macro.f1 = doc.at("macro").at("f1").get<double>();
        report.metrics.macro.recall = doc.at("macro").at("recall").get<double>();
        report.video_accuracy = doc.at("video_accuracy").get<double>();
        report.n_videos = doc.at("n_videos").get<int>();
        report.degenerate_classes =
            doc.value("degenerate_classes", std::vector<std::string>{});
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed report JSON: ") + e.what());
    }
    return report;
}

std::string confusion_csv(const EvaluationReport& report) {
    std::ostringstream out;
    out << "true\\predicted";
    for (int k = 0; k < report.vocabulary.size(); ++k) out << "," << report.vocabulary.name(k);
    out << "\n";
    for (int i = 0; i < report.vocabulary.size(); ++i) {
        out << report.vocabulary.name(i);
        for (int j = 0; j < report.vocabulary.size(); ++j) {
            out << "," << report.confusion[static_cast<size_t>(i)][static_cast<size_t>(j)];
        }
        out << "\n";
    }
    return out.str();
}

} // namespace actionsense
