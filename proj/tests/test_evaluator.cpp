#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "actionsense/error.hpp"
#include "actionsense/evaluator.hpp"
#include "actionsense/rng.hpp"
#include "test_util.hpp"

using namespace actionsense;

namespace {

// zero weights everywhere; output bias ln(p) makes softmax emit p exactly
HeadModel model_emitting(const std::vector<double>& probabilities, int input_dim = 4) {
    HeadConfig config;
    config.input_dim = input_dim;
    config.hidden_widths = {4, 4, 4, 4};
    config.output_dim = static_cast<int>(probabilities.size());
    config.dropout_rate = 0.0;
    config.seed = 1;
    HeadModel model = init_head(config);
    for (auto& layer : model.layers) {
        std::fill(layer.weights.begin(), layer.weights.end(), 0.0f);
        std::fill(layer.bias.begin(), layer.bias.end(), 0.0f);
    }
    for (size_t k = 0; k < probabilities.size(); ++k) {
        model.layers[4].bias[k] = static_cast<float>(std::log(probabilities[k]));
    }
    return model;
}

FramePrediction prediction_with(const std::vector<double>& probs, int64_t index = 0) {
    FramePrediction p;
    p.video_id = "v";
    p.frame_index = index;
    p.probabilities = probs;
    p.predicted_index = static_cast<int>(
        std::max_element(probs.begin(), probs.end()) - probs.begin());
    // honor the lowest-index tie rule
    for (size_t k = 0; k < probs.size(); ++k) {
        if (probs[k] == probs[static_cast<size_t>(p.predicted_index)]) {
            p.predicted_index = static_cast<int>(k);
            break;
        }
    }
    return p;
}

// independent decision oracle: count votes, then mean probabilities, then index
struct OracleDecision {
    int winner;
    bool tie;
};

OracleDecision vote_oracle(const std::vector<FramePrediction>& frames, size_t classes) {
    std::vector<int> votes(classes, 0);
    std::vector<double> means(classes, 0.0);
    for (const auto& f : frames) {
        votes[static_cast<size_t>(f.predicted_index)]++;
        for (size_t k = 0; k < classes; ++k) means[k] += f.probabilities[k];
    }
    for (auto& m : means) m /= static_cast<double>(frames.size());
    const int top = *std::max_element(votes.begin(), votes.end());
    std::vector<size_t> tied;
    for (size_t k = 0; k < classes; ++k) {
        if (votes[k] == top) tied.push_back(k);
    }
    if (tied.size() == 1) return {static_cast<int>(tied[0]), false};
    size_t best = tied[0];
    for (size_t k : tied) {
        if (means[k] > means[best]) best = k;
    }
    return {static_cast<int>(best), true};
}

std::vector<double> random_prob_row(std::mt19937_64& gen, size_t classes) {
    std::vector<double> row(classes);
    double sum = 0.0;
    for (auto& v : row) {
        v = 0.05 + uniform_unit(gen);
        sum += v;
    }
    for (auto& v : row) v /= sum;
    return row;
}

} // namespace

TEST_CASE("predict_frame takes the argmax") {
    const HeadModel model = model_emitting({0.2, 0.5, 0.3});
    const std::vector<float> feature(4, 0.0f);
    const FramePrediction p = predict_frame(model, feature, "clip", 7);
    CHECK(p.predicted_index == 1);
    CHECK(p.video_id == "clip");
    CHECK(p.frame_index == 7);
    CHECK(p.probabilities[1] == doctest::Approx(0.5).epsilon(1e-6)); // bias is float32
}

TEST_CASE("predict_frame breaks exact ties toward the lowest index") {
    const HeadModel model = model_emitting({1.0 / 3, 1.0 / 3, 1.0 / 3});
    const FramePrediction p = predict_frame(model, std::vector<float>(4, 0.0f), "clip", 0);
    CHECK(p.predicted_index == 0);
}

TEST_CASE("predict_frame names expected and actual dimensions on mismatch") {
    HeadModel model = model_emitting({0.2, 0.5, 0.3});
    model.backbone_name = "vgg16";
    CHECK_THROWS_WITH_AS(predict_frame(model, std::vector<float>(9, 0.0f), "clip", 0),
                         doctest::Contains("9"), DimensionMismatch);
}

TEST_CASE("predicted index is invariant to a constant logit shift") {
    std::mt19937_64 gen(44);
    for (int trial = 0; trial < 50; ++trial) {
        const auto row = random_prob_row(gen, 3);
        auto a = prediction_with(row);
        // adding a constant to logits rescales probabilities by a common factor
        const double factor = std::exp(uniform_range(gen, -2.0, 2.0));
        std::vector<double> shifted = row;
        double sum = 0.0;
        for (auto& v : shifted) {
            v *= factor;
            sum += v;
        }
        for (auto& v : shifted) v /= sum;
        auto b = prediction_with(shifted);
        CHECK(a.predicted_index == b.predicted_index);
    }
}

TEST_CASE("decide_video: strict majority wins without a tie flag") {
    std::vector<FramePrediction> frames = {
        prediction_with({0.6, 0.3, 0.1}, 0),
        prediction_with({0.7, 0.2, 0.1}, 30),
        prediction_with({0.1, 0.8, 0.1}, 60),
    };
    const VideoDecision d = decide_video("v", frames, LabelVocabulary::canonical());
    CHECK(d.predicted_label == "kick");
    CHECK(d.vote_counts == std::vector<int>{2, 1, 0});
    CHECK_FALSE(d.tie_broken);
    CHECK(d.mean_probabilities[0] == doctest::Approx((0.6 + 0.7 + 0.1) / 3));
}

TEST_CASE("decide_video: a single frame decides directly") {
    std::vector<FramePrediction> frames = {prediction_with({0.1, 0.2, 0.7}, 0)};
    const VideoDecision d = decide_video("v", frames, LabelVocabulary::canonical());
    CHECK(d.predicted_label == "slap");
    CHECK(d.vote_counts == std::vector<int>{0, 0, 1});
}

TEST_CASE("decide_video: vote ties fall back to the mean probability") {
    std::vector<FramePrediction> frames = {
        prediction_with({0.55, 0.35, 0.10}, 0),
        prediction_with({0.14, 0.62, 0.24}, 30),
    };
    // votes kick=1 punch=1; mean probs kick 0.345 vs punch 0.485
    const VideoDecision d = decide_video("v", frames, LabelVocabulary::canonical());
    CHECK(d.predicted_label == "punch");
    CHECK(d.tie_broken);
}

TEST_CASE("decide_video rejects empty frame lists") {
    CHECK_THROWS_AS(decide_video("v", {}, LabelVocabulary::canonical()), EmptyFrameList);
}

TEST_CASE("decide_video matches the count-then-mean oracle on random fixtures") {
    std::mt19937_64 gen(99);
    const auto& vocab = LabelVocabulary::canonical();
    for (int trial = 0; trial < 300; ++trial) {
        const size_t frames_count = 1 + uniform_below(gen, 7);
        std::vector<FramePrediction> frames;
        for (size_t i = 0; i < frames_count; ++i) {
            frames.push_back(prediction_with(random_prob_row(gen, 3), static_cast<int64_t>(i)));
        }
        const VideoDecision d = decide_video("v", frames, vocab);
        const OracleDecision expect = vote_oracle(frames, 3);
        CHECK(d.predicted_index == expect.winner);
        CHECK(d.tie_broken == expect.tie);
        int total = 0;
        for (int v : d.vote_counts) total += v;
        CHECK(total == static_cast<int>(frames_count));
    }
}

TEST_CASE("decide_video handles forced three-way ties deterministically") {
    // one vote each; class 2 has the highest mean probability
    std::vector<FramePrediction> frames = {
        prediction_with({0.40, 0.30, 0.30}, 0),
        prediction_with({0.10, 0.45, 0.45}, 1), // argmax tie -> predicted 1
        prediction_with({0.05, 0.15, 0.80}, 2),
    };
    CHECK(frames[1].predicted_index == 1);
    const VideoDecision d = decide_video("v", frames, LabelVocabulary::canonical());
    const OracleDecision expect = vote_oracle(frames, 3);
    CHECK(d.predicted_index == expect.winner);
    CHECK(d.tie_broken);
    CHECK(d.predicted_index == 2);
}

TEST_CASE("confusion_matrix tallies pairs with bounds checks") {
    std::vector<std::pair<int, int>> pairs;
    for (int cls = 0; cls < 3; ++cls) {
        for (int i = 0; i < 10; ++i) pairs.emplace_back(cls, cls);
    }
    const auto perfect = confusion_matrix(pairs, 3);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) CHECK(perfect[i][j] == (i == j ? 10 : 0));
    }
    const auto empty = confusion_matrix({}, 3);
    for (const auto& row : empty) {
        for (int v : row) CHECK(v == 0);
    }
    CHECK_THROWS_AS(confusion_matrix({{0, 5}}, 3), IndexOutOfRange);
}

TEST_CASE("confusion_matrix reproduces the worked example") {
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < 8; ++i) pairs.emplace_back(0, 0);
    pairs.emplace_back(0, 1);
    pairs.emplace_back(0, 2);
    for (int i = 0; i < 9; ++i) pairs.emplace_back(1, 1);
    pairs.emplace_back(1, 2);
    pairs.emplace_back(2, 0);
    for (int i = 0; i < 9; ++i) pairs.emplace_back(2, 2);
    const auto matrix = confusion_matrix(pairs, 3);
    CHECK(matrix == std::vector<std::vector<int>>{{8, 1, 1}, {0, 9, 1}, {1, 0, 9}});
}

TEST_CASE("per_class_metrics on the worked matrix") {
    const std::vector<std::vector<int>> m = {{8, 1, 1}, {0, 9, 1}, {1, 0, 9}};
    const MetricSummary summary = per_class_metrics(m);
    CHECK(summary.per_class[0].precision == doctest::Approx(8.0 / 9.0).epsilon(1e-9));
    CHECK(summary.per_class[0].recall == doctest::Approx(0.8).epsilon(1e-9));
    CHECK(summary.per_class[0].f1 == doctest::Approx(0.8421).epsilon(1e-3));
}

TEST_CASE("per_class_metrics degenerate cases") {
    const MetricSummary diag = per_class_metrics({{5, 0}, {0, 7}});
    CHECK(diag.macro.precision == 1.0);
    CHECK(diag.macro.recall == 1.0);
    CHECK(diag.macro.f1 == 1.0);

    // class 2 has no true and no predicted instances
    const MetricSummary with_dead = per_class_metrics({{3, 0, 0}, {0, 3, 0}, {0, 0, 0}});
    CHECK(with_dead.per_class[2].precision == 0.0);
    CHECK(with_dead.per_class[2].recall == 0.0);
    CHECK(with_dead.per_class[2].f1 == 0.0);

    // empty diagonal
    const MetricSummary off = per_class_metrics({{0, 5}, {5, 0}});
    CHECK(off.macro.precision == 0.0);
}

TEST_CASE("per_class_metrics matches a definition-level oracle on random matrices") {
    std::mt19937_64 gen(7);
    for (int trial = 0; trial < 200; ++trial) {
        const size_t k = 2 + uniform_below(gen, 4);
        std::vector<std::vector<int>> m(k, std::vector<int>(k, 0));
        for (auto& row : m) {
            for (auto& cell : row) cell = static_cast<int>(uniform_below(gen, 12));
        }
        const MetricSummary summary = per_class_metrics(m);
        double macro_p = 0.0, macro_r = 0.0, macro_f = 0.0;
        for (size_t c = 0; c < k; ++c) {
            int tp = m[c][c], fp = 0, fn = 0;
            for (size_t o = 0; o < k; ++o) {
                if (o != c) {
                    fp += m[o][c];
                    fn += m[c][o];
                }
            }
            const double p = (tp + fp) == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp);
            const double r = (tp + fn) == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn);
            const double f = (p + r) == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
            CHECK(summary.per_class[c].precision == p);
            CHECK(summary.per_class[c].recall == r);
            CHECK(summary.per_class[c].f1 == f);
            macro_p += p;
            macro_r += r;
            macro_f += f;
        }
        CHECK(summary.macro.precision == doctest::Approx(macro_p / k).epsilon(1e-12));
        CHECK(summary.macro.recall == doctest::Approx(macro_r / k).epsilon(1e-12));
        CHECK(summary.macro.f1 == doctest::Approx(macro_f / k).epsilon(1e-12));
    }
}

TEST_CASE("metrics are invariant to the order of decisions") {
    std::mt19937_64 gen(15);
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < 60; ++i) {
        pairs.emplace_back(static_cast<int>(uniform_below(gen, 3)),
                           static_cast<int>(uniform_below(gen, 3)));
    }
    auto shuffled = pairs;
    shuffle_in_place(shuffled, gen);
    CHECK(confusion_matrix(pairs, 3) == confusion_matrix(shuffled, 3));
}

TEST_CASE("build_report totals and accuracy") {
    std::vector<std::pair<int, int>> pairs = {{0, 0}, {0, 0}, {1, 1}, {2, 0}, {2, 2}};
    const EvaluationReport report =
        build_report("stub", LabelVocabulary::canonical(), pairs);
    CHECK(report.n_videos == 5);
    CHECK(report.video_accuracy == doctest::Approx(4.0 / 5.0));
    int total = 0;
    for (const auto& row : report.confusion) {
        for (int v : row) total += v;
    }
    CHECK(total == 5);
}

TEST_CASE("render_report_text prints macro percentages with one decimal") {
    EvaluationReport report;
    report.model_name = "mobilenet_v2";
    report.vocabulary = LabelVocabulary::canonical();
    report.confusion = {{10, 0, 0}, {0, 10, 0}, {0, 0, 10}};
    report.metrics.per_class = {{0.93, 0.93, 0.92}, {0.93, 0.93, 0.91}, {0.91, 0.91, 0.93}};
    report.metrics.macro = {0.923, 0.923, 0.92};
    report.video_accuracy = 0.923;
    report.n_videos = 30;
    const std::string text = render_report_text(report);
    CHECK(text.find("92.3") != std::string::npos); // macro precision as a percentage
    CHECK(text.find("92.0") != std::string::npos); // macro f1 (0.92 -> one decimal)
    CHECK(text.find("macro") != std::string::npos);
    CHECK(text.find("0.93") != std::string::npos); // per-action block, two decimals
    CHECK(text.find("kick") != std::string::npos);
    CHECK(text.find("confusion") != std::string::npos);
}

TEST_CASE("report json round trips losslessly") {
    std::vector<std::pair<int, int>> pairs = {{0, 0}, {1, 2}, {2, 2}, {1, 1}, {0, 1}};
    const EvaluationReport report =
        build_report("stub", LabelVocabulary::canonical(), pairs);
    const std::string text = render_report_json(report);
    const EvaluationReport parsed = parse_report_json(text);
    CHECK(parsed.model_name == report.model_name);
    CHECK(parsed.confusion == report.confusion);
    CHECK(parsed.video_accuracy == report.video_accuracy);
    CHECK(parsed.metrics.macro.f1 == report.metrics.macro.f1);
    CHECK(parsed.n_videos == report.n_videos);
    CHECK(render_report_text(parsed) == render_report_text(report));
}

TEST_CASE("degenerate classes are flagged in the report") {
    std::vector<std::pair<int, int>> pairs = {{0, 0}, {1, 1}, {1, 0}};
    const EvaluationReport report =
        build_report("stub", LabelVocabulary::canonical(), pairs);
    REQUIRE(report.degenerate_classes.size() == 1);
    CHECK(report.degenerate_classes[0] == "slap");
    const std::string json_text = render_report_json(report);
    CHECK(json_text.find("degenerate_classes") != std::string::npos);
    CHECK(json_text.find("slap") != std::string::npos);
}

TEST_CASE("confusion csv lists labels and counts") {
    std::vector<std::pair<int, int>> pairs = {{0, 0}, {1, 2}};
    const EvaluationReport report =
        build_report("stub", LabelVocabulary::canonical(), pairs);
    const std::string csv = confusion_csv(report);
    CHECK(csv.find("kick,1,0,0") != std::string::npos);
    CHECK(csv.find("punch,0,0,1") != std::string::npos);
}

TEST_CASE("classify_video runs the model per frame") {
    const HeadModel model = model_emitting({0.2, 0.5, 0.3});
    std::vector<std::vector<float>> frames(3, std::vector<float>(4, 0.0f));
    const VideoDecision d = classify_video(model, "clip", frames);
    CHECK(d.predicted_label == "punch");
    CHECK(d.vote_counts == std::vector<int>{0, 3, 0});
    CHECK_THROWS_AS(classify_video(model, "clip", {}), EmptyFrameList);
}
