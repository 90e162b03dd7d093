// Acceptance suite: runs every pipeline-level criterion at its stated
// tolerance and prints one PASS/FAIL line per criterion. Exits non-zero if
// any criterion fails.
//
// Usage: acceptance --cli <actionsense> --synth <actionsense-synth> [--keep]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "actionsense/backbone.hpp"
#include "actionsense/dataset.hpp"
#include "actionsense/error.hpp"
#include "actionsense/evaluator.hpp"
#include "actionsense/framepipe.hpp"
#include "actionsense/mlp_head.hpp"
#include "actionsense/rng.hpp"
#include "actionsense/trainer.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace actionsense;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

int run_command(const std::string& command, std::string* output = nullptr) {
    FILE* pipe = popen((command + " 2>&1").c_str(), "r");
    if (!pipe) return -1;
    char buffer[512];
    std::string text;
    while (fgets(buffer, sizeof(buffer), pipe)) text += buffer;
    if (output) *output = text;
    const int status = pclose(pipe);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// ---------------------------------------------------------------------------
// 1. gradient correctness
// ---------------------------------------------------------------------------

Outcome criterion_gradients() {
    const auto start = Clock::now();
    double worst = 0.0;
    for (uint64_t seed : {11ULL, 22ULL, 33ULL}) {
        HeadConfig config;
        config.input_dim = 10;
        config.hidden_widths = {8, 6, 5, 4};
        config.output_dim = 3;
        config.dropout_rate = 0.0; // dropout disabled
        config.seed = seed;
        HeadModel model = init_head(config);

        std::mt19937_64 gen(seed * 97 + 5);
        Matrix batch(4, 10);
        for (auto& v : batch.a) v = uniform_unit(gen);
        Matrix targets(4, 3);
        for (size_t i = 0; i < 4; ++i) {
            targets(i, static_cast<size_t>(uniform_below(gen, 3))) = 1.0;
        }

        const ForwardResult fwd = forward(model, batch, RunMode::train, nullptr);
        const Gradients grads = backward(model, fwd.cache, fwd.probabilities, targets);
        const auto loss_at = [&] {
            const ForwardResult f = forward(model, batch, RunMode::infer, nullptr);
            return cross_entropy_loss(f.probabilities, targets);
        };

        constexpr double h = 1e-4;
        const auto probe = [&](float& param, double analytic) {
            const float orig = param;
            param = static_cast<float>(orig + h);
            const double hi_x = static_cast<double>(param);
            const double hi = loss_at();
            param = static_cast<float>(orig - h);
            const double lo_x = static_cast<double>(param);
            const double lo = loss_at();
            param = orig;
            const double fd = (hi - lo) / (hi_x - lo_x);
            const double denom = std::max({std::abs(analytic), std::abs(fd), 1e-4});
            worst = std::max(worst, std::abs(analytic - fd) / denom);
        };
        for (int layer = 0; layer < kWeightedLayers; ++layer) {
            LayerParams& p = model.layers[static_cast<size_t>(layer)];
            const LayerGradients& lg = grads.layers[static_cast<size_t>(layer)];
            for (size_t i = 0; i < p.weights.size(); ++i) probe(p.weights[i], lg.weights.a[i]);
            for (size_t i = 0; i < p.bias.size(); ++i) probe(p.bias[i], lg.bias[i]);
        }
    }
    const double elapsed = seconds_since(start);
    std::ostringstream detail;
    detail << "max_rel_err=" << worst << " time=" << elapsed << "s";
    return {worst < 1e-4 && elapsed < 5.0, detail.str()};
}

// ---------------------------------------------------------------------------
// 2. softmax normalization on extreme logits
// ---------------------------------------------------------------------------

Outcome criterion_softmax() {
    // the identity-chain model routes arbitrary logits through the softmax:
    // x = [max(z,0), max(-z,0)], W5 = [I; -I] reconstructs z exactly
    HeadConfig config;
    config.input_dim = 6;
    config.hidden_widths = {6, 6, 6, 6};
    config.output_dim = 3;
    config.dropout_rate = 0.0;
    config.seed = 0;
    HeadModel model = init_head(config);
    for (int layer = 0; layer < 4; ++layer) {
        LayerParams& p = model.layers[static_cast<size_t>(layer)];
        std::fill(p.weights.begin(), p.weights.end(), 0.0f);
        for (int d = 0; d < 6; ++d) p.weights[static_cast<size_t>(d * 6 + d)] = 1.0f;
        std::fill(p.bias.begin(), p.bias.end(), 0.0f);
    }
    LayerParams& out = model.layers[4];
    std::fill(out.weights.begin(), out.weights.end(), 0.0f);
    for (int k = 0; k < 3; ++k) {
        out.weights[static_cast<size_t>(k * 3 + k)] = 1.0f;        // +I for positive parts
        out.weights[static_cast<size_t>((k + 3) * 3 + k)] = -1.0f; // -I for negative parts
    }
    std::fill(out.bias.begin(), out.bias.end(), 0.0f);

    std::mt19937_64 gen(424242);
    constexpr int kRows = 10000;
    constexpr int kChunk = 500;
    double worst_sum_err = 0.0;
    bool all_finite = true;
    for (int done = 0; done < kRows; done += kChunk) {
        Matrix batch(kChunk, 6);
        for (int i = 0; i < kChunk; ++i) {
            for (int k = 0; k < 3; ++k) {
                // mix moderate and extreme magnitudes up to 1e4
                const double scale = (i % 3 == 0) ? 1e4 : (i % 3 == 1 ? 1e2 : 1.0);
                const double z = uniform_range(gen, -scale, scale);
                batch(static_cast<size_t>(i), static_cast<size_t>(k)) = std::max(z, 0.0);
                batch(static_cast<size_t>(i), static_cast<size_t>(k + 3)) = std::max(-z, 0.0);
            }
        }
        const ForwardResult fwd = forward(model, batch, RunMode::infer, nullptr);
        for (size_t i = 0; i < fwd.probabilities.rows; ++i) {
            double sum = 0.0;
            for (size_t k = 0; k < 3; ++k) {
                const double p = fwd.probabilities(i, k);
                if (!std::isfinite(p)) all_finite = false;
                sum += p;
            }
            worst_sum_err = std::max(worst_sum_err, std::abs(sum - 1.0));
        }
    }
    std::ostringstream detail;
    detail << "rows=" << kRows << " worst_row_sum_err=" << worst_sum_err
           << " finite=" << (all_finite ? "yes" : "no");
    return {all_finite && worst_sum_err < 1e-6, detail.str()};
}

// ---------------------------------------------------------------------------
// 3. dropout statistics
// ---------------------------------------------------------------------------

Outcome criterion_dropout() {
    HeadConfig config;
    config.input_dim = 4;
    config.hidden_widths = {16, 4, 4, 4};
    config.output_dim = 3;
    config.dropout_rate = 0.5;
    config.seed = 7;
    const HeadModel model = init_head(config);
    Matrix batch(1, 4);
    for (size_t j = 0; j < 4; ++j) batch(0, j) = 1.0;

    constexpr int kDraws = 10000;
    const size_t width = 16;
    std::vector<int> keeps(width, 0);
    double mask_sum = 0.0;
    std::mt19937_64 rng(derive_seed(2024, SeedRole::dropout));
    for (int draw = 0; draw < kDraws; ++draw) {
        const ForwardResult fwd = forward(model, batch, RunMode::train, &rng);
        for (size_t u = 0; u < width; ++u) {
            const double m = fwd.cache.masks[0][u];
            if (m != 0.0) ++keeps[u];
            mask_sum += m;
        }
    }
    double min_freq = 1.0, max_freq = 0.0;
    for (size_t u = 0; u < width; ++u) {
        const double freq = static_cast<double>(keeps[u]) / kDraws;
        min_freq = std::min(min_freq, freq);
        max_freq = std::max(max_freq, freq);
    }
    const double mask_mean = mask_sum / (static_cast<double>(kDraws) * width);
    std::ostringstream detail;
    detail << "keep_freq=[" << min_freq << "," << max_freq << "] mask_mean=" << mask_mean;
    return {min_freq >= 0.48 && max_freq <= 0.52 && std::abs(mask_mean - 1.0) < 0.02,
            detail.str()};
}

// ---------------------------------------------------------------------------
// 4. frame-sampling oracle
// ---------------------------------------------------------------------------

class IndexStream final : public FrameStream {
public:
    explicit IndexStream(int count) : count_(count) {}
    std::optional<RawFrame> next() override {
        if (next_ >= count_) return std::nullopt;
        RawFrame frame;
        frame.width = 1;
        frame.height = 1;
        frame.data = {0, 0, 0};
        frame.frame_index = next_++;
        return frame;
    }

private:
    int count_;
    int next_ = 0;
};

Outcome criterion_sampling() {
    std::mt19937_64 gen(99);
    for (int trial = 0; trial < 500; ++trial) {
        const int n = 1 + static_cast<int>(uniform_below(gen, 400));
        const int fps = 1 + static_cast<int>(uniform_below(gen, 72));
        IndexStream stream(n);
        const std::vector<RawFrame> kept = sample_frames(stream, fps);
        std::vector<int64_t> expected;
        for (int i = 0; i < n; ++i) {
            if (i % fps == 0) expected.push_back(i);
        }
        if (kept.size() != expected.size()) {
            return {false, "count mismatch at n=" + std::to_string(n) +
                               " fps=" + std::to_string(fps)};
        }
        for (size_t i = 0; i < kept.size(); ++i) {
            if (kept[i].frame_index != expected[i]) {
                return {false, "index mismatch at n=" + std::to_string(n) +
                                   " fps=" + std::to_string(fps)};
            }
        }
    }
    IndexStream stream(90);
    const std::vector<RawFrame> kept = sample_frames(stream, 30);
    const bool case30 = kept.size() == 3 && kept[0].frame_index == 0 &&
                        kept[1].frame_index == 30 && kept[2].frame_index == 60;
    return {case30, "500 random (N,fps) pairs + 90-frame/30fps case -> {0,30,60}"};
}

// ---------------------------------------------------------------------------
// 5. majority-vote oracle
// ---------------------------------------------------------------------------

Outcome criterion_majority_vote() {
    std::mt19937_64 gen(2025);
    const auto& vocab = LabelVocabulary::canonical();

    auto random_row = [&](double temperature) {
        std::vector<double> row(3);
        double sum = 0.0;
        for (auto& v : row) {
            v = std::pow(uniform_unit(gen) + 1e-3, temperature);
            sum += v;
        }
        for (auto& v : row) v /= sum;
        return row;
    };
    auto to_prediction = [](std::vector<double> probs, int64_t index) {
        FramePrediction p;
        p.video_id = "v";
        p.frame_index = index;
        size_t best = 0;
        for (size_t k = 1; k < probs.size(); ++k) {
            if (probs[k] > probs[best]) best = k;
        }
        p.predicted_index = static_cast<int>(best);
        p.probabilities = std::move(probs);
        return p;
    };

    int ties_seen = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<FramePrediction> frames;
        const int mode = trial % 4;
        if (mode == 1) { // forced 2-way tie: one vote each for classes 0 and 1
            frames.push_back(to_prediction({0.5 + 0.2 * uniform_unit(gen), 0.2, 0.1}, 0));
            frames.push_back(to_prediction({0.1, 0.5 + 0.2 * uniform_unit(gen), 0.2}, 1));
        } else if (mode == 2) { // forced 3-way tie
            frames.push_back(to_prediction(random_row(0.3), 0));
            frames.push_back(to_prediction(random_row(0.3), 1));
            frames.push_back(to_prediction(random_row(0.3), 2));
            // re-roll until each frame votes for a distinct class
            for (int guard = 0; guard < 100; ++guard) {
                std::vector<int> votes(3, 0);
                for (auto& f : frames) votes[static_cast<size_t>(f.predicted_index)]++;
                if (votes[0] == 1 && votes[1] == 1 && votes[2] == 1) break;
                for (int k = 0; k < 3; ++k) {
                    std::vector<double> row(3, 0.1);
                    row[static_cast<size_t>(k)] = 0.5 + 0.4 * uniform_unit(gen);
                    double sum = row[0] + row[1] + row[2];
                    for (auto& v : row) v /= sum;
                    frames[static_cast<size_t>(k)] = to_prediction(row, k);
                }
            }
        } else {
            const size_t count = 1 + uniform_below(gen, 9);
            for (size_t i = 0; i < count; ++i) {
                frames.push_back(to_prediction(random_row(1.0), static_cast<int64_t>(i)));
            }
        }

        const VideoDecision decision = decide_video("v", frames, vocab);

        // independent oracle: count votes, then mean probabilities, then index
        std::vector<int> votes(3, 0);
        std::vector<double> means(3, 0.0);
        for (const auto& f : frames) {
            votes[static_cast<size_t>(f.predicted_index)]++;
            for (size_t k = 0; k < 3; ++k) means[k] += f.probabilities[k];
        }
        for (auto& m : means) m /= static_cast<double>(frames.size());
        const int top = *std::max_element(votes.begin(), votes.end());
        int winner = -1;
        bool tie = false;
        double best_mean = -1.0;
        int tied_count = 0;
        for (int k = 0; k < 3; ++k) {
            if (votes[static_cast<size_t>(k)] == top) {
                ++tied_count;
                if (means[static_cast<size_t>(k)] > best_mean) {
                    best_mean = means[static_cast<size_t>(k)];
                    winner = k;
                }
            }
        }
        tie = tied_count > 1;
        if (tie) ++ties_seen;

        if (decision.predicted_index != winner || decision.tie_broken != tie) {
            return {false, "divergence from oracle at trial " + std::to_string(trial)};
        }
        int total_votes = 0;
        for (int v : decision.vote_counts) total_votes += v;
        if (total_votes != static_cast<int>(frames.size())) {
            return {false, "vote counts do not sum to frame count"};
        }
    }
    return {ties_seen > 200, "1000 fixtures agreed, ties exercised=" + std::to_string(ties_seen)};
}

// ---------------------------------------------------------------------------
// 6. metric oracle
// ---------------------------------------------------------------------------

Outcome criterion_metrics() {
    const MetricSummary fixed = per_class_metrics({{8, 1, 1}, {0, 9, 1}, {1, 0, 9}});
    if (std::abs(fixed.per_class[0].precision - 0.8889) > 1e-4 ||
        std::abs(fixed.per_class[0].recall - 0.8000) > 1e-4 ||
        std::abs(fixed.per_class[0].f1 - 0.8421) > 1e-4) {
        return {false, "fixed matrix values off"};
    }
    std::mt19937_64 gen(31337);
    for (int trial = 0; trial < 200; ++trial) {
        const size_t k = 2 + uniform_below(gen, 5);
        std::vector<std::vector<int>> m(k, std::vector<int>(k, 0));
        for (auto& row : m) {
            for (auto& cell : row) cell = static_cast<int>(uniform_below(gen, 15));
        }
        const MetricSummary summary = per_class_metrics(m);
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
            if (summary.per_class[c].precision != p || summary.per_class[c].recall != r ||
                summary.per_class[c].f1 != f) {
                return {false, "random-matrix divergence at trial " + std::to_string(trial)};
            }
        }
    }
    return {true, "fixed matrix within 1e-4; 200 random matrices exact"};
}

// ---------------------------------------------------------------------------
// 7. separable-fixture training
// ---------------------------------------------------------------------------

Outcome criterion_training() {
    const auto start = Clock::now();
    // 300 samples, dim 64, class means 6 sigma apart, then the pipeline's
    // min-max normalization before the head
    std::mt19937_64 gen(61);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<FeatureVector> samples;
    std::vector<int> labels;
    for (int cls = 0; cls < 3; ++cls) {
        for (int i = 0; i < 100; ++i) {
            FeatureVector fv;
            fv.values.resize(64);
            for (size_t d = 0; d < 64; ++d) {
                const double mean = d == static_cast<size_t>(cls) * 4 ? 6.0 : 0.0;
                fv.values[d] = static_cast<float>(mean + noise(gen));
            }
            samples.push_back(std::move(fv));
            labels.push_back(cls);
        }
    }
    // stratified 80/20 train/val
    std::vector<FeatureVector> train_raw, val_raw;
    std::vector<int> train_labels, val_labels;
    for (size_t i = 0; i < samples.size(); ++i) {
        if (i % 5 == 4) {
            val_raw.push_back(samples[i]);
            val_labels.push_back(labels[i]);
        } else {
            train_raw.push_back(samples[i]);
            train_labels.push_back(labels[i]);
        }
    }
    const NormStats stats = fit_feature_normalizer(train_raw);
    auto pack = [&](const std::vector<FeatureVector>& raw, const std::vector<int>& y,
                    Split tag) {
        LabeledFeatures out;
        out.dim = 64;
        for (size_t i = 0; i < raw.size(); ++i) {
            const FeatureVector n = apply_feature_normalizer(stats, raw[i]);
            out.data.insert(out.data.end(), n.values.begin(), n.values.end());
            out.labels.push_back(y[i]);
            out.split_tags.push_back(tag);
        }
        return out;
    };
    const LabeledFeatures train_set = pack(train_raw, train_labels, Split::train);
    const LabeledFeatures val_set = pack(val_raw, val_labels, Split::val);

    HeadConfig head;     // defaults: 512/256/128/64 hidden, dropout 0.5
    head.input_dim = 64;
    head.seed = derive_seed(42, SeedRole::init);
    TrainConfig config;  // defaults: 200 epochs, batch 32, lr 1e-3, patience 10
    config.seed = 42;

    // keep the per-epoch progress lines off the criterion output
    std::stringstream sink;
    std::streambuf* old_cerr = std::cerr.rdbuf(sink.rdbuf());
    const TrainResult result = train(train_set, val_set, head, config);
    std::cerr.rdbuf(old_cerr);
    const double train_acc = evaluate_epoch(result.model, train_set).accuracy;
    const double val_acc = evaluate_epoch(result.model, val_set).accuracy;
    const double elapsed = seconds_since(start);
    std::ostringstream detail;
    detail << "train_acc=" << train_acc << " val_acc=" << val_acc << " epochs="
           << result.history.epochs.size() << " time=" << elapsed << "s";
    return {train_acc >= 0.99 && val_acc >= 0.95 && elapsed < 60.0 &&
                result.history.epochs.size() <= 200,
            detail.str()};
}

// ---------------------------------------------------------------------------
// 8 + 9. end-to-end synthetic pipeline, determinism, persistence
// ---------------------------------------------------------------------------

struct PipelineArtifacts {
    fs::path features;
    fs::path index;
    fs::path bundle;
    fs::path report;
    std::string report_text;
};

Outcome run_full_pipeline(const std::string& cli, const std::string& synth, const fs::path& dir,
                          PipelineArtifacts* artifacts) {
    fs::create_directories(dir);
    const std::string manifest = (dir / "data" / "manifest.jsonl").string();
    std::string out;
    if (run_command(synth + " --out " + (dir / "data").string() +
                    " --per-class 10 --seconds 3 --fps 30 --seed 9", &out) != 0) {
        return {false, "synth failed: " + out};
    }
    if (run_command(cli + " prepare --manifest " + manifest + " --seed 42", &out) != 0) {
        return {false, "prepare failed: " + out};
    }
    const std::string features = (dir / "out" / "features.afv").string();
    if (run_command(cli + " extract --manifest " + manifest + " --backbone stub --features " +
                        features + " --fps 30",
                    &out) != 0) {
        return {false, "extract failed: " + out};
    }
    const std::string bundle = (dir / "out" / "bundle").string();
    if (run_command(cli + " train --features " + features + " --model " + bundle + " --seed 42",
                    &out) != 0) {
        return {false, "train failed: " + out};
    }
    const std::string report = (dir / "out" / "report.json").string();
    std::string report_text;
    if (run_command(cli + " evaluate --features " + features + " --model " + bundle +
                        " --report " + report,
                    &report_text) != 0) {
        return {false, "evaluate failed: " + report_text};
    }
    artifacts->features = features;
    artifacts->index = features + ".index.jsonl";
    artifacts->bundle = bundle;
    artifacts->report = report;
    artifacts->report_text = report_text;
    return {true, ""};
}

Outcome criterion_end_to_end(const std::string& cli, const std::string& synth,
                             const fs::path& workdir, PipelineArtifacts* artifacts) {
    const auto start = Clock::now();
    const Outcome run = run_full_pipeline(cli, synth, workdir / "run_a", artifacts);
    if (!run.pass) return run;

    std::ifstream in(artifacts->report);
    nlohmann::json report;
    in >> report;
    const double accuracy = report.at("video_accuracy").get<double>();

    // the text output mirrors the model-row + per-action-block + confusion layout
    const std::string& text = artifacts->report_text;
    const bool layout_ok = text.find("model performance (macro averages, %)") != std::string::npos &&
                           text.find("precision   f1-score   recall") != std::string::npos &&
                           text.find("per-action performance") != std::string::npos &&
                           text.find("kick") != std::string::npos &&
                           text.find("punch") != std::string::npos &&
                           text.find("slap") != std::string::npos &&
                           text.find("confusion matrix") != std::string::npos;
    const double elapsed = seconds_since(start);
    std::ostringstream detail;
    detail << "video_accuracy=" << accuracy << " layout_ok=" << (layout_ok ? "yes" : "no")
           << " time=" << elapsed << "s";
    return {accuracy >= 0.90 && layout_ok && elapsed < 120.0, detail.str()};
}

Outcome criterion_determinism(const std::string& cli, const std::string& synth,
                              const fs::path& workdir, const PipelineArtifacts& first) {
    PipelineArtifacts second;
    const Outcome run = run_full_pipeline(cli, synth, workdir / "run_b", &second);
    if (!run.pass) return run;

    const auto same = [](const fs::path& a, const fs::path& b) {
        return testutil::read_bytes(a) == testutil::read_bytes(b);
    };
    if (!same(first.features, second.features)) return {false, "feature caches differ"};
    if (!same(first.index, second.index)) return {false, "feature indexes differ"};
    if (!same(first.bundle / "weights.bin", second.bundle / "weights.bin")) {
        return {false, "bundle weights differ"};
    }
    if (!same(first.bundle / "model.json", second.bundle / "model.json")) {
        return {false, "bundle manifests differ"};
    }
    if (!same(first.report, second.report)) return {false, "reports differ"};

    // persistence: save/load round trip is bit-identical on a fixed batch
    const HeadModel model = load_model(first.bundle);
    const fs::path copy_dir = workdir / "bundle_copy";
    save_model(model, copy_dir);
    const HeadModel reloaded = load_model(copy_dir);
    std::mt19937_64 gen(5);
    Matrix batch(8, static_cast<size_t>(model.config.input_dim));
    for (auto& v : batch.a) v = uniform_unit(gen);
    const ForwardResult a = forward(model, batch, RunMode::infer, nullptr);
    const ForwardResult b = forward(reloaded, batch, RunMode::infer, nullptr);
    if (a.probabilities.a != b.probabilities.a) {
        return {false, "round-trip predictions not bit-identical"};
    }
    return {true, "caches, bundles, reports bit-identical; round trip exact"};
}

// ---------------------------------------------------------------------------
// 10. shape contracts
// ---------------------------------------------------------------------------

Outcome criterion_shapes(const fs::path& workdir) {
    fs::create_directories(workdir);
    using testutil::onnx_model_bytes;
    using testutil::onnx_node;
    using testutil::onnx_value_info;

    const auto model_bytes = [&](const std::vector<int64_t>& out_dims) {
        return onnx_model_bytes(
            {onnx_node({.op = "Identity", .inputs = {"x"}, .outputs = {"y"}})}, {},
            {onnx_value_info("x", {1, 3, 224, 224})}, {onnx_value_info("y", out_dims)});
    };
    testutil::write_bytes(workdir / "c512.onnx", model_bytes({1, 512, 7, 7}));
    testutil::write_bytes(workdir / "c2048.onnx", model_bytes({1, 2048, 7, 7}));

    BackboneSpec vgg;
    vgg.name = "vgg16";
    vgg.model_path = workdir / "c512.onnx";
    vgg.layout = TensorLayout::nchw;
    vgg.declared_output_shape = {7, 7, 512};
    const auto vgg_handle = load_backbone(vgg);
    if (vgg_handle->flat_length() != 25088) return {false, "vgg16-class flat length wrong"};

    BackboneSpec resnet;
    resnet.name = "resnet50";
    resnet.model_path = workdir / "c2048.onnx";
    resnet.layout = TensorLayout::nchw;
    resnet.declared_output_shape = {7, 7, 2048};
    const auto resnet_handle = load_backbone(resnet);
    if (resnet_handle->flat_length() != 100352) return {false, "resnet50-class flat length wrong"};

    BackboneSpec xception = resnet;
    xception.name = "xception";
    const auto xception_handle = load_backbone(xception);
    if (xception_handle->flat_length() != 100352) {
        return {false, "xception-class flat length wrong"};
    }

    // declared (7,7,512) over a model emitting (7,7,2048) must fail
    BackboneSpec mismatched = vgg;
    mismatched.model_path = workdir / "c2048.onnx";
    bool threw = false;
    try {
        load_backbone(mismatched);
    } catch (const ShapeMismatch&) {
        threw = true;
    }
    if (!threw) return {false, "mismatched declaration did not raise ShapeMismatch"};
    return {true, "25088/100352 contracts hold; mismatch raises ShapeMismatch"};
}

} // namespace

int main(int argc, char** argv) {
    std::string cli;
    std::string synth;
    bool keep = false;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--cli" && i + 1 < argc) {
            cli = argv[++i];
        } else if (arg == "--synth" && i + 1 < argc) {
            synth = argv[++i];
        } else if (arg == "--keep") {
            keep = true;
        } else {
            std::cerr << "usage: acceptance --cli <actionsense> --synth <actionsense-synth>\n";
            return 2;
        }
    }
    if (cli.empty() && std::getenv("ACTIONSENSE_BIN")) cli = std::getenv("ACTIONSENSE_BIN");
    if (synth.empty() && std::getenv("ACTIONSENSE_SYNTH_BIN")) {
        synth = std::getenv("ACTIONSENSE_SYNTH_BIN");
    }
    if (cli.empty() || synth.empty()) {
        std::cerr << "acceptance: need --cli and --synth (or ACTIONSENSE_BIN / "
                     "ACTIONSENSE_SYNTH_BIN)\n";
        return 2;
    }

    testutil::TempDir workdir("acceptance");

    struct Criterion {
        const char* name;
        Outcome outcome;
    };
    std::vector<Criterion> results;
    PipelineArtifacts artifacts;

    results.push_back({"1 gradient-correctness", criterion_gradients()});
    results.push_back({"2 softmax-normalization", criterion_softmax()});
    results.push_back({"3 dropout-statistics", criterion_dropout()});
    results.push_back({"4 frame-sampling-oracle", criterion_sampling()});
    results.push_back({"5 majority-vote-oracle", criterion_majority_vote()});
    results.push_back({"6 metric-oracle", criterion_metrics()});
    results.push_back({"7 separable-fixture-training", criterion_training()});
    results.push_back(
        {"8 end-to-end-synthetic", criterion_end_to_end(cli, synth, workdir.path(), &artifacts)});
    results.push_back({"9 determinism-and-persistence",
                       results.back().outcome.pass
                           ? criterion_determinism(cli, synth, workdir.path(), artifacts)
                           : Outcome{false, "skipped: end-to-end run failed"}});
    results.push_back({"10 shape-contracts", criterion_shapes(workdir.path() / "shapes")});

    int failures = 0;
    for (const auto& criterion : results) {
        const bool pass = criterion.outcome.pass;
        if (!pass) ++failures;
        std::cout << (pass ? "PASS " : "FAIL ") << criterion.name;
        if (!criterion.outcome.detail.empty()) std::cout << " — " << criterion.outcome.detail;
        std::cout << "\n";
    }
    if (keep) std::cout << "artifacts kept under " << workdir.path() << "\n";
    std::cout << (failures == 0 ? "acceptance: all criteria passed\n"
                                : "acceptance: " + std::to_string(failures) + " criteria failed\n");
    return failures == 0 ? 0 : 1;
}
