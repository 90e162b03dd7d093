#include "actionsense/framepipe.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "actionsense/error.hpp"
#include "actionsense/image_io.hpp"

namespace actionsense {

namespace fs = std::filesystem;

std::string render_decoder_command(const std::string& command_template, const std::string& input,
                                   int fps, int width, int height) {
    auto replace_all = [](std::string s, const std::string& from, const std::string& to) {
        size_t pos = 0;
        while ((pos = s.find(from, pos)) != std::string::npos) {
            s.replace(pos, from.size(), to);
            pos += to.size();
        }
        return s;
    };
    std::string cmd = command_template;
    cmd = replace_all(cmd, "{input}", input);
    cmd = replace_all(cmd, "{fps}", std::to_string(fps));
    cmd = replace_all(cmd, "{width}", std::to_string(width));
    cmd = replace_all(cmd, "{height}", std::to_string(height));
    return cmd;
}

namespace {

// Already-decoded stream: numbered image files, lexicographic order,
// resampled from the source rate to the target rate by index mapping.
class DirectoryFrameStream final : public FrameStream {
public:
    DirectoryFrameStream(const fs::path& dir, int source_fps, int target_fps)
        : source_fps_(source_fps), target_fps_(target_fps) {
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (!entry.is_regular_file()) continue;
            if (entry.path().extension() == ".ppm") files_.push_back(entry.path());
        }
        std::sort(files_.begin(), files_.end());
        if (files_.empty()) {
            throw EmptyStream("no frames found in directory: " + dir.string());
        }
        out_count_ = source_fps_ == target_fps_
                         ? files_.size()
                         : files_.size() * static_cast<size_t>(target_fps_) /
                               static_cast<size_t>(source_fps_);
        if (out_count_ == 0) {
            throw EmptyStream("resampling " + dir.string() + " from " +
                              std::to_string(source_fps_) + " to " + std::to_string(target_fps_) +
                              "fps leaves no frames");
        }
    }

    std::optional<RawFrame> next() override {
        if (next_out_ >= out_count_) return std::nullopt;
        const size_t src = source_fps_ == target_fps_
                               ? next_out_
                               : next_out_ * static_cast<size_t>(source_fps_) /
                                     static_cast<size_t>(target_fps_);
        RawFrame frame = read_ppm(files_[src]);
        frame.frame_index = static_cast<int64_t>(next_out_);
        ++next_out_;
        return frame;
    }

private:
    std::vector<fs::path> files_;
    int source_fps_;
    int target_fps_;
    size_t out_count_ = 0;
    size_t next_out_ = 0;
};

// Pulls raw RGB24 frames from the external decoder's stdout.
class SubprocessFrameStream final : public FrameStream {
public:
    SubprocessFrameStream(std::string command, int width, int height)
        : command_(std::move(command)), width_(width), height_(height) {
        pipe_ = popen(command_.c_str(), "r");
        if (!pipe_) throw DecoderUnavailable("failed to launch decoder: " + command_);
    }

    ~SubprocessFrameStream() override {
        if (pipe_) pclose(pipe_);
    }

    SubprocessFrameStream(const SubprocessFrameStream&) = delete;
    SubprocessFrameStream& operator=(const SubprocessFrameStream&) = delete;

    std::optional<RawFrame> next() override {
        if (!pipe_) return std::nullopt;
        RawFrame frame;
        frame.width = width_;
        frame.height = height_;
        frame.frame_index = count_;
        frame.data.resize(frame.expected_bytes());
        const size_t got = fread(frame.data.data(), 1, frame.data.size(), pipe_);
        if (got == frame.data.size()) {
            ++count_;
            return frame;
        }
        const int status = pclose(pipe_);
        pipe_ = nullptr;
        if (WIFEXITED(status) && WEXITSTATUS(status) == 127) {
            throw DecoderUnavailable("decoder command not found: " + command_);
        }
        if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
            throw DecodeError("decoder exited with status " +
                              std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1) + ": " +
                              command_);
        }
        if (got != 0) {
            throw DecodeError("decoder emitted a truncated frame (" + std::to_string(got) +
                              " bytes): " + command_);
        }
        if (count_ == 0) throw EmptyStream("decoder produced zero frames: " + command_);
        return std::nullopt;
    }

private:
    std::string command_;
    int width_;
    int height_;
    FILE* pipe_ = nullptr;
    int64_t count_ = 0;
};

} // namespace

std::unique_ptr<FrameStream> decode_frames(const VideoRecord& record,
                                           const DecodeOptions& options) {
    if (options.target_fps <= 0) throw ValidationError("target fps must be positive");
    const fs::path source(record.source);
    if (fs::is_directory(source)) {
        const int source_fps = record.fps_hint.value_or(options.target_fps);
        return std::make_unique<DirectoryFrameStream>(source, source_fps, options.target_fps);
    }
    if (!fs::exists(source)) {
        throw DecodeError("video source does not exist: " + source.string());
    }
    if (options.decoder_command.empty()) {
        throw DecoderUnavailable("no decoder command configured for video file: " +
                                 source.string());
    }
    const std::string cmd =
        render_decoder_command(options.decoder_command, source.string(), options.target_fps,
                               options.decode_width, options.decode_height);
    return std::make_unique<SubprocessFrameStream>(cmd, options.decode_width,
                                                   options.decode_height);
}

std::vector<RawFrame> collect_frames(FrameStream& stream) {
    std::vector<RawFrame> out;
    while (auto frame = stream.next()) out.push_back(std::move(*frame));
    return out;
}

std::vector<RawFrame> sample_frames(FrameStream& stream, int fps) {
    if (fps <= 0) throw ValidationError("sampling fps must be positive");
    std::vector<RawFrame> kept;
    size_t total = 0;
    while (auto frame = stream.next()) {
        if (frame->frame_index % fps == 0) kept.push_back(std::move(*frame));
        ++total;
    }
    if (total == 0) throw EmptyStream("no frames to sample");
    return kept;
}

std::vector<RawFrame> sample_frames(const std::vector<RawFrame>& frames, int fps) {
    if (fps <= 0) throw ValidationError("sampling fps must be positive");
    if (frames.empty()) throw EmptyStream("no frames to sample");
    std::vector<RawFrame> kept;
    for (const auto& frame : frames) {
        if (frame.frame_index % fps == 0) kept.push_back(frame);
    }
    return kept;
}

RawFrame resize_frame(const RawFrame& frame) {
    if (frame.width <= 0 || frame.height <= 0 || frame.data.size() != frame.expected_bytes()) {
        throw InvalidFrame("cannot resize frame with invalid geometry " +
                           std::to_string(frame.width) + "x" + std::to_string(frame.height));
    }
    constexpr int kOut = 224;
    if (frame.width == kOut && frame.height == kOut) return frame;

    RawFrame out;
    out.width = kOut;
    out.height = kOut;
    out.frame_index = frame.frame_index;
    out.data.resize(out.expected_bytes());

    const double sx = static_cast<double>(frame.width) / kOut;
    const double sy = static_cast<double>(frame.height) / kOut;
    for (int dy = 0; dy < kOut; ++dy) {
        double fy = (dy + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(frame.height - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, frame.height - 1);
        const double wy = fy - y0;
        for (int dx = 0; dx < kOut; ++dx) {
            double fx = (dx + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(frame.width - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, frame.width - 1);
            const double wx = fx - x0;
            for (int c = 0; c < RawFrame::channels; ++c) {
                const double top = (1.0 - wx) * frame.at(y0, x0, c) + wx * frame.at(y0, x1, c);
                const double bottom = (1.0 - wx) * frame.at(y1, x0, c) + wx * frame.at(y1, x1, c);
                const double value = (1.0 - wy) * top + wy * bottom;
                out.data[(static_cast<size_t>(dy) * kOut + dx) * RawFrame::channels + c] =
                    static_cast<uint8_t>(std::lround(value));
            }
        }
    }
    return out;
}

FrameTensor normalize_pixels(const RawFrame& frame, const std::string& video_id) {
    if (frame.width != FrameTensor::width || frame.height != FrameTensor::height ||
        frame.data.size() != frame.expected_bytes()) {
        throw ShapeError("normalize_pixels expects a 224x224x3 frame, got " +
                         std::to_string(frame.width) + "x" + std::to_string(frame.height));
    }
    FrameTensor tensor;
    tensor.video_id = video_id;
    tensor.frame_index = frame.frame_index;
    tensor.values.resize(frame.data.size());
    for (size_t i = 0; i < frame.data.size(); ++i) {
        tensor.values[i] = static_cast<float>(frame.data[i]) / 255.0f;
    }
    return tensor;
}

} // namespace actionsense
