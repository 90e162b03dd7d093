#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "actionsense/dataset.hpp"

namespace actionsense {

// One decoded frame: 8-bit RGB, row-major, channel-interleaved.
struct RawFrame {
    int width = 0;
    int height = 0;
    int64_t frame_index = 0;
    std::vector<uint8_t> data; // width * height * 3

    static constexpr int channels = 3;
    size_t expected_bytes() const {
        return static_cast<size_t>(width) * static_cast<size_t>(height) * channels;
    }
    uint8_t at(int y, int x, int c) const {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
};

// A preprocessed 224x224x3 frame, values in [0,1].
struct FrameTensor {
    static constexpr int height = 224;
    static constexpr int width = 224;
    static constexpr int channels = 3;

    std::vector<float> values; // height * width * channels, HWC
    std::string video_id;
    int64_t frame_index = 0;

    float at(int y, int x, int c) const {
        return values[(static_cast<size_t>(y) * width + x) * channels + c];
    }
};

struct DecodeOptions {
    int target_fps = 30;
    // geometry requested from the external decoder; frames are bilinearly
    // resized to 224x224 downstream either way
    int decode_width = 256;
    int decode_height = 256;
    // shell command with {input} {fps} {width} {height} placeholders; the
    // decoder must write raw RGB24 frames to stdout at that rate and geometry
    std::string decoder_command;
};

// Ordered, finite, single-consumer stream of decoded frames.
class FrameStream {
public:
    virtual ~FrameStream() = default;
    virtual std::optional<RawFrame> next() = 0;
};

// Opens a source as a frame stream resampled to options.target_fps.
// A directory source is an already-decoded stream at the record's fps hint;
// anything else is handed to the external decoder subprocess.
std::unique_ptr<FrameStream> decode_frames(const VideoRecord& record, const DecodeOptions& options);

std::vector<RawFrame> collect_frames(FrameStream& stream);

// Keeps frames with frame_index % fps == 0 — one frame per second once the
// stream is at `fps`. Yields ceil(N/fps) frames for an N-frame stream.
std::vector<RawFrame> sample_frames(FrameStream& stream, int fps);
std::vector<RawFrame> sample_frames(const std::vector<RawFrame>& frames, int fps);

// Bilinear resize to 224x224 (half-pixel centers, clamped edges).
RawFrame resize_frame(const RawFrame& frame);

// value / 255 exactly; carries video id and frame index through.
FrameTensor normalize_pixels(const RawFrame& frame, const std::string& video_id);

// substitutes {input} {fps} {width} {height}; exposed for tests
std::string render_decoder_command(const std::string& command_template, const std::string& input,
                                   int fps, int width, int height);

} // namespace actionsense
