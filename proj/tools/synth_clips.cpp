// Generates a synthetic labeled video dataset for demos and tests: each class
// is a distinct dominant-color spatial pattern with per-video and per-pixel
// noise, written as PPM frame directories or .rvid raw containers plus an
// actionsense manifest.

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "actionsense/framepipe.hpp"
#include "actionsense/image_io.hpp"
#include "actionsense/rng.hpp"

namespace fs = std::filesystem;
using namespace actionsense;

namespace {

uint8_t clamp_u8(double v) {
    if (v < 0.0) return 0;
    if (v > 255.0) return 255;
    return static_cast<uint8_t>(v + 0.5);
}

// class 0: red-dominant left half; class 1: green-dominant top half;
// class 2: blue-dominant diagonal wedge
RawFrame make_pattern_frame(int cls, int width, int height, double base, double flicker,
                            std::mt19937_64& noise) {
    RawFrame frame;
    frame.width = width;
    frame.height = height;
    frame.data.resize(frame.expected_bytes());
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double rgb[3] = {40.0, 40.0, 40.0};
            const bool left = x < width / 2;
            const bool top = y < height / 2;
            const bool wedge = x * height > y * width; // above the diagonal
            switch (cls) {
                case 0:
                    rgb[0] = left ? 210.0 : 60.0;
                    rgb[1] = 50.0;
                    rgb[2] = 50.0;
                    break;
                case 1:
                    rgb[0] = 50.0;
                    rgb[1] = top ? 210.0 : 60.0;
                    rgb[2] = 50.0;
                    break;
                default:
                    rgb[0] = 50.0;
                    rgb[1] = 50.0;
                    rgb[2] = wedge ? 210.0 : 60.0;
                    break;
            }
            for (int c = 0; c < 3; ++c) {
                const double jitter = uniform_range(noise, -15.0, 15.0);
                const double value = rgb[c] * base * flicker + jitter;
                frame.data[(static_cast<size_t>(y) * width + x) * 3 + c] = clamp_u8(value);
            }
        }
    }
    return frame;
}

void write_rvid(const fs::path& path, const std::vector<RawFrame>& frames, uint32_t fps) {
    FILE* f = fopen(path.string().c_str(), "wb");
    if (!f) {
        std::cerr << "cannot write " << path << "\n";
        exit(2);
    }
    auto put_u32 = [&](uint32_t v) {
        uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                        static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
        fwrite(b, 1, 4, f);
    };
    fwrite("RVID", 1, 4, f);
    put_u32(static_cast<uint32_t>(frames.front().width));
    put_u32(static_cast<uint32_t>(frames.front().height));
    put_u32(fps);
    put_u32(static_cast<uint32_t>(frames.size()));
    for (const auto& frame : frames) {
        fwrite(frame.data.data(), 1, frame.data.size(), f);
    }
    fclose(f);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"generate a synthetic actionsense dataset"};
    std::string out_dir = "synth";
    int per_class = 10;
    double seconds = 3.0;
    int fps = 30;
    int width = 64;
    int height = 48;
    uint64_t seed = 0;
    std::string container = "ppmdir";
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--per-class", per_class, "videos per class")->check(CLI::PositiveNumber);
    app.add_option("--seconds", seconds, "clip duration")->check(CLI::PositiveNumber);
    app.add_option("--fps", fps, "clip frame rate")->check(CLI::PositiveNumber);
    app.add_option("--width", width, "frame width")->check(CLI::PositiveNumber);
    app.add_option("--height", height, "frame height")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "generator seed");
    app.add_option("--container", container, "ppmdir or rvid")
        ->check(CLI::IsMember({"ppmdir", "rvid"}));
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::string> labels = {"kick", "punch", "slap"};
    fs::create_directories(out_dir);

    std::ofstream manifest(fs::path(out_dir) / "manifest.jsonl", std::ios::trunc);
    manifest << nlohmann::json{{"format", "actionsense-manifest"},
                               {"version", 1},
                               {"labels", labels}}
                    .dump()
             << "\n";

    std::mt19937_64 gen(splitmix64(seed + 1));
    const int frame_count = static_cast<int>(seconds * fps);
    for (int cls = 0; cls < 3; ++cls) {
        for (int v = 0; v < per_class; ++v) {
            char id[64];
            snprintf(id, sizeof(id), "%s_%03d", labels[static_cast<size_t>(cls)].c_str(), v);
            const double base = uniform_range(gen, 0.8, 1.2);
            std::vector<RawFrame> frames;
            frames.reserve(static_cast<size_t>(frame_count));
            for (int i = 0; i < frame_count; ++i) {
                const double flicker = 1.0 + 0.05 * std::sin(0.4 * i);
                RawFrame frame = make_pattern_frame(cls, width, height, base, flicker, gen);
                frame.frame_index = i;
                frames.push_back(std::move(frame));
            }
            std::string source;
            if (container == "ppmdir") {
                const fs::path clip_dir = fs::path(out_dir) / id;
                fs::create_directories(clip_dir);
                for (const auto& frame : frames) {
                    char name[32];
                    snprintf(name, sizeof(name), "%06lld.ppm",
                             static_cast<long long>(frame.frame_index));
                    write_ppm(frame, clip_dir / name);
                }
                source = clip_dir.string();
            } else {
                const fs::path clip = fs::path(out_dir) / (std::string(id) + ".rvid");
                write_rvid(clip, frames, static_cast<uint32_t>(fps));
                source = clip.string();
            }
            manifest << nlohmann::json{{"video_id", id},
                                       {"source", source},
                                       {"label", labels[static_cast<size_t>(cls)]},
                                       {"fps", fps}}
                            .dump()
                     << "\n";
        }
    }
    manifest.close();
    std::cout << "wrote " << (3 * per_class) << " clips and manifest under " << out_dir << "\n";
    return 0;
}
