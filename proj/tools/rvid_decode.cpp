// Reference decoder for the .rvid raw-video container, matching the external
// decoder contract: raw RGB24 frames on stdout at the requested fps and
// geometry. Container layout: magic "RVID", then little-endian u32 width,
// height, fps, frame_count, then frame_count raw RGB24 frames.
//
// Usage: rvid-decode <input.rvid> <fps> <width> <height>
// Configure as: --decoder "rvid-decode {input} {fps} {width} {height}"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

namespace {

uint32_t read_u32(FILE* f) {
    uint8_t b[4];
    if (fread(b, 1, 4, f) != 4) {
        fprintf(stderr, "rvid-decode: truncated header\n");
        exit(2);
    }
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

} // namespace

int main(int argc, char** argv) {
    if (argc != 5) {
        fprintf(stderr, "usage: rvid-decode <input.rvid> <fps> <width> <height>\n");
        return 2;
    }
    const std::string input = argv[1];
    const long target_fps = strtol(argv[2], nullptr, 10);
    const long out_w = strtol(argv[3], nullptr, 10);
    const long out_h = strtol(argv[4], nullptr, 10);
    if (target_fps <= 0 || out_w <= 0 || out_h <= 0) {
        fprintf(stderr, "rvid-decode: fps/width/height must be positive\n");
        return 2;
    }

    FILE* f = fopen(input.c_str(), "rb");
    if (!f) {
        fprintf(stderr, "rvid-decode: cannot open %s\n", input.c_str());
        return 2;
    }
    char magic[4];
    if (fread(magic, 1, 4, f) != 4 || memcmp(magic, "RVID", 4) != 0) {
        fprintf(stderr, "rvid-decode: %s is not an RVID file\n", input.c_str());
        return 2;
    }
    const uint32_t src_w = read_u32(f);
    const uint32_t src_h = read_u32(f);
    const uint32_t src_fps = read_u32(f);
    const uint32_t src_frames = read_u32(f);
    if (src_w == 0 || src_h == 0 || src_fps == 0) {
        fprintf(stderr, "rvid-decode: bad header in %s\n", input.c_str());
        return 2;
    }

    const size_t src_bytes = static_cast<size_t>(src_w) * src_h * 3;
    std::vector<uint8_t> src(src_bytes);
    std::vector<uint8_t> out(static_cast<size_t>(out_w) * out_h * 3);

    // nearest-frame resample: output frame j comes from source index
    // floor(j * src_fps / target_fps)
    const uint64_t out_frames =
        static_cast<uint64_t>(src_frames) * static_cast<uint64_t>(target_fps) / src_fps;
    uint64_t loaded = 0; // source frames consumed so far (current one = loaded-1)
    for (uint64_t j = 0; j < out_frames; ++j) {
        const uint64_t want = j * src_fps / static_cast<uint64_t>(target_fps);
        while (loaded <= want) {
            if (fread(src.data(), 1, src_bytes, f) != src_bytes) {
                fprintf(stderr, "rvid-decode: truncated frame data in %s\n", input.c_str());
                return 2;
            }
            ++loaded;
        }
        // nearest-neighbor scale
        for (long y = 0; y < out_h; ++y) {
            const uint32_t sy = static_cast<uint32_t>(y * src_h / out_h);
            for (long x = 0; x < out_w; ++x) {
                const uint32_t sx = static_cast<uint32_t>(x * src_w / out_w);
                const size_t s = (static_cast<size_t>(sy) * src_w + sx) * 3;
                const size_t d = (static_cast<size_t>(y) * out_w + x) * 3;
                out[d] = src[s];
                out[d + 1] = src[s + 1];
                out[d + 2] = src[s + 2];
            }
        }
        if (fwrite(out.data(), 1, out.size(), stdout) != out.size()) {
            fprintf(stderr, "rvid-decode: write failed\n");
            return 2;
        }
    }
    fclose(f);
    return 0;
}
