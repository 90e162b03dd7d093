#include "actionsense/image_io.hpp"

#include <fstream>

#include "actionsense/error.hpp"

namespace actionsense {

namespace {

// skips whitespace and '#' comment lines between PPM header tokens
std::string next_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

} // namespace

RawFrame read_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DecodeError("cannot open image file: " + path.string());

    if (next_token(in) != "P6") {
        throw DecodeError("not a binary PPM (P6) file: " + path.string());
    }
    RawFrame frame;
    try {
        frame.width = std::stoi(next_token(in));
        frame.height = std::stoi(next_token(in));
        const int maxval = std::stoi(next_token(in));
        if (maxval != 255) {
            throw DecodeError("unsupported PPM maxval (want 255): " + path.string());
        }
    } catch (const std::logic_error&) {
        throw DecodeError("malformed PPM header: " + path.string());
    }
    if (frame.width <= 0 || frame.height <= 0) {
        throw DecodeError("non-positive PPM dimensions: " + path.string());
    }
    frame.data.resize(frame.expected_bytes());
    in.read(reinterpret_cast<char*>(frame.data.data()),
            static_cast<std::streamsize>(frame.data.size()));
    if (static_cast<size_t>(in.gcount()) != frame.data.size()) {
        throw DecodeError("truncated PPM pixel data: " + path.string());
    }
    return frame;
}

void write_ppm(const RawFrame& frame, const std::filesystem::path& path) {
    if (frame.width <= 0 || frame.height <= 0 || frame.data.size() != frame.expected_bytes()) {
        throw InvalidFrame("refusing to write malformed frame to " + path.string());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write image file: " + path.string());
    out << "P6\n" << frame.width << " " << frame.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(frame.data.data()),
              static_cast<std::streamsize>(frame.data.size()));
    if (!out) throw IoError("failed writing image file: " + path.string());
}

} // namespace actionsense
