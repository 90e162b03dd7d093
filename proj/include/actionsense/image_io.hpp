#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "actionsense/framepipe.hpp"

namespace actionsense {

// Binary PPM (P6, maxval 255). The frame-directory input path uses these;
// anything else goes through the external decoder subprocess.
RawFrame read_ppm(const std::filesystem::path& path);
void write_ppm(const RawFrame& frame, const std::filesystem::path& path);

} // namespace actionsense
