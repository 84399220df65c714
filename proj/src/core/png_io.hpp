#pragma once

#include <string>
#include <vector>

namespace opd {

struct GrayImageF {
    int h = 0, w = 0;
    std::vector<float> v;  // row-major, [0, 1]
};

// 8-bit grayscale PNG; values are clipped to [0,255] on write.
void write_png_gray8(const std::string& path, const float* v01, int h, int w);

// Reads 8/16-bit grayscale or RGB(A) PNGs; color converts to Rec.601 luminance.
GrayImageF read_png_gray(const std::string& path);

}  // namespace opd
