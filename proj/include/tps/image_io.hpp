#pragma once

#include <Eigen/Core>
#include <string>

#include "tps/errors.hpp"

namespace tps {

using Image = Eigen::ArrayXXf;  // (rows = y, cols = x)

struct LoadedImage {
    Image pixels;
    int bit_depth = 0;  // 8 or 16
};

// PGM (P5) or PNG grayscale, 8 or 16 bit. Values promoted to float as-is, no
// rescaling. Color, palette, or alpha PNGs are rejected.
LoadedImage read_gray_image(const std::string& path);

// Binary PGM. 16-bit samples are big-endian per the format. Values are
// rounded half-up and clamped to the sample range.
void write_pgm(const std::string& path, const Image& img, int bit_depth);

}  // namespace tps
