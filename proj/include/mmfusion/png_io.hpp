#ifndef MMFUSION_PNG_IO_HPP
#define MMFUSION_PNG_IO_HPP

#include <string>

#include "mmfusion/tensor.hpp"

namespace mmfusion {

// Decodes any PNG to an [H,W,3] tensor of 0..255 values. Grayscale,
// palette and alpha variants are expanded to 8-bit RGB on the way in.
Tensor read_png_rgb(const std::string& path);

// Writes an [H,W,3] tensor of 0..255 values as an 8-bit RGB PNG. Values are
// rounded and clamped.
void write_png_rgb(const Tensor& rgb, const std::string& path);

// Raw little-endian 16-bit depth plane, row-major, in millimeters.
Tensor read_depth_raw(const std::string& path, std::size_t height, std::size_t width);
void write_depth_raw(const Tensor& depth, const std::string& path);

}  // namespace mmfusion

#endif
