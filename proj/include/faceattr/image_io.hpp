#ifndef FACEATTR_IMAGE_IO_HPP
#define FACEATTR_IMAGE_IO_HPP

#include <string>

#include "faceattr/image.hpp"

namespace faceattr {

/// Reads an 8-bit PNG, PPM (P6) or PGM (P5) file by extension.
/// Gray stays 1-channel, RGB/RGBA become 3-channel; samples are v/255.
ImageF read_image(const std::string& path);

/// Writes 8-bit PNG/PPM/PGM by extension; samples are round(v*255), clamped.
void write_image(const ImageF& img, const std::string& path);

}  // namespace faceattr

#endif
