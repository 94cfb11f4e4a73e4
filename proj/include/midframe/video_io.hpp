#pragma once

#include <string>

#include "midframe/core.hpp"

namespace midframe {

// Loads a numbered lossless image sequence (e.g. 000000.png .. 000063.png)
// into a VideoSequence. Frames are sorted by their numeric index regardless of
// zero-padding width; pixel values are scaled to [0, 1].
// Throws std::runtime_error naming the offending file on missing directory,
// unreadable images, or inconsistent frame dimensions.
VideoSequence load_sequence(const std::string& dir);

// Writes the sequence as %06d.png, 8-bit RGB (or grayscale for 1-channel
// frames). Returns the number of frames written.
size_t save_sequence(const VideoSequence& video, const std::string& dir);

// Single-image variants with the same conventions.
Frame load_image(const std::string& path);
void save_image(const Frame& frame, const std::string& path);

}  // namespace midframe
