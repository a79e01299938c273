// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "reflkit/image.hpp"

#include <string>

namespace reflkit {

/**
 * Decodes a PNG (8/16-bit, gray or RGB, palette expanded, alpha stripped) or
 * JPEG (8-bit). Samples are scaled to [0,1] (1/255 or 1/65535); when
 * target_encoding is linear the sRGB EOTF is applied per component.
 * Throws std::runtime_error naming the path on any failure.
 */
Image load_image(const std::string& path, Encoding target_encoding = Encoding::srgb);

/**
 * Writes an 8-bit PNG (gray for 1 channel, RGB for 3). Linear images are
 * re-encoded to sRGB first so the file always holds display-ready codes.
 */
void save_png(const std::string& path, const Image& img);

// 0/1 mask as 8-bit grayscale PNG with values 0 or 255.
void save_mask_png(const std::string& path, const PlaneU8& mask);

/**
 * Writes a signed/unbounded plane as 16-bit grayscale PNG after affine
 * normalization to [0,1]; the (min, max) used are recorded in a JSON sidecar
 * with the same basename and a .json extension.
 */
void save_plane16_png(const std::string& path, const PlaneF& plane);

}  // namespace reflkit
