// Copyright 2026 The ALEN Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "alen/image.hpp"
#include "alen/store.hpp"

namespace alen {

// Weight store file layout (all offsets relative to the payload start):
//
//   <N>\n
//   {"name":...,"dtype":"f64","shape":[...],"byte_offset":...,"byte_len":...}\n   (N lines)
//   <payload: little-endian IEEE-754 binary64 values>
//
// See docs/store_format.md.

std::string serialize_store(const NamedTensorStore& store);
/// Throws alen::FormatError on a malformed manifest, duplicate names,
/// overlapping or out-of-bounds ranges, or a payload length mismatch.
NamedTensorStore deserialize_store(std::string_view bytes);

/// Writes through a temporary file and renames it into place.
void save_store(const NamedTensorStore& store, const std::filesystem::path& path);
NamedTensorStore load_store(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view bytes);
/// 16 hex digits of the FNV-1a hash of the serialized store.
std::string store_digest(const NamedTensorStore& store);

struct ImageLoadInfo {
  bool alpha_dropped = false;
};

/// PNG (8-bit RGB/RGBA/palette) or binary PPM (P6, maxval 255), chosen by
/// file signature. Values map to [0,1] by v/255.
ImageRGB load_image(const std::filesystem::path& path, ImageLoadInfo* info = nullptr);
/// Format chosen by extension: .png or .ppm. Values quantize by round(v*255),
/// clamped to [0,255].
void save_image(const ImageRGB& img, const std::filesystem::path& path);

ImageRGB decode_ppm(std::string_view bytes);
std::string encode_ppm(const ImageRGB& img);

std::string read_file(const std::filesystem::path& path);
/// Temp-file + rename write.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace alen
