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

#include "alen/persistence.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "json.hpp"

namespace alen {

namespace {

void put_le64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

double get_le64(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | p[i];
  double v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::round(v * 255.0), 0.0, 255.0));
}

}  // namespace

std::string serialize_store(const NamedTensorStore& store) {
  std::string manifest = std::to_string(store.size()) + "\n";
  std::size_t offset = 0;
  for (const auto& e : store.entries()) {
    nlohmann::ordered_json line;
    line["name"] = e.name;
    line["dtype"] = "f64";
    line["shape"] = e.tensor.shape();
    line["byte_offset"] = offset;
    line["byte_len"] = e.tensor.numel() * 8;
    manifest += line.dump() + "\n";
    offset += e.tensor.numel() * 8;
  }
  std::string payload;
  payload.reserve(offset);
  for (const auto& e : store.entries())
    for (double v : e.tensor.data()) put_le64(payload, v);
  return manifest + payload;
}

NamedTensorStore deserialize_store(std::string_view bytes) {
  std::size_t pos = bytes.find('\n');
  if (pos == std::string_view::npos || pos == 0) throw FormatError("store: missing manifest line count");
  const std::string_view count_text = bytes.substr(0, pos);
  if (!std::all_of(count_text.begin(), count_text.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw FormatError("store: malformed manifest line count");
  }
  const std::size_t count = std::stoull(std::string(count_text));
  ++pos;

  struct Item {
    std::string name;
    Shape shape;
    std::size_t offset;
    std::size_t len;
  };
  std::vector<Item> items;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t end = bytes.find('\n', pos);
    if (end == std::string_view::npos) throw FormatError("store: manifest truncated at entry " + std::to_string(i));
    Item item;
    try {
      const auto line = nlohmann::json::parse(bytes.substr(pos, end - pos));
      item.name = line.at("name").get<std::string>();
      if (line.at("dtype").get<std::string>() != "f64") {
        throw FormatError("store: entry '" + item.name + "' has unsupported dtype");
      }
      item.shape = line.at("shape").get<Shape>();
      item.offset = line.at("byte_offset").get<std::size_t>();
      item.len = line.at("byte_len").get<std::size_t>();
    } catch (const nlohmann::json::exception& ex) {
      throw FormatError("store: malformed manifest entry " + std::to_string(i) + ": " + ex.what());
    }
    for (std::size_t d : item.shape) {
      if (d == 0) throw FormatError("store: entry '" + item.name + "' has a zero dimension");
    }
    if (item.len != shape_numel(item.shape) * 8) {
      throw FormatError("store: entry '" + item.name + "' byte_len does not match its shape");
    }
    items.push_back(std::move(item));
    pos = end + 1;
  }

  const std::string_view payload = bytes.substr(pos);
  std::vector<const Item*> by_offset;
  for (const auto& it : items) {
    if (it.offset > payload.size() || it.len > payload.size() - it.offset) {
      throw FormatError("store: payload truncated for entry '" + it.name + "'");
    }
    by_offset.push_back(&it);
  }
  std::sort(by_offset.begin(), by_offset.end(),
            [](const Item* a, const Item* b) { return a->offset < b->offset; });
  std::size_t covered = 0;
  for (std::size_t i = 0; i < by_offset.size(); ++i) {
    if (i > 0 && by_offset[i]->offset < by_offset[i - 1]->offset + by_offset[i - 1]->len) {
      throw FormatError("store: entry '" + by_offset[i]->name + "' overlaps entry '" +
                        by_offset[i - 1]->name + "'");
    }
    covered = std::max(covered, by_offset[i]->offset + by_offset[i]->len);
  }
  if (covered != payload.size()) {
    throw FormatError("store: payload length " + std::to_string(payload.size()) +
                      " does not match manifest (" + std::to_string(covered) + ")");
  }

  NamedTensorStore store;
  const auto* base = reinterpret_cast<const unsigned char*>(payload.data());
  for (const auto& it : items) {
    std::vector<double> values(it.len / 8);
    for (std::size_t k = 0; k < values.size(); ++k) values[k] = get_le64(base + it.offset + 8 * k);
    if (store.contains(it.name)) throw FormatError("store: duplicate entry name '" + it.name + "'");
    store.add(it.name, Tensor::from(it.shape, std::move(values)));
  }
  return store;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

void save_store(const NamedTensorStore& store, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_store(store));
}

NamedTensorStore load_store(const std::filesystem::path& path) {
  try {
    return deserialize_store(read_file(path));
  } catch (const FormatError& ex) {
    throw FormatError(path.string() + ": " + ex.what());
  }
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) h = (h ^ c) * 1099511628211ULL;
  return h;
}

std::string store_digest(const NamedTensorStore& store) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(serialize_store(store))));
  return buf;
}

// ---------------------------------------------------------------------------
// PPM

ImageRGB decode_ppm(std::string_view bytes) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_uint = [&]() -> std::size_t {
    skip_space();
    std::size_t start = pos;
    std::size_t v = 0;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') v = v * 10 + (bytes[pos++] - '0');
    if (pos == start) throw FormatError("ppm: malformed header");
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P') throw FormatError("unsupported format");
  if (bytes[1] != '6') throw FormatError("unsupported format: only binary PPM (P6) is read");
  pos = 2;
  const std::size_t width = read_uint();
  const std::size_t height = read_uint();
  const std::size_t maxval = read_uint();
  if (width == 0 || height == 0) throw FormatError("ppm: empty image");
  if (maxval != 255) throw FormatError("unsupported bit depth: maxval " + std::to_string(maxval));
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw FormatError("ppm: malformed header");
  }
  ++pos;
  const std::size_t n = width * height;
  if (bytes.size() - pos < 3 * n) throw FormatError("ppm: truncated pixel data");
  ImageRGB img = ImageRGB::filled(height, width, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < 3; ++c)
      img.data[c * n + i] = static_cast<unsigned char>(bytes[pos + 3 * i + c]) / 255.0;
  return img;
}

std::string encode_ppm(const ImageRGB& img) {
  std::string out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  const std::size_t n = img.pixels();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < 3; ++c) out.push_back(static_cast<char>(quantize(img.data[c * n + i])));
  return out;
}

// ---------------------------------------------------------------------------
// PNG

namespace {

ImageRGB decode_png(const std::string& bytes, ImageLoadInfo* info) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw FormatError(std::string("png decode failed: ") + image.message);
  }
  if (!(image.format & PNG_FORMAT_FLAG_COLOR)) {
    png_image_free(&image);
    throw FormatError("unsupported format: grayscale PNG");
  }
  if (image.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&image);
    throw FormatError("unsupported bit depth: 16-bit PNG");
  }
  if (info) info->alpha_dropped = (image.format & PNG_FORMAT_FLAG_ALPHA) != 0;
  image.format = PNG_FORMAT_RGBA;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    throw FormatError(std::string("png decode failed: ") + image.message);
  }
  ImageRGB img = ImageRGB::filled(image.height, image.width, 0.0);
  const std::size_t n = img.pixels();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < 3; ++c) img.data[c * n + i] = buffer[4 * i + c] / 255.0;
  return img;
}

std::string encode_png(const ImageRGB& img) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;
  const std::size_t n = img.pixels();
  std::vector<png_byte> buffer(3 * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < 3; ++c) buffer[3 * i + c] = quantize(img.data[c * n + i]);
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, buffer.data(), 0, nullptr)) {
    throw Error(std::string("png encode failed: ") + image.message);
  }
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, buffer.data(), 0, nullptr)) {
    throw Error(std::string("png encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

}  // namespace

ImageRGB load_image(const std::filesystem::path& path, ImageLoadInfo* info) {
  const std::string bytes = read_file(path);
  try {
    static constexpr unsigned char kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSig, 8) == 0) return decode_png(bytes, info);
    if (info) info->alpha_dropped = false;
    return decode_ppm(bytes);
  } catch (const FormatError& ex) {
    throw FormatError(path.string() + ": " + ex.what());
  }
}

void save_image(const ImageRGB& img, const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") {
    write_file_atomic(path, encode_png(img));
  } else if (ext == ".ppm") {
    write_file_atomic(path, encode_ppm(img));
  } else {
    throw Error("unsupported output format '" + ext + "' (use .png or .ppm)");
  }
}

}  // namespace alen
