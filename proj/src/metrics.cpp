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

#include "alen/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace alen {

namespace {

void require_same_size(const ImageRGB& a, const ImageRGB& b, const char* what) {
  if (!a.same_size(b)) {
    throw ShapeError(std::string(what) + ": image sizes differ (" + std::to_string(a.height) +
                     "x" + std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" +
                     std::to_string(b.width) + ")");
  }
}

void require_same_size(const Plane& a, const Plane& b, const char* what) {
  if (a.height != b.height || a.width != b.width) {
    throw ShapeError(std::string(what) + ": plane sizes differ");
  }
}

// sRGB (D65) linear RGB -> XYZ.
constexpr double kM[3][3] = {{0.4124564, 0.3575761, 0.1804375},
                             {0.2126729, 0.7151522, 0.0721750},
                             {0.0193339, 0.1191920, 0.9503041}};

double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

std::string format_value(const std::optional<double>& v, int precision) {
  if (!v) return "";
  if (std::isinf(*v)) return *v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, *v);
  return buf;
}

}  // namespace

double psnr(const ImageRGB& a, const ImageRGB& b) {
  require_same_size(a, b, "psnr");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    acc += d * d;
  }
  const double mse = acc / static_cast<double>(a.data.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double ssim_index(const Plane& a, const Plane& b, const SSIMParams& p) {
  require_same_size(a, b, "ssim");
  return ssim_mean(a.to_tensor(), b.to_tensor(), p).item();
}

double ssim_index(const ImageRGB& a, const ImageRGB& b, const SSIMParams& p) {
  require_same_size(a, b, "ssim");
  return ssim_index(luma(a), luma(b), p);
}

UqiResult uqi_detail(const Plane& a, const Plane& b) {
  require_same_size(a, b, "uqi");
  const WindowStats s = window_stats(a.to_tensor(), b.to_tensor(), SSIMParams::uqi());
  UqiResult r;
  double acc = 0.0;
  for (std::size_t i = 0; i < s.mu_x.numel(); ++i) {
    const double mx = s.mu_x.at(i);
    const double my = s.mu_y.at(i);
    const double den = (mx * mx + my * my) * (s.var_x.at(i) + s.var_y.at(i));
    if (den == 0.0) {
      ++r.windows_skipped;
      continue;
    }
    acc += (2.0 * mx * my) * (2.0 * s.cov.at(i)) / den;
    ++r.windows_used;
  }
  if (r.windows_used == 0) throw Error("uqi: every window is degenerate");
  r.value = acc / static_cast<double>(r.windows_used);
  return r;
}

UqiResult uqi_detail(const ImageRGB& a, const ImageRGB& b) {
  require_same_size(a, b, "uqi");
  return uqi_detail(luma(a), luma(b));
}

double uqi(const ImageRGB& a, const ImageRGB& b) { return uqi_detail(a, b).value; }

Lab srgb_to_lab(double r, double g, double b) {
  const double rl = srgb_to_linear(r);
  const double gl = srgb_to_linear(g);
  const double bl = srgb_to_linear(b);
  const double x = kM[0][0] * rl + kM[0][1] * gl + kM[0][2] * bl;
  const double y = kM[1][0] * rl + kM[1][1] * gl + kM[1][2] * bl;
  const double z = kM[2][0] * rl + kM[2][1] * gl + kM[2][2] * bl;
  // Reference white is the image of RGB (1,1,1), so white maps to L* = 100 exactly.
  static const double xn = kM[0][0] + kM[0][1] + kM[0][2];
  static const double yn = kM[1][0] + kM[1][1] + kM[1][2];
  static const double zn = kM[2][0] + kM[2][1] + kM[2][2];
  const double fx = lab_f(x / xn);
  const double fy = lab_f(y / yn);
  const double fz = lab_f(z / zn);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

double delta_e(const ImageRGB& a, const ImageRGB& b) {
  require_same_size(a, b, "delta_e");
  double acc = 0.0;
  for (std::size_t y = 0; y < a.height; ++y) {
    for (std::size_t x = 0; x < a.width; ++x) {
      const Lab p = srgb_to_lab(a.at(0, y, x), a.at(1, y, x), a.at(2, y, x));
      const Lab q = srgb_to_lab(b.at(0, y, x), b.at(1, y, x), b.at(2, y, x));
      const double dl = p.l - q.l;
      const double da = p.a - q.a;
      const double db = p.b - q.b;
      acc += std::sqrt(dl * dl + da * da + db * db);
    }
  }
  return acc / static_cast<double>(a.pixels());
}

Plane lightness(const ImageRGB& img) {
  Plane p = Plane::filled(img.height, img.width, 0.0);
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      p.at(y, x) = std::max({img.at(0, y, x), img.at(1, y, x), img.at(2, y, x)});
    }
  }
  return p;
}

std::vector<double> sample_grid(const Plane& p, std::size_t grid) {
  if (grid == 0) throw Error("loe: grid must be at least 1");
  std::vector<double> out(grid * grid);
  for (std::size_t i = 0; i < grid; ++i) {
    const auto y = static_cast<std::size_t>((static_cast<double>(i) + 0.5) *
                                            static_cast<double>(p.height) /
                                            static_cast<double>(grid));
    for (std::size_t j = 0; j < grid; ++j) {
      const auto x = static_cast<std::size_t>((static_cast<double>(j) + 0.5) *
                                              static_cast<double>(p.width) /
                                              static_cast<double>(grid));
      out[i * grid + j] = p.at(y, x);
    }
  }
  return out;
}

double loe(const ImageRGB& original, const ImageRGB& enhanced, std::size_t grid) {
  require_same_size(original, enhanced, "loe");
  const auto lo = sample_grid(lightness(original), grid);
  const auto le = sample_grid(lightness(enhanced), grid);
  const std::size_t m = lo.size();
  std::uint64_t count = 0;
  for (std::size_t p = 0; p < m; ++p) {
    for (std::size_t q = 0; q < m; ++q) {
      count += static_cast<std::uint64_t>((lo[p] >= lo[q]) != (le[p] >= le[q]));
    }
  }
  return static_cast<double>(count) / static_cast<double>(m);
}

MetricRow evaluate_pair(const std::string& name, const ImageRGB& enhanced,
                        const ImageRGB* reference, const ImageRGB* original,
                        std::size_t loe_grid) {
  MetricRow row;
  row.image = name;
  if (reference) {
    row.psnr = psnr(enhanced, *reference);
    row.ssim = ssim_index(enhanced, *reference);
    row.uqi = uqi(enhanced, *reference);
    row.delta_e = delta_e(enhanced, *reference);
  }
  if (original) row.loe = loe(*original, enhanced, loe_grid);
  return row;
}

MetricReport::Aggregate MetricReport::aggregate() const {
  Aggregate agg;
  agg.mean.image = "mean";
  auto column = [&](std::optional<double> MetricRow::*field, bool skip_inf) {
    double acc = 0.0;
    std::size_t n = 0;
    for (const auto& r : rows) {
      const auto& v = r.*field;
      if (!v) continue;
      if (skip_inf && std::isinf(*v)) continue;
      acc += *v;
      ++n;
    }
    std::optional<double> out;
    if (n > 0) out = acc / static_cast<double>(n);
    return out;
  };
  agg.mean.psnr = column(&MetricRow::psnr, true);
  agg.mean.ssim = column(&MetricRow::ssim, false);
  agg.mean.uqi = column(&MetricRow::uqi, false);
  agg.mean.delta_e = column(&MetricRow::delta_e, false);
  agg.mean.loe = column(&MetricRow::loe, false);
  for (const auto& r : rows) {
    if (r.psnr && std::isinf(*r.psnr)) ++agg.infinite_psnr;
  }
  return agg;
}

std::string MetricReport::to_csv() const {
  std::ostringstream out;
  out << "image";
  if (full_reference) out << ",psnr,ssim,uqi,delta_e";
  out << ",loe\n";
  auto emit = [&](const MetricRow& r) {
    out << r.image;
    if (full_reference) {
      out << ',' << format_value(r.psnr, 6) << ',' << format_value(r.ssim, 6) << ','
          << format_value(r.uqi, 6) << ',' << format_value(r.delta_e, 6);
    }
    out << ',' << format_value(r.loe, 6) << '\n';
  };
  for (const auto& r : rows) emit(r);
  emit(aggregate().mean);
  return out.str();
}

std::string MetricReport::to_markdown() const {
  const Aggregate agg = aggregate();
  std::ostringstream out;
  out << "| Image |";
  if (full_reference) out << " PSNR ↑ | SSIM ↑ | UQI ↑ | DeltaE ↓ |";
  out << " LOE ↓ |\n|---|";
  if (full_reference) out << "---|---|---|---|";
  out << "---|\n";
  auto emit = [&](const MetricRow& r, const std::string& label) {
    out << "| " << label << " |";
    if (full_reference) {
      out << ' ' << format_value(r.psnr, 4) << " | " << format_value(r.ssim, 4) << " | "
          << format_value(r.uqi, 4) << " | " << format_value(r.delta_e, 4) << " |";
    }
    out << ' ' << format_value(r.loe, 4) << " |\n";
  };
  for (const auto& r : rows) emit(r, r.image);
  emit(agg.mean, "**mean**");
  if (full_reference && agg.infinite_psnr > 0) {
    out << "\n" << agg.infinite_psnr
        << " image(s) with infinite PSNR (identical to reference) excluded from the mean.\n";
  }
  return out.str();
}

}  // namespace alen
