#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "hiveguard/errors.hpp"
#include "hiveguard/flowsim.hpp"
#include "hiveguard/rng.hpp"
#include "hiveguard/tensor.hpp"

// Rasterizes a flow trace into a sequence of eight cumulative hive-plot
// frames. Each record is drawn as two half-transparent segments
// (time axis -> country axis -> source-IP axis); repeated layers darken
// multiplicatively, so traffic density reads as darkness.

namespace hiveguard {

struct HiveLayout {
  int height = 64;
  int width = 64;
  double angle_time_deg = 210.0;     // leftmost axis
  double angle_country_deg = 90.0;   // vertical axis
  double angle_ip_deg = 330.0;       // rightmost axis
  double axis_length = 26.0;         // pixels
  double origin_x = 31.5;            // image center
  double origin_y = 31.5;

  static HiveLayout square(int size) {
    HiveLayout l;
    l.height = l.width = size;
    l.origin_x = l.origin_y = (size - 1) / 2.0;
    l.axis_length = 0.42 * size;
    return l;
  }

  void validate() const {
    if (height < 8 || width < 8) throw ConfigError("layout: image too small");
    if (axis_length <= 0.0) throw ConfigError("layout: axis_length must be positive");
  }
};

struct AxisPositions {
  double time_pos;     // [0,1] along the time axis
  double country_pos;  // [0,1] along the country axis
  double ip_pos;       // [0,1] along the source-IP axis
};

/// Axis coordinates of one record. Time maps linearly (origin = capture
/// start); the categorical axes use a stable 64-bit hash of the value.
inline AxisPositions place_on_axes(const FlowRecord& r, const HiveLayout&,
                                   double capture_duration) {
  if (r.timestamp < 0.0 || r.timestamp > capture_duration)
    throw ContractError("place_on_axes: timestamp outside the capture window");
  AxisPositions p;
  p.time_pos = r.timestamp / capture_duration;
  p.country_pos = hash_to_unit(fnv1a64(country_code(r.country)));
  const uint32_t ip_be[1] = {r.src_ip};
  unsigned char ip_bytes[4] = {static_cast<unsigned char>(r.src_ip >> 24),
                               static_cast<unsigned char>(r.src_ip >> 16),
                               static_cast<unsigned char>(r.src_ip >> 8),
                               static_cast<unsigned char>(r.src_ip)};
  (void)ip_be;
  p.ip_pos = hash_to_unit(fnv1a64(ip_bytes, 4));
  return p;
}

struct FrameSequence {
  static constexpr int kFrames = 8;
  int height = 0;
  int width = 0;
  std::vector<float> frames;  // kFrames * height * width, frame-major
  Label label = Label::Normal;
  std::string source_trace;

  float at(int t, int r, int c) const {
    return frames[(static_cast<size_t>(t) * height + r) * width + c];
  }
};

namespace detail {

struct Point {
  double x, y;
};

inline Point axis_point(const HiveLayout& l, double angle_deg, double t) {
  const double a = angle_deg * 0.017453292519943295;
  // y grows downward in image space, so positive angles point up
  return {l.origin_x + std::cos(a) * t * l.axis_length,
          l.origin_y - std::sin(a) * t * l.axis_length};
}

constexpr double kLineHalfWidth = 1.0;
constexpr float kLineAlpha = 0.5f;

/// Composite one anti-aliased segment at 50% opacity. Coverage is 1 within
/// the core and falls off linearly over one pixel at the edge.
inline void composite_segment(std::vector<float>& img, int height, int width,
                              Point a, Point b) {
  const double reach = kLineHalfWidth + 0.5;
  const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - reach)));
  const int x1 = std::min(width - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + reach)));
  const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - reach)));
  const int y1 = std::min(height - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + reach)));
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double px = x - a.x, py = y - a.y;
      double t = len2 > 0.0 ? (px * dx + py * dy) / len2 : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      const double ex = px - t * dx, ey = py - t * dy;
      const double dist = std::sqrt(ex * ex + ey * ey);
      const double cov = std::clamp(kLineHalfWidth + 0.5 - dist, 0.0, 1.0);
      if (cov <= 0.0) continue;
      float& p = img[static_cast<size_t>(y) * width + x];
      p *= 1.0f - kLineAlpha * static_cast<float>(cov);
    }
}

}  // namespace detail

/// Render the eight cumulative frames. Frame t shows every record with
/// timestamp < t * (capture_duration / 8), so frame 0 is always blank.
inline FrameSequence render_sequence(const std::vector<FlowRecord>& trace,
                                     const HiveLayout& layout, double capture_duration,
                                     Label label, std::string source_trace = {}) {
  layout.validate();
  if (capture_duration <= 0.0) throw ConfigError("render: capture_duration must be positive");
  for (size_t i = 1; i < trace.size(); ++i)
    if (trace[i].timestamp < trace[i - 1].timestamp)
      throw ContractError("render: trace must be sorted by timestamp");

  FrameSequence seq;
  seq.height = layout.height;
  seq.width = layout.width;
  seq.label = label;
  seq.source_trace = std::move(source_trace);
  const size_t frame_px = static_cast<size_t>(layout.height) * layout.width;
  seq.frames.assign(static_cast<size_t>(FrameSequence::kFrames) * frame_px, 1.0f);

  std::vector<float> buffer(frame_px, 1.0f);
  size_t next = 0;
  for (int t = 0; t < FrameSequence::kFrames; ++t) {
    const double cutoff = t * (capture_duration / FrameSequence::kFrames);
    while (next < trace.size() && trace[next].timestamp < cutoff) {
      const AxisPositions pos = place_on_axes(trace[next], layout, capture_duration);
      const detail::Point pt = detail::axis_point(layout, layout.angle_time_deg, pos.time_pos);
      const detail::Point pc =
          detail::axis_point(layout, layout.angle_country_deg, pos.country_pos);
      const detail::Point pi = detail::axis_point(layout, layout.angle_ip_deg, pos.ip_pos);
      detail::composite_segment(buffer, layout.height, layout.width, pt, pc);
      detail::composite_segment(buffer, layout.height, layout.width, pc, pi);
      ++next;
    }
    std::copy(buffer.begin(), buffer.end(),
              seq.frames.begin() + static_cast<size_t>(t) * frame_px);
  }
  return seq;
}

/// 1xDxHxW tensor, depth ordered t0..t7, values in [0,1].
inline Tensor to_tensor(const FrameSequence& seq) {
  Tensor t(Shape{1, FrameSequence::kFrames, seq.height, seq.width});
  std::copy(seq.frames.begin(), seq.frames.end(), t.data.begin());
  return t;
}

/// Binary PGM (P5), the debug image format.
inline void write_pgm(const std::filesystem::path& path, const float* pixels, int height,
                      int width) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open image for writing: " + path.string());
  out << "P5\n" << width << " " << height << "\n255\n";
  std::vector<unsigned char> row(static_cast<size_t>(width));
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const float v = std::clamp(pixels[static_cast<size_t>(y) * width + x], 0.0f, 1.0f);
      row[static_cast<size_t>(x)] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    out.write(reinterpret_cast<const char*>(row.data()), width);
  }
  if (!out) throw IoError("failed writing image: " + path.string());
}

inline void write_frame_pgm(const std::filesystem::path& path, const FrameSequence& seq,
                            int frame) {
  if (frame < 0 || frame >= FrameSequence::kFrames)
    throw ConfigError("frame index out of range");
  write_pgm(path, seq.frames.data() + static_cast<size_t>(frame) * seq.height * seq.width,
            seq.height, seq.width);
}

}  // namespace hiveguard
