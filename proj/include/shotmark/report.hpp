#pragma once

// JSON sidecars and diagnostic renderings.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "shotmark/error.hpp"
#include "shotmark/geometry.hpp"
#include "shotmark/imaging.hpp"
#include "shotmark/localizer.hpp"
#include "shotmark/pipeline.hpp"
#include "shotmark/rectify.hpp"

namespace shotmark {

using Json = nlohmann::ordered_json;

inline Json to_json(const Quadrilateral& q) {
  return Json{{"A", {q.a.x, q.a.y}}, {"B", {q.b.x, q.b.y}}, {"C", {q.c.x, q.c.y}}, {"D", {q.d.x, q.d.y}}};
}

inline Quadrilateral quad_from_json(const Json& j) {
  auto corner = [&](const char* name) {
    if (!j.contains(name) || !j[name].is_array() || j[name].size() != 2)
      fail(ErrorKind::InvalidArgument, std::string("quad JSON: missing corner ") + name);
    return Point{j[name][0].get<double>(), j[name][1].get<double>()};
  };
  return {corner("A"), corner("B"), corner("C"), corner("D")};
}

inline Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Io, "'" + path.string() + "': " + e.what());
  }
}

inline void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

inline Json to_json(const ExtractionReport& rep, std::optional<double> nc_value = std::nullopt) {
  Json j{{"bits", payload_to_hex(rep.payload)},
         {"bitCount", rep.payload.size()},
         {"confidence", rep.confidence},
         {"windowsUsed", rep.windows_used}};
  j["nc"] = nc_value ? Json(*nc_value) : Json(nullptr);
  return j;
}

inline Json to_json(const PipelineResult& r) {
  Json j{{"status", to_string(r.status)}, {"message", r.message}};
  j["quad"] = r.best && r.found() ? to_json(r.best->quad) : Json(nullptr);
  j["scaleDecision"] = r.decision;
  j["decidedScale"] = r.decided_scale;
  j["sim"] = r.sim;
  if (r.best) {
    j["candidate"] = {{"peakCount", r.best->peak_count}, {"scaleIndex", r.best->scale_index},
                      {"scale", r.best->scale},          {"apCost", r.best->ap_cost},
                      {"aCost", r.best->a_cost},         {"localCost", r.best->local_cost},
                      {"support", r.best->support}};
  }
  if (r.extraction) j["payload"] = to_json(*r.extraction);
  j["timings"] = {{"detectMs", r.timings.detect_ms},
                  {"bboxMs", r.timings.bbox_ms},
                  {"extractMs", r.timings.extract_ms},
                  {"totalMs", r.timings.total_ms}};
  return j;
}

inline Json to_json(const IntensityHeatMap& ihm) {
  return Json{{"rows", ihm.rows},     {"cols", ihm.cols},   {"scale", ihm.scale},
              {"windowSide", ihm.window_side}, {"stride", ihm.stride}, {"values", ihm.values}};
}

/// Positive cells red, negative blue, brightness by magnitude relative to the
/// largest absolute value; each cell drawn as a `cell` x `cell` square.
inline RasterImage render_ihm(const IntensityHeatMap& ihm, int cell = 4) {
  require(!ihm.empty() && cell > 0, "render_ihm: empty heat map");
  double peak = 0.0;
  for (double v : ihm.values) peak = std::max(peak, std::abs(v));
  RasterImage img(ihm.cols * cell, ihm.rows * cell, 3);
  for (int r = 0; r < ihm.rows; ++r)
    for (int c = 0; c < ihm.cols; ++c) {
      const double v = ihm.at(r, c);
      const auto level = static_cast<std::uint8_t>(peak > 0 ? std::lround(255.0 * std::abs(v) / peak) : 0);
      for (int y = r * cell; y < (r + 1) * cell; ++y)
        for (int x = c * cell; x < (c + 1) * cell; ++x) {
          img.at(x, y, 0) = v > 0 ? level : 0;
          img.at(x, y, 2) = v < 0 ? level : 0;
        }
    }
  return img;
}

/// Draws the quad outline with square brushes of side 2*radius+1.
inline void draw_quad(RasterImage& img, const Quadrilateral& q, std::array<std::uint8_t, 3> color = {0, 255, 0},
                      int radius = 2) {
  require(img.channels == 3, "draw_quad expects an RGB image");
  const auto ring = q.ring();
  for (std::size_t i = 0; i < 4; ++i) {
    const Point p = ring[i], e = ring[(i + 1) % 4];
    const int steps = std::max(1, static_cast<int>(std::ceil(distance(p, e))));
    for (int s = 0; s <= steps; ++s) {
      const Point m = p + (static_cast<double>(s) / steps) * (e - p);
      const int cx = static_cast<int>(std::lround(m.x)), cy = static_cast<int>(std::lround(m.y));
      for (int y = cy - radius; y <= cy + radius; ++y)
        for (int x = cx - radius; x <= cx + radius; ++x)
          if (img.contains(x, y))
            for (int c = 0; c < 3; ++c) img.at(x, y, c) = color[c];
    }
  }
}

} // namespace shotmark
