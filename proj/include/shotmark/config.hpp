#pragma once

// Flat key/value settings files: one `key = value` per line, `#` comments.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "shotmark/error.hpp"
#include "shotmark/pipeline.hpp"

namespace shotmark {

using KeyValues = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline double parse_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorKind::InvalidArgument, "setting '" + key + "': not a number: '" + text + "'");
}

inline int parse_int(const std::string& key, const std::string& text) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    fail(ErrorKind::InvalidArgument, "setting '" + key + "': not an integer: '" + text + "'");
  return v;
}

} // namespace detail

inline std::vector<double> parse_number_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(detail::parse_double(key, detail::trim(item)));
  if (out.empty()) fail(ErrorKind::InvalidArgument, "setting '" + key + "': empty list");
  return out;
}

inline KeyValues parse_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::InvalidArgument, "config line " + std::to_string(number) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    if (key.empty()) fail(ErrorKind::InvalidArgument, "config line " + std::to_string(number) + ": empty key");
    kv[key] = detail::trim(line.substr(eq + 1));
  }
  return kv;
}

inline KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open config '" + path.string() + "'");
  return parse_key_values(in);
}

/// Every tunable of the marking and detection pipeline in one place.
struct Settings {
  MarkParams mark{};
  PipelineParams pipeline{};

  /// Copies the marking geometry into the detector, which must look for the
  /// same sectors the embedder writes.
  void sync() {
    pipeline.detect.mark = mark;
    pipeline.detect.window_side = mark.block_side;
    pipeline.payload.block_side = mark.block_side;
  }
};

/// Applies recognized keys; unknown keys are an error so typos surface.
inline void apply_settings(Settings& s, const KeyValues& kv) {
  using detail::parse_double;
  using detail::parse_int;
  auto& d = s.pipeline.detect;
  auto& b = s.pipeline.bbox;
  for (const auto& [key, value] : kv) {
    if (key == "target_psnr") s.mark.target_psnr = parse_double(key, value);
    else if (key == "block_side") s.mark.block_side = parse_int(key, value);
    else if (key == "radius_min") s.mark.radius_min = parse_double(key, value);
    else if (key == "radius_max") s.mark.radius_max = parse_double(key, value);
    else if (key == "radius_step") s.mark.radius_step = parse_double(key, value);
    else if (key == "angle_min") s.mark.angle_min_deg = parse_double(key, value);
    else if (key == "angle_max") s.mark.angle_max_deg = parse_double(key, value);
    else if (key == "angle_step") s.mark.angle_step_deg = parse_double(key, value);
    else if (key == "max_iterations") s.mark.max_iterations = parse_int(key, value);
    else if (key == "stride") d.stride = parse_int(key, value);
    else if (key == "scales") d.scales = parse_number_list(key, value);
    else if (key == "ihm_threshold") d.threshold = parse_int(key, value);
    else if (key == "top_count") d.top_count = parse_int(key, value);
    else if (key == "angle_margin") d.angle_margin_deg = parse_double(key, value);
    else if (key == "wiener_window") d.wiener_window = parse_int(key, value);
    else if (key == "min_peak_ratio") d.min_peak_ratio = parse_double(key, value);
    else if (key == "threads") d.threads = static_cast<unsigned>(parse_int(key, value));
    else if (key == "alpha") b.alpha = parse_int(key, value);
    else if (key == "beta") b.beta = parse_int(key, value);
    else if (key == "ap_lambda") b.ap_lambda = parse_double(key, value);
    else if (key == "scales_considered") b.scales_considered = parse_int(key, value);
    else if (key == "min_cluster_span") b.min_cluster_span = parse_double(key, value);
    else if (key == "support_radius") b.support_radius = parse_double(key, value);
    else if (key == "min_support") s.pipeline.min_support = parse_double(key, value);
    else if (key == "min_dominance") s.pipeline.min_dominance = parse_double(key, value);
    else if (key == "min_signed_cells") s.pipeline.min_signed_cells = parse_int(key, value);
    else if (key == "payload_bits") s.pipeline.payload.payload_bits = parse_int(key, value);
    else if (key == "payload_stride") s.pipeline.payload.stride = parse_int(key, value);
    else if (key == "bin_reach") s.pipeline.payload.bin_reach = parse_int(key, value);
    else if (key == "vote_threshold") s.pipeline.payload.vote_threshold = parse_double(key, value);
    else fail(ErrorKind::InvalidArgument, "unknown setting '" + key + "'");
  }
  if (b.alpha < 1 || b.beta < b.alpha) fail(ErrorKind::InvalidArgument, "peak counts need 1 <= alpha <= beta");
  s.sync();
}

} // namespace shotmark
