#pragma once

// Corpus evaluation: mark covers, simulate shots over a parameter grid, run
// the pipeline and tabulate IoU and payload NC.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "shotmark/config.hpp"
#include "shotmark/embedder.hpp"
#include "shotmark/io.hpp"
#include "shotmark/metrics.hpp"
#include "shotmark/pipeline.hpp"
#include "shotmark/rectify.hpp"
#include "shotmark/simulator.hpp"

namespace shotmark {

struct EvalGrid {
  std::vector<double> psnr{34.5};
  std::vector<double> areas{0.3, 0.4, 0.5};
  std::vector<double> angles{0.0, 10.0, 20.0};
  int shots_per_cell = 1;
};

/// "psnr=34.5,37.5;area=0.3,0.5;angle=0,20;shots=2". Omitted keys keep their
/// defaults.
inline EvalGrid parse_grid(const std::string& text) {
  EvalGrid g;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ';')) {
    part = detail::trim(part);
    if (part.empty()) continue;
    const auto eq = part.find('=');
    if (eq == std::string::npos) fail(ErrorKind::InvalidArgument, "grid: expected key=values in '" + part + "'");
    const std::string key = detail::trim(part.substr(0, eq)), value = part.substr(eq + 1);
    if (key == "psnr") g.psnr = parse_number_list(key, value);
    else if (key == "area") g.areas = parse_number_list(key, value);
    else if (key == "angle") g.angles = parse_number_list(key, value);
    else if (key == "shots") g.shots_per_cell = detail::parse_int(key, detail::trim(value));
    else fail(ErrorKind::InvalidArgument, "grid: unknown key '" + key + "'");
  }
  if (g.shots_per_cell < 1) fail(ErrorKind::InvalidArgument, "grid: shots must be at least 1");
  return g;
}

struct CorpusEntry {
  std::string image_id;
  std::filesystem::path path;
  std::optional<RasterImage> image; ///< used instead of `path` when present
};

/// CSV with header `image_id,path`; relative paths resolve against the
/// manifest's directory.
inline std::vector<CorpusEntry> read_manifest(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) fail(ErrorKind::Io, "cannot open manifest '" + manifest.string() + "'");
  std::vector<CorpusEntry> out;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      if (line.rfind("image_id", 0) == 0) continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) fail(ErrorKind::InvalidArgument, "manifest row without a path: '" + line + "'");
    std::filesystem::path p = detail::trim(line.substr(comma + 1));
    if (p.is_relative()) p = manifest.parent_path() / p;
    out.push_back({detail::trim(line.substr(0, comma)), p, std::nullopt});
  }
  return out;
}

struct EvalRecord {
  std::string image_id;
  int shot = 0;
  double psnr_constraint = 0.0;
  double area_proportion = 0.0;
  double angle_offset = 0.0;
  std::string status;
  double iou = 0.0;
  std::optional<double> nc;
  double runtime_ms = 0.0;
};

struct EvalOptions {
  ShotConfig shot{};           ///< distortion template; area, angle and seed are set per shot
  Settings settings{};
  WatermarkPayload payload = payload_from_hex("a5c3");
  std::uint64_t seed = 1;
  unsigned threads = 1;        ///< corpus entries processed concurrently
  std::function<void(const EvalRecord&)> on_record; ///< called serially as rows complete
};

/// Capture conditions of a handheld phone shot: mild exposure change, sensor
/// noise and JPEG storage.
inline ShotConfig phone_capture() {
  ShotConfig c;
  c.illumination_gain = 0.92;
  c.illumination_gamma = 1.08;
  c.noise_sigma = 2.0;
  c.jpeg_quality = 90;
  c.background = BackgroundKind::Clutter;
  return c;
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> parts) {
  auto splitmix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  };
  std::uint64_t h = splitmix(seed);
  for (auto p : parts) h = splitmix(h ^ p);
  return h;
}

/// Cover plus payload plus localization marks at one PSNR target.
inline RasterImage prepare_marked(const RasterImage& cover, const WatermarkPayload& payload,
                                  MarkParams mark, double target_psnr) {
  mark.target_psnr = target_psnr;
  return mark_image(embed_payload(cover, payload, mark.block_side), mark).marked;
}

inline EvalRecord evaluate_shot(const RasterImage& marked, const std::string& image_id, int shot_index,
                                double psnr, double area, double angle, std::uint64_t seed,
                                const EvalOptions& opt, unsigned pipeline_threads) {
  const auto t0 = std::chrono::steady_clock::now();
  ShotConfig cfg = opt.shot;
  cfg.area_proportion = area;
  cfg.angle_offset_deg = angle;
  cfg.seed = seed;
  const Shot shot = simulate_shot(marked, cfg);

  PipelineParams params = opt.settings.pipeline;
  params.detect.threads = pipeline_threads;
  params.extract = true;
  params.payload.payload_bits = static_cast<int>(opt.payload.size());
  params.payload.nominal_width = marked.width;
  params.payload.nominal_height = marked.height;
  const PipelineResult res = run_pipeline(shot.image, params);

  EvalRecord rec{image_id, shot_index, psnr, area, angle, to_string(res.status)};
  if (res.found()) {
    rec.iou = iou(res.best->quad, shot.truth);
    if (res.extraction) rec.nc = nc(opt.payload, res.extraction->payload);
  }
  rec.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

/// One record per (entry, psnr, area, angle, shot), in that nesting order
/// regardless of threading. Unreadable entries are skipped with a warning.
inline std::vector<EvalRecord> eval_sweep(const std::vector<CorpusEntry>& corpus, const EvalGrid& grid,
                                          const EvalOptions& opt = {}) {
  std::vector<std::vector<EvalRecord>> per_entry(corpus.size());
  std::mutex report;
  const unsigned inner = opt.threads > 1 ? 1u : opt.settings.pipeline.detect.threads;
  detail::parallel_for(static_cast<int>(corpus.size()), std::max(1u, opt.threads), [&](int i) {
    const CorpusEntry& entry = corpus[i];
    RasterImage cover;
    try {
      cover = entry.image ? *entry.image : read_image(entry.path);
    } catch (const Error& e) {
      std::lock_guard lock(report);
      std::cerr << "warning: skipping '" << entry.image_id << "': " << e.what() << '\n';
      return;
    }
    for (std::size_t p = 0; p < grid.psnr.size(); ++p) {
      const RasterImage marked = prepare_marked(cover, opt.payload, opt.settings.mark, grid.psnr[p]);
      for (std::size_t a = 0; a < grid.areas.size(); ++a)
        for (std::size_t g = 0; g < grid.angles.size(); ++g)
          for (int k = 0; k < grid.shots_per_cell; ++k) {
            const std::uint64_t seed = mix_seed(opt.seed, {std::uint64_t(i), p, a, g, std::uint64_t(k)});
            EvalRecord rec = evaluate_shot(marked, entry.image_id, k, grid.psnr[p], grid.areas[a],
                                           grid.angles[g], seed, opt, inner);
            std::lock_guard lock(report);
            if (opt.on_record) opt.on_record(rec);
            per_entry[i].push_back(std::move(rec));
          }
    }
  });
  std::vector<EvalRecord> out;
  for (auto& v : per_entry)
    for (auto& r : v) out.push_back(std::move(r));
  return out;
}

namespace detail {

inline std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

} // namespace detail

/// Columns follow EvalRecord; runtime_ms only when asked for, since it varies
/// between otherwise identical runs.
inline void write_records_csv(std::ostream& out, const std::vector<EvalRecord>& records, bool timings = false) {
  out << "image_id,shot,psnr_constraint,area_proportion,angle_offset,status,iou,nc";
  if (timings) out << ",runtime_ms";
  out << '\n';
  for (const auto& r : records) {
    out << r.image_id << ',' << r.shot << ',' << detail::fmt(r.psnr_constraint, 2) << ','
        << detail::fmt(r.area_proportion, 3) << ',' << detail::fmt(r.angle_offset, 2) << ',' << r.status << ','
        << detail::fmt(r.iou) << ',' << (r.nc ? detail::fmt(*r.nc) : std::string());
    if (timings) out << ',' << detail::fmt(r.runtime_ms, 1);
    out << '\n';
  }
}

struct CellSummary {
  double psnr_constraint = 0.0;
  double area_proportion = 0.0;
  double angle_offset = 0.0;
  int shots = 0;
  int found = 0;
  double mean_iou = 0.0;
  double mean_nc = 0.0; ///< missing NC counts as 0
};

inline std::vector<CellSummary> summarize(const std::vector<EvalRecord>& records) {
  std::map<std::tuple<double, double, double>, CellSummary> cells;
  for (const auto& r : records) {
    auto& c = cells[{r.psnr_constraint, r.area_proportion, r.angle_offset}];
    c.psnr_constraint = r.psnr_constraint;
    c.area_proportion = r.area_proportion;
    c.angle_offset = r.angle_offset;
    ++c.shots;
    c.found += r.status == to_string(Status::Found);
    c.mean_iou += r.iou;
    c.mean_nc += r.nc.value_or(0.0);
  }
  std::vector<CellSummary> out;
  for (auto& [key, c] : cells) {
    c.mean_iou /= c.shots;
    c.mean_nc /= c.shots;
    out.push_back(c);
  }
  return out;
}

inline void write_summary_csv(std::ostream& out, const std::vector<CellSummary>& cells) {
  out << "psnr_constraint,area_proportion,angle_offset,shots,found,mean_iou,mean_nc\n";
  for (const auto& c : cells)
    out << detail::fmt(c.psnr_constraint, 2) << ',' << detail::fmt(c.area_proportion, 3) << ','
        << detail::fmt(c.angle_offset, 2) << ',' << c.shots << ',' << c.found << ',' << detail::fmt(c.mean_iou)
        << ',' << detail::fmt(c.mean_nc) << '\n';
}

} // namespace shotmark
