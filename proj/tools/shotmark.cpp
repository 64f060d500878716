#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "shotmark/shotmark.hpp"

namespace fs = std::filesystem;
using namespace shotmark;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> overrides; // key=value
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "key = value settings file");
  cmd->add_option("--set", c.overrides, "override one setting, e.g. --set alpha=14")->take_all();
}

Settings load_settings(const Common& c) {
  Settings s;
  if (!c.config.empty()) apply_settings(s, read_key_values(c.config));
  KeyValues kv;
  for (const auto& item : c.overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) fail(ErrorKind::InvalidArgument, "--set expects key=value, got '" + item + "'");
    kv[detail::trim(item.substr(0, eq))] = detail::trim(item.substr(eq + 1));
  }
  apply_settings(s, kv);
  return s;
}

BackgroundKind parse_background(const std::string& name) {
  if (name == "solid") return BackgroundKind::Solid;
  if (name == "texture") return BackgroundKind::Texture;
  if (name == "clutter") return BackgroundKind::Clutter;
  fail(ErrorKind::InvalidArgument, "background must be solid, texture or clutter");
}

std::pair<int, int> parse_size(const std::string& text) {
  const auto x = text.find('x');
  if (x == std::string::npos) fail(ErrorKind::InvalidArgument, "size must look like WIDTHxHEIGHT");
  return {detail::parse_int("size", text.substr(0, x)), detail::parse_int("size", text.substr(x + 1))};
}

fs::path sidecar(const fs::path& image, const std::string& suffix) {
  fs::path p = image;
  p.replace_extension(suffix);
  return p;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Screen-shot robust watermark localization"};
  app.require_subcommand(1);

  // synthesize
  std::string syn_out, syn_size = "2560x1536";
  std::uint64_t syn_seed = 1;
  auto* syn = app.add_subcommand("synthesize", "Render a procedural test cover");
  syn->add_option("--out", syn_out, "output image")->required();
  syn->add_option("--size", syn_size, "WIDTHxHEIGHT");
  syn->add_option("--seed", syn_seed, "random seed");

  // embed
  Common emb_common;
  std::string emb_in, emb_out, emb_payload;
  std::optional<double> emb_psnr;
  auto* emb = app.add_subcommand("embed", "Mark the margin blocks (and optionally embed a payload)");
  emb->add_option("--in", emb_in, "cover image")->required();
  emb->add_option("--out", emb_out, "marked image")->required();
  emb->add_option("--psnr", emb_psnr, "target PSNR T in dB; blocks land in [T-1, T]");
  emb->add_option("--payload", emb_payload, "payload as hex, written into the interior blocks");
  add_common(emb, emb_common);

  // simulate
  std::string sim_in, sim_out, sim_truth, sim_manifest, sim_background = "clutter";
  ShotConfig sim_cfg = phone_capture();
  double sim_jpeg = sim_cfg.jpeg_quality.value_or(0);
  auto* sim = app.add_subcommand("simulate", "Composite a marked image into a synthetic shot");
  sim->add_option("--in", sim_in, "marked image")->required();
  sim->add_option("--out", sim_out, "shot image")->required();
  sim->add_option("--area", sim_cfg.area_proportion, "area proportion of the content in the shot")->required();
  sim->add_option("--angle", sim_cfg.angle_offset_deg, "yaw angle offset in degrees")->required();
  sim->add_option("--seed", sim_cfg.seed, "random seed");
  sim->add_option("--gain", sim_cfg.illumination_gain, "illumination gain");
  sim->add_option("--gamma", sim_cfg.illumination_gamma, "illumination gamma");
  sim->add_option("--noise", sim_cfg.noise_sigma, "Gaussian noise sigma in gray levels");
  sim->add_option("--blur", sim_cfg.blur_sigma, "optical blur sigma in sensor pixels");
  sim->add_option("--jpeg", sim_jpeg, "JPEG quality, 0 disables");
  sim->add_option("--background", sim_background, "solid, texture or clutter");
  sim->add_option("--sensor", sim_cfg.sensor_pixels, "sensor size in pixels");
  sim->add_option("--content-scale", sim_cfg.content_scale, "fixed content scale; sizes the canvas instead");
  sim->add_option("--truth", sim_truth, "truth quad JSON (default: next to the shot)");
  sim->add_option("--manifest", sim_manifest, "append a row to this corpus manifest CSV");

  // locate
  Common loc_common;
  std::string loc_in, loc_report, loc_annotate, loc_rectified, loc_ihm;
  auto* loc = app.add_subcommand("locate", "Find the marked region in a shot");
  loc->add_option("--in", loc_in, "shot image")->required();
  loc->add_option("--report", loc_report, "JSON report (default: stdout)");
  loc->add_option("--annotate", loc_annotate, "copy of the shot with the quad drawn");
  loc->add_option("--rectified", loc_rectified, "perspective-corrected region");
  loc->add_option("--ihm", loc_ihm, "heat map PNG at the decided scale");
  add_common(loc, loc_common);

  // extract
  Common ext_common;
  std::string ext_in, ext_quad, ext_out, ext_expected, ext_nominal, ext_report;
  int ext_bits = 16;
  auto* ext = app.add_subcommand("extract", "Rectify a located region and read its payload");
  ext->add_option("--in", ext_in, "shot image")->required();
  ext->add_option("--quad", ext_quad, "quad JSON (a locate report or truth sidecar)")->required();
  ext->add_option("--payload-out", ext_out, "file receiving the payload as hex")->required();
  ext->add_option("--bits", ext_bits, "payload length in bits");
  ext->add_option("--nominal", ext_nominal, "marked image size WIDTHxHEIGHT");
  ext->add_option("--expected", ext_expected, "embedded payload as hex, for NC");
  ext->add_option("--report", ext_report, "JSON report (default: stdout)");
  add_common(ext, ext_common);

  // eval
  Common ev_common;
  std::string ev_manifest, ev_grid = "psnr=34.5;area=0.3,0.4,0.5;angle=0,10,20", ev_csv, ev_summary,
                           ev_payload = "a5c3";
  std::uint64_t ev_seed = 1;
  unsigned ev_threads = 1;
  bool ev_timings = false;
  auto* ev = app.add_subcommand("eval", "Sweep a corpus over PSNR, area and angle");
  ev->add_option("--manifest", ev_manifest, "CSV with columns image_id,path")->required();
  ev->add_option("--grid", ev_grid, "e.g. psnr=34.5;area=0.3,0.5;angle=0,20;shots=2");
  ev->add_option("--csv", ev_csv, "per-shot records")->required();
  ev->add_option("--summary", ev_summary, "per-cell means");
  ev->add_option("--payload", ev_payload, "payload as hex");
  ev->add_option("--seed", ev_seed, "random seed");
  ev->add_option("--threads", ev_threads, "corpus entries processed concurrently");
  ev->add_flag("--timings", ev_timings, "add runtime_ms (makes the CSV run-dependent)");
  add_common(ev, ev_common);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*syn) {
      const auto [w, h] = parse_size(syn_size);
      write_image(syn_out, synthesize_natural(w, h, syn_seed));
    } else if (*emb) {
      Settings s = load_settings(emb_common);
      if (emb_psnr) s.mark.target_psnr = *emb_psnr;
      RasterImage img = read_image(emb_in);
      if (!emb_payload.empty()) img = embed_payload(img, payload_from_hex(emb_payload), s.mark.block_side);
      const RasterImage cover = read_image(emb_in);
      const MarkResult r = mark_image(img, s.mark);
      write_image(emb_out, r.marked);
      std::cout << Json{{"psnr", psnr(cover, r.marked)},
                        {"blocks", r.blocks},
                        {"convergedBlocks", r.converged_blocks},
                        {"targetPsnr", s.mark.target_psnr}}
                       .dump(2)
                << '\n';
    } else if (*sim) {
      sim_cfg.background = parse_background(sim_background);
      if (sim_jpeg > 0) sim_cfg.jpeg_quality = static_cast<int>(sim_jpeg);
      else sim_cfg.jpeg_quality.reset();
      const Shot shot = simulate_shot(read_image(sim_in), sim_cfg);
      write_image(sim_out, shot.image);
      const fs::path truth = sim_truth.empty() ? sidecar(sim_out, ".truth.json") : fs::path(sim_truth);
      write_json(truth, to_json(shot.truth));
      if (!sim_manifest.empty()) {
        const bool fresh = !fs::exists(sim_manifest);
        std::ofstream m(sim_manifest, std::ios::app);
        if (!m) fail(ErrorKind::Io, "cannot write '" + sim_manifest + "'");
        if (fresh) m << "file,config,truth\n";
        m << sim_out << ",area=" << sim_cfg.area_proportion << ";angle=" << sim_cfg.angle_offset_deg
          << ";seed=" << sim_cfg.seed << ',' << truth.string() << '\n';
      }
    } else if (*loc) {
      const Settings s = load_settings(loc_common);
      const RasterImage shot = read_image(loc_in);
      PipelineResult r = run_pipeline(shot, s.pipeline);
      const Json j = to_json(r);
      if (loc_report.empty()) std::cout << j.dump(2) << '\n';
      else write_json(loc_report, j);
      if (!loc_annotate.empty()) {
        RasterImage canvas = shot.channels == 3 ? shot : convert<std::uint8_t>(Raster<float>(shot.width, shot.height, 3));
        if (shot.channels == 1)
          for (std::size_t i = 0; i < shot.pixel_count(); ++i)
            for (int c = 0; c < 3; ++c) canvas.data[3 * i + c] = shot.data[i];
        if (r.found()) draw_quad(canvas, r.best->quad);
        write_image(loc_annotate, canvas);
      }
      if (!loc_rectified.empty() && r.found()) write_image(loc_rectified, rectify(shot, r.best->quad));
      if (!loc_ihm.empty() && r.decision >= 0) write_image(loc_ihm, render_ihm(r.sweep.ihms[r.decision]));
    } else if (*ext) {
      Settings s = load_settings(ext_common);
      const RasterImage shot = read_image(ext_in);
      Json qj = read_json(ext_quad);
      if (qj.contains("quad")) qj = qj["quad"];
      if (qj.is_null()) fail(ErrorKind::InvalidArgument, "'" + ext_quad + "' holds no quad");
      ExtractParams p = s.pipeline.payload;
      p.payload_bits = ext_bits;
      if (!ext_nominal.empty()) std::tie(p.nominal_width, p.nominal_height) = parse_size(ext_nominal);
      const ExtractionReport rep = extract_payload(rectify(shot, quad_from_json(qj)), p);
      std::optional<double> ncv;
      if (!ext_expected.empty()) {
        WatermarkPayload expected = payload_from_hex(ext_expected);
        expected.bits.resize(rep.payload.size(), 0);
        ncv = nc(expected, rep.payload);
      }
      std::ofstream(ext_out) << payload_to_hex(rep.payload) << '\n';
      const Json j = to_json(rep, ncv);
      if (ext_report.empty()) std::cout << j.dump(2) << '\n';
      else write_json(ext_report, j);
    } else if (*ev) {
      EvalOptions opt;
      opt.settings = load_settings(ev_common);
      opt.shot = phone_capture();
      opt.payload = payload_from_hex(ev_payload);
      opt.seed = ev_seed;
      opt.threads = ev_threads;
      opt.on_record = [](const EvalRecord& r) {
        std::cerr << r.image_id << " T=" << r.psnr_constraint << " area=" << r.area_proportion
                  << " angle=" << r.angle_offset << " shot=" << r.shot << ": " << r.status << " iou=" << r.iou
                  << '\n';
      };
      const auto records = eval_sweep(read_manifest(ev_manifest), parse_grid(ev_grid), opt);
      std::ofstream csv(ev_csv);
      if (!csv) fail(ErrorKind::Io, "cannot write '" + ev_csv + "'");
      write_records_csv(csv, records, ev_timings);
      if (!ev_summary.empty()) {
        std::ofstream sum(ev_summary);
        if (!sum) fail(ErrorKind::Io, "cannot write '" + ev_summary + "'");
        write_summary_csv(sum, summarize(records));
      }
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return e.kind() == ErrorKind::Io ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
