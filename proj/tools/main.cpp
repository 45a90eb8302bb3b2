// Copyright (c) 2026 the proxyrender authors
// SPDX-License-Identifier: Apache-2.0
//
// proxyrender command-line interface. Each subcommand is a thin wrapper over
// one library operation; every random choice flows through an explicit
// --seed, so any invocation is bit-reproducible.
//
// Exit codes: 0 success, 1 internal error, 2 input error (bad flags, missing
// or malformed files, mismatched shapes), 3 quality-threshold failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "proxyrender/conditioning.hpp"
#include "proxyrender/coordmap.hpp"
#include "proxyrender/errors.hpp"
#include "proxyrender/evalharness.hpp"
#include "proxyrender/geometry.hpp"
#include "proxyrender/image_io.hpp"
#include "proxyrender/metrics.hpp"
#include "proxyrender/model.hpp"
#include "proxyrender/rope3d.hpp"
#include "proxyrender/synthdata.hpp"
#include "proxyrender/tensor.hpp"
#include "proxyrender/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;
constexpr int kExitThreshold = 3;

/// JSON config files for CLI11: top-level keys are subcommand names, nested
/// objects follow nested subcommands, leaves are long option names without
/// the leading dashes. Command-line flags take precedence over file values.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override {
    return "{}\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j = json::parse(input, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw CLI::FileError("config file is not a JSON object");
    }
    std::vector<CLI::ConfigItem> items;
    walk(j, {}, items);
    return items;
  }

 private:
  static void walk(const json& j, const std::vector<std::string>& parents,
                   std::vector<CLI::ConfigItem>& items) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it->is_object()) {
        std::vector<std::string> next = parents;
        next.push_back(it.key());
        walk(*it, next, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = it.key();
      if (it->is_array()) {
        for (const json& v : *it) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(*it));
      }
      items.push_back(std::move(item));
    }
  }

  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }
};

void require_file(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) {
    throw prox::IoError("missing " + what + ": " + path);
  }
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw prox::IoError("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw prox::IoError("write failed: " + path.string());
}

std::string numbered(const char* stem, std::size_t i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%04zu%s", stem, i, ext);
  return buf;
}

/// A proxy is either a triangle mesh (.obj) or a point cloud (.ply); both
/// render to the same coordinate-map representation.
struct ProxyGeometry {
  prox::ObjectFrame frame;
  std::function<prox::CoordinateMap(const prox::Camera&)> render;
};

ProxyGeometry load_proxy(const std::string& path, double splat_radius) {
  require_file(path, "proxy file");
  const std::string ext = fs::path(path).extension().string();
  if (ext == ".obj") {
    auto mesh = std::make_shared<prox::TriangleMesh>(prox::load_obj(path));
    const prox::ObjectFrame frame = prox::normalize_object(*mesh);
    return {frame, [mesh, frame](const prox::Camera& cam) {
              return prox::rasterize_mesh(*mesh, frame, cam);
            }};
  }
  if (ext == ".ply") {
    auto cloud = std::make_shared<prox::PointCloud>(prox::load_ply(path));
    const prox::ObjectFrame frame = prox::normalize_object(*cloud);
    return {frame, [cloud, frame, splat_radius](const prox::Camera& cam) {
              return prox::splat_points(*cloud, frame, cam, splat_radius);
            }};
  }
  throw prox::InvalidInput("proxy must be a .obj mesh or .ply point cloud: " + path);
}

// ---------------------------------------------------------------------------
// rope dump

struct RopeDumpOpts {
  int n = 1;
  int m = 1;
  int g = 3;
};

int run_rope_dump(const RopeDumpOpts& o) {
  const std::vector<std::int64_t> idx = prox::temporal_indices(o.n, o.m, o.g);
  std::cout << json(idx).dump() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// coordmap render

struct CoordmapOpts {
  std::string proxy;
  std::string camera;
  std::string trajectory;
  std::string out_dir;
  double splat_radius = 1.5;
};

int run_coordmap_render(const CoordmapOpts& o) {
  if (o.camera.empty() == o.trajectory.empty()) {
    throw prox::InvalidInput("coordmap render: pass exactly one of --camera or --trajectory");
  }
  const ProxyGeometry geo = load_proxy(o.proxy, o.splat_radius);

  std::vector<prox::Camera> cameras;
  if (!o.camera.empty()) {
    require_file(o.camera, "camera file");
    cameras.push_back(prox::load_camera(o.camera));
  } else {
    require_file(o.trajectory, "trajectory file");
    cameras = prox::load_trajectory(o.trajectory);
  }
  if (cameras.empty()) throw prox::InvalidInput("trajectory has no cameras");

  const fs::path dir(o.out_dir);
  fs::create_directories(dir);
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    cameras[i].validate();
    const prox::CoordinateMap map = geo.render(cameras[i]);
    prox::write_png((dir / numbered("coordmap", i, ".png")).string(),
                    prox::coordmap_to_image(map));
    prox::write_tensor_file((dir / numbered("coordmap", i, ".gort")).string(),
                            map.to_tensor());
  }
  std::cout << "wrote " << cameras.size() << " coordinate map(s) to " << o.out_dir << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// dataset generate

int run_dataset_generate(const prox::DatasetConfig& cfg, const std::string& out_dir) {
  const std::vector<prox::DatasetSample> samples = prox::generate_dataset(cfg);
  prox::write_dataset(samples, out_dir);
  std::cout << "wrote " << samples.size() << " sample(s) to " << out_dir << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train

struct TrainOpts {
  std::string data_dir;
  std::string out_path;
  std::string loss_csv;
  std::uint64_t model_seed = 0;
  prox::ModelConfig model;
  prox::TrainConfig tcfg;
};

int run_train(const TrainOpts& o) {
  require_file(o.data_dir, "dataset directory");
  const std::vector<prox::DatasetSample> data = prox::read_dataset(o.data_dir);

  prox::MiniDiT<float> model(o.model, o.model_seed);
  const prox::TrainResult result = prox::train(model, data, o.tcfg, &std::cout);

  const fs::path out(o.out_path);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  prox::save_checkpoint(model, o.out_path);

  if (!o.loss_csv.empty()) {
    std::string csv = "step,loss\n";
    for (std::size_t i = 0; i < result.loss_curve.size(); ++i) {
      char row[64];
      std::snprintf(row, sizeof row, "%zu,%.6f\n", i, result.loss_curve[i]);
      csv += row;
    }
    write_text_file(o.loss_csv, csv);
  }

  char summary[160];
  std::snprintf(summary, sizeof summary,
                "trained %d step(s): initial loss %.6f, final smoothed loss %.6f\n",
                result.steps_run, result.initial_loss, result.final_smoothed_loss);
  std::cout << summary << "checkpoint: " << o.out_path << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sample

struct SampleOpts {
  std::string checkpoint;
  std::string data_dir;
  std::string out_dir;
  std::size_t index = 0;
  prox::SamplerConfig scfg;
};

int run_sample(const SampleOpts& o) {
  require_file(o.checkpoint, "checkpoint file");
  require_file(o.data_dir, "dataset directory");
  const std::vector<prox::DatasetSample> data = prox::read_dataset(o.data_dir);
  if (o.index >= data.size()) {
    throw prox::InvalidInput("sample index " + std::to_string(o.index) +
                             " out of range (dataset has " + std::to_string(data.size()) +
                             " samples)");
  }
  const prox::MiniDiT<float> model = prox::load_checkpoint(o.checkpoint);
  const prox::DatasetSample& s = data[o.index];
  const std::vector<prox::Tensor> frames =
      prox::sample_frames(model, s.refs, s.target_maps, std::nullopt, o.scfg);

  const fs::path dir(o.out_dir);
  fs::create_directories(dir);
  double psnr_sum = 0.0;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    prox::write_png((dir / numbered("frame", f, ".png")).string(), frames[f]);
    psnr_sum += prox::psnr(frames[f], s.target_images[f]);
  }
  char line[128];
  std::snprintf(line, sizeof line, "wrote %zu frame(s); mean PSNR vs targets %.3f dB\n",
                frames.size(), psnr_sum / static_cast<double>(frames.size()));
  std::cout << line;
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval / ablate perturb (robustness sweep)

struct EvalOpts {
  std::string checkpoint;
  std::string data_dir;
  std::string csv_path;
  std::string json_path;
  std::vector<double> sigmas;
  std::uint64_t seed = 0;
  bool foreground_only = false;
  double min_psnr = -1.0;
  double min_ssim = -1.0;
  prox::SamplerConfig scfg;
};

int run_sweep(const EvalOpts& o) {
  require_file(o.checkpoint, "checkpoint file");
  require_file(o.data_dir, "dataset directory");
  const prox::MiniDiT<float> model = prox::load_checkpoint(o.checkpoint);
  const std::vector<prox::DatasetSample> data = prox::read_dataset(o.data_dir);

  const std::vector<prox::SweepRow> rows =
      prox::robustness_sweep(model, data, o.sigmas, o.scfg, o.seed, o.foreground_only);

  std::cout << prox::sweep_to_csv(rows);
  if (!o.csv_path.empty()) write_text_file(o.csv_path, prox::sweep_to_csv(rows));
  if (!o.json_path.empty()) write_text_file(o.json_path, prox::sweep_to_json(rows) + "\n");

  // Thresholds apply to the unperturbed row (always sigmas.front() == 0 for
  // `eval`, which fixes sigmas = {0}).
  const prox::SweepRow& base = rows.front();
  if (o.min_psnr >= 0.0 && base.mean_psnr < o.min_psnr) {
    std::cerr << "threshold not met: mean PSNR " << base.mean_psnr << " < " << o.min_psnr
              << "\n";
    return kExitThreshold;
  }
  if (o.min_ssim >= 0.0 && base.mean_ssim < o.min_ssim) {
    std::cerr << "threshold not met: mean SSIM " << base.mean_ssim << " < " << o.min_ssim
              << "\n";
    return kExitThreshold;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// ablate g

struct AblateGOpts {
  std::string data_dir;
  std::string csv_path;
  std::string json_path;
  std::vector<int> gaps = {0, 1, 3, 5, 10};
  std::uint64_t model_seed = 0;
  prox::ModelConfig model;
  prox::TrainConfig tcfg;
  prox::SamplerConfig scfg;
};

int run_ablate_g(const AblateGOpts& o) {
  require_file(o.data_dir, "dataset directory");
  const std::vector<prox::DatasetSample> data = prox::read_dataset(o.data_dir);
  const std::vector<prox::AblationRow> rows =
      prox::g_ablation(data, o.gaps, o.model, o.tcfg, o.scfg, o.model_seed);

  std::cout << prox::ablation_to_csv(rows);
  if (!o.csv_path.empty()) write_text_file(o.csv_path, prox::ablation_to_csv(rows));
  if (!o.json_path.empty()) write_text_file(o.json_path, prox::ablation_to_json(rows) + "\n");
  return kExitOk;
}

// ---------------------------------------------------------------------------
// pipeline run

struct PipelineOpts {
  std::vector<std::string> refs;
  std::string ref_cameras;
  std::string proxy;
  std::string trajectory;
  std::vector<std::string> appearance;
  std::vector<std::string> truth;
  std::string checkpoint;
  std::string out_dir;
  double splat_radius = 1.5;
  bool dry_run = false;
  int patch = 2;  // only used by --dry-run without a checkpoint
  double min_psnr = -1.0;
  double min_ssim = -1.0;
  prox::SamplerConfig scfg;
};

void check_resolution(const prox::Tensor& frame, int width, int height,
                      const std::string& what) {
  if (frame.rank() != 3 || frame.dim(0) != static_cast<std::size_t>(height) ||
      frame.dim(1) != static_cast<std::size_t>(width)) {
    std::ostringstream msg;
    msg << "resolution mismatch: " << what << " is " << frame.dim(1) << "x" << frame.dim(0)
        << ", expected " << width << "x" << height;
    throw prox::InvalidInput(msg.str());
  }
}

std::vector<prox::Tensor> load_frames(const std::vector<std::string>& paths,
                                      const std::string& what) {
  std::vector<prox::Tensor> frames;
  frames.reserve(paths.size());
  for (const std::string& p : paths) {
    require_file(p, what);
    frames.push_back(prox::read_png(p));
  }
  return frames;
}

int run_pipeline(const PipelineOpts& o) {
  // Validate inputs before any heavier work so failures are fast and name
  // the offending file.
  require_file(o.ref_cameras, "reference camera file");
  require_file(o.trajectory, "trajectory file");
  if (!o.dry_run || !o.checkpoint.empty()) {
    require_file(o.checkpoint, "checkpoint file");
    require_file(prox::checkpoint_sidecar_path(o.checkpoint), "checkpoint sidecar");
  }

  const std::vector<prox::Tensor> ref_images = load_frames(o.refs, "reference image");
  const std::vector<prox::Camera> ref_cams = prox::load_trajectory(o.ref_cameras);
  const std::vector<prox::Camera> tgt_cams = prox::load_trajectory(o.trajectory);
  const ProxyGeometry geo = load_proxy(o.proxy, o.splat_radius);

  if (ref_images.empty()) throw prox::InvalidInput("need at least one reference image");
  if (tgt_cams.empty()) throw prox::InvalidInput("trajectory has no cameras");
  if (ref_cams.size() != ref_images.size()) {
    throw prox::InvalidInput("reference count mismatch: " + std::to_string(ref_images.size()) +
                             " image(s) vs " + std::to_string(ref_cams.size()) + " camera(s)");
  }
  const std::vector<prox::Tensor> appearance = load_frames(o.appearance, "appearance frame");
  if (!appearance.empty() && appearance.size() != tgt_cams.size()) {
    throw prox::InvalidInput("appearance frame count mismatch: " +
                             std::to_string(appearance.size()) + " frame(s) for " +
                             std::to_string(tgt_cams.size()) + " target(s)");
  }
  const std::vector<prox::Tensor> truth = load_frames(o.truth, "ground-truth frame");
  if (!truth.empty() && truth.size() != tgt_cams.size()) {
    throw prox::InvalidInput("ground-truth frame count mismatch: " +
                             std::to_string(truth.size()) + " frame(s) for " +
                             std::to_string(tgt_cams.size()) + " target(s)");
  }

  // One resolution everywhere, set by the first reference camera.
  const int width = ref_cams.front().width;
  const int height = ref_cams.front().height;
  for (const prox::Camera& cam : ref_cams) cam.validate();
  for (const prox::Camera& cam : tgt_cams) cam.validate();
  for (std::size_t i = 0; i < ref_cams.size(); ++i) {
    if (ref_cams[i].width != width || ref_cams[i].height != height) {
      throw prox::InvalidInput("resolution mismatch: reference camera " + std::to_string(i));
    }
    check_resolution(ref_images[i], width, height, "reference image " + o.refs[i]);
  }
  for (std::size_t i = 0; i < tgt_cams.size(); ++i) {
    if (tgt_cams[i].width != width || tgt_cams[i].height != height) {
      throw prox::InvalidInput("resolution mismatch: trajectory camera " + std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < appearance.size(); ++i) {
    check_resolution(appearance[i], width, height, "appearance frame " + o.appearance[i]);
  }
  for (std::size_t i = 0; i < truth.size(); ++i) {
    check_resolution(truth[i], width, height, "ground-truth frame " + o.truth[i]);
  }

  // Model config, either from the checkpoint sidecar or (dry runs without a
  // checkpoint) from --patch.
  std::optional<prox::MiniDiT<float>> model;
  int patch = o.patch;
  if (!o.checkpoint.empty()) {
    model.emplace(prox::load_checkpoint(o.checkpoint));
    patch = model->config().patch;
  }
  if (patch < 1 || width % patch != 0 || height % patch != 0) {
    std::ostringstream msg;
    msg << "checkpoint/config mismatch: patch " << patch << " does not divide frame size "
        << width << "x" << height;
    throw prox::InvalidInput(msg.str());
  }

  const std::size_t n = ref_images.size();
  const std::size_t m = tgt_cams.size();
  if (o.dry_run) {
    const int grid_h = height / patch;
    const int grid_w = width / patch;
    const std::size_t per_frame = static_cast<std::size_t>(grid_h) * grid_w;
    json layout{{"n_refs", n},
                {"m_targets", m},
                {"width", width},
                {"height", height},
                {"patch", patch},
                {"grid_h", grid_h},
                {"grid_w", grid_w},
                {"tokens_per_frame", per_frame},
                {"ref_tokens", n * per_frame},
                {"target_tokens", m * per_frame},
                {"total_tokens", (n + m) * per_frame},
                {"ref_token_channels", prox::kRefChannels * patch * patch},
                {"target_token_channels", prox::kTargetChannels * patch * patch},
                {"temporal_indices",
                 prox::temporal_indices(static_cast<int>(n), static_cast<int>(m), o.scfg.gap)}};
    std::cout << layout.dump(2) << "\n";
    return kExitOk;
  }

  // Render coordinate maps for every view, then generate.
  std::vector<prox::ReferenceUnit> units;
  units.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    units.push_back({ref_images[i], geo.render(ref_cams[i])});
  }
  std::vector<prox::CoordinateMap> target_maps;
  target_maps.reserve(m);
  for (const prox::Camera& cam : tgt_cams) target_maps.push_back(geo.render(cam));

  std::optional<std::vector<prox::Tensor>> appearance_opt;
  if (!appearance.empty()) appearance_opt = appearance;
  const std::vector<prox::Tensor> frames =
      prox::sample_frames(*model, units, target_maps, appearance_opt, o.scfg);

  const fs::path dir(o.out_dir);
  fs::create_directories(dir);
  json report{{"n_refs", n},
              {"m_targets", m},
              {"width", width},
              {"height", height},
              {"checkpoint", o.checkpoint},
              {"sampler",
               json{{"steps", o.scfg.steps},
                    {"guidance", o.scfg.guidance},
                    {"seed", o.scfg.seed},
                    {"gap", o.scfg.gap}}}};
  json coordmap_names = json::array();
  json frame_names = json::array();
  for (std::size_t f = 0; f < m; ++f) {
    const std::string map_name = numbered("coordmap", f, ".png");
    const std::string frame_name = numbered("frame", f, ".png");
    prox::write_png((dir / map_name).string(), prox::coordmap_to_image(target_maps[f]));
    prox::write_png((dir / frame_name).string(), frames[f]);
    coordmap_names.push_back(map_name);
    frame_names.push_back(frame_name);
  }
  report["coordmaps"] = coordmap_names;
  report["frames"] = frame_names;

  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  const bool ssim_fits = width >= 11 && height >= 11;
  if (!truth.empty()) {
    json per_frame = json::array();
    for (std::size_t f = 0; f < m; ++f) {
      const double p = prox::psnr(frames[f], truth[f]);
      const double s = ssim_fits ? prox::ssim(frames[f], truth[f]) : 0.0;
      mean_psnr += p;
      mean_ssim += s;
      json entry{{"psnr", p}};
      if (ssim_fits) entry["ssim"] = s;
      per_frame.push_back(entry);
    }
    mean_psnr /= static_cast<double>(m);
    mean_ssim /= static_cast<double>(m);
    report["metrics"] = json{{"mean_psnr", mean_psnr}, {"per_frame", per_frame}};
    if (ssim_fits) report["metrics"]["mean_ssim"] = mean_ssim;
  }
  write_text_file(dir / "report.json", report.dump(2) + "\n");

  std::cout << "wrote " << m << " frame(s) to " << o.out_dir << "\n";
  if (!truth.empty()) {
    char line[96];
    if (ssim_fits) {
      std::snprintf(line, sizeof line, "mean PSNR %.3f dB, mean SSIM %.4f\n", mean_psnr,
                    mean_ssim);
    } else {
      std::snprintf(line, sizeof line, "mean PSNR %.3f dB\n", mean_psnr);
    }
    std::cout << line;
    if (o.min_psnr >= 0.0 && mean_psnr < o.min_psnr) {
      std::cerr << "threshold not met: mean PSNR " << mean_psnr << " < " << o.min_psnr << "\n";
      return kExitThreshold;
    }
    if (o.min_ssim >= 0.0 && ssim_fits && mean_ssim < o.min_ssim) {
      std::cerr << "threshold not met: mean SSIM " << mean_ssim << " < " << o.min_ssim << "\n";
      return kExitThreshold;
    }
  } else if (o.min_psnr >= 0.0 || o.min_ssim >= 0.0) {
    throw prox::InvalidInput("--min-psnr/--min-ssim require --truth frames");
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// flag groups shared by several subcommands

void add_model_flags(CLI::App& cmd, prox::ModelConfig& cfg) {
  cmd.add_option("--dim", cfg.dim, "transformer width");
  cmd.add_option("--depth", cfg.depth, "number of transformer blocks");
  cmd.add_option("--heads", cfg.heads, "attention heads");
  cmd.add_option("--head-dim", cfg.head_dim, "per-head dimension (heads*head_dim == dim)");
  cmd.add_option("--patch", cfg.patch, "patch size");
  cmd.add_option("--theta-base", cfg.theta_base, "rotary frequency base");
}

void add_train_flags(CLI::App& cmd, prox::TrainConfig& cfg) {
  cmd.add_option("--steps", cfg.steps, "optimization steps");
  cmd.add_option("--lr", cfg.lr, "peak learning rate");
  cmd.add_option("--warmup", cfg.warmup_steps, "linear warmup steps");
  cmd.add_option("--weight-decay", cfg.weight_decay, "decoupled weight decay");
  cmd.add_option("--beta1", cfg.beta1, "Adam beta1");
  cmd.add_option("--beta2", cfg.beta2, "Adam beta2");
  cmd.add_option("--adam-eps", cfg.adam_eps, "Adam epsilon");
  cmd.add_option("--cfg-dropout", cfg.cfg_dropout, "reference dropout probability");
  cmd.add_option("--gap", cfg.gap, "temporal index gap for reference tokens");
  cmd.add_option("--seed", cfg.seed, "training seed");
  cmd.add_flag("--shuffle-refs,!--no-shuffle-refs", cfg.shuffle_refs,
               "shuffle reference order per step");
  cmd.add_flag("--augment,!--no-augment", cfg.augment,
               "random scale/translation of proxy coordinates");
  cmd.add_option("--aug-scale-min", cfg.aug_scale_min, "augmentation scale lower bound");
  cmd.add_option("--aug-scale-max", cfg.aug_scale_max, "augmentation scale upper bound");
  cmd.add_option("--aug-translate", cfg.aug_translate, "augmentation translation range");
  cmd.add_option("--appearance-prob", cfg.appearance_prob,
                 "probability of teacher-forced appearance guidance");
  cmd.add_option("--log-every", cfg.log_every, "print loss every N steps (0 = silent)");
  cmd.add_option("--early-stop-fraction", cfg.early_stop_fraction,
                 "stop when smoothed loss < fraction * initial (0 = never)");
  cmd.add_option("--min-steps", cfg.min_steps, "minimum steps before early stop");
}

void add_sampler_flags(CLI::App& cmd, prox::SamplerConfig& cfg, bool with_seed) {
  cmd.add_option("--sample-steps", cfg.steps, "Euler sampling steps");
  cmd.add_option("--guidance", cfg.guidance, "guidance weight (1 = no unconditional pass)");
  if (with_seed) cmd.add_option("--seed", cfg.seed, "sampling noise seed");
  cmd.add_option("--gap", cfg.gap, "temporal index gap for reference tokens");
}

int dispatch(const std::vector<std::pair<const CLI::App*, std::function<int()>>>& runners) {
  for (const auto& [cmd, run] : runners) {
    if (cmd->parsed()) return run();
  }
  return kExitInput;  // unreachable: require_subcommand guarantees a match
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"object-centric video generation from proxy geometry and coordinate maps"};
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON config file (command-line flags take precedence)");
  app.allow_config_extras(true);

  std::vector<std::pair<const CLI::App*, std::function<int()>>> runners;

  // pipeline run
  CLI::App* pipeline = app.add_subcommand("pipeline", "end-to-end generation");
  pipeline->require_subcommand(1);
  {
    auto o = std::make_shared<PipelineOpts>();
    CLI::App* cmd = pipeline->add_subcommand(
        "run", "render coordinate maps for a trajectory and generate frames");
    cmd->add_option("--refs", o->refs, "reference image PNGs")->required();
    cmd->add_option("--ref-cameras", o->ref_cameras,
                    "JSON camera array for the references")
        ->required();
    cmd->add_option("--proxy", o->proxy, "proxy geometry (.obj mesh or .ply point cloud)")
        ->required();
    cmd->add_option("--trajectory", o->trajectory, "JSON camera array for the targets")
        ->required();
    cmd->add_option("--appearance", o->appearance, "optional appearance-guidance PNGs");
    cmd->add_option("--truth", o->truth, "ground-truth PNGs (enables the metrics report)");
    cmd->add_option("--checkpoint", o->checkpoint, "model checkpoint");
    cmd->add_option("--out", o->out_dir, "output directory")->required();
    cmd->add_option("--splat-radius", o->splat_radius, "point-splat radius in pixels");
    cmd->add_flag("--dry-run", o->dry_run,
                  "validate inputs and print the token layout without inference");
    cmd->add_option("--patch", o->patch, "patch size for --dry-run without a checkpoint");
    cmd->add_option("--min-psnr", o->min_psnr, "fail (exit 3) below this mean PSNR");
    cmd->add_option("--min-ssim", o->min_ssim, "fail (exit 3) below this mean SSIM");
    add_sampler_flags(*cmd, o->scfg, /*with_seed=*/true);
    runners.emplace_back(cmd, [o] { return run_pipeline(*o); });
  }

  // coordmap render
  CLI::App* coordmap = app.add_subcommand("coordmap", "coordinate-map rendering");
  coordmap->require_subcommand(1);
  {
    auto o = std::make_shared<CoordmapOpts>();
    CLI::App* cmd = coordmap->add_subcommand("render",
                                             "rasterize a proxy into coordinate maps");
    cmd->add_option("--proxy", o->proxy, "proxy geometry (.obj mesh or .ply point cloud)")
        ->required();
    cmd->add_option("--camera", o->camera, "JSON camera file (single view)");
    cmd->add_option("--trajectory", o->trajectory, "JSON camera array (one map per view)");
    cmd->add_option("--out", o->out_dir, "output directory")->required();
    cmd->add_option("--splat-radius", o->splat_radius, "point-splat radius in pixels");
    runners.emplace_back(cmd, [o] { return run_coordmap_render(*o); });
  }

  // dataset generate
  CLI::App* dataset = app.add_subcommand("dataset", "synthetic dataset tools");
  dataset->require_subcommand(1);
  {
    auto cfg = std::make_shared<prox::DatasetConfig>();
    auto out_dir = std::make_shared<std::string>();
    CLI::App* cmd = dataset->add_subcommand("generate",
                                            "generate a procedural multi-view dataset");
    cmd->add_option("--out", *out_dir, "output directory")->required();
    cmd->add_option("--samples", cfg->samples, "number of samples");
    cmd->add_option("--width", cfg->width, "frame width");
    cmd->add_option("--height", cfg->height, "frame height");
    cmd->add_option("--refs", cfg->n_refs, "reference views per sample");
    cmd->add_option("--targets", cfg->m_targets, "target frames per sample");
    cmd->add_option("--seed", cfg->seed, "dataset seed");
    cmd->add_option("--trajectory", cfg->trajectory, "target trajectory kind")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, prox::TrajectoryKind>{
                {"auto", prox::TrajectoryKind::Auto},
                {"orbit", prox::TrajectoryKind::Orbit},
                {"dolly", prox::TrajectoryKind::Dolly}},
            CLI::ignore_case));
    runners.emplace_back(cmd, [cfg, out_dir] { return run_dataset_generate(*cfg, *out_dir); });
  }

  // train
  {
    auto o = std::make_shared<TrainOpts>();
    CLI::App* cmd = app.add_subcommand("train", "train a model on a dataset directory");
    cmd->add_option("--data", o->data_dir, "dataset directory")->required();
    cmd->add_option("--out", o->out_path, "checkpoint output path")->required();
    cmd->add_option("--loss-curve", o->loss_csv, "write the per-step loss CSV here");
    cmd->add_option("--model-seed", o->model_seed, "weight initialization seed");
    add_model_flags(*cmd, o->model);
    add_train_flags(*cmd, o->tcfg);
    runners.emplace_back(cmd, [o] { return run_train(*o); });
  }

  // sample
  {
    auto o = std::make_shared<SampleOpts>();
    CLI::App* cmd = app.add_subcommand("sample",
                                       "generate frames for one dataset sample");
    cmd->add_option("--checkpoint", o->checkpoint, "model checkpoint")->required();
    cmd->add_option("--data", o->data_dir, "dataset directory")->required();
    cmd->add_option("--index", o->index, "sample index within the dataset");
    cmd->add_option("--out", o->out_dir, "output directory")->required();
    add_sampler_flags(*cmd, o->scfg, /*with_seed=*/true);
    runners.emplace_back(cmd, [o] { return run_sample(*o); });
  }

  // eval
  {
    auto o = std::make_shared<EvalOpts>();
    o->sigmas = {0.0};
    CLI::App* cmd = app.add_subcommand("eval",
                                       "mean PSNR/SSIM of sampled frames over a dataset");
    cmd->add_option("--checkpoint", o->checkpoint, "model checkpoint")->required();
    cmd->add_option("--data", o->data_dir, "dataset directory")->required();
    cmd->add_flag("--foreground-only", o->foreground_only,
                  "restrict metrics to coordinate-map foreground pixels");
    cmd->add_option("--csv", o->csv_path, "write the result CSV here");
    cmd->add_option("--json", o->json_path, "write the result JSON here");
    cmd->add_option("--min-psnr", o->min_psnr, "fail (exit 3) below this mean PSNR");
    cmd->add_option("--min-ssim", o->min_ssim, "fail (exit 3) below this mean SSIM");
    cmd->add_option("--eval-seed", o->seed, "per-sample evaluation seed");
    add_sampler_flags(*cmd, o->scfg, /*with_seed=*/false);
    runners.emplace_back(cmd, [o] { return run_sweep(*o); });
  }

  // ablate g / ablate perturb
  CLI::App* ablate = app.add_subcommand("ablate", "comparison harnesses");
  ablate->require_subcommand(1);
  {
    auto o = std::make_shared<AblateGOpts>();
    CLI::App* cmd = ablate->add_subcommand(
        "g", "train once per temporal-gap value and tabulate loss/PSNR");
    cmd->add_option("--data", o->data_dir, "dataset directory")->required();
    cmd->add_option("--gaps", o->gaps, "temporal gap values to compare")->delimiter(',');
    cmd->add_option("--csv", o->csv_path, "write the table CSV here");
    cmd->add_option("--json", o->json_path, "write the table JSON here");
    cmd->add_option("--model-seed", o->model_seed, "weight initialization seed");
    add_model_flags(*cmd, o->model);
    add_train_flags(*cmd, o->tcfg);
    cmd->add_option("--sample-steps", o->scfg.steps, "Euler sampling steps");
    cmd->add_option("--guidance", o->scfg.guidance, "guidance weight");
    runners.emplace_back(cmd, [o] { return run_ablate_g(*o); });
  }
  {
    auto o = std::make_shared<EvalOpts>();
    o->sigmas = {0.0, 0.05, 0.1, 0.2, 0.4};
    CLI::App* cmd = ablate->add_subcommand(
        "perturb", "evaluate under coordinate-map noise of increasing magnitude");
    cmd->add_option("--checkpoint", o->checkpoint, "model checkpoint")->required();
    cmd->add_option("--data", o->data_dir, "dataset directory")->required();
    cmd->add_option("--sigmas", o->sigmas, "noise magnitudes in normalized units")
        ->delimiter(',');
    cmd->add_flag("--foreground-only", o->foreground_only,
                  "restrict metrics to coordinate-map foreground pixels");
    cmd->add_option("--csv", o->csv_path, "write the sweep CSV here");
    cmd->add_option("--json", o->json_path, "write the sweep JSON here");
    cmd->add_option("--eval-seed", o->seed, "per-sample evaluation seed");
    add_sampler_flags(*cmd, o->scfg, /*with_seed=*/false);
    runners.emplace_back(cmd, [o] { return run_sweep(*o); });
  }

  // rope dump
  CLI::App* rope = app.add_subcommand("rope", "rotary position index tools");
  rope->require_subcommand(1);
  {
    auto o = std::make_shared<RopeDumpOpts>();
    CLI::App* cmd = rope->add_subcommand("dump",
                                         "print the joint temporal index list as JSON");
    cmd->add_option("--n", o->n, "number of reference views")->required();
    cmd->add_option("--m", o->m, "number of target frames")->required();
    cmd->add_option("--g", o->g, "temporal gap");
    runners.emplace_back(cmd, [o] { return run_rope_dump(*o); });
  }

  // Let --config (and any other root option) be given after the subcommand
  // name as well as before it.
  std::function<void(CLI::App*)> enable_fallthrough = [&](CLI::App* a) {
    for (CLI::App* sub : a->get_subcommands([](const CLI::App*) { return true; })) {
      sub->fallthrough(true);
      enable_fallthrough(sub);
    }
  };
  enable_fallthrough(&app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    return dispatch(runners);
  } catch (const prox::InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const prox::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const prox::DatasetCorrupt& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}
