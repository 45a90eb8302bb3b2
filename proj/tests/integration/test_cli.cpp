// Copyright (c) 2026 the proxyrender authors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end tests of the command-line binary. Each case drives the real
// executable (path injected via PROXYRENDER_CLI_PATH) through a scratch
// directory and checks outputs, exit codes, and determinism.
#include <doctest.h>

#include <json.hpp>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "proxyrender/geometry.hpp"
#include "proxyrender/image_io.hpp"
#include "proxyrender/tensor.hpp"
#include "test_util.hpp"

using nlohmann::json;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CliResult run_cli(const testutil::TempDir& dir, const std::string& args) {
  const std::string out_path = dir.file("cli_stdout.txt");
  const std::string err_path = dir.file("cli_stderr.txt");
  const std::string cmd =
      std::string(PROXYRENDER_CLI_PATH) + " " + args + " > " + out_path + " 2> " + err_path;
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  return r;
}

/// Cube proxy + axis-aligned cameras + flat reference/truth PNGs: enough
/// structure to drive the pipeline without caring about image quality.
struct PipelineFixture {
  std::string proxy;
  std::string ref_cameras;
  std::string trajectory;
  std::vector<std::string> refs;
  std::vector<std::string> truth;

  explicit PipelineFixture(const testutil::TempDir& dir, int size = 16, int n_refs = 2,
                           int m_targets = 3) {
    proxy = dir.file("proxy.obj");
    prox::save_obj(proxy, testutil::make_box_mesh());

    const prox::ObjectFrame frame;  // box is already centered in [-1, 1]^3
    prox::OrbitOptions opts;
    opts.width = size;
    opts.height = size;
    ref_cameras = dir.file("ref_cams.json");
    prox::save_trajectory(ref_cameras, prox::orbit_trajectory(frame, 3.2, 0.4, n_refs, opts));
    trajectory = dir.file("traj.json");
    opts.azimuth_start = 0.7;
    prox::save_trajectory(trajectory, prox::orbit_trajectory(frame, 3.2, 0.1, m_targets, opts));

    const std::size_t hw = static_cast<std::size_t>(size);
    for (int i = 0; i < n_refs; ++i) {
      refs.push_back(dir.file("ref_" + std::to_string(i) + ".png"));
      prox::write_png(refs.back(), prox::Tensor({hw, hw, 3}, 0.25f + 0.1f * i));
    }
    for (int i = 0; i < m_targets; ++i) {
      truth.push_back(dir.file("truth_" + std::to_string(i) + ".png"));
      prox::write_png(truth.back(), prox::Tensor({hw, hw, 3}, 0.5f));
    }
  }

  std::string ref_args() const {
    std::string s = "--refs";
    for (const auto& r : refs) s += " " + r;
    return s;
  }
  std::string truth_args() const {
    std::string s = "--truth";
    for (const auto& t : truth) s += " " + t;
    return s;
  }
};

constexpr const char* kTinyModel = "--dim 12 --depth 1 --heads 2 --head-dim 6 --patch 1";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("rope dump prints the joint index list") {
  testutil::TempDir dir;
  const CliResult r = run_cli(dir, "rope dump --n 2 --m 4 --g 3");
  CHECK(r.exit_code == 0);
  CHECK(r.out == "[-6,-3,0,1,2,3]\n");
}

TEST_CASE("dataset, training, sampling, and eval round trip") {
  testutil::TempDir dir;
  const std::string data = dir.file("data");
  const std::string ckpt = dir.file("ckpt.gort");

  CliResult r = run_cli(dir, "dataset generate --out " + data +
                                 " --samples 2 --width 16 --height 16 --refs 2 --targets 3"
                                 " --seed 5");
  CHECK(r.exit_code == 0);
  CHECK(std::filesystem::exists(data + "/index.json"));
  CHECK(std::filesystem::exists(data + "/sample_0000.gort"));

  r = run_cli(dir, "train --data " + data + " --out " + ckpt + " " + kTinyModel +
                       " --steps 6 --warmup 2 --seed 3 --loss-curve " + dir.file("loss.csv"));
  CHECK(r.exit_code == 0);
  CHECK(std::filesystem::exists(ckpt));
  CHECK(std::filesystem::exists(ckpt + ".json"));
  CHECK(slurp(dir.file("loss.csv")).substr(0, 10) == "step,loss\n");

  // Deterministic sampling: identical bytes for identical seeds.
  r = run_cli(dir, "sample --checkpoint " + ckpt + " --data " + data +
                       " --index 1 --out " + dir.file("s1") + " --sample-steps 3 --seed 11");
  CHECK(r.exit_code == 0);
  r = run_cli(dir, "sample --checkpoint " + ckpt + " --data " + data +
                       " --index 1 --out " + dir.file("s2") + " --sample-steps 3 --seed 11");
  CHECK(r.exit_code == 0);
  CHECK(slurp(dir.file("s1/frame_0000.png")) == slurp(dir.file("s2/frame_0000.png")));
  CHECK(slurp(dir.file("s1/frame_0002.png")) == slurp(dir.file("s2/frame_0002.png")));

  r = run_cli(dir, "eval --checkpoint " + ckpt + " --data " + data +
                       " --sample-steps 3 --csv " + dir.file("eval.csv"));
  CHECK(r.exit_code == 0);
  CHECK(r.out.substr(0, 26) == "sigma,mean_psnr,mean_ssim\n");
  CHECK(slurp(dir.file("eval.csv")) == r.out);

  // An unreachable PSNR threshold is a quality failure, not an input error.
  r = run_cli(dir, "eval --checkpoint " + ckpt + " --data " + data +
                       " --sample-steps 3 --min-psnr 99");
  CHECK(r.exit_code == 3);
  CHECK(r.err.find("threshold not met") != std::string::npos);

  r = run_cli(dir, "ablate perturb --checkpoint " + ckpt + " --data " + data +
                       " --sigmas 0,0.2 --sample-steps 3");
  CHECK(r.exit_code == 0);
  CHECK(r.out.substr(0, 26) == "sigma,mean_psnr,mean_ssim\n");
  CHECK(r.out.find("\n0.200000,") != std::string::npos);
}

TEST_CASE("ablate g emits one row per gap value") {
  testutil::TempDir dir;
  const std::string data = dir.file("data");
  CHECK(run_cli(dir, "dataset generate --out " + data +
                         " --samples 1 --width 16 --height 16 --refs 2 --targets 2 --seed 9")
            .exit_code == 0);
  const CliResult r =
      run_cli(dir, "ablate g --data " + data + " " + kTinyModel +
                       " --gaps 1,3 --steps 4 --warmup 1 --sample-steps 2");
  CHECK(r.exit_code == 0);
  CHECK(r.out.substr(0, 22) == "g,final_loss,eval_psnr");
  CHECK(r.out.find("\n1,") != std::string::npos);
  CHECK(r.out.find("\n3,") != std::string::npos);
}

TEST_CASE("coordmap render writes previews and tensors per view") {
  testutil::TempDir dir;
  const PipelineFixture fx(dir);
  const std::string out = dir.file("maps");
  const CliResult r = run_cli(dir, "coordmap render --proxy " + fx.proxy + " --trajectory " +
                                       fx.trajectory + " --out " + out);
  CHECK(r.exit_code == 0);
  CHECK(std::filesystem::exists(out + "/coordmap_0000.png"));
  CHECK(std::filesystem::exists(out + "/coordmap_0002.gort"));
  const prox::Tensor t = prox::read_tensor_file(out + "/coordmap_0000.gort");
  REQUIRE(t.rank() == 3);
  CHECK(t.dim(0) == 16);
  CHECK(t.dim(1) == 16);
  CHECK(t.dim(2) == 5);
}

TEST_CASE("pipeline dry run prints the token layout") {
  testutil::TempDir dir;
  const PipelineFixture fx(dir);
  const CliResult r = run_cli(
      dir, "pipeline run " + fx.ref_args() + " --ref-cameras " + fx.ref_cameras + " --proxy " +
               fx.proxy + " --trajectory " + fx.trajectory + " --out " + dir.file("out") +
               " --dry-run --patch 2 --gap 3");
  CHECK(r.exit_code == 0);
  const json layout = json::parse(r.out);
  CHECK(layout.at("n_refs") == 2);
  CHECK(layout.at("m_targets") == 3);
  CHECK(layout.at("patch") == 2);
  CHECK(layout.at("grid_h") == 8);
  CHECK(layout.at("tokens_per_frame") == 64);
  CHECK(layout.at("total_tokens") == 5 * 64);
  CHECK(layout.at("temporal_indices") == json({-6, -3, 0, 1, 2}));
  CHECK_FALSE(std::filesystem::exists(dir.file("out")));
}

TEST_CASE("pipeline run generates frames and a metrics report") {
  testutil::TempDir dir;
  const PipelineFixture fx(dir);
  const std::string data = dir.file("data");
  const std::string ckpt = dir.file("ckpt.gort");
  CHECK(run_cli(dir, "dataset generate --out " + data +
                         " --samples 1 --width 16 --height 16 --refs 2 --targets 2 --seed 4")
            .exit_code == 0);
  CHECK(run_cli(dir, "train --data " + data + " --out " + ckpt + " " + kTinyModel +
                         " --steps 4 --warmup 1")
            .exit_code == 0);

  const std::string base = "pipeline run " + fx.ref_args() + " --ref-cameras " +
                           fx.ref_cameras + " --proxy " + fx.proxy + " --trajectory " +
                           fx.trajectory + " --checkpoint " + ckpt + " --sample-steps 3";
  const std::string out = dir.file("out");
  CliResult r = run_cli(dir, base + " --out " + out + " " + fx.truth_args() + " --seed 8");
  CHECK(r.exit_code == 0);
  CHECK(std::filesystem::exists(out + "/frame_0002.png"));
  CHECK(std::filesystem::exists(out + "/coordmap_0001.png"));
  const json report = json::parse(slurp(out + "/report.json"));
  CHECK(report.at("m_targets") == 3);
  CHECK(report.at("frames").size() == 3);
  CHECK(report.at("metrics").at("per_frame").size() == 3);
  CHECK(report.at("metrics").at("mean_psnr").get<double>() > 0.0);

  // Same seed, same bytes.
  r = run_cli(dir, base + " --out " + dir.file("out2") + " --seed 8");
  CHECK(r.exit_code == 0);
  CHECK(slurp(out + "/frame_0000.png") == slurp(dir.file("out2/frame_0000.png")));

  // Threshold failure is exit 3 once generation succeeded.
  r = run_cli(dir, base + " --out " + dir.file("out3") + " " + fx.truth_args() +
                       " --seed 8 --min-psnr 99");
  CHECK(r.exit_code == 3);
}

TEST_CASE("pipeline input errors exit 2 with a specific message") {
  testutil::TempDir dir;
  const PipelineFixture fx(dir);
  const std::string base_tail = " --ref-cameras " + fx.ref_cameras + " --trajectory " +
                                fx.trajectory + " --out " + dir.file("out") + " --dry-run";

  CliResult r = run_cli(dir, "pipeline run " + fx.ref_args() + " --proxy " +
                                 dir.file("absent.obj") + base_tail);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("missing proxy file") != std::string::npos);
  CHECK(r.err.find(dir.file("absent.obj")) != std::string::npos);

  // A reference image whose size disagrees with its camera.
  prox::write_png(dir.file("small.png"), prox::Tensor({8, 8, 3}, 0.5f));
  r = run_cli(dir, "pipeline run --refs " + dir.file("small.png") + " " + fx.refs[1] +
                       " --proxy " + fx.proxy + base_tail);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("resolution mismatch") != std::string::npos);

  // Patch size incompatible with the frame size.
  r = run_cli(dir, "pipeline run " + fx.ref_args() + " --proxy " + fx.proxy + base_tail +
                       " --patch 3");
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("checkpoint/config mismatch") != std::string::npos);

  // Unknown flags are input errors too.
  r = run_cli(dir, "pipeline run --bogus");
  CHECK(r.exit_code == 2);
}

TEST_CASE("config file supplies defaults and flags override it") {
  testutil::TempDir dir;
  const std::string data = dir.file("data");
  const std::string cfg = dir.file("cfg.json");
  std::ofstream(cfg) << R"({"dataset": {"generate": {"samples": 2, "width": 16, "height": 16,
                             "refs": 2, "targets": 2, "seed": 1}}})";

  CliResult r = run_cli(dir, "dataset generate --config " + cfg + " --out " + data);
  CHECK(r.exit_code == 0);
  json index = json::parse(slurp(data + "/index.json"));
  CHECK(index.at("samples").size() == 2);

  // The command line wins over the file.
  const std::string data3 = dir.file("data3");
  r = run_cli(dir, "dataset generate --config " + cfg + " --out " + data3 + " --samples 3");
  CHECK(r.exit_code == 0);
  index = json::parse(slurp(data3 + "/index.json"));
  CHECK(index.at("samples").size() == 3);
}

TEST_CASE("checked-in smoke config drives the pipeline end to end") {
  testutil::TempDir dir;
  const std::string cfg = std::string(PROXYRENDER_CONFIG_DIR) + "/smoke.json";
  REQUIRE(std::filesystem::exists(cfg));
  const std::string data = dir.file("data");
  const std::string ckpt = dir.file("ckpt.gort");

  CHECK(run_cli(dir, "dataset generate --config " + cfg + " --out " + data).exit_code == 0);
  CHECK(run_cli(dir, "train --config " + cfg + " --data " + data + " --out " + ckpt)
            .exit_code == 0);
  const CliResult r =
      run_cli(dir, "eval --config " + cfg + " --checkpoint " + ckpt + " --data " + data);
  CHECK(r.exit_code == 0);
  CHECK(r.out.substr(0, 26) == "sigma,mean_psnr,mean_ssim\n");
}

}  // TEST_SUITE
