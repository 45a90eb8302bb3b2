// Copyright (c) 2026 the proxyrender authors
// SPDX-License-Identifier: Apache-2.0
//
// pybind11 bindings for the C++ core. Images and tensors cross the boundary
// as float32 numpy arrays (copied, never aliased); meshes as [V, 3] vertex
// and [T, 3] index arrays.
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "proxyrender/conditioning.hpp"
#include "proxyrender/coordmap.hpp"
#include "proxyrender/errors.hpp"
#include "proxyrender/evalharness.hpp"
#include "proxyrender/geometry.hpp"
#include "proxyrender/image_io.hpp"
#include "proxyrender/metrics.hpp"
#include "proxyrender/model.hpp"
#include "proxyrender/rng.hpp"
#include "proxyrender/rope3d.hpp"
#include "proxyrender/synthdata.hpp"
#include "proxyrender/tensor.hpp"
#include "proxyrender/train.hpp"

namespace py = pybind11;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IntArray = py::array_t<int, py::array::c_style | py::array::forcecast>;
using MaskArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

prox::Tensor tensor_from_array(const FloatArray& a) {
  std::vector<std::size_t> dims(static_cast<std::size_t>(a.ndim()));
  for (py::ssize_t i = 0; i < a.ndim(); ++i) {
    dims[static_cast<std::size_t>(i)] = static_cast<std::size_t>(a.shape(i));
  }
  prox::Tensor t(dims);
  std::copy(a.data(), a.data() + a.size(), t.data());
  return t;
}

py::array_t<float> array_from_tensor(const prox::Tensor& t) {
  py::array_t<float> a(t.dims());
  std::copy(t.data(), t.data() + t.size(), a.mutable_data());
  return a;
}

std::vector<prox::Tensor> tensors_from_stack(const FloatArray& stack, const char* what) {
  if (stack.ndim() != 4) {
    throw prox::InvalidInput(std::string(what) + " must be a [N, H, W, C] array");
  }
  const prox::Tensor all = tensor_from_array(stack);
  const std::size_t n = all.dim(0);
  const std::size_t frame = all.size() / std::max<std::size_t>(n, 1);
  std::vector<prox::Tensor> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    prox::Tensor f({all.dim(1), all.dim(2), all.dim(3)});
    std::copy(all.data() + i * frame, all.data() + (i + 1) * frame, f.data());
    out.push_back(std::move(f));
  }
  return out;
}

prox::TriangleMesh mesh_from_arrays(const DoubleArray& vertices, const IntArray& triangles) {
  if (vertices.ndim() != 2 || vertices.shape(1) != 3) {
    throw prox::InvalidInput("vertices must be a [V, 3] array");
  }
  if (triangles.ndim() != 2 || triangles.shape(1) != 3) {
    throw prox::InvalidInput("triangles must be a [T, 3] array");
  }
  prox::TriangleMesh mesh;
  mesh.vertices.reserve(static_cast<std::size_t>(vertices.shape(0)));
  const double* v = vertices.data();
  for (py::ssize_t i = 0; i < vertices.shape(0); ++i) {
    mesh.vertices.emplace_back(v[3 * i], v[3 * i + 1], v[3 * i + 2]);
  }
  mesh.triangles.reserve(static_cast<std::size_t>(triangles.shape(0)));
  const int* f = triangles.data();
  for (py::ssize_t i = 0; i < triangles.shape(0); ++i) {
    mesh.triangles.push_back({f[3 * i], f[3 * i + 1], f[3 * i + 2]});
  }
  return mesh;
}

prox::Vec3 vec3_from_array(const DoubleArray& a, const char* what) {
  if (a.size() != 3) throw prox::InvalidInput(std::string(what) + " must have 3 elements");
  return {a.data()[0], a.data()[1], a.data()[2]};
}

/// Object frame from explicit center/half_extent, or normalized from the
/// proxy when both are omitted.
prox::ObjectFrame resolve_frame(const std::optional<DoubleArray>& center,
                                std::optional<double> half_extent,
                                const prox::ObjectFrame& derived) {
  if (center.has_value() != half_extent.has_value()) {
    throw prox::InvalidInput("pass both center and half_extent, or neither");
  }
  if (!center) return derived;
  prox::ObjectFrame frame;
  frame.center = vec3_from_array(*center, "center");
  frame.half_extent = *half_extent;
  return frame;
}

prox::TrajectoryKind trajectory_from_string(const std::string& s) {
  if (s == "auto") return prox::TrajectoryKind::Auto;
  if (s == "orbit") return prox::TrajectoryKind::Orbit;
  if (s == "dolly") return prox::TrajectoryKind::Dolly;
  throw prox::InvalidInput("trajectory must be one of: auto, orbit, dolly");
}

std::vector<std::uint8_t> mask_from_array(const MaskArray& m) {
  return {m.data(), m.data() + m.size()};
}

prox::SamplerConfig sampler_config(int steps, double guidance, std::uint64_t seed, int gap) {
  prox::SamplerConfig cfg;
  cfg.steps = steps;
  cfg.guidance = guidance;
  cfg.seed = seed;
  cfg.gap = gap;
  return cfg;
}

prox::ModelConfig model_config_from_dict(const py::dict& d) {
  prox::ModelConfig cfg;
  for (const auto& item : d) {
    const std::string key = py::cast<std::string>(item.first);
    if (key == "dim") cfg.dim = py::cast<int>(item.second);
    else if (key == "depth") cfg.depth = py::cast<int>(item.second);
    else if (key == "heads") cfg.heads = py::cast<int>(item.second);
    else if (key == "head_dim") cfg.head_dim = py::cast<int>(item.second);
    else if (key == "patch") cfg.patch = py::cast<int>(item.second);
    else if (key == "theta_base") cfg.theta_base = py::cast<double>(item.second);
    else throw prox::InvalidInput("unknown model config key: " + key);
  }
  return cfg;
}

prox::TrainConfig train_config_from_dict(const py::dict& d) {
  prox::TrainConfig cfg;
  for (const auto& item : d) {
    const std::string key = py::cast<std::string>(item.first);
    if (key == "steps") cfg.steps = py::cast<int>(item.second);
    else if (key == "lr") cfg.lr = py::cast<double>(item.second);
    else if (key == "warmup_steps") cfg.warmup_steps = py::cast<int>(item.second);
    else if (key == "weight_decay") cfg.weight_decay = py::cast<double>(item.second);
    else if (key == "beta1") cfg.beta1 = py::cast<double>(item.second);
    else if (key == "beta2") cfg.beta2 = py::cast<double>(item.second);
    else if (key == "adam_eps") cfg.adam_eps = py::cast<double>(item.second);
    else if (key == "cfg_dropout") cfg.cfg_dropout = py::cast<double>(item.second);
    else if (key == "gap") cfg.gap = py::cast<int>(item.second);
    else if (key == "seed") cfg.seed = py::cast<std::uint64_t>(item.second);
    else if (key == "shuffle_refs") cfg.shuffle_refs = py::cast<bool>(item.second);
    else if (key == "augment") cfg.augment = py::cast<bool>(item.second);
    else if (key == "aug_scale_min") cfg.aug_scale_min = py::cast<double>(item.second);
    else if (key == "aug_scale_max") cfg.aug_scale_max = py::cast<double>(item.second);
    else if (key == "aug_translate") cfg.aug_translate = py::cast<double>(item.second);
    else if (key == "appearance_prob") cfg.appearance_prob = py::cast<double>(item.second);
    else if (key == "early_stop_fraction") cfg.early_stop_fraction = py::cast<double>(item.second);
    else if (key == "min_steps") cfg.min_steps = py::cast<int>(item.second);
    else throw prox::InvalidInput("unknown train config key: " + key);
  }
  return cfg;
}

std::optional<std::vector<prox::Tensor>> optional_frames(const std::optional<FloatArray>& stack,
                                                         const char* what) {
  if (!stack) return std::nullopt;
  return tensors_from_stack(*stack, what);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "C++ core: coordinate-map rendering, conditioning, the diffusion "
            "transformer, synthetic data, and evaluation metrics";

  py::register_exception<prox::InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<prox::IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<prox::DatasetCorrupt>(m, "DatasetCorrupt", PyExc_RuntimeError);
  py::register_exception<prox::Divergence>(m, "Divergence", PyExc_RuntimeError);

  // -- geometry -------------------------------------------------------------
  py::class_<prox::Camera>(m, "Camera", "Pinhole camera with world-to-camera extrinsics")
      .def(py::init([](double fx, double fy, double cx, double cy, int width, int height,
                       double near, std::optional<DoubleArray> R,
                       std::optional<DoubleArray> t) {
             prox::Camera cam;
             cam.fx = fx;
             cam.fy = fy;
             cam.cx = cx;
             cam.cy = cy;
             cam.width = width;
             cam.height = height;
             cam.near = near;
             if (R) {
               if (R->ndim() != 2 || R->shape(0) != 3 || R->shape(1) != 3) {
                 throw prox::InvalidInput("R must be a [3, 3] array");
               }
               for (int r = 0; r < 3; ++r)
                 for (int c = 0; c < 3; ++c)
                   cam.extrinsics.rotation(r, c) = R->data()[3 * r + c];
             }
             if (t) cam.extrinsics.translation = vec3_from_array(*t, "t");
             cam.validate();
             return cam;
           }),
           py::arg("fx"), py::arg("fy"), py::arg("cx"), py::arg("cy"), py::arg("width"),
           py::arg("height"), py::arg("near") = 1e-3, py::arg("R") = std::nullopt,
           py::arg("t") = std::nullopt)
      .def_readonly("fx", &prox::Camera::fx)
      .def_readonly("fy", &prox::Camera::fy)
      .def_readonly("cx", &prox::Camera::cx)
      .def_readonly("cy", &prox::Camera::cy)
      .def_readonly("width", &prox::Camera::width)
      .def_readonly("height", &prox::Camera::height)
      .def_readonly("near", &prox::Camera::near)
      .def_property_readonly("R",
                             [](const prox::Camera& cam) {
                               py::array_t<double> a({3, 3});
                               for (int r = 0; r < 3; ++r)
                                 for (int c = 0; c < 3; ++c)
                                   a.mutable_data()[3 * r + c] = cam.extrinsics.rotation(r, c);
                               return a;
                             })
      .def_property_readonly("t",
                             [](const prox::Camera& cam) {
                               py::array_t<double> a(3);
                               for (int i = 0; i < 3; ++i)
                                 a.mutable_data()[i] = cam.extrinsics.translation(i);
                               return a;
                             })
      .def("position",
           [](const prox::Camera& cam) {
             py::array_t<double> a(3);
             const prox::Vec3 p = cam.position();
             for (int i = 0; i < 3; ++i) a.mutable_data()[i] = p(i);
             return a;
           },
           "Camera center in world coordinates")
      .def("__repr__", [](const prox::Camera& cam) {
        return "Camera(" + std::to_string(cam.width) + "x" + std::to_string(cam.height) +
               ", fx=" + std::to_string(cam.fx) + ")";
      });

  m.def(
      "orbit_camera",
      [](const DoubleArray& center, double half_extent, double radius, double elevation,
         double azimuth, int width, int height, double focal_factor) {
        prox::ObjectFrame frame;
        frame.center = vec3_from_array(center, "center");
        frame.half_extent = half_extent;
        prox::OrbitOptions opts;
        opts.width = width;
        opts.height = height;
        opts.focal_factor = focal_factor;
        return prox::orbit_camera(frame, radius, elevation, azimuth, opts);
      },
      py::arg("center"), py::arg("half_extent"), py::arg("radius"), py::arg("elevation"),
      py::arg("azimuth"), py::arg("width") = 64, py::arg("height") = 64,
      py::arg("focal_factor") = 0.65,
      "Camera on the orbit sphere, looking at the object center");

  // -- coordinate maps ------------------------------------------------------
  py::class_<prox::CoordinateMap>(
      m, "CoordinateMap",
      "Per-pixel encoded object coordinates with validity and depth channels")
      .def_readonly("width", &prox::CoordinateMap::width)
      .def_readonly("height", &prox::CoordinateMap::height)
      .def_property_readonly("coords",
                             [](const prox::CoordinateMap& map) {
                               py::array_t<float> a({static_cast<std::size_t>(map.height),
                                                     static_cast<std::size_t>(map.width),
                                                     std::size_t(3)});
                               std::copy(map.coords.begin(), map.coords.end(),
                                         a.mutable_data());
                               return a;
                             },
                             "[H, W, 3] encoded coordinates in [0, 1]")
      .def_property_readonly("validity",
                             [](const prox::CoordinateMap& map) {
                               py::array_t<std::uint8_t> a(
                                   {static_cast<std::size_t>(map.height),
                                    static_cast<std::size_t>(map.width)});
                               std::copy(map.validity.begin(), map.validity.end(),
                                         a.mutable_data());
                               return a;
                             },
                             "[H, W] foreground mask")
      .def_property_readonly("depth",
                             [](const prox::CoordinateMap& map) {
                               py::array_t<float> a({static_cast<std::size_t>(map.height),
                                                     static_cast<std::size_t>(map.width)});
                               std::copy(map.depth.begin(), map.depth.end(),
                                         a.mutable_data());
                               return a;
                             },
                             "[H, W] camera-space depth, +inf background")
      .def("valid_count", &prox::CoordinateMap::valid_count)
      .def("to_array",
           [](const prox::CoordinateMap& map) { return array_from_tensor(map.to_tensor()); },
           "[H, W, 5] tensor: coords x3, validity, depth")
      .def_static("from_array",
                  [](const FloatArray& a) {
                    return prox::CoordinateMap::from_tensor(tensor_from_array(a));
                  },
                  py::arg("array"))
      .def("__repr__", [](const prox::CoordinateMap& map) {
        return "CoordinateMap(" + std::to_string(map.width) + "x" +
               std::to_string(map.height) + ", valid=" + std::to_string(map.valid_count()) +
               ")";
      });

  m.def(
      "rasterize_mesh",
      [](const DoubleArray& vertices, const IntArray& triangles, const prox::Camera& camera,
         std::optional<DoubleArray> center, std::optional<double> half_extent) {
        const prox::TriangleMesh mesh = mesh_from_arrays(vertices, triangles);
        const prox::ObjectFrame frame =
            resolve_frame(center, half_extent, prox::normalize_object(mesh));
        py::gil_scoped_release release;
        return prox::rasterize_mesh(mesh, frame, camera);
      },
      py::arg("vertices"), py::arg("triangles"), py::arg("camera"),
      py::arg("center") = std::nullopt, py::arg("half_extent") = std::nullopt,
      "Z-buffered rasterization of a proxy mesh into a coordinate map");

  m.def(
      "raycast_oracle",
      [](const DoubleArray& vertices, const IntArray& triangles, const prox::Camera& camera,
         std::optional<DoubleArray> center, std::optional<double> half_extent) {
        const prox::TriangleMesh mesh = mesh_from_arrays(vertices, triangles);
        const prox::ObjectFrame frame =
            resolve_frame(center, half_extent, prox::normalize_object(mesh));
        py::gil_scoped_release release;
        return prox::raycast_oracle(mesh, frame, camera);
      },
      py::arg("vertices"), py::arg("triangles"), py::arg("camera"),
      py::arg("center") = std::nullopt, py::arg("half_extent") = std::nullopt,
      "Per-pixel ray-cast ground truth for rasterize_mesh");

  m.def(
      "splat_points",
      [](const DoubleArray& points, const prox::Camera& camera, double radius_px,
         std::optional<DoubleArray> center, std::optional<double> half_extent) {
        if (points.ndim() != 2 || points.shape(1) != 3) {
          throw prox::InvalidInput("points must be a [P, 3] array");
        }
        prox::PointCloud cloud;
        cloud.points.reserve(static_cast<std::size_t>(points.shape(0)));
        const double* p = points.data();
        for (py::ssize_t i = 0; i < points.shape(0); ++i) {
          cloud.points.emplace_back(p[3 * i], p[3 * i + 1], p[3 * i + 2]);
        }
        const prox::ObjectFrame frame =
            resolve_frame(center, half_extent, prox::normalize_object(cloud));
        py::gil_scoped_release release;
        return prox::splat_points(cloud, frame, camera, radius_px);
      },
      py::arg("points"), py::arg("camera"), py::arg("radius_px") = 1.5,
      py::arg("center") = std::nullopt, py::arg("half_extent") = std::nullopt,
      "Disk-splat a point-cloud proxy into a coordinate map");

  m.def(
      "perturb_coordmap",
      [](const prox::CoordinateMap& map, double sigma, std::uint64_t seed) {
        prox::Rng rng(seed);
        return prox::perturb_coordmap(map, sigma, rng);
      },
      py::arg("map"), py::arg("sigma"), py::arg("seed") = 0,
      "Gaussian noise on decoded coordinates of valid pixels, re-encoded");

  // -- rotary indices and patching -------------------------------------------
  m.def("temporal_indices", &prox::temporal_indices, py::arg("n_refs"), py::arg("m_targets"),
        py::arg("gap"),
        "Joint temporal index sequence {-N*g, ..., -g, 0, ..., M-1}");

  m.def(
      "patchify",
      [](const FloatArray& stack, int patch) {
        if (stack.ndim() != 4) throw prox::InvalidInput("stack must be [F, H, W, C]");
        return array_from_tensor(prox::patchify(tensor_from_array(stack), patch));
      },
      py::arg("stack"), py::arg("patch"),
      "Cut a [F, H, W, C] stack into [F*(H/p)*(W/p), C*p*p] tokens");

  m.def(
      "unpatchify",
      [](const FloatArray& tokens, int frames, int height, int width, int channels,
         int patch) {
        const prox::PatchLayout layout{frames, height, width, channels, patch};
        return array_from_tensor(prox::unpatchify(tensor_from_array(tokens), layout));
      },
      py::arg("tokens"), py::arg("frames"), py::arg("height"), py::arg("width"),
      py::arg("channels"), py::arg("patch"), "Exact inverse of patchify");

  // -- synthetic data --------------------------------------------------------
  py::class_<prox::DatasetSample>(
      m, "Sample", "Paired reference views, target frames, and coordinate maps")
      .def_property_readonly("n_refs",
                             [](const prox::DatasetSample& s) { return s.refs.size(); })
      .def_property_readonly("m_targets",
                             [](const prox::DatasetSample& s) {
                               return s.target_images.size();
                             })
      .def_readonly("scene_seed", &prox::DatasetSample::scene_seed)
      .def_readonly("traj_seed", &prox::DatasetSample::traj_seed)
      .def_property_readonly("ref_images",
                             [](const prox::DatasetSample& s) {
                               py::list out;
                               for (const auto& r : s.refs)
                                 out.append(array_from_tensor(r.image));
                               return out;
                             },
                             "list of [H, W, 3] reference images")
      .def_property_readonly("ref_maps",
                             [](const prox::DatasetSample& s) {
                               py::list out;
                               for (const auto& r : s.refs) out.append(r.coordmap);
                               return out;
                             })
      .def_property_readonly("target_images",
                             [](const prox::DatasetSample& s) {
                               py::list out;
                               for (const auto& t : s.target_images)
                                 out.append(array_from_tensor(t));
                               return out;
                             },
                             "list of [H, W, 3] ground-truth frames")
      .def_property_readonly("target_maps",
                             [](const prox::DatasetSample& s) {
                               py::list out;
                               for (const auto& t : s.target_maps) out.append(t);
                               return out;
                             })
      .def_property_readonly("cameras",
                             [](const prox::DatasetSample& s) { return s.cameras; })
      .def("__repr__", [](const prox::DatasetSample& s) {
        return "Sample(refs=" + std::to_string(s.refs.size()) +
               ", targets=" + std::to_string(s.target_images.size()) + ")";
      });

  m.def(
      "generate_sample",
      [](std::uint64_t seed, int n_refs, int m_targets, int width, int height,
         const std::string& trajectory) {
        prox::SampleOptions opts;
        opts.width = width;
        opts.height = height;
        opts.trajectory = trajectory_from_string(trajectory);
        py::gil_scoped_release release;
        return prox::generate_sample(seed, n_refs, m_targets, opts);
      },
      py::arg("seed"), py::arg("n_refs") = 3, py::arg("m_targets") = 5, py::arg("width") = 32,
      py::arg("height") = 32, py::arg("trajectory") = "auto",
      "One procedural sample: shaded references, targets, and coordinate maps");

  m.def(
      "generate_dataset",
      [](int samples, int n_refs, int m_targets, int width, int height, std::uint64_t seed,
         const std::string& trajectory) {
        prox::DatasetConfig cfg;
        cfg.samples = samples;
        cfg.n_refs = n_refs;
        cfg.m_targets = m_targets;
        cfg.width = width;
        cfg.height = height;
        cfg.seed = seed;
        cfg.trajectory = trajectory_from_string(trajectory);
        py::gil_scoped_release release;
        return prox::generate_dataset(cfg);
      },
      py::arg("samples"), py::arg("n_refs") = 3, py::arg("m_targets") = 5,
      py::arg("width") = 32, py::arg("height") = 32, py::arg("seed") = 0,
      py::arg("trajectory") = "auto", "Deterministic procedural dataset");

  m.def("write_dataset", &prox::write_dataset, py::arg("samples"), py::arg("directory"),
        "Write samples as a dataset directory (index.json + tensor containers)");
  m.def("read_dataset", &prox::read_dataset, py::arg("directory"),
        "Read a dataset directory written by write_dataset");

  // -- model, training, sampling ----------------------------------------------
  py::class_<prox::MiniDiT<float>>(
      m, "Model", "Joint-sequence diffusion transformer over reference and target tokens")
      .def(py::init([](int dim, int depth, int heads, int head_dim, int patch,
                       double theta_base, std::uint64_t seed) {
             prox::ModelConfig cfg;
             cfg.dim = dim;
             cfg.depth = depth;
             cfg.heads = heads;
             cfg.head_dim = head_dim;
             cfg.patch = patch;
             cfg.theta_base = theta_base;
             return prox::MiniDiT<float>(cfg, seed);
           }),
           py::arg("dim") = 64, py::arg("depth") = 4, py::arg("heads") = 4,
           py::arg("head_dim") = 16, py::arg("patch") = 2, py::arg("theta_base") = 10000.0,
           py::arg("seed") = 0)
      .def_property_readonly("param_count",
                             [](const prox::MiniDiT<float>& model) {
                               return model.params().size();
                             })
      .def_property_readonly("config",
                             [](const prox::MiniDiT<float>& model) {
                               const prox::ModelConfig& c = model.config();
                               py::dict d;
                               d["dim"] = c.dim;
                               d["depth"] = c.depth;
                               d["heads"] = c.heads;
                               d["head_dim"] = c.head_dim;
                               d["patch"] = c.patch;
                               d["theta_base"] = c.theta_base;
                               return d;
                             })
      .def_property_readonly("segments",
                             [](const prox::MiniDiT<float>& model) {
                               py::list out;
                               for (const auto& seg : model.params().segments) {
                                 out.append(py::make_tuple(seg.name, py::tuple(py::cast(seg.shape))));
                               }
                               return out;
                             },
                             "list of (name, shape) parameter segments")
      .def("parameters",
           [](const prox::MiniDiT<float>& model) {
             py::array_t<float> a(model.params().values.size());
             std::copy(model.params().values.begin(), model.params().values.end(),
                       a.mutable_data());
             return a;
           },
           "Flat copy of every parameter value")
      .def("save",
           [](const prox::MiniDiT<float>& model, const std::string& path) {
             prox::save_checkpoint(model, path);
           },
           py::arg("path"), "Write weights plus a JSON config sidecar")
      .def_static("load", &prox::load_checkpoint, py::arg("path"),
                  "Load a checkpoint written by save()")
      .def("__repr__", [](const prox::MiniDiT<float>& model) {
        return "Model(dim=" + std::to_string(model.config().dim) +
               ", depth=" + std::to_string(model.config().depth) +
               ", params=" + std::to_string(model.params().size()) + ")";
      });

  m.def(
      "train",
      [](prox::MiniDiT<float>& model, const std::vector<prox::DatasetSample>& samples,
         const py::dict& config) {
        const prox::TrainConfig cfg = train_config_from_dict(config);
        prox::TrainResult result;
        {
          py::gil_scoped_release release;
          result = prox::train(model, samples, cfg);
        }
        py::dict out;
        py::array_t<double> curve(result.loss_curve.size());
        std::copy(result.loss_curve.begin(), result.loss_curve.end(), curve.mutable_data());
        out["loss_curve"] = curve;
        out["steps_run"] = result.steps_run;
        out["initial_loss"] = result.initial_loss;
        out["final_smoothed_loss"] = result.final_smoothed_loss;
        return out;
      },
      py::arg("model"), py::arg("samples"), py::arg("config") = py::dict(),
      "Rectified-flow training; config keys mirror the C++ TrainConfig fields");

  m.def(
      "sample_frames",
      [](const prox::MiniDiT<float>& model, const prox::DatasetSample& sample, int steps,
         double guidance, std::uint64_t seed, int gap,
         const std::optional<FloatArray>& appearance) {
        const auto app = optional_frames(appearance, "appearance");
        std::vector<prox::Tensor> frames;
        {
          py::gil_scoped_release release;
          frames = prox::sample_frames(model, sample.refs, sample.target_maps, app,
                                       sampler_config(steps, guidance, seed, gap));
        }
        py::list out;
        for (const auto& f : frames) out.append(array_from_tensor(f));
        return out;
      },
      py::arg("model"), py::arg("sample"), py::arg("steps") = 20, py::arg("guidance") = 1.0,
      py::arg("seed") = 0, py::arg("gap") = 3, py::arg("appearance") = std::nullopt,
      "Euler sampling of a dataset sample's targets; returns a list of [H, W, 3] frames");

  m.def(
      "generate_frames",
      [](const prox::MiniDiT<float>& model, const FloatArray& ref_images,
         const std::vector<prox::CoordinateMap>& ref_maps,
         const std::vector<prox::CoordinateMap>& target_maps, int steps, double guidance,
         std::uint64_t seed, int gap, const std::optional<FloatArray>& appearance) {
        const std::vector<prox::Tensor> images =
            tensors_from_stack(ref_images, "ref_images");
        if (images.size() != ref_maps.size()) {
          throw prox::InvalidInput("ref_images and ref_maps must have the same length");
        }
        std::vector<prox::ReferenceUnit> refs;
        refs.reserve(images.size());
        for (std::size_t i = 0; i < images.size(); ++i) {
          refs.push_back({images[i], ref_maps[i]});
        }
        const auto app = optional_frames(appearance, "appearance");
        std::vector<prox::Tensor> frames;
        {
          py::gil_scoped_release release;
          frames = prox::sample_frames(model, refs, target_maps, app,
                                       sampler_config(steps, guidance, seed, gap));
        }
        py::list out;
        for (const auto& f : frames) out.append(array_from_tensor(f));
        return out;
      },
      py::arg("model"), py::arg("ref_images"), py::arg("ref_maps"), py::arg("target_maps"),
      py::arg("steps") = 20, py::arg("guidance") = 1.0, py::arg("seed") = 0,
      py::arg("gap") = 3, py::arg("appearance") = std::nullopt,
      "Euler sampling from explicit references ([N, H, W, 3]) and coordinate maps");

  // -- metrics and evaluation --------------------------------------------------
  m.def(
      "psnr",
      [](const FloatArray& a, const FloatArray& b) {
        return prox::psnr(tensor_from_array(a), tensor_from_array(b));
      },
      py::arg("a"), py::arg("b"), "PSNR in dB for [0, 1] frames, capped at 99");
  m.def(
      "psnr_masked",
      [](const FloatArray& a, const FloatArray& b, const MaskArray& mask) {
        return prox::psnr_masked(tensor_from_array(a), tensor_from_array(b),
                                 mask_from_array(mask));
      },
      py::arg("a"), py::arg("b"), py::arg("mask"), "PSNR over mask != 0 pixels only");
  m.def(
      "ssim",
      [](const FloatArray& a, const FloatArray& b) {
        return prox::ssim(tensor_from_array(a), tensor_from_array(b));
      },
      py::arg("a"), py::arg("b"), "Mean SSIM (11x11 Gaussian window, valid mode)");
  m.def(
      "ssim_masked",
      [](const FloatArray& a, const FloatArray& b, const MaskArray& mask) {
        return prox::ssim_masked(tensor_from_array(a), tensor_from_array(b),
                                 mask_from_array(mask));
      },
      py::arg("a"), py::arg("b"), py::arg("mask"),
      "SSIM averaged over windows centered on mask != 0 pixels");

  m.def(
      "evaluate_psnr",
      [](const prox::MiniDiT<float>& model, const std::vector<prox::DatasetSample>& samples,
         int steps, double guidance, int gap, std::uint64_t seed) {
        py::gil_scoped_release release;
        return prox::evaluate_psnr(model, samples, sampler_config(steps, guidance, 0, gap),
                                   seed);
      },
      py::arg("model"), py::arg("samples"), py::arg("steps") = 20, py::arg("guidance") = 1.0,
      py::arg("gap") = 3, py::arg("seed") = 0,
      "Mean PSNR of sampled frames against ground truth over a dataset");

  m.def(
      "robustness_sweep",
      [](const prox::MiniDiT<float>& model, const std::vector<prox::DatasetSample>& samples,
         const std::vector<double>& sigmas, int steps, double guidance, int gap,
         std::uint64_t seed, bool foreground_only) {
        std::vector<prox::SweepRow> rows;
        {
          py::gil_scoped_release release;
          rows = prox::robustness_sweep(model, samples, sigmas,
                                        sampler_config(steps, guidance, 0, gap), seed,
                                        foreground_only);
        }
        py::list out;
        for (const auto& r : rows) {
          py::dict d;
          d["sigma"] = r.sigma;
          d["mean_psnr"] = r.mean_psnr;
          d["mean_ssim"] = r.mean_ssim;
          out.append(d);
        }
        return out;
      },
      py::arg("model"), py::arg("samples"), py::arg("sigmas"), py::arg("steps") = 20,
      py::arg("guidance") = 1.0, py::arg("gap") = 3, py::arg("seed") = 0,
      py::arg("foreground_only") = false,
      "PSNR/SSIM under coordinate-map noise of increasing magnitude");

  m.def(
      "g_ablation",
      [](const std::vector<prox::DatasetSample>& samples, const std::vector<int>& gaps,
         const py::dict& model_config, const py::dict& train_config, int sample_steps,
         double guidance, std::uint64_t model_seed) {
        const prox::ModelConfig mcfg = model_config_from_dict(model_config);
        const prox::TrainConfig tcfg = train_config_from_dict(train_config);
        std::vector<prox::AblationRow> rows;
        {
          py::gil_scoped_release release;
          rows = prox::g_ablation(samples, gaps, mcfg, tcfg,
                                  sampler_config(sample_steps, guidance, 0, 3), model_seed);
        }
        py::list out;
        for (const auto& r : rows) {
          py::dict d;
          d["g"] = r.gap;
          d["final_loss"] = r.final_loss;
          d["eval_psnr"] = r.eval_psnr;
          out.append(d);
        }
        return out;
      },
      py::arg("samples"), py::arg("gaps"), py::arg("model_config") = py::dict(),
      py::arg("train_config") = py::dict(), py::arg("sample_steps") = 20,
      py::arg("guidance") = 1.0, py::arg("model_seed") = 0,
      "One training run per temporal-gap value; values recorded, not asserted");

  // -- image I/O ----------------------------------------------------------------
  m.def(
      "read_png",
      [](const std::string& path) { return array_from_tensor(prox::read_png(path)); },
      py::arg("path"), "Read a PNG into a [H, W, 3] float array in [0, 1]");
  m.def(
      "write_png",
      [](const std::string& path, const FloatArray& image) {
        prox::write_png(path, tensor_from_array(image));
      },
      py::arg("path"), py::arg("image"), "Write a [H, W, 3] or [H, W, 1] float array");
  m.def(
      "coordmap_to_image",
      [](const prox::CoordinateMap& map) {
        return array_from_tensor(prox::coordmap_to_image(map));
      },
      py::arg("map"), "Preview image: encoded coords on black background");
}
