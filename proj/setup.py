# Copyright (c) 2026 the proxyrender authors
# SPDX-License-Identifier: Apache-2.0
"""Builds the proxyrender._core extension by driving the CMake project."""

import os
import subprocess
import sys
from pathlib import Path

import pybind11
from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CMakeExtension(Extension):
    def __init__(self, name: str) -> None:
        super().__init__(name, sources=[])


class CMakeBuild(build_ext):
    def build_extension(self, ext: CMakeExtension) -> None:
        out_dir = Path(self.get_ext_fullpath(ext.name)).resolve().parent
        out_dir.mkdir(parents=True, exist_ok=True)
        source_dir = Path(__file__).parent.resolve()
        build_dir = Path(self.build_temp).resolve() / "cmake"
        build_dir.mkdir(parents=True, exist_ok=True)
        configure = [
            "cmake",
            "-S", str(source_dir),
            "-B", str(build_dir),
            f"-DCMAKE_BUILD_TYPE={'Debug' if self.debug else 'Release'}",
            f"-DPython3_EXECUTABLE={sys.executable}",
            f"-Dpybind11_DIR={pybind11.get_cmake_dir()}",
            "-DPROXYRENDER_BUILD_TESTS=OFF",
            "-DPROXYRENDER_BUILD_CLI=OFF",
            f"-DPROXYRENDER_PY_OUTPUT_DIR={out_dir}",
        ]
        subprocess.run(configure, check=True)
        build = [
            "cmake", "--build", str(build_dir),
            "--target", "_core",
            "--parallel", str(os.cpu_count() or 2),
        ]
        subprocess.run(build, check=True)


setup(
    ext_modules=[CMakeExtension("proxyrender._core")],
    cmdclass={"build_ext": CMakeBuild},
)
