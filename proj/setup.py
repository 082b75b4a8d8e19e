"""CMake-driven build of the maml_lab._core extension.

Install with `pip install . --no-build-isolation` (needs cmake, a C++20
compiler, Eigen, and pybind11 on the host).
"""

import os
import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CMakeExtension(Extension):
    def __init__(self, name):
        super().__init__(name, sources=[])


class CMakeBuild(build_ext):
    def build_extension(self, ext):
        import pybind11

        out_dir = Path(self.get_ext_fullpath(ext.name)).parent.resolve()
        build_dir = Path(self.build_temp) / "cmake"
        build_dir.mkdir(parents=True, exist_ok=True)
        source_dir = Path(__file__).parent.resolve()

        env = dict(os.environ, MAML_SETUP_PY="1")
        cfg_args = [
            "cmake",
            "-S", str(source_dir),
            "-B", str(build_dir),
            "-DCMAKE_BUILD_TYPE=Release",
            "-DMAML_BUILD_PYTHON=ON",
            f"-Dpybind11_DIR={pybind11.get_cmake_dir()}",
            f"-DPYTHON_EXECUTABLE={sys.executable}",
            f"-DPython_EXECUTABLE={sys.executable}",
        ]
        subprocess.run(cfg_args, check=True, env=env)
        subprocess.run(
            ["cmake", "--build", str(build_dir), "--target", "_core",
             "--parallel"],
            check=True, env=env)

        built = None
        for candidate in build_dir.glob("_core*"):
            if candidate.suffix in (".so", ".pyd", ".dylib"):
                built = candidate
                break
        if built is None:
            raise RuntimeError("cmake did not produce the _core module")
        out_dir.mkdir(parents=True, exist_ok=True)
        self.copy_file(str(built), self.get_ext_fullpath(ext.name))


setup(
    ext_modules=[CMakeExtension("maml_lab._core")],
    cmdclass={"build_ext": CMakeBuild},
)
