"""Build script: compiles the Cython kernels when the toolchain allows.

A failed extension build is not fatal; the package falls back to the
pure-numpy kernels at import time.
"""

import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext


def _extensions():
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        return []
    return cythonize(
        ["src/grstest/_kernels/_speedups.pyx"],
        compiler_directives={"language_level": 3},
        include_path=[np.get_include()],
    ), [np.get_include()]


class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001 - any build failure is non-fatal
            print(f"warning: compiled kernels unavailable ({exc}); "
                  "using pure-python fallback", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            print(f"warning: failed to build {ext.name} ({exc}); "
                  "using pure-python fallback", file=sys.stderr)


ext = _extensions()
if ext:
    ext_modules, include_dirs = ext
    for e in ext_modules:
        e.include_dirs.extend(include_dirs)
else:
    ext_modules = []

setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
