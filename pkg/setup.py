"""Build script: compiles the accelerated solver kernels when a C toolchain
is available, and degrades to the pure-Python kernels otherwise."""

import os
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Try to build the C kernels; a failure is not fatal.

    The package selects the pure-Python kernels at import time when the
    compiled module is absent, so a missing compiler only costs speed.
    """

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, broken, etc.
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print(
            f"WARNING: building the compiled kernels failed ({exc!r}); "
            "falling back to the pure-Python kernels.",
            file=sys.stderr,
        )


def _extensions():
    if os.environ.get("ONLINEIRL_PURE_PYTHON"):
        return []
    try:
        import scipy.linalg  # the kernels link against its BLAS bindings
        from Cython.Build import cythonize
    except ImportError:
        print(
            "WARNING: Cython or SciPy unavailable; installing without compiled kernels.",
            file=sys.stderr,
        )
        return []
    ext = Extension(
        "onlineirl._kernels",
        sources=["src/onlineirl/_kernels.pyx"],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], language_level="3")


setup(ext_modules=_extensions(), cmdclass={"build_ext": OptionalBuildExt})
