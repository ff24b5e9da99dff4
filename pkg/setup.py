"""Build script: compiles the optional accelerator extension when Cython is
available, otherwise installs the pure-Python package unchanged."""
import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("ROCSIM_SKIP_EXT", "") not in ("1", "true", "yes"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "rocsim._kernels._core",
                    ["src/rocsim/_kernels/_core.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
