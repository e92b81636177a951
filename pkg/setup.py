import os

from setuptools import Extension, setup

# The Cython kernel is optional: the package falls back to the pure-Python
# implementation in realnav._kernels._pure when the extension is missing.
# Set REALNAV_NO_EXT=1 to skip compilation entirely.
ext_modules = []
if os.environ.get("REALNAV_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "realnav._kernels._core",
                    ["src/realnav/_kernels/_core.pyx"],
                    include_dirs=[np.get_include()],
                    # -ffp-contract=off: the pure backend must produce
                    # bit-identical distance fields, so FMA fusion is banned.
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
