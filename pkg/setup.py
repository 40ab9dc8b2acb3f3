"""Build script for the compiled wave-stepping kernels.

The extension is optional at runtime: if the build is unavailable the
solver falls back to the pure-NumPy reference kernels.
"""

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

ext_modules = [
    Extension(
        "sosgen.solver._kernels",
        ["src/sosgen/solver/_kernels.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        # keep FP arithmetic identical to the NumPy reference path
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

setup(ext_modules=cythonize(ext_modules, language_level=3))
