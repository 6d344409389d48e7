"""Build hook for the optional compiled matching kernels.

The package is fully functional without compilation (a pure-Python/numpy
backend is selected at import time); the Cython extension just makes the
per-image IoU/assignment loop faster on large evaluations.
"""

import os

from setuptools import setup


def _extensions():
    if os.environ.get("BOXCAMP_SKIP_EXT"):
        return []
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        return []
    ext = Extension(
        "boxcamp.kernels._speedups",
        ["src/boxcamp/kernels/_speedups.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=_extensions())
