"""Builds the optional compiled tally kernel; the package works without it."""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("STEERDISTILL_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "steerdistill.distill._tally",
                    ["src/steerdistill/distill/_tally.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
