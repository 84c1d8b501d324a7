"""Build the optional compiled kernels.

The package works without them: ``gasleak._accel`` falls back to the
numpy implementations in ``gasleak._fallback`` when the extension is absent.
"""
import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.path.exists(os.path.join("src", "gasleak", "_kernels.pyx")):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "gasleak._kernels",
                    ["src/gasleak/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
