"""Build script for the optional compiled kernel.

The package works without the extension (a numpy fallback is selected at
import time), so failure to build it is non-fatal: set FASTGT_SKIP_EXT=1
to skip compilation entirely.
"""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("FASTGT_SKIP_EXT"):
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "fastgt._fastkern",
                    ["src/fastgt/_fastkern.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
