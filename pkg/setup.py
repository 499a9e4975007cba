"""Build the optional Cython kernel core.

The pure-numpy kernels are always available; if Cython or a C compiler is
missing the extension is skipped and ``mkglab.kernels`` falls back silently.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("MKG_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "mkglab._ckernels",
                    ["src/mkglab/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
