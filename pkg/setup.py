"""Build script for the optional compiled integration kernel.

The package is fully functional without the extension: ``hybridbt._kernels``
falls back to a NumPy implementation when ``_rk4core`` is absent. Set
``HYBRIDBT_NO_EXT=1`` to skip the build explicitly.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("HYBRIDBT_NO_EXT"):
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "hybridbt._kernels._rk4core",
                    ["src/hybridbt/_kernels/_rk4core.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
