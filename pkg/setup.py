"""Build script: compiles the radial ODE kernel when Cython is available.

Set ``CYLWAVE_NO_EXT=1`` to skip the extension; the package then runs on its
pure-Python kernel.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("CYLWAVE_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "cylwave._radial_core",
                    ["src/cylwave/_radial_core.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={
                "language_level": 3,
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "initializedcheck": False,
            },
        )

setup(ext_modules=ext_modules)
