"""Build script: compiles the optional Cython SDE kernel.

The package works without the extension (a vectorized NumPy kernel is
selected at import time), so a failed compile only costs performance.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "antideph.dynamics._sde_cython",
                ["src/antideph/dynamics/_sde_cython.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
