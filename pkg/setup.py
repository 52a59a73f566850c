"""Builds the optional Cython kernels; the package still installs (pure Python) if this fails."""
import os

from setuptools import Extension, setup


def _extensions():
    if os.environ.get("QENCIPHER_NO_EXT") == "1":
        return []
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "qencipher._speedups",
        ["src/qencipher/_speedups.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=_extensions())
