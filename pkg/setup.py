import os

from setuptools import setup

ext_modules = []
if os.environ.get("WCDRBM_SKIP_EXTENSION") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "wcdrbm._kernels",
                    ["src/wcdrbm/_kernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3", "-march=native"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        # No Cython/numpy at build time: install the pure-python package only;
        # wcdrbm.backend falls back to the numpy kernels at import.
        ext_modules = []

setup(ext_modules=ext_modules)
