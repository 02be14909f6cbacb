import os

from setuptools import Extension, setup

# The compiled kernels are optional: XAIDROID_NO_EXT=1 skips them and the
# package falls back to the numpy implementations at import time.
ext_modules = []
if not os.environ.get("XAIDROID_NO_EXT"):
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "xaidroid.numkernel._kernels_c",
                    ["src/xaidroid/numkernel/_kernels_c.pyx"],
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
