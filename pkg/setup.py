import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("ELQA_SKIP_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "elqa.model.kernels._recnet",
                    ["src/elqa/model/kernels/_recnet.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level="3",
        )
    except ImportError:
        # No Cython/numpy at build time: install the pure-Python package;
        # the kernel dispatcher falls back to the numpy reference backend.
        ext_modules = []

setup(ext_modules=ext_modules)
