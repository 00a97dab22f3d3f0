import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None and os.environ.get("KSSAV_NO_EXT", "") in ("", "0"):
    ext_modules = cythonize(
        [
            Extension(
                "kssav._kernels",
                ["src/kssav/_kernels.pyx"],
                include_dirs=[np.get_include()],
                # no -ffast-math: the kernels must round exactly like IEEE double code
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
