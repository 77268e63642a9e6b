import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover - build without Cython falls back to pure Python
    cythonize = None

extra = ["/O2"] if os.name == "nt" else ["-O3"]

ext_modules = []
if cythonize is not None and not os.environ.get("MODESHAPE_NO_EXT"):
    ext = Extension(
        "modeshape._ckernels",
        ["src/modeshape/_ckernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=extra,
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        optional=True,
    )
    ext_modules = cythonize(
        [ext],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=ext_modules)
