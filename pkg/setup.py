"""Build script for the optional compiled prox kernels.

The package works without the extension (a NumPy fallback is selected at
import time), so a failed compilation only costs speed.
"""

import sys

from setuptools import setup

try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    extensions = cythonize(
        [
            Extension(
                "sparsereg._kernels._prox_cy",
                ["src/sparsereg/_kernels/_prox_cy.pyx"],
                include_dirs=[np.get_include()],
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
except Exception as exc:  # pragma: no cover - build-env dependent
    print(f"sparsereg: skipping compiled kernels ({exc})", file=sys.stderr)
    extensions = []

setup(ext_modules=extensions)
