"""Build the optional compiled sweep kernels.

The extension is marked optional: if Cython or a C compiler is missing the
package still installs and runs on the pure-Python kernels.
"""
import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "semisep._accel",
                sources=["src/semisep/_accel.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
