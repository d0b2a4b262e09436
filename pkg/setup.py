"""Build script: compiles the optional DP kernel extension.

The package works without the extension (a NumPy fallback is selected at
import time), so any failure here degrades to a pure build rather than
aborting the install.
"""

from setuptools import setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/diqsv/_kernels/_fast.pyx"],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
