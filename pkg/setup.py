"""Build script: compiles the rollout kernel extension when Cython and a C
compiler are available; the package falls back to the numpy implementation
at import time if the extension is missing."""
from setuptools import setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/substab/_kernels/_rollout_c.pyx"],
        compiler_directives={"language_level": 3},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
