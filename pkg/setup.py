"""Builds the optional Cython kernels; the package works without them."""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/parley/kernels/_hals.pyx"],
        compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False},
    )
    for ext in ext_modules:
        ext.include_dirs.append(numpy.get_include())
except Exception as exc:  # no compiler or Cython: pure-Python fallback
    print(f"skipping compiled kernels: {exc}")

setup(ext_modules=ext_modules)
