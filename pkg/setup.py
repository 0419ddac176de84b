"""Builds the optional compiled rewrite kernel.

The package works without it: portalgate.rewrite falls back to the pure
Python kernel when the extension is missing.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("portalgate.rewrite._kernel_c", ["src/portalgate/rewrite/_kernel_c.pyx"])],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
