"""Builds the optional Cython kernels; the package works without them."""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("SBSTTUNE_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [Extension("sbsttune._ckernels", ["src/sbsttune/_ckernels.pyx"], extra_compile_args=["-O3"])],
            compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False},
        )

setup(ext_modules=ext_modules)
