"""Build hook: compiles the optional Cython kernels.

The package works without the extension (a pure-Python fallback is selected
at import time), so any failure here degrades to a pure build instead of
aborting the install.  Set SPOILKIT_PURE=1 to skip compilation entirely.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("SPOILKIT_PURE") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            ["src/spoilkit/_kernels/_native.pyx"],
            compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False},
        )
    except Exception as exc:  # no Cython / no compiler: fall back to pure python
        print(f"spoilkit: building without compiled kernels ({exc})")
        ext_modules = []

setup(ext_modules=ext_modules)
