"""Build script for the optional compiled event-loop core.

The package works without the extension (a pure-Python core is selected at
import time); the extension exists to push the simulator into multi-Gbps
territory, so a failed compile downgrades to a warning instead of aborting
the install.
"""

import sys

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "ccbench.engine._loop_cy",
                ["src/ccbench/engine/_loop_cy.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
    for ext in ext_modules:
        ext.optional = True
else:
    sys.stderr.write("cython not available; building pure-Python ccbench\n")

setup(ext_modules=ext_modules)
