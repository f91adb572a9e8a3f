"""Build script: compiles the optional Cython kernel.

The package is fully functional without the extension; if Cython or a C
compiler is missing, the pure-Python kernel is used at import time.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/lcc/_core/_louvain_cy.pyx",
        compiler_directives={"language_level": 3},
    )
    include_dirs = [np.get_include()]
    for ext in ext_modules:
        ext.include_dirs = include_dirs
except ImportError:
    pass

setup(ext_modules=ext_modules)
