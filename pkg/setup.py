import os

import numpy as np
from setuptools import Extension, setup

# DCSNET_NO_EXT=1 skips the compiled kernels; the package then runs on its NumPy fallback.
ext_modules = []
if not os.environ.get("DCSNET_NO_EXT"):
    from Cython.Build import cythonize

    extensions = [
        Extension(
            "dcsnet._kernels",
            ["src/dcsnet/_kernels.pyx"],
            include_dirs=[np.get_include()],
            extra_compile_args=["-O3"],
        )
    ]
    ext_modules = cythonize(extensions, compiler_directives={"language_level": "3"})

setup(ext_modules=ext_modules)
