"""Build the optional Cython kernels.

If Cython or a C compiler is missing the package still installs and falls
back to ``missingmass._kernels_py`` at import time.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "missingmass._kernels",
                ["src/missingmass/_kernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3", "embedsignature": True},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
