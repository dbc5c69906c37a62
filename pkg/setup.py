# Builds the optional compiled scan kernels. If Cython (or a C compiler) is
# unavailable the install still works; dcsched falls back to the pure-Python
# kernels at import time.
#
#    python setup.py build_ext --inplace

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
                "dcsched._core._speedups",
                ["src/dcsched/_core/_speedups.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
        },
    )

setup(ext_modules=ext_modules)
