"""Build script: compiles the optional Cython simulation kernels.

If Cython (or a C compiler) is unavailable the package still installs and
falls back to the pure-Python kernels in ``rectgilbert._kernels_py``; the
compiled and fallback kernels are bit-for-bit interchangeable.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "rectgilbert._kernels",
                ["src/rectgilbert/_kernels.pyx"],
                # -ffp-contract=off forbids FMA contraction so that the C
                # kernels produce bit-identical doubles to the pure-Python
                # fallback (CPython never fuses multiply-adds).
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
