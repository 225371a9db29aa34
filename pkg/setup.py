"""Build script: compiles the optional Cython speedups.

The package works without the extension (pure-Python kernels are selected at
import time), so a failed compile only costs speed.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "dehnfill._speedups",
                ["src/dehnfill/_speedups.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except Exception as exc:  # pragma: no cover - build environments without cython
    print(f"dehnfill: building without compiled speedups ({exc})")

setup(ext_modules=ext_modules)
