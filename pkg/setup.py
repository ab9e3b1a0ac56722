"""Builds the optional compiled core; the package falls back to pure Python without it."""
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # no Cython: pure-Python install
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "catrust._core",
                ["src/catrust/_core.pyx"],
                language="c++",
                extra_compile_args=["-O2", "-std=c++17", "-ffp-contract=off"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
