# Builds the optional Cython step kernel. The package works without it:
# asmvent.engine falls back to the pure-Python kernel at import time.
from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "asmvent.engine._core",
                ["src/asmvent/engine/_core.pyx"],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
