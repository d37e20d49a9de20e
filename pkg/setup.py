"""Build shim: compiles the optional stepping kernel.

The package works without the extension (a numpy fallback is selected at
import time), so build failures here degrade gracefully rather than blocking
installation.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "phonpair._core",
                ["src/phonpair/_core.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # -fcx-limited-range: plain complex multiply/divide without
                # the __muldc3 library call and its NaN recovery branch; the
                # propagation loop checks state finiteness separately.
                extra_compile_args=["-O3", "-fcx-limited-range"],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
