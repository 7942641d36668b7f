"""Build script for the optional compiled kernel extension.

The package works without the extension: ``diarseg._kernels`` falls back
to a numpy implementation when the compiled module is unavailable, so the
extension is marked optional and a failed compile does not fail the
install.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "diarseg._kernels._ckernels",
                ["src/diarseg/_kernels/_ckernels.pyx"],
                optional=True,
            )
        ],
        language_level="3",
    )
else:
    extensions = []

setup(ext_modules=extensions)
