"""Builds the optional compiled kernels; the package falls back to numpy without them."""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("DEEPGUARD_NO_EXT", "") in ("", "0"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "deepguard._ckernels",
                    ["src/deepguard/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    # no FMA contraction: keeps scalar kernels bit-identical to the fallback
                    extra_compile_args=["-O2", "-ffp-contract=off"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
