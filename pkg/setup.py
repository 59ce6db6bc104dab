"""Build script for the optional compiled sphere-decoder kernel.

The package works without the extension (a pure-Python kernel is selected
at import time), so a failed cythonize only costs speed.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize
    import numpy as np

    ext_modules = cythonize(
        [
            Extension(
                "nafsim.decoder._spherecore",
                ["src/nafsim/decoder/_spherecore.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
