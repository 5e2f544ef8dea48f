import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("LATTICEDN_NO_EXT", "") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "latticedn._shoot",
                    ["src/latticedn/_shoot.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        # pure-Python fallback in latticedn._shoot_py is used at runtime
        ext_modules = []

setup(ext_modules=ext_modules)
