from setuptools import Extension, setup
from Cython.Build import cythonize
import numpy as np

ext = Extension(
    "skinfuse._kernels._native",
    ["src/skinfuse/_kernels/_native.pyx"],
    include_dirs=[np.get_include()],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    extra_compile_args=["-O3"],
)

setup(ext_modules=cythonize([ext], language_level=3))
