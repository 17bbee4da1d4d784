import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

ext_modules = [
    Extension(
        "selmer_ratios._kernels",
        ["src/selmer_ratios/_kernels.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
        language="c++",
        optional=True,  # fall back to the pure-Python kernels when no compiler is available
    )
]

setup(ext_modules=cythonize(ext_modules, language_level="3"))
