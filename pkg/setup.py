import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext = Extension(
    "kstepmle._speedups",
    ["src/kstepmle/_speedups.pyx"],
    include_dirs=[numpy.get_include()],
    extra_compile_args=["-O3"],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
)
# The package falls back to the pure-NumPy kernels when the build fails.
ext.optional = True

setup(ext_modules=cythonize([ext], language_level=3) if cythonize else [])
