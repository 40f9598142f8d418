import numpy
from Cython.Build import cythonize
from setuptools import setup
from setuptools.extension import Extension

# -ffp-contract=off keeps the compiled kernels bit-identical to the NumPy
# fallback (no FMA contraction in the distance accumulations).
extensions = [
    Extension(
        "semscene.kernels._core",
        ["src/semscene/kernels/_core.pyx"],
        include_dirs=[numpy.get_include()],
        language="c++",
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    ),
]

setup(ext_modules=cythonize(extensions, language_level=3))
