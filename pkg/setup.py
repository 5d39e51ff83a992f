import numpy
from setuptools import Extension, setup
from Cython.Build import cythonize

# No -march/-ffast-math: the compiled kernels must round exactly like the
# pure-numpy fallback (scalar IEEE ops, no FMA contraction).
extensions = [
    Extension(
        "lesionfuse._kernels._native",
        ["src/lesionfuse/_kernels/_native.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
)
