from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python fallback is selected at import
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "atomkg._core._ckernels",
                ["src/atomkg/_core/_ckernels.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
