from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    # without Cython the package installs with the gmpy2 kernel only
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "singcov._kernels._vdm",
                ["src/singcov/_kernels/_vdm.pyx"],
                libraries=["mpfr", "gmp"],
                extra_compile_args=["-O2"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
