from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # no Cython: the interpreted kernel is used
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("resipi._ckernel", ["src/resipi/_kernel.py"], optional=True)],
        language_level=3,
        compiler_directives={"boundscheck": False, "wraparound": False,
                             "cdivision": True, "initializedcheck": False},
    )

setup(ext_modules=ext_modules)
