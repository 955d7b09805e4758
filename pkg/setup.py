import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("plethora._howell_ext", ["src/plethora/_howell_ext.pyx"],
                   include_dirs=[numpy.get_include()])],
        language_level=3,
    )

setup(ext_modules=ext_modules)
