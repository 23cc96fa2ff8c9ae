"""Build the optional compiled pair kernel.

The extension is marked optional: when Cython or a C compiler is missing the
package still installs and falls back to the numpy kernel at import time.
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover - build without the extension
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "bilipapprox._pairs",
                ["src/bilipapprox/_pairs.pyx"],
                include_dirs=[np.get_include()],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
