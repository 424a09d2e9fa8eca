"""Build script: optionally compiles the engine kernel to a C extension.

The simulator is pure Python.  For long parameter sweeps the inner
step loop in ``cpnsim/engine/_kernel.py`` dominates runtime, so we also
compile that exact source with Cython under the module name
``cpnsim.engine._kernel_c``.  At import time the engine prefers the
compiled kernel and falls back to the interpreted one (see
``cpnsim/engine/core.py``).  Both are built from the same file, so their
behaviour is identical by construction.

If Cython or a C compiler is unavailable the build silently skips the
extension and the package still works.
"""

import shutil
from pathlib import Path

from setuptools import setup

HERE = Path(__file__).parent
KERNEL = HERE / "src" / "cpnsim" / "engine" / "_kernel.py"
KERNEL_C = HERE / "src" / "cpnsim" / "engine" / "_kernel_c.py"


def maybe_cythonize():
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    from setuptools import Extension

    # _kernel_c.py is a generated copy; never edit it.
    shutil.copyfile(KERNEL, KERNEL_C)
    ext = Extension(
        "cpnsim.engine._kernel_c",
        sources=[str(KERNEL_C.relative_to(HERE))],
    )
    return cythonize(
        [ext],
        compiler_directives={"language_level": "3"},
        quiet=True,
    )


setup(ext_modules=maybe_cythonize())
