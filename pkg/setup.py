"""Builds the hot simulation kernels as C extensions when Cython is available.

The modules listed in HOT_MODULES are plain Python and fully functional
uncompiled; compiling them just speeds up the event loop. Any build failure
falls back to a pure-Python install. Set CHUNKEDGE_NO_EXT=1 to skip the
extension build entirely.
"""

import os

from setuptools import setup
from setuptools.command.build_ext import build_ext

HOT_MODULES = ["cache_core", "policies", "routing"]


class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            print(f"extension build skipped ({exc}); using pure-Python modules")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"building {ext.name} failed ({exc}); using pure-Python module")


def extensions():
    if os.environ.get("CHUNKEDGE_NO_EXT") == "1":
        return []
    try:
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        return []
    return cythonize(
        [
            Extension(f"chunkedge.{mod}", [f"src/chunkedge/{mod}.py"])
            for mod in HOT_MODULES
        ],
        language_level=3,
    )


setup(ext_modules=extensions(), cmdclass={"build_ext": optional_build_ext})
