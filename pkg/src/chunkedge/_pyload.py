"""Loads the hot kernel modules from their .py sources, bypassing built extensions.

Registering the interpreted modules in sys.modules before anything imports
them makes every later `from chunkedge import cache_core` resolve to the
pure-Python version. Must run from the package __init__, in dependency order.
"""

import importlib.util
import os
import sys


def load_pure_modules(names):
    pkg_dir = os.path.dirname(__file__)
    package = sys.modules[__package__]
    for name in names:
        fullname = f"{__package__}.{name}"
        if fullname in sys.modules:
            continue
        path = os.path.join(pkg_dir, name + ".py")
        spec = importlib.util.spec_from_file_location(fullname, path)
        module = importlib.util.module_from_spec(spec)
        sys.modules[fullname] = module
        spec.loader.exec_module(module)
        setattr(package, name, module)
