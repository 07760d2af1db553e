"""Ensemble HMM classification of crash stack traces.

Thin re-export of the native extension. The heavy lifting (trace grammars,
Baum-Welch training, ROC-space Boolean fusion) lives in C++; see the project
README for the matching command-line workflow.
"""

try:
    from ._hmmfuse import *  # noqa: F401,F403
    from ._hmmfuse import __doc__ as _native_doc  # noqa: F401
except ImportError:  # dev tree: extension built by CMake, not installed
    from _hmmfuse import *  # noqa: F401,F403

__all__ = [name for name in dir() if not name.startswith("_")]
