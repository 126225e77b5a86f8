"""Sequence VAE toolkit: training recipes, estimators, and latent probes."""

try:
    from ._core import *  # noqa: F401,F403  (installed package layout)
    from ._core import __version__
except ImportError:  # build-tree layout: the module sits next to the build dir
    from _core import *  # noqa: F401,F403
    from _core import __version__
