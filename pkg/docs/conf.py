# Sphinx configuration for the rydgate API pages

import os
import sys

sys.path.insert(0, os.path.abspath(".."))

from rydgate.version import __version__  # noqa: E402

project = "rydgate"
copyright = "2022-2024, The rydgate authors"
author = "The rydgate authors"
version = release = __version__

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.mathjax",
    "sphinx.ext.viewcode",
    "sphinx_autodoc_typehints",
]

autodoc_default_options = {"members": True, "show-inheritance": True}

source_suffix = ".rst"
master_doc = "index"
exclude_patterns = ["_build"]

pygments_style = "tango"
html_theme = "sphinx_rtd_theme"
