# -*- coding: utf-8 -*-
#
# Sphinx configuration for the parapost documentation.

import os
import sys

sys.path.insert(0, os.path.abspath("../../"))

from parapost.version import NAME, VERSION  # noqa: E402


# -- General configuration ------------------------------------------------

# Google style docstrings
extensions = ["sphinx.ext.autodoc", "sphinx.ext.napoleon"]
autodoc_default_options = {
    "members": True,
    "show-inheritance": True,
}
autodoc_member_order = "bysource"
napoleon_google_docstring = True
napoleon_numpy_docstring = False

source_suffix = ".rst"
master_doc = "index"

project = NAME
copyright = "2024, the parapost developers"
author = "the parapost developers"
version = VERSION
release = VERSION

exclude_patterns = []
pygments_style = "sphinx"


# -- Options for HTML output ----------------------------------------------

html_theme = "sphinx_rtd_theme"
html_sidebars = {"**": ["relations.html", "searchbox.html"]}
htmlhelp_basename = "parapostdoc"


# -- Options for manual page output ---------------------------------------

man_pages = [
    (master_doc, NAME, "parapost Documentation", [author], 1),
]
