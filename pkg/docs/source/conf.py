"""Sphinx configuration for the synthpower documentation."""

import os
import sys

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..", "..", "src")))

project = "synthpower"
author = "synthpower developers"
release = "1.0.0"

extensions = [
    "myst_parser",
    "sphinx.ext.autodoc",
    "sphinx.ext.napoleon",
    "sphinx.ext.viewcode",
    "sphinx_copybutton",
    "sphinx_design",
    "sphinx_markdown_builder",
]

source_suffix = {".rst": "restructuredtext", ".md": "markdown"}
myst_enable_extensions = ["colon_fence", "deflist"]

napoleon_google_docstring = True
autodoc_member_order = "bysource"
autodoc_typehints = "description"

exclude_patterns = ["build"]

html_theme = "furo"
html_title = "synthpower"
