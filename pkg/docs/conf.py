#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
# avsearch documentation build configuration file.
#
# This file is execfile()d with the current directory set to its
# containing dir.

# Make the package importable for autodoc.
import os
import sys
sys.path.insert(0, os.path.abspath('..'))

import avsearch


# -- Project information -----------------------------------------------------

project = 'avsearch'
copyright = '2026, avsearch developers'
author = 'avsearch developers'

# The short X.Y version.
version = '.'.join(avsearch.__version__.split('.')[:2])
# The full version, including alpha/beta/rc tags.
release = avsearch.__version__


# -- General configuration ------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.coverage',
    'sphinx.ext.mathjax',
    'sphinx.ext.viewcode',
    'sphinx.ext.autosummary',
    'numpydoc']

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'
language = 'en'
exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']
pygments_style = 'sphinx'
todo_include_todos = False


# -- Options for HTML output ----------------------------------------------

html_theme = 'sphinx_rtd_theme'
html_static_path = ['_static']

autosummary_generate = True
autodoc_default_options = {'members': True, 'inherited-members': True}
numpydoc_class_members_toctree = False

htmlhelp_basename = 'avsearchdoc'


# -- Options for LaTeX output ---------------------------------------------

latex_documents = [
    (master_doc, 'avsearch.tex', 'avsearch Documentation',
     author, 'manual'),
]


# -- Options for manual page output ---------------------------------------

man_pages = [
    (master_doc, 'avsearch', 'avsearch Documentation',
     [author], 1)
]
