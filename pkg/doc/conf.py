#!/usr/bin/env python3
#
# pymultivote documentation build configuration file.
#
# This file is execfile()d with the current directory set to its
# containing dir.

import sys
import os

sys.path.insert(0, os.path.abspath('..'))
import pymultivote

# -- General configuration ------------------------------------------------

needs_sphinx = '1.3'

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.autosummary',
    'sphinx.ext.intersphinx',
    'sphinx.ext.todo',
    'sphinx.ext.viewcode',
    'sphinx.ext.napoleon',
    'sphinx.ext.mathjax',
]

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = 'pymultivote'
copyright = '2021, Anders Melchiorsen'
author = 'Anders Melchiorsen'

# The short X.Y version.
version = pymultivote.__version__
# The full version, including alpha/beta/rc tags.
release = pymultivote.__version__

language = 'en'
exclude_patterns = ['_build']

# The reST default role (used for this markup: `text`) to use for all
# documents.
default_role = 'any'

pygments_style = 'sphinx'
modindex_common_prefix = ['pymultivote.']
keep_warnings = True
todo_include_todos = True

intersphinx_mapping = {
    'python': ('https://docs.python.org/3', None),
    'numpy': ('https://numpy.org/doc/stable/', None),
    'scipy': ('https://docs.scipy.org/doc/scipy/', None),
}

# -- Autodoc configuration ------------------------------------------------

autodoc_default_flags = ['members']
autodoc_member_order = 'bysource'
autoclass_content = 'both'

# -- Options for HTML output ----------------------------------------------

html_theme = 'sphinx_rtd_theme'
html_static_path = ['_static']
htmlhelp_basename = 'pymultivotedoc'

# -- Options for manual page output ---------------------------------------

man_pages = [
    (master_doc, 'pymultivote', 'pymultivote Documentation',
     [author], 1)
]
