# -*- coding: utf-8 -*-
#
# pylint: skip-file
#
# Sphinx configuration for the privnet-cpd documentation.

import inspect
import os
import shutil
import sys

__location__ = os.path.join(os.getcwd(), os.path.dirname(
    inspect.getfile(inspect.currentframe())))

sys.path.insert(0, os.path.join(__location__, '../src'))

# -- Run sphinx-apidoc ------------------------------------------------------
# Read the Docs does not run `sphinx-apidoc` before `sphinx-build`, so the
# module reference under api/ is regenerated on every build.

from sphinx.ext import apidoc

output_dir = os.path.join(__location__, 'api')
module_dir = os.path.join(__location__, '../src/privnet_cpd')
shutil.rmtree(output_dir, ignore_errors=True)
try:
    apidoc.main(['-M', '-f', '-o', output_dir, module_dir])
except Exception as e:
    print(f'Running `sphinx-apidoc` failed!\n{e}')

# -- General configuration ----------------------------------------------------

extensions = ['sphinx.ext.autodoc', 'sphinx.ext.intersphinx', 'sphinx.ext.viewcode',
              'sphinx.ext.napoleon', 'reno.sphinxext']
autodoc_member_order = 'groupwise'

source_suffix = '.rst'
master_doc = 'index'
exclude_patterns = ['_build']
pygments_style = 'sphinx'

project = 'privnet-cpd'
copyright = '2026, privnet-cpd contributors'

try:
    from privnet_cpd import __version__ as version
except ImportError:
    version = ''
release = version

# -- Options for HTML output --------------------------------------------------

html_theme = 'alabaster'
html_theme_options = {
    'description': 'Change points in privatised dynamic networks.',
}
htmlhelp_basename = 'privnet-cpd-doc'

# -- External mapping ---------------------------------------------------------

intersphinx_mapping = {
    'python': ('https://docs.python.org/3', None),
    'numpy': ('https://numpy.org/doc/stable', None),
    'pandas': ('https://pandas.pydata.org/docs', None),
    'trio': ('https://trio.readthedocs.io/en/stable', None),
}
