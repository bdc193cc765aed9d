# Sphinx configuration for the epiforge documentation.
# https://www.sphinx-doc.org/en/master/usage/configuration.html

project = "epiforge"
copyright = "2026, epiforge team"
author = "epiforge team"
release = "0.1.0"

extensions = []
templates_path = ["_templates"]
exclude_patterns = []

html_theme = "sphinx_rtd_theme"
html_static_path = []

master_doc = "index"
