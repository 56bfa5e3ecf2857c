"""The NDF schema language: syntax tree, parser, printer and checker."""
