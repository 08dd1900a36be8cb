# fracbec/infrastructure/cli/__init__.py
