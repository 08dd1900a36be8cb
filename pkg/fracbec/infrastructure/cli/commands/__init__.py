# fracbec/infrastructure/cli/commands/__init__.py
