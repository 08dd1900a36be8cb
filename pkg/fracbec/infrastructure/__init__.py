# fracbec/infrastructure/__init__.py
