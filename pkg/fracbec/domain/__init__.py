# fracbec/domain/__init__.py
