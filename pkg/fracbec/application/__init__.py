# fracbec/application/__init__.py
