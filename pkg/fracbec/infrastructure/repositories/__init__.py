# fracbec/infrastructure/repositories/__init__.py
