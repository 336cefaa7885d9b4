"""Sequential seeding experiments on multilayer networks."""

__version__ = "0.1.0"
