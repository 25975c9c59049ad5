"""Domain rule modules, one per city system, registered on a shared registry."""

from ..kernel import Registry
from . import health, ict, mobility, social


def default_registry() -> Registry:
    registry = Registry()
    ict.register(registry)
    health.register(registry)
    social.register(registry)
    mobility.register(registry)
    return registry
