"""needcast: anticipate a user's next information needs from check-in activity."""

__version__ = "0.1.0"
