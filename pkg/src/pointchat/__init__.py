"""pointchat: a session engine that fuses pointing gestures with chat commands
and routes them through a pluggable tool registry.
"""

__version__ = "0.1.0"
