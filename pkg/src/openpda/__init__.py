"""openpda: an open personal-assistant platform.

Natural-language chat in, machine commands out, demonstrated end to end
with a simulated smart home behind a small publish/subscribe bus.
"""

__version__ = "0.1.0"
