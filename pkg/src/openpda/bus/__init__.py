from .broker import Broker, BrokerThread
from .client import BusClient
from .frames import Frame, filter_matches, validate_filter

__all__ = ["Broker", "BrokerThread", "BusClient", "Frame",
           "filter_matches", "validate_filter"]
