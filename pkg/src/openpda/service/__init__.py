from .app import ChatRequest, ChatResponse, ServiceConfig, create_app
from .events import EventHub
from .runner import UvicornThread

__all__ = ["ChatRequest", "ChatResponse", "ServiceConfig", "create_app",
           "EventHub", "UvicornThread"]
