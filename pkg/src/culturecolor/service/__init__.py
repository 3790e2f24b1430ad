from culturecolor.service.app import create_app
from culturecolor.service.config import ServiceConfig
from culturecolor.service.state import FeedbackLog, ModelRegistry, SessionStore

__all__ = ["create_app", "ServiceConfig", "FeedbackLog", "ModelRegistry", "SessionStore"]
