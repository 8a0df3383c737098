"""Python access to the native grid environment."""

import json

from ._native import ActionError, ConfigError, IntegrityError, ParseError, VectorEnv
from ._native import Env as _Env

__all__ = ["Env", "VectorEnv", "ConfigError", "ParseError", "IntegrityError", "ActionError"]


class Env(_Env):
    """Environment handle. step() returns (obs, reward, (lsi, tlo), done, info)."""

    def spec(self):
        return json.loads(self.spec_json())
