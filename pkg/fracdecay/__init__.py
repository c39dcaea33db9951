from .photonics import *
from .dynamics import *
from .base.constants import *
from .base.exceptions import ConfigError, InputError, NumericalError
from .base.config import load_config
