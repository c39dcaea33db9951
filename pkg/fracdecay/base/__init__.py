# from .constants import *
# from .exceptions import *
# from .config import *
