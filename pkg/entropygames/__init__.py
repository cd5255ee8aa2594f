from .core import *  # noqa
from .workflows import *  # noqa
