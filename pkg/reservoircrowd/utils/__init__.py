from . import config
from . import errors
from . import files
from . import helper
from . import paths
