from veilface.restorer.restorer import *
from veilface.restorer.types import *

__all__ = ["RESTORER_ATTRIBUTE_INIT", "Restorer", "erasion_loss"]
