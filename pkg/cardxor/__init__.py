"""Libraries for generating, encoding, and solving random 1-CARD-XOR instances."""

from cardxor.encode import CardEncoding
from cardxor.encode import EncodingChoice
from cardxor.encode import XorMode
from cardxor.encode import encode_instance
from cardxor.encode import write_dimacs
from cardxor.instance import CardConstraint
from cardxor.instance import CardXorInstance
from cardxor.instance import GenConfig
from cardxor.instance import generate
from cardxor.instance import read_native
from cardxor.instance import write_native
from cardxor.solve import Engine
from cardxor.solve import EngineConfig
from cardxor.solve import Polarity
from cardxor.solve import SolveResult
from cardxor.solve import Status
from cardxor.solve import solve as solve_instance
from cardxor.transition import classify
from cardxor.transition import phi

__version__ = "1.0.0"
