"""Entanglement maps from depth images for tangle-aware bin picking."""

from .depth import DepthImage, Intrinsics
from .edges import EdgeConfig, EdgeSegmentSet, extract_segments
from .entanglement import MapConfig, MapWeights, WindowGrid, generate, generate_detailed
from .errors import NoGraspFound, TangleMapError
from .gli import Segment3D, TopologyCoordinate, WritheMatrix, gli_segments, topology_coordinate, writhe_matrix
from .graspability import GraspCandidate, GraspConfig, HandGeometry, HandTemplate, build_templates
from .planner import PlannerConfig, PlanResult, plan

__version__ = "0.1.0"
