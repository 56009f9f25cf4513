from .agents import Action, AgentState, Direction, MoveIntent, PlacementGroup, default_plan, place_agents_checkerboard
from .environment import OBS_DIM, Environment, move_intents, observe, observe_all, resolve_moves, resolve_step
from .extent import Extent
from .gridmap import MapSpec, load_map, read_map
from .scope import Scope
