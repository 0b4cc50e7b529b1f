"""Conservative parallel simulation of continuous-time asynchronous cellular arrays."""

from .asynchrony import ArrivalLaw, cumulative_next_arrival, next_arrival
from .bkl import ClassPartition, FrozenConfiguration, bkl_advance_time, bkl_select
from .engine_parallel import EngineConfig, run_engine
from .engine_serial import (initial_configuration, run_serial_bkl, run_serial_eventlist,
                            run_serial_standard)
from .kernels import BACKEND
from .models import IsingModel, IsingParams, LifeModel, flip_table, ising_index, parse_model
from .perf_model import (EfficiencyEstimate, measured_efficiency, predict_aggregated,
                         predict_one_cell, speedup)
from .rand_streams import Stream, StreamId, StreamKind, make_stream
from .snapshots import FrameRing, PatternWriter, read_pattern, write_pattern
from .topology import Lattice, Partition, neighbors
from .trajectory import InvariantViolation, TieFault, Trajectory

__version__ = "0.1.0"

__all__ = [
    "ArrivalLaw", "BACKEND", "ClassPartition", "EfficiencyEstimate", "EngineConfig",
    "FrameRing", "FrozenConfiguration", "InvariantViolation", "IsingModel", "IsingParams",
    "Lattice", "LifeModel", "Partition", "PatternWriter", "Stream", "StreamId", "StreamKind",
    "TieFault", "Trajectory", "bkl_advance_time", "bkl_select", "cumulative_next_arrival",
    "flip_table", "initial_configuration", "ising_index", "make_stream", "measured_efficiency",
    "neighbors", "next_arrival", "parse_model", "predict_aggregated", "predict_one_cell",
    "read_pattern", "run_engine", "run_serial_bkl", "run_serial_eventlist",
    "run_serial_standard", "speedup", "write_pattern",
]
