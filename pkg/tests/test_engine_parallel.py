import math

import numpy as np
import pytest

from asyncca.asynchrony import ArrivalLaw
from asyncca.engine_parallel import EngineConfig, run_engine, wait_until
from asyncca.engine_serial import initial_configuration, run_serial_eventlist
from asyncca.models import IsingModel, IsingParams, LifeModel, life_next_state
from asyncca.snapshots import MemorySink
from asyncca.topology import Lattice
from asyncca.trajectory import TieFault

ISING2 = IsingModel(IsingParams(1, 0, 2))
POISSON = ArrivalLaw.poisson(1.0)


def _run(variant, lattice, seed=1, m=None, workers=1, end=5.0, law=POISSON, model=ISING2, **kw):
    cfg = EngineConfig(variant=variant, workers=workers, end_time=end, **kw)
    return run_engine(cfg, model, lattice, law, seed, m=m)


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_general_engines_match_oracle(seed):
    lat = Lattice(2, 16)
    ref = run_serial_eventlist(ISING2, lat, POISSON, seed, 5.0)
    runs = [_run("agg", lat, seed, m, w) for m in (4, 8, 16) for w in (1, 3)]
    runs += [_run("async1", lat, seed, workers=w) for w in (1, 4)]
    runs += [_run("sync1", lat, seed, workers=w) for w in (1, 2)]
    for r in runs:
        assert r.hash == ref.hash
        assert np.array_equal(r.final, ref.final)
        assert r.first_divergence(ref) is None


@pytest.mark.parametrize("law", ["uniform", "power:8", "gaussian:1,0.3", "poisson:2.5"])
def test_other_laws_match_oracle(law):
    lat = Lattice(2, 12)
    a = ArrivalLaw.parse(law)
    ref = run_serial_eventlist(ISING2, lat, a, 7, 4.0)
    assert _run("agg", lat, 7, 4, 2, 4.0, a).hash == ref.hash
    assert _run("async1", lat, 7, None, 1, 4.0, a).hash == ref.hash


@pytest.mark.parametrize("dim,n,m", [(1, 64, 8), (3, 6, 3)])
def test_other_dimensions(dim, n, m):
    model = IsingModel(IsingParams(1, 0, 2), dim=dim)
    lat = Lattice(dim, n)
    ref = run_serial_eventlist(model, lat, POISSON, 3, 3.0)
    assert _run("agg", lat, 3, m, 2, 3.0, model=model).hash == ref.hash


def test_life_with_moore_partition():
    lat = Lattice(2, 12)
    ref = run_serial_eventlist(LifeModel(), lat, POISSON, 5, 4.0)
    assert ref.changes > 0
    assert _run("agg", lat, 5, 4, 2, 4.0, model=LifeModel()).hash == ref.hash


def test_scheduling_jitter_does_not_change_hash():
    lat = Lattice(2, 16)
    ref = run_serial_eventlist(ISING2, lat, POISSON, 9, 3.0)
    for js in range(3):
        t = _run("agg", lat, 9, 4, 4, 3.0, jitter=0.3, jitter_seed=js)
        assert t.hash == ref.hash


def test_fixed_law_tie_fault():
    with pytest.raises(TieFault):
        _run("agg", Lattice(2, 8), 1, 4, 1, 3.0, ArrivalLaw.fixed())
    with pytest.raises(TieFault):
        _run("async1", Lattice(1, 2), 1, None, 1, 3.0, ArrivalLaw.fixed())


def test_sync_fixed_law_is_synchronous_life():
    lat = Lattice(2, 10)
    life = LifeModel()
    conf = initial_configuration(life, lat, 4)
    traj = _run("sync1", lat, 4, None, 2, 3.5, ArrivalLaw.fixed(), model=life)
    rows = lat.stencil_table(life.stencil)
    grid = conf.tolist()
    for _ in range(3):
        grid = [life_next_state(grid[c], [grid[j] for j in rows[c]]) for c in range(lat.size)]
    assert traj.final.tolist() == grid
    assert traj.stats["eligible_per_round"][:3] == [lat.size] * 3


def test_sync_eligible_fraction():
    lat = Lattice(2, 64)
    t = _run("sync1", lat, 1, end=10.0)
    ep = np.array(t.stats["eligible_per_round"])
    r = len(ep)
    assert abs(ep[r // 5: r - r // 5].mean() / lat.size - 0.121) < 0.01


def test_poisson_engine_repeatable_per_partition():
    lat = Lattice(2, 16)
    h4 = {_run("agg-poisson", lat, 2, 4, w).hash for w in (1, 2, 3)}
    h8 = {_run("agg-poisson", lat, 2, 8, 1).hash for _ in range(2)}
    assert len(h4) == 1 and len(h8) == 1
    assert h4 != h8


def test_poisson_engine_event_rate():
    lat = Lattice(2, 16)
    end = 20.0
    t = _run("agg-poisson", lat, 3, 8, 1, end)
    owner = (t.cells // 16 // 8) * 2 + (t.cells % 16) // 8
    counts = np.bincount(owner, minlength=4)
    mu = 64 * end
    assert np.all(np.abs(counts - mu) < 3.5 * math.sqrt(mu))


def test_bkl_engine_invariants():
    lat = Lattice(2, 8)
    t = _run("agg-poisson", lat, 1, 4, 2, 20.0, bkl=True, check_invariants=True)
    st = t.stats
    assert st["rejected_kernel_moves"] == 0
    assert st["kernel_selections"] > 0 and st["boundary_selections"] > 0
    assert t.events >= 1000


@pytest.mark.parametrize("frames,dt", [(1, 0.5), (3, 0.25), (2, 1.0)])
def test_snapshots_match_oracle_and_bound_lag(frames, dt):
    lat = Lattice(2, 16)
    end = 4.0
    ref = run_serial_eventlist(ISING2, lat, POISSON, 6, end)
    sink = MemorySink()
    t = _run("agg", lat, 6, 4, 3, end, snapshot_dt=dt, frames=frames, sink=sink,
             check_invariants=True)
    assert t.hash == ref.hash
    ks = sorted(sink.frames)
    assert ks == list(range(math.ceil(end / dt)))
    assert t.stats["snapshots"] == ks
    for K in ks:
        time_, frame = sink.frames[K]
        assert time_ == K * dt
        assert np.array_equal(frame, ref.configuration_at(K * dt))
    assert t.stats["max_lag"] <= frames * dt + 1e-9


def test_lag_bound_respected():
    lat = Lattice(2, 16)
    t = _run("agg", lat, 2, 4, 2, 5.0, lag_bound=0.3, check_invariants=True)
    assert t.stats["max_lag"] <= 0.3 + 1e-9
    assert t.hash == run_serial_eventlist(ISING2, lat, POISSON, 2, 5.0).hash


def test_wait_until_examples():
    assert wait_until(2.0, [2.5, 3.1])
    assert not wait_until(2.0, [1.9])
    with pytest.raises(TieFault):
        wait_until(2.0, [2.0])
    assert wait_until(2.0, [2.0], tie="order", me=0, ids=[3])
    assert not wait_until(2.0, [2.0], tie="order", me=5, ids=[3])


def test_config_validation():
    with pytest.raises(ValueError):
        EngineConfig(variant="warp")
    with pytest.raises(ValueError):
        EngineConfig(workers=0)
    with pytest.raises(ValueError):
        EngineConfig(lag_bound=1.0, snapshot_dt=1.0)
    with pytest.raises(ValueError):
        EngineConfig(variant="agg", bkl=True)
    with pytest.raises(ValueError):
        _run("agg-poisson", Lattice(2, 8), m=4, law=ArrivalLaw.uniform())
