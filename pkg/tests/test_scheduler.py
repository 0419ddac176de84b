"""Port assignment, job lifecycle, agent synchronization, token rules."""

import http.client
import random
import re

import pytest

from portalgate.agent import IdentAgent
from portalgate.errors import NotFound, NotOwner, NotRunning, RangeExhausted, SpawnFailure, UnknownNode
from portalgate.scheduler import PortAllocator, Scheduler

from conftest import ALICE, BOB, next_node_ip


class DummyApp:
    """Stands in for a demo app when tests only exercise bookkeeping."""

    def __init__(self, host, ports, token=None):
        self.host, self.ports, self.token = host, ports, token

    def start(self):
        pass

    def stop(self):
        pass


class FailingApp(DummyApp):
    def start(self):
        raise OSError("address in use")


def make_scheduler(node_count=1, port_range=(8000, 8002), kinds=None, agents=None):
    nodes = {f"node-{i+1}": next_node_ip() for i in range(node_count)}
    return Scheduler(nodes, port_range,
                     agents=agents,
                     app_kinds=kinds if kinds is not None else {"dummy": DummyApp})


def test_lowest_available_first():
    sched = make_scheduler()
    job = sched.launch(ALICE, "node-1", "dummy", port_count=2)
    assert job.ports == [8000, 8001]


def test_range_exhausted():
    sched = make_scheduler()
    sched.launch(ALICE, "node-1", "dummy", port_count=2)
    with pytest.raises(RangeExhausted):
        sched.launch(ALICE, "node-1", "dummy", port_count=2)
    # a single port still fits
    assert sched.launch(ALICE, "node-1", "dummy").ports == [8002]


def test_ports_are_per_node():
    sched = make_scheduler(node_count=2)
    first = sched.launch(ALICE, "node-1", "dummy", port_count=3)
    second = sched.launch(ALICE, "node-2", "dummy", port_count=3)
    assert first.ports == second.ports == [8000, 8001, 8002]


def test_unknown_node():
    sched = make_scheduler()
    with pytest.raises(UnknownNode):
        sched.launch(ALICE, "node-9", "dummy")


def test_port_recycling():
    sched = make_scheduler()
    job = sched.launch(ALICE, "node-1", "dummy", port_count=3)
    sched.stop(job.job_id, ALICE)
    assert sched.launch(ALICE, "node-1", "dummy", port_count=3).ports == [8000, 8001, 8002]


def test_spawn_failure_frees_ports_and_marks_failed():
    sched = make_scheduler(kinds={"bad": FailingApp, "dummy": DummyApp})
    with pytest.raises(SpawnFailure):
        sched.launch(ALICE, "node-1", "bad")
    assert sched.launch(ALICE, "node-1", "dummy").ports == [8000]
    states = [j.state for j in sched.list_jobs(ALICE)]
    assert "failed" in states


def test_stop_authorization_and_idempotence():
    sched = make_scheduler()
    job = sched.launch(ALICE, "node-1", "dummy")
    with pytest.raises(NotOwner):
        sched.stop(job.job_id, BOB)
    sched.stop(job.job_id, ALICE)
    assert sched.stop(job.job_id, ALICE).state == "stopped"  # idempotent
    with pytest.raises(NotFound):
        sched.stop(999, ALICE)


def test_list_jobs_is_per_owner_newest_first():
    sched = make_scheduler(port_range=(8000, 8010))
    first = sched.launch(ALICE, "node-1", "dummy")
    second = sched.launch(ALICE, "node-1", "dummy")
    sched.launch(BOB, "node-1", "dummy")
    mine = sched.list_jobs(ALICE)
    assert [j.job_id for j in mine] == [second.job_id, first.job_id]
    assert all(j.owner.uid == ALICE.uid for j in mine)
    sched.stop(first.job_id, ALICE)
    assert [j.state for j in sched.list_jobs(ALICE)] == ["running", "stopped"]


def test_connect_link_shapes():
    sched = make_scheduler(kinds={"dummy": DummyApp, "token-notebook": DummyApp})
    plain = sched.launch(ALICE, "node-1", "dummy")
    assert sched.connect_link(plain) == f"/fw2/node-1:{plain.ports[0]}/"
    tokened = sched.launch(ALICE, "node-1", "token-notebook")
    link = sched.connect_link(tokened)
    assert re.fullmatch(rf"/fw2/node-1:{tokened.ports[0]}/\?token=[0-9a-f]{{48}}", link)
    sched.stop(tokened.job_id, ALICE)
    with pytest.raises(NotRunning):
        sched.connect_link(tokened)


def test_tokens_are_unique_and_48_hex():
    sched = make_scheduler(port_range=(8000, 8100),
                           kinds={"token-notebook": DummyApp})
    tokens = {sched.launch(ALICE, "node-1", "token-notebook").token for _ in range(50)}
    assert len(tokens) == 50
    assert all(re.fullmatch(r"[0-9a-f]{48}", t) for t in tokens)


def test_agent_registration_follows_lifecycle():
    agent = IdentAgent((next_node_ip(), 0))
    agent.start()
    try:
        nodes = {"node-1": agent.address[0]}
        sched = Scheduler(nodes, (8000, 8005), agents={"node-1": agent},
                          app_kinds={"dummy": DummyApp})
        job = sched.launch(ALICE, "node-1", "dummy", port_count=2)
        for port in job.ports:
            assert agent.owner_of(port) == (ALICE.uid, ALICE.primary_gid)
        sched.stop(job.job_id, ALICE)
        for port in job.ports:
            assert agent.owner_of(port) is None
    finally:
        agent.stop()


def test_sequential_fill_has_no_conflicts():
    """10 nodes x 50 single-port jobs over a 50-port range: every port used
    exactly once per node."""
    sched = make_scheduler(node_count=10, port_range=(9000, 9049))
    seen = {}
    for node_i in range(10):
        node = f"node-{node_i+1}"
        for _ in range(50):
            job = sched.launch(ALICE, node, "dummy")
            seen.setdefault(node, []).append(job.ports[0])
    for node, ports in seen.items():
        assert sorted(ports) == list(range(9000, 9050))
        assert len(set(ports)) == 50


def test_real_apps_bind_all_assigned_ports():
    host = next_node_ip()
    sched = Scheduler({"node-1": host}, (21100, 21105), app_kinds=None)  # real demo apps
    job = sched.launch(ALICE, "node-1", "echo-http", port_count=2)
    try:
        for port in job.ports:
            conn = http.client.HTTPConnection(host, port, timeout=5)
            conn.request("GET", "/x")
            resp = conn.getresponse()
            assert resp.status == 200
            assert resp.read().startswith(b"GET /x ")
            conn.close()
    finally:
        sched.stop_all()


def test_allocator_random_ops_invariant():
    rng = random.Random(42)
    alloc = PortAllocator((100, 119))
    live = {}
    for _ in range(2000):
        node = f"n{rng.randint(1, 3)}"
        if rng.random() < 0.55:
            try:
                ports = alloc.assign(node, rng.randint(1, 3))
            except RangeExhausted:
                continue
            for p in ports:
                assert 100 <= p <= 119
                assert p not in live.get(node, set())
                live.setdefault(node, set()).add(p)
        else:
            held = sorted(live.get(node, ()))
            if held:
                victim = rng.sample(held, k=min(len(held), rng.randint(1, 2)))
                alloc.release(node, victim)
                live[node] -= set(victim)
        assert alloc.in_use(node) == live.get(node, set())
