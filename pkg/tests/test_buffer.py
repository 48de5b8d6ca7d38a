import random

from intree.routing import Buffer, ForwardDecision, Verdict, buffer_admit, schedule_transmissions

from helpers import msg

RELAY = lambda score=0.0: ForwardDecision(Verdict.RELAY, "x", score)  # noqa: E731
DELIVER = ForwardDecision(Verdict.DELIVER, "a")


def test_empty_buffer_admits():
    buf = Buffer(5000)
    res = buffer_admit(buf, msg(1, 0, 1, size=4000), now=0)
    assert res.admitted and res.evicted == [] and buf.used == 4000


def test_expired_copy_goes_first():
    buf = Buffer(5000)
    buffer_admit(buf, msg(1, 0, 1, created=0, size=3000, ttl=10), now=0)
    buffer_admit(buf, msg(2, 0, 1, created=5, size=1000), now=5)
    res = buffer_admit(buf, msg(3, 0, 1, created=20, size=3000), now=20)
    assert res.admitted
    assert [m.id for m in res.expired] == [1]
    assert res.evicted == []
    assert set(buf.messages) == {2, 3}


def test_oldest_received_evicted_until_fit():
    buf = Buffer(3000)
    for i in range(3):
        buffer_admit(buf, msg(i, 0, 1, created=i, size=1000), now=i)
    res = buffer_admit(buf, msg(9, 0, 1, created=5, size=2000), now=5)
    assert [m.id for m in res.evicted] == [0, 1]
    assert list(buf.messages) == [2, 9]


def test_pinned_copies_survive():
    buf = Buffer(2000)
    buffer_admit(buf, msg(0, 0, 1, size=1000), now=0)
    buffer_admit(buf, msg(1, 0, 1, size=1000), now=1)
    res = buffer_admit(buf, msg(2, 0, 1, size=1000), now=2, pinned={0})
    assert [m.id for m in res.evicted] == [1]
    res = buffer_admit(buf, msg(3, 0, 1, size=2000), now=3, pinned={0})
    assert not res.admitted and 0 in buf and 2 in buf


def test_rejections():
    buf = Buffer(1000)
    assert not buffer_admit(buf, msg(1, 0, 1, size=1001), now=0).admitted
    buffer_admit(buf, msg(2, 0, 1, size=10), now=0)
    assert buffer_admit(buf, msg(2, 0, 1, size=10), now=0).reason == "duplicate"
    buf.delivered_ids_seen.add(5)
    assert buffer_admit(buf, msg(5, 0, 1, size=10), now=0).reason == "already delivered"


def test_delivered_copies_purged_on_next_operation():
    buf = Buffer(10000)
    buffer_admit(buf, msg(1, 0, 1), now=0)
    buf.delivered_ids_seen.add(1)
    res = buffer_admit(buf, msg(2, 0, 1), now=1)
    assert [m.id for m in res.purged] == [1] and 1 not in buf


def test_capacity_and_invariants_under_random_load():
    rng = random.Random(0)
    buf = Buffer(10000)
    for i in range(500):
        now = float(i)
        if rng.random() < 0.1 and buf.messages:
            buf.delivered_ids_seen.add(rng.choice(list(buf.messages)))
        buffer_admit(buf, msg(i, 0, 1, created=now, size=rng.randint(100, 4000), ttl=rng.uniform(5, 60)), now)
        assert buf.used <= buf.capacity
        assert buf.used == sum(m.size for m in buf.messages.values())
        assert not any(m.expired(now) for m in buf.messages.values())
        assert not (set(buf.messages) & buf.delivered_ids_seen)


def test_delivery_scheduled_before_relay():
    buf = Buffer(1e9)
    a, b = msg(1, 0, 2, created=0), msg(2, 0, 1, created=5)
    for m in (a, b):
        buffer_admit(buf, m, now=5)
    plan = schedule_transmissions(buf, [(a, RELAY(9.0)), (b, DELIVER)], link_bandwidth=1000, contact_remaining=1.5)
    assert [m.id for m, _ in plan] == [2]


def test_empty_plan():
    assert schedule_transmissions(Buffer(100), [], 1000, 10) == []


def test_relays_by_descending_score():
    buf = Buffer(1e9)
    a, b = msg(1, 0, 2), msg(2, 0, 2)
    buffer_admit(buf, a, now=0)
    buffer_admit(buf, b, now=0)
    plan = schedule_transmissions(buf, [(a, RELAY(2.0)), (b, RELAY(5.0))], 1000, 10)
    assert [m.id for m, _ in plan] == [2, 1]


def test_keep_and_missing_copies_not_planned():
    buf = Buffer(1e9)
    a = msg(1, 0, 2)
    buffer_admit(buf, a, now=0)
    keep = ForwardDecision(Verdict.KEEP, "d")
    plan = schedule_transmissions(buf, [(a, keep), (msg(7, 0, 2), RELAY())], 1000)
    assert plan == []
