import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from intree.interest_tree import InterestTree
from intree.social import Record, SocialParams, SocialState, dump_social_states, ewma_fold

from oracles import scalar_read

# Root -> 1 -> {11, 12}; Root -> 2
TREE = InterestTree({0: 0, 1: 0, 2: 0, 11: 1, 12: 1}, {}, {0: 11, 1: 11, 2: 12, 3: 2})


def test_fold_spot_values():
    assert ewma_fold(10, 4, 0.7, 0.9, 1) == 5.5
    assert ewma_fold(5, 3, 0.1, 0.9, 2) == pytest.approx(3.945, rel=1e-12)


def test_fold_decays_to_zero():
    assert ewma_fold(100, 0, 0.7, 0.9, 500) < 1e-20


def test_params_validation():
    with pytest.raises(ValueError):
        SocialParams(alpha=1.5)
    with pytest.raises(ValueError):
        SocialParams(gamma=0.0)
    with pytest.raises(ValueError):
        SocialParams(window_T=0)
    assert SocialParams(window_T=30).window_of(59.9) == 1


def test_contact_same_interest_counts_tie_and_path():
    st_ = SocialState(0)
    st_.on_contact(1, 11, TREE, now=0)
    assert st_.ties[1].current_count == 1
    assert {c: r.current_count for c, r in st_.density.items()} == {11: 1, 1: 1, 0: 1}


def test_contact_other_interest_leaves_ties():
    st_ = SocialState(0)
    st_.on_contact(3, 2, TREE, now=0)
    assert st_.ties == {}
    assert {c: r.current_count for c, r in st_.density.items()} == {2: 1, 0: 1}


def test_repeated_contact_in_window():
    st_ = SocialState(0)
    st_.on_contact(1, 11, TREE, now=1)
    st_.on_contact(1, 11, TREE, now=2)
    assert st_.ties[1].current_count == 2


def test_self_contact_rejected():
    with pytest.raises(ValueError):
        SocialState(0).on_contact(0, 11, TREE, now=0)


def test_evaporate_formula_and_reset():
    p = SocialParams(alpha=0.7, beta=0.1, gamma=0.9)
    st_ = SocialState(0, p, density={5: Record(4, 10.0, 0)}, ties={1: Record(3, 5.0, -1)})
    st_.evaporate(1)
    assert st_.density[5].predicted == 5.5
    assert st_.density[5].current_count == 0
    assert st_.density[5].last_update_window == 1
    assert st_.ties[1].predicted == pytest.approx(3.945)


def test_evaporate_backwards_rejected():
    st_ = SocialState(0)
    st_.evaporate(5)
    with pytest.raises(ValueError):
        st_.evaporate(4)


def test_missing_records_read_zero():
    st_ = SocialState(0)
    assert st_.density_of(7) == 0.0 and st_.tie_of(3) == 0.0


def test_fold_on_read_fresh_record():
    st_ = SocialState(0, SocialParams(alpha=0.7, beta=0.1))
    for _ in range(3):
        st_.on_contact(3, 2, TREE, now=10)
    assert st_.density_of(2) == pytest.approx(0.7 * 3)
    st_.on_contact(1, 11, TREE, now=10)
    assert st_.tie_of(1) == pytest.approx(0.1)


def test_read_is_pure():
    st_ = SocialState(0)
    st_.on_contact(1, 11, TREE, now=3)
    before = st_.dump_rows()
    assert st_.tie_of(1) == st_.tie_of(1)
    assert st_.dump_rows() == before


def test_read_after_evaporate_matches_fold():
    p = SocialParams(alpha=0.7, gamma=0.9)
    st_ = SocialState(0, p)
    for _ in range(4):
        st_.on_contact(3, 2, TREE, now=5)
    st_.evaporate(1)
    assert st_.density[2].predicted == ewma_fold(0.0, 4, 0.7, 0.9, 1)
    # next window: nothing new, one more boundary of decay
    assert st_.density_of(2) == pytest.approx(ewma_fold(st_.density[2].predicted, 0, 0.7, 0.9, 1))


def test_lazy_decay_equals_stepwise_evaporation():
    def build():
        s = SocialState(0, SocialParams(gamma=0.8))
        s.on_contact(3, 2, TREE, now=0)
        s.on_contact(3, 2, TREE, now=31)
        return s

    lazy, stepwise = build(), build()
    lazy.evaporate(40)
    for w in range(2, 41):
        stepwise.evaporate(w)
    lazy.on_contact(3, 2, TREE, now=40 * 30 + 1)
    stepwise.on_contact(3, 2, TREE, now=40 * 30 + 1)
    a, b = lazy.density_of(2), stepwise.density_of(2)
    assert math.isclose(a, b, rel_tol=1e-9)


def test_dump_rows_csv():
    st_ = SocialState(4)
    st_.on_contact(3, 2, TREE, now=0)
    text = dump_social_states([st_])
    assert text.splitlines()[0] == "owner,kind,key,predicted,current_count,last_update_window"
    assert "4,density,2,0.0,1,0" in text


def test_extra_contact_never_lowers_density():
    rng = random.Random(1)
    for _ in range(200):
        a, b = SocialState(0), SocialState(0)
        for t in sorted(rng.uniform(0, 300) for _ in range(rng.randint(0, 10))):
            for s in (a, b):
                s.on_contact(3, 2, TREE, now=t)
        now = 301.0
        a.on_contact(3, 2, TREE, now=now)
        b.on_contact(1, 11, TREE, now=now)  # unrelated community
        a.on_contact(3, 2, TREE, now=now)
        b.on_contact(1, 11, TREE, now=now)
        assert a.density_of(2) >= b.density_of(2)


@settings(max_examples=150, deadline=None)
@given(
    times=st.lists(st.floats(0, 1500, allow_nan=False), max_size=25),
    alpha=st.floats(0, 1),
    gamma=st.floats(0.05, 1),
    extra=st.floats(0, 600),
)
def test_values_match_scalar_reference(times, alpha, gamma, extra):
    p = SocialParams(alpha=alpha, beta=alpha, gamma=gamma)
    s = SocialState(0, p)
    times = sorted(times)
    for t in times:
        s.on_contact(1, 11, TREE, now=t)
    end = (times[-1] if times else 0.0) + extra
    s.evaporate(p.window_of(end))
    windows = [p.window_of(t) for t in times]
    for value in (s.tie_of(1), s.density_of(11)):
        expected = scalar_read(windows, s.window, alpha, gamma)
        assert value >= 0
        assert math.isclose(value, expected, rel_tol=1e-9, abs_tol=1e-300)
