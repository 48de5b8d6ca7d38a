from .baselines import (
    EpidemicRouter,
    ProphetRouter,
    ProphetState,
    decide_epidemic,
    decide_prophet,
    prophet_encounter,
)
from .buffer import AdmitResult, Buffer, buffer_admit, schedule_transmissions
from .int_tree import IntTreeRouter, decide_int_tree, density_sequence
from .messages import ForwardDecision, Message, Verdict

ROUTERS = {
    IntTreeRouter.name: IntTreeRouter,
    EpidemicRouter.name: EpidemicRouter,
    ProphetRouter.name: ProphetRouter,
}


def make_router(name: str, tree, node_count: int, params=None):
    try:
        cls = ROUTERS[name]
    except KeyError:
        raise ValueError(f"unknown router {name!r}; expected one of {', '.join(ROUTERS)}") from None
    return cls(tree, node_count, params)


__all__ = [
    "AdmitResult",
    "Buffer",
    "EpidemicRouter",
    "ForwardDecision",
    "IntTreeRouter",
    "Message",
    "ProphetRouter",
    "ProphetState",
    "ROUTERS",
    "Verdict",
    "buffer_admit",
    "decide_epidemic",
    "decide_int_tree",
    "decide_prophet",
    "density_sequence",
    "make_router",
    "prophet_encounter",
    "schedule_transmissions",
]
