"""Shared builders for the test suite."""
from dcsched.config import RunConfig

NET = 0.0005


def make_config(scheduler="megha", gm=1, lm=1, wpp=4, jobs=2, tasks=2,
                duration=1.0, load=0.5, **overrides):
    data = {
        "scheduler": scheduler,
        "topology": {"gm_count": gm, "lm_count": lm,
                     "workers_per_partition": wpp},
        "workload": {"synthetic": {"jobs": jobs, "tasks_per_job": tasks,
                                   "task_duration": duration, "load": load}},
    }
    data.update(overrides)
    return RunConfig.from_dict(data)


def hop_chain(start, *legs):
    """Accumulate times the way the simulator does: one addition per leg."""
    t = start
    for leg in legs:
        t = t + leg
    return t
