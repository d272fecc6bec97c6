import numpy as np
import pytest

from failcast import LifetimeRecord


def heat_exchanger_shaped_records():
    """3 groups, 300 tubes, 11 events (4 left-censored + 7 interval), 289 right.

    Synthetic stand-in mirroring the shape of a periodic-inspection dataset:
    times in years, oldest group observed to 3 years.
    """
    rng = np.random.default_rng(7)
    records = []
    plans = [("plant1", 100, 3.0, 2, 3), ("plant2", 100, 2.0, 1, 2), ("plant3", 100, 1.0, 1, 2)]
    for group, n, t_c, n_left, n_inter in plans:
        uid = 0
        for _ in range(n_left):
            t1 = float(rng.uniform(0.5, 1.0) * t_c / 2)
            records.append(LifetimeRecord.left(f"{group}-u{uid}", group, t1))
            uid += 1
        for _ in range(n_inter):
            t0 = float(rng.uniform(0.3, 0.6) * t_c)
            t1 = t0 + float(rng.uniform(0.2, 0.5))
            records.append(LifetimeRecord.intervald(f"{group}-u{uid}", group, t0, t1))
            uid += 1
        n_cens = n - n_left - n_inter
        records.append(LifetimeRecord.right(f"{group}-cens", group, t_c, multiplicity=n_cens))
    return records


@pytest.fixture
def heat_exchanger_records():
    return heat_exchanger_shaped_records()
