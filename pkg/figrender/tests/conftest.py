import numpy as np


def write_csv(path, names, rows):
    """Emit the producer dialect: t,<names> header then 17-digit records."""
    with open(path, "w", newline="") as fh:
        fh.write("t," + ",".join(names) + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def staged_rows(switch=10.0, end=20.0, step=0.5):
    """One column that is 0 through the switch, then climbs to a plateau."""
    times = np.arange(0.0, end + step / 2, step)
    values = np.where(times <= switch, 0.0, 0.01 * (times - switch))
    return [(t, v) for t, v in zip(times, values)]
