"""Standalone matplotlib scripts written next to the CSVs they plot.

The scripts only need pandas and matplotlib (the `plots` extra) and read
their inputs relative to their own location.
"""

from __future__ import annotations

_HEADER = '''"""Generated by wavebreak. Run: python {filename}"""

from pathlib import Path

import matplotlib.pyplot as plt
import pandas as pd

HERE = Path(__file__).parent


def load(stem):
    return pd.read_csv(HERE / f"{{stem}}.csv", comment="#")

'''

_BODIES: dict[str, str] = {
    "fig1": '''
field = load("direction_field")
fig, (left, right) = plt.subplots(1, 2, figsize=(11, 4.5))
left.quiver(field.b, field.a, field.db, field.da, angles="xy", width=0.002)
left.set_xlabel("b")
left.set_ylabel("a")
left.set_title("direction field")
for stem, style, label in (("curve_eps0", "--", "eps = 0"), ("curve_eps", "-", "damped")):
    curve = load(stem)
    right.plot(curve.b, curve.a, style, label=label)
right.axhline(0.0, color="grey", lw=0.5)
right.set_xlabel("b")
right.set_ylabel("a")
right.legend()
fig.tight_layout()
fig.savefig(HERE / "fig1.png", dpi=150)
''',
    "fig2": '''
fig, (left, right) = plt.subplots(1, 2, figsize=(11, 4.5))
undamped = load("b_eps0")
damped = load("b_eps")
left.plot(undamped.t, undamped.b, "--", label="eps = 0")
left.plot(damped.t, damped.b, "-", label="damped")
left.set_xlabel("t")
left.set_ylabel("b")
left.legend()
envelope = load("envelope")
right.plot(damped.t, damped.b, "-", lw=0.8)
right.plot(envelope.t, envelope.abs_b, "o", ms=3, label="|b| peaks")
right.set_xlabel("t")
right.legend()
fig.tight_layout()
fig.savefig(HERE / "fig2.png", dpi=150)
''',
    "affine": '''
trace = load("trace")
fig, (top, bottom) = plt.subplots(2, 1, sharex=True, figsize=(7, 6))
top.plot(trace.t, trace.a, label="a")
top.plot(trace.t, trace.b, label="b")
top.legend()
bottom.semilogy(trace.t, trace.step)
bottom.set_xlabel("t")
bottom.set_ylabel("step")
fig.tight_layout()
fig.savefig(HERE / "affine.png", dpi=150)
''',
    "phase": '''
field = load("direction_field")
curve = load("curve")
fig, ax = plt.subplots(figsize=(6, 5))
ax.quiver(field.b, field.a, field.db, field.da, angles="xy", width=0.002, color="grey")
ax.plot(curve.b, curve.a)
ax.set_xlabel("b")
ax.set_ylabel("a")
fig.tight_layout()
fig.savefig(HERE / "phase.png", dpi=150)
''',
    "corrector": '''
corrector = load("corrector")
fig, ax = plt.subplots(figsize=(6, 4))
ax.plot(corrector.b, corrector.alpha1)
ax.set_xlabel("b")
ax.set_ylabel("alpha1")
fig.tight_layout()
fig.savefig(HERE / "corrector.png", dpi=150)
''',
    "sigma0": '''
data = load("sigma0")
fig, ax = plt.subplots(figsize=(6, 4))
ax.plot(data.s, data.sigma0, "o", ms=3, label="integrated")
ax.plot(data.s, data.sigma0_closed, "-", label="closed form")
ax.set_xlabel("s")
ax.legend()
fig.tight_layout()
fig.savefig(HERE / "sigma0.png", dpi=150)
''',
    "field": '''
snaps = load("snapshots")
diag = load("diagnostics")
fig, (left, right) = plt.subplots(1, 2, figsize=(11, 4.5))
for t, frame in list(snaps.groupby("t"))[:: max(1, snaps.t.nunique() // 6)]:
    left.plot(frame.x, frame.n, label=f"t = {t:.3g}")
left.set_xlabel("x")
left.set_ylabel("n")
left.legend(fontsize="small")
right.plot(diag.t, diag.min_q)
right.set_xlabel("t")
right.set_ylabel("min q")
fig.tight_layout()
fig.savefig(HERE / "field.png", dpi=150)
''',
    "euler": '''
snaps = load("snapshots")
fig, ax = plt.subplots(figsize=(6, 4))
for t, frame in list(snaps.groupby("t"))[:: max(1, snaps.t.nunique() // 6)]:
    ax.plot(frame.x, frame.n, label=f"t = {t:.3g}")
ax.set_xlabel("x")
ax.set_ylabel("n")
ax.legend(fontsize="small")
fig.tight_layout()
fig.savefig(HERE / "euler.png", dpi=150)
''',
    "sweep": '''
sweep = load("sweep")
fig, ax = plt.subplots(figsize=(6, 4))
for verdict, marker in (("smooth", "o"), ("blowup", "x"), ("unresolved", "s")):
    cells = sweep[sweep.verdict == verdict]
    ax.scatter(cells.gamma, cells.epsilon, marker=marker, label=verdict)
ax.set_xlabel("gamma")
ax.set_ylabel("epsilon")
ax.legend()
fig.tight_layout()
fig.savefig(HERE / "sweep.png", dpi=150)
''',
}

PLOT_NAMES = tuple(_BODIES)


def render_script(name: str) -> str:
    if name not in _BODIES:
        raise KeyError(f"Plot '{name}' not found. Available: {list(PLOT_NAMES)}")
    filename = f"plot_{name}.py"
    return _HEADER.format(filename=filename) + _BODIES[name]
