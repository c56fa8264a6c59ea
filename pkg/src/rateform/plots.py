"""Figure rendering for the report path; every CSV table gets a companion PNG."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams.update({
    "figure.figsize": (6.0, 4.0),
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.dpi": 140,
})

_PNG_META = {"Software": "rateform"}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)


def save_convergence_plot(path, rows_by_motion):
    """log-log residual vs FD step per motion, with slope-2 guide."""
    fig, ax = plt.subplots()
    hs_all = []
    for motion, rows in rows_by_motion.items():
        hs = [r[0] for r in rows]
        res = [max(r[1], 1e-300) for r in rows]
        ax.loglog(hs, res, "o-", label=motion)
        hs_all.extend(hs)
    if hs_all:
        h0, h1 = max(hs_all), min(hs_all)
        ref = np.array([h0, h1])
        ax.loglog(ref, 1e-2 * (ref / h0) ** 2, "k--", lw=0.8, label="slope 2")
    ax.set_xlabel("FD step h")
    ax.set_ylabel("rate-consistency residual")
    ax.legend(fontsize=7)
    _save(fig, path)


def save_matrix_heatmap(path, matrix, title):
    fig, ax = plt.subplots(figsize=(4.6, 4.0))
    im = ax.imshow(np.asarray(matrix), cmap="RdBu_r")
    ax.set_title(title, fontsize=9)
    ax.set_xticks(range(6))
    ax.set_yticks(range(6))
    fig.colorbar(im, ax=ax, shrink=0.85)
    ax.grid(False)
    _save(fig, path)


def save_audit_bars(path, report):
    names = [r.name for r in report.results]
    worst = [r.worst_value for r in report.results]
    colors = ["tab:green" if r.passed else "tab:red" for r in report.results]
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    ax.bar(range(len(names)), worst, color=colors)
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=30, ha="right", fontsize=7)
    ax.set_yscale("symlog", linthresh=1e-10)
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_ylabel("worst observed value")
    ax.set_title(f"{report.law_tag}: inequality battery (seed {report.seed})", fontsize=9)
    _save(fig, path)


def save_series_plot(path, steps):
    ts = [s.t for s in steps]
    fig, axes = plt.subplots(2, 1, sharex=True, figsize=(6.0, 5.0))
    axes[0].semilogy(ts, [max(s.max_v, 1e-300) for s in steps], "o-", ms=2)
    axes[0].set_ylabel("max ||v||")
    axes[1].semilogy(ts, [max(s.equilibrium_residual, 1e-300) for s in steps], "o-", ms=2,
                     color="tab:orange")
    axes[1].set_ylabel("||Div sigma - f||")
    axes[1].set_xlabel("t")
    _save(fig, path)


def save_trajectory_plot(path, trajectory):
    fig, axes = plt.subplots(1, 2, figsize=(8.0, 3.6))
    for i in range(trajectory.points.shape[0]):
        axes[0].plot(trajectory.points[i, :, 0], trajectory.points[i, :, 1], "-", lw=0.9)
        axes[1].plot(trajectory.times, trajectory.jacobians[i], "-", lw=0.9)
    axes[0].set_xlabel(r"$\xi_1$")
    axes[0].set_ylabel(r"$\xi_2$")
    axes[0].set_title("trajectories (xy projection)", fontsize=9)
    axes[1].set_xlabel("t")
    axes[1].set_ylabel("J")
    axes[1].set_title("volume ratio along characteristics", fontsize=9)
    _save(fig, path)


def save_velocity_slice(path, grid, v):
    k = grid.shape[2] // 2
    mag = np.linalg.norm(v[:, :, k, :], axis=-1)
    fig, ax = plt.subplots(figsize=(4.8, 4.0))
    im = ax.imshow(mag.T, origin="lower", cmap="viridis",
                   extent=(grid.origin[0], grid.origin[0] + grid.extent[0],
                           grid.origin[1], grid.origin[1] + grid.extent[1]))
    fig.colorbar(im, ax=ax, shrink=0.85, label="|v|")
    ax.set_title(f"velocity magnitude, mid plane z index {k}", fontsize=9)
    ax.grid(False)
    _save(fig, path)
