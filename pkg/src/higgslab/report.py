"""Deterministic report serialisation, CSV matrices and figure rendering."""

from __future__ import annotations

import os

import numpy as np

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt


# -- deterministic JSON -----------------------------------------------------------


def _fmt_float(x):
    if x != x:
        return '"nan"'
    if x == float("inf"):
        return '"inf"'
    if x == float("-inf"):
        return '"-inf"'
    return format(float(x), ".17g")


def _encode(obj, indent, level):
    pad = " " * (indent * level)
    pad1 = " " * (indent * (level + 1))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = []
        for key in sorted(obj.keys()):
            items.append(f'{pad1}"{key}": '
                         + _encode(obj[key], indent, level + 1))
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        seq = list(obj)
        if not seq:
            return "[]"
        items = [pad1 + _encode(v, indent, level + 1) for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (np.complexfloating, complex)):
        return "[" + _fmt_float(obj.real) + ", " + _fmt_float(obj.imag) + "]"
    if isinstance(obj, (np.floating, float)):
        return _fmt_float(obj)
    if isinstance(obj, (np.integer, int)):
        return str(int(obj))
    if isinstance(obj, str):
        import json
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), indent, level)
    raise TypeError(f"cannot serialise {type(obj)}")


def dumps(obj, indent=2):
    """JSON text with sorted keys and floats at 17 significant digits.

    Complex numbers are emitted as [re, im] pairs; byte-identical output
    for identical inputs."""
    return _encode(obj, indent, 0) + "\n"


def write_report(path, obj):
    with open(path, "w") as fh:
        fh.write(dumps(obj))


# -- CSV ---------------------------------------------------------------------------------


def write_matrix_csv(path, M, header=None):
    M = np.asarray(M)
    with open(path, "w") as fh:
        if header:
            fh.write(header + "\n")
        if M.ndim == 1:
            M = M[None, :]
        for row in M:
            cells = []
            for v in row:
                v = complex(v)
                cells.append(_fmt_float(v.real))
                cells.append(_fmt_float(v.imag))
            fh.write(",".join(cells) + "\n")


def write_tensor_csv(path, R):
    """Rank-4 tensor as rows (i, j, k, l, re, im)."""
    R = np.asarray(R)
    with open(path, "w") as fh:
        fh.write("i,j,k,l,re,im\n")
        m = R.shape[0]
        for i in range(m):
            for j in range(m):
                for k in range(m):
                    for l in range(m):
                        v = complex(R[i, j, k, l])
                        fh.write(f"{i},{j},{k},{l},"
                                 + _fmt_float(v.real) + ","
                                 + _fmt_float(v.imag) + "\n")


def write_convergence_csv(path, history):
    with open(path, "w") as fh:
        fh.write("step,residual_sup,residual_l2,dt\n")
        for (step, sup, l2, dt) in history:
            fh.write(f"{step}," + _fmt_float(sup) + "," + _fmt_float(l2)
                     + "," + _fmt_float(dt) + "\n")


# -- figures -------------------------------------------------------------------------------


def plot_convergence(path, history, title):
    steps = [row[0] for row in history]
    sups = [max(row[1], 1e-300) for row in history]
    l2s = [max(row[2], 1e-300) for row in history]
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    ax.semilogy(steps, sups, lw=1.2, label="sup residual")
    ax.semilogy(steps, l2s, lw=1.2, ls="--", label="L2 residual")
    ax.set_xlabel("flow step")
    ax.set_ylabel("residual")
    ax.set_title(title, fontsize=10)
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=140)
    plt.close(fig)


def plot_verify_rows(path, rows, title):
    names = [r["name"] for r in rows]
    ratios = []
    for r in rows:
        tol = max(r["tolerance"], 1e-300)
        ratios.append(max(r["residual"], 1e-300) / tol)
    colors = ["tab:blue" if r["passed"] else "tab:red" for r in rows]
    fig, ax = plt.subplots(figsize=(7.0, 0.28 * len(rows) + 1.4))
    y = np.arange(len(rows))
    ax.barh(y, ratios, color=colors, height=0.6)
    ax.axvline(1.0, color="k", lw=1.0)
    ax.set_yticks(y)
    ax.set_yticklabels(names, fontsize=6)
    ax.set_xscale("log")
    ax.set_xlabel("residual / tolerance")
    ax.set_title(title, fontsize=10)
    ax.invert_yaxis()
    fig.tight_layout()
    fig.savefig(path, dpi=140)
    plt.close(fig)


def plot_identity_orders(path, orders, step, title):
    fig, ax = plt.subplots(figsize=(5.4, 3.4))
    eps = np.array([step, step / 2.0])
    for name, rec in sorted(orders.items()):
        vals = np.array([max(rec["coarse"], 1e-300),
                         max(rec["fine"], 1e-300)])
        ax.loglog(eps, vals, "o-", lw=1.0, ms=3, label=name)
    guide = eps ** 2 / eps[0] ** 2
    scale = max(max(rec["coarse"] for rec in orders.values()), 1e-300)
    ax.loglog(eps, guide * scale, "k:", lw=1.0, label="order 2 guide")
    ax.set_xlabel("parameter step")
    ax.set_ylabel("identity residual")
    ax.set_title(title, fontsize=10)
    ax.legend(fontsize=6)
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(path, dpi=140)
    plt.close(fig)
