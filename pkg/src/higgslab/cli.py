"""Command line interface: scenario runs, verification tables, reports."""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import report as rep
from . import scenarios as scn_mod
from .hym import hym_flow, determine_lambda
from .hyperkahler import check_assumptions, hyperkahler_forms, \
    quaternion_suite, xi_report
from .scenarios import ScenarioError, build_chart, load
from .verify import ANCHORS, verify_scenario

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_CONFIG = 2


def _parse_overrides(pairs):
    out = {}
    for item in pairs or ():
        if "=" not in item:
            raise ScenarioError(f"bad --tol-override {item!r}, expected KEY=VAL")
        key, val = item.split("=", 1)
        try:
            out[key] = float(val)
        except ValueError:
            raise ScenarioError(f"bad override value in {item!r}")
    return out


def _complexify(arr):
    return np.asarray(arr, dtype=complex)


def run_scenario(scn, out_dir, faults=(), make_figures=True):
    """Execute the scenario's tasks; returns (exit_code, report_dict)."""
    os.makedirs(out_dir, exist_ok=True)
    chart = build_chart(scn)
    geom = chart.geom
    tasks = scn["tasks"]
    failures = []
    doc = {
        "schema_version": 1,
        "scenario": scn,
        "seed": scn["seed"],
        "geometry": geom.describe(),
        "tasks": list(tasks),
    }

    # centre solve, always recorded; the flow runs from the trivial metric
    raw = chart.gen
    from .gauge import GaugeConfig
    cfg_raw = GaugeConfig(geom, chart.rank,
                          raw.A_at(chart.center, chart.twist),
                          raw.phi_at(chart.center, chart.twist),
                          twist=chart.twist,
                          scalar_curvature=chart.scalar_curvature)
    solved, flow_report = hym_flow(cfg_raw, tol=scn["solver"]["tol_hym"],
                                   max_steps=scn["solver"]["max_steps"])
    doc["hym"] = flow_report.as_dict()
    doc["lambda"] = determine_lambda(chart.config())
    rep.write_convergence_csv(os.path.join(out_dir, "convergence_center.csv"),
                              flow_report.history)
    if make_figures:
        rep.plot_convergence(os.path.join(out_dir, "convergence_center.png"),
                             flow_report.history,
                             f"{scn['name']}: HYM flow at the centre")
    if not flow_report.converged:
        failures.append("hym flow did not converge")

    if "pw-metric" in tasks or "verify" in tasks:
        G = chart.pw_metric()
        dG = np.zeros((chart.m, chart.m, chart.m), dtype=complex)
        for k in range(chart.m):
            dG[:, :, k] = chart.fd_hol(lambda off: chart.pw_metric(off), k,
                                       scale=2)
        doc["pw_metric"] = {"G": G, "dG": dG,
                            "harmonicity": chart.harmonicity_report()}
        rep.write_matrix_csv(os.path.join(out_dir, "G.csv"), G,
                             header="re/im interleaved")
    if "pw-curvature" in tasks:
        R112 = chart.curvature_eq112()
        R111 = chart.curvature_eq111()
        oracle = chart.curvature_fd_oracle()
        doc["pw_curvature"] = {
            "R": R112,
            "R_operator_form": R111,
            "R_fd_oracle": oracle,
            "symmetry_residual": chart.curvature_symmetry_residual(R112),
        }
        rep.write_tensor_csv(os.path.join(out_dir, "R.csv"), R112)
    if "sigma" in tasks:
        sg = chart.sigma_report()
        doc["sigma"] = {
            "pi": sg["pi"], "nu": sg["nu"],
            "antisymmetry": sg["antisymmetry"],
            "dnu_constant": sg["dnu_constant"],
            "dnu_residual": sg["dnu_residual"],
        }
        rep.write_matrix_csv(os.path.join(out_dir, "pi.csv"), sg["pi"])
        rep.write_matrix_csv(os.path.join(out_dir, "nu.csv"),
                             np.asarray(sg["nu"])[None, :])
    if "fiber-integral" in tasks:
        fib = chart.fiber_integral_form()
        doc["fiber_integral"] = {k: v for k, v in fib.items()}
        doc["chi"] = chart.chi_value()
    if "hyperkahler" in tasks:
        assum, solver2 = check_assumptions(chart.config(),
                                           kmax=chart.kmax_kernel)
        xr, _ = xi_report(chart.config(), solver2)
        qs = quaternion_suite(chart)
        hk = hyperkahler_forms(chart)
        doc["hyperkahler"] = {
            "assumptions": assum,
            "xi": {"d_xi": xr["d_xi"], "dstar_xi": xr["dstar_xi"],
                   "harmonic_coefficient": xr["harmonic_coefficient"],
                   "coefficient_vs_lambda": xr["coefficient_vs_lambda"]},
            "quaternion_relations": qs["relations"],
            "pi_from_involution": qs["pi_from_iota"],
            "pi_match": qs["pi_match"],
            "pi_smallest_singular_value": qs["pi_smallest_singular_value"],
            "forms": {"omega_I": hk["omega_I"], "omega_J": hk["omega_J"],
                      "omega_K": hk["omega_K"],
                      "closedness_I": hk["closedness_I"],
                      "closedness_pi_cyclic": hk["closedness_pi_cyclic"]},
        }
    if "verify" in tasks:
        rows = verify_scenario(scn, chart, faults=faults)
        doc["verify"] = rows
        # residual table keyed by anchor tag (worst row per tag)
        residuals = {}
        for r in rows:
            tag = r["anchor"]
            if tag not in residuals or r["residual"] > residuals[tag]:
                residuals[tag] = r["residual"]
        doc["residuals"] = residuals
        idrep = chart.identity_orders()
        orders = {k: {"coarse": idrep["coarse"][k], "fine": idrep["fine"][k]}
                  for k in idrep["coarse"]}
        if make_figures:
            rep.plot_verify_rows(os.path.join(out_dir, "verify_rows.png"),
                                 rows, f"{scn['name']}: verification table")
            rep.plot_identity_orders(
                os.path.join(out_dir, "identity_orders.png"), orders,
                chart.step, f"{scn['name']}: identity residual convergence")
        for r in rows:
            if not r["passed"]:
                failures.append(f"verify row failed: {r['name']}"
                                f" [{r['anchor']}]")
    doc["solve_count"] = chart.solve_count
    doc["failures"] = failures
    doc["status"] = "ok" if not failures else "invariant-failure"
    rep.write_report(os.path.join(out_dir, "report.json"), doc)
    return (EXIT_OK if not failures else EXIT_INVARIANT), doc


def print_verify_table(rows):
    wname = max(len(r["name"]) for r in rows)
    wanchor = max(len(r["anchor"]) for r in rows)
    print(f"{'check'.ljust(wname)}  {'anchor'.ljust(wanchor)}  "
          f"{'residual':>12}  {'tolerance':>12}  pass")
    print("-" * (wname + wanchor + 40))
    for r in rows:
        print(f"{r['name'].ljust(wname)}  {r['anchor'].ljust(wanchor)}  "
              f"{r['residual']:12.3e}  {r['tolerance']:12.3e}  "
              f"{'ok' if r['passed'] else 'FAIL'}")


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="higgslab",
        description="Numerical laboratory for Hermitian-Yang-Mills pairs "
                    "and moduli geometry on flat tori.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", required=True,
                        help="builtin scenario name or JSON file path")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--seed", type=int, default=None,
                        help="override the scenario seed")
    common.add_argument("--threads", type=int, default=1,
                        help="reserved; execution is deterministic and "
                             "sequential")
    common.add_argument("--tol-override", action="append", default=[],
                        metavar="KEY=VAL",
                        help="override a solver tolerance, e.g. tol_hym=1e-9")
    common.add_argument("--no-figures", action="store_true")

    sub.add_parser("run", parents=[common],
                   help="run the scenario tasks and write reports")
    pv = sub.add_parser("verify", parents=[common],
                        help="run and print the verification table")
    pv.add_argument("--inject-fault", default=None,
                    choices=["dstar0-sign"],
                    help="debug: deliberately break an identity")
    sub.add_parser("list-scenarios", help="list bundled scenarios")

    args = parser.parse_args(argv)

    if args.command == "list-scenarios":
        for name, raw in sorted(scn_mod.BUILTIN.items()):
            print(f"{name}: {raw.get('description', '')}")
        return EXIT_OK

    try:
        scn = load(args.scenario)
        overrides = _parse_overrides(args.tol_override)
        for key, val in overrides.items():
            if key not in scn["solver"]:
                raise ScenarioError(f"unknown tolerance {key!r}")
            scn["solver"][key] = val
        if any(v <= 0 for v in overrides.values()):
            raise ScenarioError("tolerances must be positive")
        if args.seed is not None:
            scn["seed"] = int(args.seed)
        scn = scn_mod.validate(scn)
    except ScenarioError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = args.out or os.path.join("higgslab-out", scn["name"])
    faults = ()
    if args.command == "verify" and args.inject_fault:
        faults = (args.inject_fault,)
        if "verify" not in scn["tasks"]:
            scn["tasks"].append("verify")
    try:
        code, doc = run_scenario(scn, out_dir, faults=faults,
                                 make_figures=not args.no_figures)
    except ScenarioError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RuntimeError as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    if args.command == "verify" and "verify" in doc:
        print_verify_table(doc["verify"])
    status = doc.get("status")
    print(f"{scn['name']}: {status}; report in {out_dir}")
    return code


if __name__ == "__main__":
    sys.exit(main())
