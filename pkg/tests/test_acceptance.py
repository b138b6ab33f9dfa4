"""Acceptance criteria, one PASS/FAIL line each.

Run under pytest (lines are repeated in the terminal summary) or directly::

    python3 tests/test_acceptance.py

A failing line is a real shortfall of the implementation against the
target; tolerances are fixed here and never adjusted to make a line pass.
"""

from __future__ import annotations

import math
import sys
import warnings
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))
import runs_cache  # noqa: E402

from maglev_smc import PlantParams  # noqa: E402
from maglev_smc.discrete import discretize, disturbance_input_matrix  # noqa: E402
from maglev_smc.dsmc import DsmcGains, qsm_band_bound as dsmc_band  # noqa: E402
from maglev_smc.harness import preset, run, run_batch  # noqa: E402
from maglev_smc.harness.runner import build_controller  # noqa: E402
from maglev_smc.linearization import BrunovskyModel, from_z, to_z  # noqa: E402
from maglev_smc.mrof import MrofConfig, linear_closed_loop, qsm_band_bound as mrof_band  # noqa: E402
from maglev_smc.numerics import place_poles  # noqa: E402

MODEL = BrunovskyModel.maglev()
X1D = 0.01
BAND = 0.02 * X1D

# reference matrices as printed (decimals per entry give the rounding allowance)
REF_TAU_01 = {"Phi": ([[1, 0.1, 0.005], [0, 1, 0.1], [0, 0, 1]], 4),
              "Gamma": ([0.0002, 0.005, 0.1], 4)}
REF_TAU_006 = {"Phi": ([[1, 0.06, 0.0018], [0, 1, 0.06], [0, 0, 1]], 4),
               "Gamma": ([0.00, 0.0018, 0.06], 4)}
REF_RHO_002 = {"Phi": ([[1, 0.02, 0.0002], [0, 1, 0.02], [0, 0, 1]], 4),
               "Gamma": ([0.00, 0.0002, 0.02], 4)}
PRINT_SLACK = 5e-5

# reference chatter and performance figures
REF_CHATTER_FREQ = {"dsmc": 0.625, "mrof": 25.0}
REF_IAE = {"pi_smc": 8.8e-4, "dsmc": 0.805, "mrof": 1.05e-2}

CRITERIA = {}


def criterion(num, slug):
    def deco(fn):
        CRITERIA[num] = (slug, fn)
        return fn
    return deco


def rec(name):
    return runs_cache.record(name)


def _aborted(*records):
    bad = [r for r in records if r.status != "ok"]
    return "; ".join(f"{r.name} {r.status}: {r.message}" for r in bad)


# ---------------------------------------------------------------- quantitative

def _match_printed(sys, ref):
    worst = 0.0
    for key, (vals, dec) in ref.items():
        ours = sys.Phi if key == "Phi" else sys.gamma
        excess = np.abs(ours - np.asarray(vals, dtype=float)) - 0.5 * 10.0**-dec
        worst = max(worst, float(excess.max()))
    return worst


@criterion(1, "discretization")
def c01():
    s01 = discretize(MODEL, 0.1)
    s006 = discretize(MODEL, 0.06)
    s002 = discretize(MODEL, 0.02)
    excess = max(_match_printed(s01, REF_TAU_01), _match_printed(s006, REF_TAU_006),
                 _match_printed(s002, REF_RHO_002))
    closed = abs(s01.gamma[0] - 0.1**3 / 6)
    ok = excess <= PRINT_SLACK and closed < 1e-15 and abs(s01.gamma[0] - 1.667e-4) < 5e-8
    return ok, f"max excess over print rounding {max(excess, 0):.2e}; Gamma[0](0.1) = {s01.gamma[0]:.6e}"


@criterion(2, "multirate-identities")
def c02():
    rng = np.random.default_rng(7)
    triples = [(0.06, 0.02, 3)]
    for _ in range(10):
        N = int(rng.integers(3, 9))
        rho = float(rng.uniform(0.001, 0.05))
        triples.append((N * rho, rho, N))
    worst = 0.0
    E = MODEL.B
    for tau, rho, N in triples:
        fast = discretize(MODEL, rho, disturbance_input_matrix(MODEL, rho, E))
        slow = discretize(MODEL, tau, disturbance_input_matrix(MODEL, tau, E))
        S = sum(np.linalg.matrix_power(fast.Phi, i) for i in range(N))
        worst = max(worst, np.abs(slow.Phi - np.linalg.matrix_power(fast.Phi, N)).max(),
                    np.abs(slow.Gamma - S @ fast.Gamma).max(), np.abs(slow.D - S @ fast.D).max())
    return worst <= 1e-12, f"max identity residual {worst:.2e} over {len(triples)} triples"


@criterion(3, "pole-placement")
def c03():
    K = place_poles(MODEL.A, MODEL.B, [-30, -40, -50]).K
    errK = np.abs(K - np.array([[-60000.0, -4700.0, -120.0]])).max()
    roots = np.sort(np.roots([1.0, 70.0, 1200.0]).real)
    errR = np.abs(roots - np.array([-40.0, -30.0])).max()
    return errK <= 1e-9 and errR <= 1e-9, f"|K - K_ref| = {errK:.1e}; root error {errR:.1e}"


@criterion(4, "pi-smc-regulation")
def c04():
    r = rec("fig3-regulation")
    if r.status != "ok":
        return False, _aborted(r)
    m, tr = r.metrics, r.trace
    p5 = float(np.interp(5.0, tr.t, tr.p))
    parts = {
        f"t_s={m.t_s:.3f}s<=0.3": m.t_s <= 0.3,
        f"|p(5)-0.01|={abs(p5 - X1D):.1e}<=1e-5": abs(p5 - X1D) <= 1e-5,
        f"i_ss={m.i_ss:.5f}": abs(m.i_ss - 0.2884) <= 0.001,
        f"u_ss={m.u_ss:.4f}": abs(m.u_ss - 8.277) <= 0.02,
    }
    return all(parts.values()), _fmt(parts)


def _ripple(r):
    lo, hi = r.metrics.window
    w = (r.trace.t >= lo) & (r.trace.t <= hi)
    return float(np.ptp(r.trace.p[w]))


@criterion(5, "pi-smc-robustness")
def c05():
    mass = rec("fig3-mass30")
    fl_c, pi_c = rec("fig4a-const-disturbance-FL"), rec("fig4b-const-disturbance")
    fl_s, pi_s = rec("fig4c-sine-disturbance-FL"), rec("fig4d-sine-disturbance")
    parts = {}
    ts = mass.metrics.t_s if mass.metrics else math.nan
    shown = "not settled" if math.isnan(ts) else f"{ts:.3g}s"
    parts[f"+30% mass t_s={shown} (p_ss={mass.metrics.p_ss:.5f})<=1s"] = mass.status == "ok" and ts <= 1.0
    off_pi = abs(pi_c.metrics.p_ss - X1D)
    off_fl = abs(fl_c.metrics.p_ss - X1D)
    parts[f"const PI offset {off_pi:.2e}<=1e-4"] = pi_c.status == "ok" and off_pi <= 1e-4
    parts[f"const FL offset {off_fl:.2e}>=5e-4"] = fl_c.status == "ok" and off_fl >= 5e-4
    if fl_s.status == "ok" and pi_s.status == "ok":
        a_pi, a_fl = _ripple(pi_s), _ripple(fl_s)
        parts[f"sine ripple PI {a_pi:.2e} < FL {a_fl:.2e}"] = a_pi < a_fl
    else:
        parts["sine runs: " + _aborted(fl_s, pi_s)] = False
    return all(parts.values()), _fmt(parts)


@criterion(6, "dsmc")
def c06():
    r = rec("fig5-dsmc")
    xi = dsmc_band(DsmcGains.default(), warn=False).xi
    if r.status != "ok":
        return False, _aborted(r)
    s = r.trace.at_control_times("s")
    inside = np.nonzero(np.abs(s) <= xi)[0]
    stays = inside.size > 0 and bool(np.all(np.abs(s[inside[0]:]) <= xi))
    m = r.metrics
    lo, hi = m.window
    w = (r.trace.t >= lo) & (r.trace.t <= hi)
    vmax = float(np.abs(r.trace.v[w]).max())
    parts = {
        f"xi={xi:.4g}": abs(xi - 0.036) < 1e-12,
        "s enters and stays in band": stays,
        f"t_s={m.t_s:.2f}s in [7,21]": 7.0 <= m.t_s <= 21.0,
        f"i_ss={m.i_ss:.5f} in [0.2865,0.2915]": 0.2865 <= m.i_ss <= 0.2915,
        f"|v|max={vmax:.1e}<=0.002": vmax <= 0.002,
    }
    return all(parts.values()), _fmt(parts)


def _overshoot(r):
    return float(r.trace.p.max() - X1D)


def _steady_s_tilde(r):
    t = np.asarray(r.controller_log["t"])
    st = np.asarray(r.controller_log["s_tilde"])
    lo, _ = r.metrics.window
    return float(np.abs(st[t >= lo]).max())


@criterion(7, "mrof-dsmc")
def c07():
    cfg = MrofConfig()
    xi = mrof_band(cfg, warn=False).xi
    ratio = xi / dsmc_band(DsmcGains.default(), warn=False).xi
    q3, q2 = rec("fig6a-mrof-q3"), rec("fig6b-mrof-q2")
    if q3.status != "ok" or q2.status != "ok":
        return False, _aborted(q3, q2)
    m3, m2 = q3.metrics, q2.metrics
    band = _steady_s_tilde(q3)
    parts = {
        f"xi={xi:.5f}": 0.1329 <= xi <= 0.133,
        f"ratio={ratio:.3f}": abs(ratio - 3.69) <= 0.02,
        f"q3 t_s={m3.t_s:.2f}s in [4,12]": 4.0 <= m3.t_s <= 12.0,
        f"q2 later ({m2.t_s:.2f}s) and higher overshoot ({_overshoot(q2):.3f} vs {_overshoot(q3):.3f} m)":
            m2.t_s > m3.t_s and _overshoot(q2) > _overshoot(q3),
        f"u_ss={m3.u_ss:.4f}": abs(m3.u_ss - 8.2722) <= 0.02,
        f"i_ss={m3.i_ss:.5f}": abs(m3.i_ss - 0.2884) <= 0.0005,
        f"steady |s~|={band:.3g}<=0.01": band <= 0.01,
    }
    return all(parts.values()), _fmt(parts)


def _within(val, ref, frac):
    return abs(val - ref) <= frac * ref


@criterion(8, "chattering")
def c08():
    pi, ds, mr = rec("fig3-regulation"), rec("fig5-dsmc"), rec("fig6a-mrof-q3")
    if any(r.status != "ok" for r in (pi, ds, mr)):
        return False, _aborted(pi, ds, mr)
    a_pi, a_ds, a_mr = pi.metrics.chatter_amp, ds.metrics.chatter_amp, mr.metrics.chatter_amp
    f_ds, f_mr = ds.metrics.chatter_freq, mr.metrics.chatter_freq
    parts = {
        f"amp MROF {a_mr:.2e} < DSMC {a_ds:.2e} < PI {a_pi:.2e}": a_mr < a_ds < a_pi,
        "MROF >=10x below DSMC": a_mr * 10 <= a_ds,
        f"freq DSMC {f_ds:.3g} Hz < MROF {f_mr:.3g} Hz": f_ds < f_mr,
        "freqs within 50% of 0.625/25 Hz": _within(f_ds, REF_CHATTER_FREQ["dsmc"], 0.5)
                                            and _within(f_mr, REF_CHATTER_FREQ["mrof"], 0.5),
    }
    return all(parts.values()), _fmt(parts)


@criterion(9, "sinusoidal-disturbance-ranking")
def c09():
    pi, ds, mr = rec("table3-pi-smc"), rec("table3-dsmc"), rec("table3-mrof")
    if any(r.status != "ok" for r in (pi, ds, mr)):
        return False, _aborted(pi, ds, mr)
    P, D, M = pi.metrics, ds.metrics, mr.metrics
    mag = all(abs(math.log10(m.iae / REF_IAE[k])) <= 1.0
              for k, m in (("pi_smc", P), ("dsmc", D), ("mrof", M)))
    parts = {
        f"IAE PI {P.iae:.2e} < MROF {M.iae:.2e} < DSMC {D.iae:.2e}": P.iae < M.iae < D.iae,
        "ITAE PI < MROF < DSMC": P.itae < M.itae < D.itae,
        f"e_dmax MROF {M.e_delta_max:.1f} < PI {P.e_delta_max:.1f} < DSMC {D.e_delta_max:.1f}":
            M.e_delta_max < P.e_delta_max < D.e_delta_max,
        "IAE within one decade": mag,
    }
    return all(parts.values()), _fmt(parts)


# ---------------------------------------------------------------- properties

@criterion(10, "mrof-exact-reconstruction")
def c10():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(5):
        run_ = linear_closed_loop(MrofConfig(), rng.uniform(-5, 5, 3), 200)
        worst = max(worst, float(np.linalg.norm(run_.z_hat[1:] - run_.z[1:], axis=1).max()))
    return worst <= 1e-9, f"max ||z_hat - z|| = {worst:.1e}"


def _qsm_violations(s, xi):
    bad = 0
    for a, b in zip(s[:-1], s[1:]):
        if a > xi and not 0 < b < a:
            bad += 1
        elif a < -xi and not 0 > b > a:
            bad += 1
        elif abs(a) <= xi and abs(b) > xi:
            bad += 1
    return bad


@criterion(11, "qsm-band-conditions")
def c11():
    parts = {}
    xi_d = dsmc_band(DsmcGains.default(), warn=False).xi
    xi_m = mrof_band(MrofConfig(), warn=False).xi
    for name in ("fig5-dsmc", "fig6a-mrof-q3", "fig6b-mrof-q2"):
        r = rec(name)
        if r.controller == "dsmc":
            t, s, xi = r.trace.control_times, r.trace.at_control_times("s"), xi_d
        else:
            t, s, xi = np.asarray(r.controller_log["t"]), np.asarray(r.controller_log["s_tilde"]), xi_m
        reach = r.events.get("reach_time")
        if r.status != "ok" or reach is None:
            parts[f"{name}: no reaching"] = False
            continue
        seg = s[t >= reach - 1e-12]
        n = _qsm_violations(seg, xi)
        parts[f"{name}: {n} violations in {seg.size} steps"] = n == 0
    return all(parts.values()), _fmt(parts)


def _lyapunov_violations(r):
    s = r.trace.at_control_times("s")
    t = r.trace.control_times
    ds = np.diff(s) / np.diff(t)
    mask = np.abs(s[:-1]) > 1e-6
    return int(np.sum((s[:-1] * ds)[mask] >= 0)), int(mask.sum())


@criterion(12, "pi-smc-lyapunov")
def c12():
    base = preset("fig3-regulation")
    matched = [
        base.replace(name="matched-const-z", bounds=[0, 0, 1.0], t_end=2.0,
                     disturbance={"kind": "constant", "amplitude": [0, 0, 1.0], "frame": "z"}),
        base.replace(name="matched-sine-z", bounds=[0, 0, 1.0], t_end=2.0,
                     disturbance={"kind": "sinusoid", "amplitude": [0, 0, 1.0], "frame": "z"}),
    ]
    records = [rec("fig3-regulation")] + run_batch(matched, runs_cache.PARALLEL)
    parts = {}
    for r in records:
        if r.warnings or r.status != "ok":
            parts[f"{r.name}: not a validated run"] = False
            continue
        bad, n = _lyapunov_violations(r)
        parts[f"{r.name}: {bad}/{n}"] = bad == 0
    return all(parts.values()), _fmt(parts)


def _cancellation_residual(r, t_from=0.0):
    tr = r.trace
    z, t, w = tr.z, tr.t, tr.w
    keep = t[:-2] >= t_from - 1e-12  # last sample is a closing point
    dt = np.diff(t)[:, None]
    res = np.diff(z, axis=0) / dt - 0.5 * (z[:-1] + z[1:]) @ MODEL.A.T - np.outer(w[:-1], MODEL.B[:, 0])
    return np.abs(res[:-1][keep]).max(axis=0)


@criterion(13, "cancellation-residual")
def c13():
    parts = {}
    for name, t_from in (("fig3-regulation", 0.0), ("fig5-dsmc", 0.0), ("fig6a-mrof-q3", MrofConfig().tau)):
        r = rec(name)
        res = _cancellation_residual(r, t_from)
        parts[f"{name}: {res.max():.1e}"] = bool(np.all(res <= 1e-3))
    return all(parts.values()), _fmt(parts)


@criterion(14, "coordinate-round-trip")
def c14():
    prm = PlantParams()
    rng = np.random.default_rng(3)
    X = np.column_stack([rng.uniform(1e-3, 0.05, 10_000), rng.uniform(-1, 1, 10_000),
                         rng.uniform(0.01, 2.0, 10_000)])
    err = max(float(np.abs(from_z(prm, to_z(prm, x)).as_array() - x).max()) for x in X)
    return err <= 1e-12, f"max round-trip error {err:.1e} on 10000 states"


@criterion(15, "determinism")
def c15():
    names = ["fig3-regulation", "fig5-dsmc", "fig6a-mrof-q3"]
    scs = [preset(n).replace(t_end=1.0) for n in names]
    scs.append(preset("fig6a-mrof-q3").replace(name="noisy", t_end=1.0, noise_std=1e-6, seed=5))
    serial = run_batch(scs, 1)
    again = run_batch(scs, 1)
    parallel = run_batch(scs[::-1], 8)[::-1]
    same = True
    for a, b, c in zip(serial, again, parallel):
        for other in (b, c):
            same &= a.name == other.name and np.array_equal(a.trace.x, other.trace.x)
            try:
                np.testing.assert_equal(a.metrics.as_dict(), other.metrics.as_dict())
            except AssertionError:
                same = False
    return bool(same), f"{len(scs)} scenarios identical across repeat, reversed order and 8 workers"


@criterion(16, "constraint-warnings")
def c16():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        _, d_notes = build_controller(preset("fig5-dsmc"))
        _, m_notes = build_controller(preset("fig6a-mrof-q3"))
    d_flag = any("parameter constraint" in n for n in d_notes)
    m_flag = any("q tau^2 eps" in n for n in m_notes)
    ok6, _ = c06()
    ok7, _ = c07()
    parts = {"DSMC constraint flagged": d_flag, "MROF constraint flagged": m_flag,
             "runs ok": rec("fig5-dsmc").status == "ok" and rec("fig6a-mrof-q3").status == "ok",
             "criterion 6 holds": ok6, "criterion 7 holds": ok7}
    return all(parts.values()), _fmt(parts)


def _fmt(parts):
    return "; ".join(f"{'ok' if v else 'NO'} {k}" for k, v in parts.items())


def evaluate(num):
    slug, fn = CRITERIA[num]
    try:
        ok, detail = fn()
    except Exception as exc:  # an error is a failure, not a crash of the suite
        ok, detail = False, f"error: {type(exc).__name__}: {exc}"
    line = f"{'PASS' if ok else 'FAIL'} {num:2d} {slug}: {detail}"
    return ok, line


@pytest.mark.parametrize("num", sorted(CRITERIA), ids=[f"{n:02d}-{CRITERIA[n][0]}" for n in sorted(CRITERIA)])
def test_criterion(num):
    ok, line = evaluate(num)
    runs_cache.REPORT.append(line)
    print(line)
    assert ok, line


def main() -> int:
    fails = 0
    for num in sorted(CRITERIA):
        ok, line = evaluate(num)
        fails += not ok
        print(line, flush=True)
    print(f"{len(CRITERIA) - fails}/{len(CRITERIA)} criteria pass")
    return 1 if fails else 0


if __name__ == "__main__":
    sys.exit(main())
