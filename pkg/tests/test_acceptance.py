"""Acceptance gate: the ten primary criteria, each with its pinned tolerance.

Each test prints one PASS line (visible with -s; pytest -v reports the same
verdict per test either way). Shared heavy artifacts are module fixtures.
"""

import json
import math

import numpy as np

from varharm import (Ball, Domain1D, GridFunction, KernelSpec, ScaleFamily,
                     Weight, battery_generate, commutator_family,
                     commutator_variation, convolve_family,
                     cube_domain_ranges, default_lattices,
                     bmo_nu_equivalence, build_sparse_family,
                     domination_check, kernel_difference_variation,
                     local_mean_oscillation, lp_norm, make_atom,
                     oscillation_witness, power_weight,
                     seq_variation_bruteforce, seq_variation_dp,
                     sparse_commutator, sparse_commutator_star,
                     variation_operator)
from varharm.cli import main as cli_main
from varharm.harness import ExperimentConfig, run_experiment

SEED = 20240901
RHO = 3.0
KERNELS = ("gaussian-heat", "poisson", "compact-bump")


def _report(num, message):
    print(f"[criterion {num:02d}] PASS — {message}")


# -- 1 ----------------------------------------------------------------------

def test_criterion_01_variation_oracle_equivalence():
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(500):
        a = rng.standard_normal(rng.integers(2, 15))
        for rho in (1.5, 2.5, 3.0, 4.0):
            dp = seq_variation_dp(a, rho)
            bf = seq_variation_bruteforce(a, rho)
            rel = abs(dp - bf) / max(bf, 1e-300)
            worst = max(worst, rel)
            assert rel <= 1e-12
    _report(1, f"500 sequences x 4 exponents, worst relative error {worst:.2e}")


# -- 2 ----------------------------------------------------------------------

def test_criterion_02_pointwise_bound():
    d = Domain1D(-8.0, 8.0, 384)
    scales = ScaleFamily.geometric(4.0, 0.85, 48, t_min=2 * d.h)
    funcs = battery_generate("mixed", SEED, d, count=50)
    worst = -math.inf
    for kind in KERNELS:
        kernel = KernelSpec(kind)
        for _, f in funcs:
            convs = convolve_family(f, kernel, scales)
            v = variation_operator(f, kernel, scales, RHO).values
            # sup_t |a_t| <= |a_t0| + V + 1e-9 for every anchor t0 is
            # equivalent to max_t |a_t| - min_t |a_t| <= V + 1e-9
            slack = np.abs(convs).max(axis=1) - np.abs(convs).min(axis=1) - v
            worst = max(worst, float(slack.max()))
            assert np.all(slack <= 1e-9)
    _report(2, f"50 functions x 3 kernels, worst bound slack {worst:.2e}")


# -- 3 ----------------------------------------------------------------------

def test_criterion_03_kernel_estimate_refinement():
    kernel = KernelSpec("gaussian-heat")
    fam48 = ScaleFamily.geometric(8.0, (0.05 / 8.0) ** (1.0 / 47.0), 48)
    fam96 = fam48.refine()
    rng = np.random.default_rng(SEED)
    c48 = c96 = 0.0
    for _ in range(200):
        xi = float(-2.0 + 4.0 * rng.random())
        dz = float(0.01 + 0.2 * rng.random())
        z = xi - dz
        side = 1.0 if rng.random() < 0.5 else -1.0
        y = xi + side * (4.0 * dz + 4.0 * rng.random())
        assert abs(xi - y) >= 4.0 * abs(z - xi)
        weight = (xi - y) ** 2 / abs(z - xi)
        c48 = max(c48, kernel_difference_variation(kernel, xi, z, y, fam48, RHO) * weight)
        c96 = max(c96, kernel_difference_variation(kernel, xi, z, y, fam96, RHO) * weight)
    assert math.isfinite(c48) and math.isfinite(c96)
    factor = max(c96 / c48, c48 / c96)
    assert factor <= 1.5
    _report(3, f"empirical constant {c48:.4f} -> {c96:.4f}, factor {factor:.4f}")


# -- 4 ----------------------------------------------------------------------

def test_criterion_04_sparse_domination():
    kernel = KernelSpec("gaussian-heat")
    maxima = {}
    for n in (384, 768):
        d = Domain1D(-8.0, 8.0, n)
        scales = ScaleFamily.geometric(4.0, 0.85, 48, t_min=2 * d.h)
        funcs = battery_generate("mixed", SEED, d, count=50)
        worst = 0.0
        for fid, f in funcs:
            rep = domination_check(f, kernel, scales, RHO)
            assert rep.n_failures == 0, f"{fid}: {rep.n_failures} zero denominators"
            worst = max(worst, rep.max_ratio)
        maxima[n] = worst
    factor = max(maxima[768] / maxima[384], maxima[384] / maxima[768])
    assert factor <= 2.0
    _report(4, f"max ratios {maxima[384]:.3f} (N=384), {maxima[768]:.3f} "
               f"(N=768), factor {factor:.3f}, no failures")


# -- 5 ----------------------------------------------------------------------

def test_criterion_05_strong_weighted_bound():
    cfg = ExperimentConfig(experiment="E1", cells=384, refine=1, seed=SEED)
    table = run_experiment(cfg)
    assert table.n_failures() == 0
    detail = []
    for p in (1.2, 2.0, 4.0):
        base = max(r.ratio for r in table.rows
                   if r.params["p"] == p and r.params["power"] == 0.0)
        weighted = max(r.ratio for r in table.rows
                       if r.params["p"] == p and r.params["power"] != 0.0)
        assert weighted <= 10.0 * base
        detail.append(f"p={p}: {weighted:.3f} <= 10 x {base:.3f}")
    assert table.refinement_factor is not None
    assert table.refinement_factor <= 2.0
    _report(5, "; ".join(detail) +
            f"; refinement factor {table.refinement_factor:.3f}")


# -- 6 ----------------------------------------------------------------------

def test_criterion_06_atom_uniform_bound():
    d = Domain1D(-8.0, 8.0, 3072)
    kernel = KernelSpec("gaussian-heat")
    scales = ScaleFamily.geometric(4.0, 0.85, 48, t_min=2 * d.h)
    radii = [2.0 ** e for e in range(-4, 3)]
    n_atoms = 0
    detail = []
    for p in (0.7, 1.0):
        for wid, w in (("lebesgue", Weight.constant(d)),
                       ("pow+0.3", power_weight(0.3, d))):
            norms = []
            for r in radii:
                vals = []
                for s in (0, 1):
                    atom = make_atom(p, 2.0, 0, w, Ball(0.0, r), seed=SEED + s)
                    n_atoms += 1
                    prof = variation_operator(atom.values, kernel, scales,
                                              RHO).grid_function()
                    vals.append(lp_norm(prof, p, w))
                norms.append(float(np.mean(vals)))
            norms = np.array(norms)
            spread = norms.max() / norms.min()
            slope = float(np.polyfit(np.log(radii), np.log(norms), 1)[0])
            assert spread <= 20.0
            assert abs(slope) <= 0.25
            detail.append(f"p={p},{wid}: spread {spread:.2f}, slope {slope:+.3f}")
    assert n_atoms >= 50
    _report(6, f"{n_atoms} atoms; " + "; ".join(detail))


# -- 7 ----------------------------------------------------------------------

def _bmo_battery(d, seed):
    rng = np.random.default_rng(seed)
    x = d.x()
    out = [("step", GridFunction.indicator(d, 0.0, 4.0)),
           ("sawtooth", GridFunction(d, np.abs((x * 0.5) % 2.0 - 1.0)))]
    for i in range(12):
        vals = np.zeros(d.cells)
        for k in range(4):
            c = d.left + d.length * (0.25 + 0.5 * rng.random())
            vals += (-1.0 + 2.0 * rng.random()) / (k + 1) * np.sign(x - c)
        out.append((f"osc{i}", GridFunction(d, vals)))
    for i in range(6):
        w = np.cumsum(rng.standard_normal(d.cells)) * math.sqrt(d.h)
        out.append((f"walk{i}", GridFunction(d, w)))
    return out


def test_criterion_07_quantile_equivalence():
    endpoints = {}
    for n in (384, 768):
        d = Domain1D(-8.0, 8.0, n)
        ranges = cube_domain_ranges(default_lattices(d))
        ratios = []
        for _, nu in (("lebesgue", Weight.constant(d)),
                      ("pow+0.3", power_weight(0.3, d))):
            for _, b in _bmo_battery(d, SEED):
                rep = bmo_nu_equivalence(b, nu, ranges, tau=0.125)
                assert not rep.degenerate
                assert 1.0 / 32.0 <= rep.ratio <= 32.0
                ratios.append(rep.ratio)
        assert len(ratios) == 40  # 20 functions x 2 measures
        endpoints[n] = (min(ratios), max(ratios))
    lo_fac = max(endpoints[768][0] / endpoints[384][0],
                 endpoints[384][0] / endpoints[768][0])
    hi_fac = max(endpoints[768][1] / endpoints[384][1],
                 endpoints[384][1] / endpoints[768][1])
    assert lo_fac <= 2.0 and hi_fac <= 2.0
    _report(7, f"band [{endpoints[384][0]:.3f}, {endpoints[384][1]:.3f}] in "
               f"[1/32, 32]; endpoint drift factors {lo_fac:.3f}, {hi_fac:.3f}")


# -- 8 ----------------------------------------------------------------------

def test_criterion_08_annihilation_and_homogeneity():
    d = Domain1D(-8.0, 8.0, 384)
    scales = ScaleFamily.geometric(4.0, 0.85, 16, t_min=2 * d.h)
    rng = np.random.default_rng(SEED)
    f = GridFunction(d, rng.standard_normal(d.cells))
    # exact annihilation of the convolution commutator for constant b
    for kind in KERNELS:
        kernel = KernelSpec(kind)
        for c in (1.0, -0.3, 1e6):
            b = GridFunction(d, np.full(d.cells, c))
            assert not np.any(commutator_family(f, b, kernel, scales))
            assert not np.any(commutator_variation(f, b, kernel, scales, RHO).values)
    # homogeneity of the variation operator to 1e-10 relative
    kernel = KernelSpec("gaussian-heat")
    v = variation_operator(f, kernel, scales, RHO).values
    for c in (2.0, -7.5, 0.125):
        vc = variation_operator(GridFunction(d, c * f.values), kernel,
                                scales, RHO).values
        assert np.max(np.abs(vc - abs(c) * v)) <= 1e-10 * max(1.0, np.max(v))
    # exact annihilation of the sparse commutators for constant b
    g = GridFunction.indicator(d, -1.0, 1.0)
    for lat in default_lattices(d):
        fam = build_sparse_family(g, lat)
        for c in (4.2, -0.1):
            b = GridFunction(d, np.full(d.cells, c))
            assert not np.any(sparse_commutator(fam, b, g).values)
            assert not np.any(sparse_commutator_star(fam, b, g).values)
    _report(8, "constant-b commutators vanish bit-exactly; "
               "homogeneity holds to 1e-10")


# -- 9 ----------------------------------------------------------------------

def test_criterion_09_witness_construction():
    d = Domain1D(-8.0, 8.0, 512)
    tau, delta_param = 0.125, 2.5
    kq = 64
    qs = 256 + d.cells // 16  # companion P = Q - 256 cells stays inside
    q = (qs, qs + kq)
    rng = np.random.default_rng(SEED)
    n_checked = 0
    for i in range(20):
        b = GridFunction(d, np.cumsum(rng.standard_normal(d.cells)) * math.sqrt(d.h))
        res = oscillation_witness(b, q, tau, delta_param, verify=False)
        assert not res.degenerate
        # postconditions, checked independently of the implementation
        assert len(res.e_cells) == int(tau * kq) // 2
        ps, pe = res.p_range
        assert len(res.f_cells) == (pe - ps) // 2
        assert np.all((res.e_cells >= qs) & (res.e_cells < qs + kq))
        assert np.all((res.f_cells >= ps) & (res.f_cells < pe))
        a_tau = local_mean_oscillation(b, q, tau)
        assert a_tau > 0
        for xe in res.e_cells:
            for yf in res.f_cells:
                gap = res.sign * (b.values[xe] - b.values[yf])
                assert gap >= a_tau - 1e-12
        n_checked += 1
    assert n_checked == 20
    _report(9, "20 witness pairs pass the exhaustive pair check at N = 512")


# -- 10 ---------------------------------------------------------------------

def test_criterion_10_run_determinism(tmp_path):
    cfg_text = ("experiment = E1\ncells = 192\nscale_count = 12\n"
                "function_count = 6\np_list = 1.2, 2.0\n"
                "weight_params = 0.0, 0.3\nseed = 20240901\n")
    cfgfile = tmp_path / "e1.cfg"
    cfgfile.write_text(cfg_text)
    outs = []
    for name in ("run1", "run2"):
        out = tmp_path / name
        assert cli_main(["run", "--config", str(cfgfile),
                         "--out", str(out)]) == 0
        outs.append((out / "E1.csv").read_bytes())
    assert outs[0] == outs[1]
    summary = json.loads((tmp_path / "run1" / "E1.json").read_text())
    assert summary["n_failures"] == 0
    _report(10, f"two runs, byte-identical CSVs ({len(outs[0])} bytes)")
