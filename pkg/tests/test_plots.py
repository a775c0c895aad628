from rabiqd.dynamics import SimConfig
from rabiqd.pipeline import ConvergenceReport, run, run_sweep, SweepSpec
from rabiqd.plots import plot_convergence, plot_run, plot_sweep

FAST_KW = dict(integrator_rel_tol=1e-8, integrator_abs_tol=1e-11)


def test_plot_run_writes_png(tmp_path):
    cfg = SimConfig(g=0.4, kappa=0.5, n_max=3, t_max=5.0, sample_interval=1.0, **FAST_KW)
    result = run(cfg)
    out = tmp_path / "run.png"
    plot_run(result.records, out, title="demo")
    assert out.stat().st_size > 0


def test_plot_sweep_writes_png(tmp_path):
    base = SimConfig(g=0.3, kappa=0.2, n_max=3, t_max=4.0, sample_interval=1.0, **FAST_KW)
    results = run_sweep(SweepSpec(base=base, axis="g", values=[0.1, 0.3], label="s"))
    out = tmp_path / "sweep.png"
    plot_sweep(results, "g", "s", out)
    assert out.stat().st_size > 0


def test_plot_convergence_writes_png(tmp_path):
    report = ConvergenceReport(n_values=[5, 10, 15], max_deltas=[1e-6, 1e-11],
                               max_deltas_embedded=[2e-6, 2e-11], converged_at=10)
    out = tmp_path / "conv.png"
    plot_convergence(report, out, title="ladder")
    assert out.stat().st_size > 0
