import numpy as np
import pytest

from levyglass import diluted, exact
from levyglass.heavy_tail import HeavyTailSpec, sample_disorder
from levyglass.stats import ks_two_sample, loglog_slope
from levyglass.streams import derive_rng


def rng_for(name, rep=0):
    return derive_rng(60606, name, rep)


def test_pvb_edge_count_mean():
    # Poisson(eps^{-alpha} N) edges at the family default
    rng = rng_for("count")
    counts = [diluted.sample_pvb(20, 1.5, 1.0, rng).n_edges for _ in range(4000)]
    target = 20.0
    se = np.sqrt(target / len(counts))
    assert abs(np.mean(counts) - target) < 3.0 * se


def test_pvb_weights_above_cutoff():
    inst = diluted.sample_pvb(12, 1.5, 0.7, rng_for("w"))
    assert np.all(np.abs(inst.weights) >= 0.7)
    with pytest.raises(ValueError):
        diluted.PvbInstance(n_sites=4, edge_i=np.array([0]), edge_j=np.array([1]),
                            weights=np.array([0.1]), gamma=1.0, eps=0.5)


def test_pvb_endpoint_uniformity():
    # pooled multiplicities over pairs are multinomial-uniform
    from scipy import stats

    rng = rng_for("unif")
    counts = np.zeros(15)
    for _ in range(2000):
        inst = diluted.sample_pvb(6, 1.5, 1.0, rng)
        pair_idx = inst.edge_i * 6 - inst.edge_i * (inst.edge_i + 1) // 2 + (inst.edge_j - inst.edge_i - 1)
        counts += np.bincount(pair_idx, minlength=15)
    assert stats.chisquare(counts).pvalue > 0.01


def test_vb_edge_count_and_guard():
    rng = rng_for("vb")
    counts = [diluted.sample_vb(10, 1.5, 1.0, rng).n_edges for _ in range(4000)]
    target = 45 * 0.1
    assert abs(np.mean(counts) - target) < 3.0 * np.sqrt(target / len(counts))
    with pytest.raises(ValueError):
        diluted.sample_vb(3, 1.5, 0.4, rng)  # connectivity above one


def test_vb_equals_dense_with_weak_bonds_zeroed():
    # in the coupled draw the identity holds exactly, matrix by matrix
    for rep in range(5):
        dense, vb, _ = diluted.coupled_dilution_draw(1.5, 1.0, 10, rng_for("ident", rep))
        zeroed = np.where(np.abs(dense.couplings) >= 1.0, dense.couplings, 0.0)
        assert np.array_equal(vb.to_matrix().couplings, zeroed)


def test_coupled_marginals_match_plain_samplers():
    # edge-count laws of the coupled draw agree with the marginal samplers
    rng = rng_for("marg")
    vb_counts, pvb_counts = [], []
    for _ in range(3000):
        _, vb, pvb = diluted.coupled_dilution_draw(1.5, 1.0, 10, rng)
        vb_counts.append(vb.n_edges)
        pvb_counts.append(pvb.n_edges)
    assert abs(np.mean(vb_counts) - 4.5) < 3.0 * np.sqrt(4.5 / 3000)
    target = diluted.bridge_gamma(1.5, 1.0, 10) * 10  # = eps^-a (N-1)/2
    assert abs(np.mean(pvb_counts) - target) < 3.0 * np.sqrt(target / 3000)
    assert abs(np.var(pvb_counts) - target) < 4.0 * target / np.sqrt(3000)


def test_vb_free_energy_distribution_matches_truncated_dense():
    # independent-draw check of the distributional identity at N=10
    spec = HeavyTailSpec.canonical(1.5)
    beta = 0.8
    f_trunc, f_vb = [], []
    for r in range(300):
        m = sample_disorder(spec, 10, rng_for("fa", r))
        zeroed = np.where(np.abs(m.couplings) >= 1.0, m.couplings, 0.0)
        f_trunc.append(exact.exact_log_partition(
            type(m)(n_sites=10, couplings=zeroed), beta).log_z / 10)
        vb = diluted.sample_vb(10, 1.5, 1.0, rng_for("fb", r))
        f_vb.append(exact.exact_log_partition(vb.to_matrix(), beta).log_z / 10)
    res = ks_two_sample(f_trunc, f_vb, n_permutations=2000, rng=rng_for("fks"))
    assert res.p_value > 0.01
    se = np.hypot(np.std(f_trunc, ddof=1), np.std(f_vb, ddof=1)) / np.sqrt(300)
    assert abs(np.mean(f_trunc) - np.mean(f_vb)) < 3.0 * se


def test_pvb_multi_edges_sum_in_hamiltonian():
    inst = diluted.PvbInstance(n_sites=3, edge_i=np.array([0, 0]), edge_j=np.array([1, 1]),
                               weights=np.array([2.0, 3.0]), gamma=1.0, eps=1.0)
    assert inst.to_matrix().couplings[0, 1] == 5.0


def test_huge_cutoff_gives_free_model():
    inst = diluted.sample_pvb(8, 1.5, 1e6, rng_for("free"))
    assert inst.n_edges == 0
    thermo = exact.exact_log_partition(inst.to_matrix(), 1.0)
    assert thermo.log_z == pytest.approx(8 * np.log(2.0), abs=1e-12)


def test_truncation_gap_under_bound_and_shrinking():
    rng = rng_for("gap")
    r1 = diluted.truncation_gap(1.5, 1.0, 1.0, 12, 150, rng)
    r2 = diluted.truncation_gap(1.5, 1.0, 0.5, 12, 150, rng)
    assert abs(r1.gap) <= r1.truncation_bound + 3.0 * r1.gap_stderr
    assert abs(r2.gap) <= r2.truncation_bound + 3.0 * r2.gap_stderr
    assert abs(r2.gap) <= abs(r1.gap) + 3.0 * np.hypot(r1.gap_stderr, r2.gap_stderr)
    with pytest.raises(ValueError):
        diluted.truncation_gap(1.5, 1.0, 1.0, 24, 5, rng)


def test_vb_pvb_gap_decays_like_one_over_n():
    gaps = []
    for n_sites, reps in ((6, 400), (10, 300), (14, 250), (18, 150)):
        mean, se = diluted.vb_pvb_gap(1.5, 1.0, 1.0, n_sites, reps, rng_for(f"vp{n_sites}"))
        assert se < 0.2 * abs(mean)
        gaps.append(abs(mean))
    fit = loglog_slope(np.array([6.0, 10.0, 14.0, 18.0]), np.array(gaps))
    assert fit.slope <= -0.7


def test_superadditivity_zero_beta():
    rng = rng_for("super0")
    rep = diluted.superadditivity_experiment(1.5, 0.0, (6, 6), 3, rng, model="levy")
    assert rep.defect == pytest.approx(0.0, abs=1e-10)


def test_superadditivity_pvb_bound():
    assert diluted.mean_abs_g_eps(1.5, 1.0) == pytest.approx(3.0)
    rng = rng_for("super")
    rep = diluted.superadditivity_experiment(1.5, 1.0, (8, 8), 120, rng, model="pvb", eps=1.0)
    assert rep.lower_bound == pytest.approx(-6.0 * 1.0 * 1.0 * 3.0)
    assert rep.defect >= rep.lower_bound - 3.0 * rep.stderr
    with pytest.raises(ValueError):
        diluted.superadditivity_experiment(1.5, 1.0, (13, 13), 5, rng)
    with pytest.raises(ValueError):
        diluted.mean_abs_g_eps(0.9, 1.0)


def test_pvb_instance_round_trip(tmp_path):
    inst = diluted.sample_pvb(7, 1.5, 1.0, rng_for("io"))
    path = tmp_path / "pvb.txt"
    diluted.dump_pvb(inst, path, alpha=1.5, beta=0.4, seed=5)
    loaded, meta = diluted.load_pvb(path, gamma=inst.gamma, eps=inst.eps)
    assert meta["N"] == 7 and meta["seed"] == 5
    assert np.array_equal(loaded.to_matrix().couplings, inst.to_matrix().couplings)
