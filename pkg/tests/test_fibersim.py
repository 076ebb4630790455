import numpy as np
import pytest
from scipy.fft import fft, ifft, fftfreq

from bandshape import _kernels
from bandshape.errors import NumericalError, ParameterError
from bandshape.fibersim import (
    FiberParams,
    LinkParams,
    Waveform,
    cd_compensate,
    demodulate,
    edfa,
    effective_snr,
    modulate,
    rrc_taps,
    run_link,
    run_sweep,
    ssfm_span,
)
from bandshape.trellis import Alphabet, TrellisParams, build_full_trellis

SPAN_FIBER = FiberParams(
    alpha_db_per_km=0.2, dispersion_ps_nm_km=17.0, gamma_per_w_km=1.3,
    length_km=205.0,
)


def random_qam_waveform(n_symbols=2048, sps=4, seed=0, rate=50e9):
    rng = np.random.default_rng(seed)
    levels = np.array([-7, -5, -3, -1, 1, 3, 5, 7], dtype=float)
    sym = rng.choice(levels, n_symbols) + 1j * rng.choice(levels, n_symbols)
    sym /= np.sqrt(np.mean(np.abs(sym) ** 2))
    taps = rrc_taps(0.1, 32, sps)
    return modulate(sym, sps, taps, rate)


class TestKernels:
    def test_paths_agree(self):
        rng = np.random.default_rng(0)
        u = rng.normal(size=4096) + 1j * rng.normal(size=4096)
        a = _kernels.kerr_phase_numpy(u.copy(), 0.037)
        b = _kernels.kerr_phase(u.copy(), 0.037)
        np.testing.assert_allclose(b, a, rtol=1e-12, atol=1e-12)

    def test_zero_coeff_identity(self):
        rng = np.random.default_rng(1)
        u = rng.normal(size=256) + 1j * rng.normal(size=256)
        np.testing.assert_allclose(_kernels.kerr_phase(u.copy(), 0.0), u, atol=1e-15)

    def test_magnitude_preserved(self):
        rng = np.random.default_rng(2)
        u = rng.normal(size=256) + 1j * rng.normal(size=256)
        out = _kernels.kerr_phase(u.copy(), 1.7)
        np.testing.assert_allclose(np.abs(out), np.abs(u), rtol=1e-12)


class TestRrcTaps:
    def test_unit_energy(self):
        taps = rrc_taps(0.1, 64, 16)
        assert np.sum(taps**2) == pytest.approx(1.0, abs=1e-12)

    def test_symmetric(self):
        taps = rrc_taps(0.1, 64, 16)
        np.testing.assert_allclose(taps, taps[::-1], rtol=1e-12)

    def test_nyquist_cascade(self):
        # tx+rx cascade sampled at symbol instants: 1 at center, ~0 elsewhere
        sps = 16
        taps = rrc_taps(0.1, 64, sps)
        rc = np.convolve(taps, taps)
        center = len(taps) - 1
        assert rc[center] == pytest.approx(1.0, abs=1e-12)
        others = [rc[center + k * sps] for k in range(1, 30)]
        assert max(abs(x) for x in others) < 1e-3

    def test_singular_points_finite(self):
        # rolloff 0.25, sps 8: |t| = 1/(4*0.25) = 1 symbol lands on the grid
        taps = rrc_taps(0.25, 16, 8)
        assert np.all(np.isfinite(taps))
        assert np.sum(taps**2) == pytest.approx(1.0, abs=1e-12)

    def test_bad_span(self):
        with pytest.raises(ParameterError):
            rrc_taps(0.1, 7, 8)
        with pytest.raises(ParameterError):
            rrc_taps(0.0, 16, 8)


class TestModulateDemodulate:
    def test_impulse_gives_taps(self):
        taps = rrc_taps(0.1, 16, 4)
        wf = modulate(np.array([1.0]), 4, taps, 50e9)
        np.testing.assert_allclose(wf.samples, taps, atol=1e-15)
        assert wf.sample_rate_hz == 200e9

    def test_zero_symbols(self):
        taps = rrc_taps(0.1, 16, 4)
        wf = modulate(np.zeros(64, dtype=complex), 4, taps, 50e9)
        assert np.all(wf.samples == 0)

    def test_back_to_back_evm(self):
        sps = 8
        taps = rrc_taps(0.1, 64, sps)
        rng = np.random.default_rng(4)
        sym = (rng.choice([-1.0, 1.0], 4096) + 1j * rng.choice([-1.0, 1.0], 4096))
        wf = modulate(sym, sps, taps, 50e9)
        rx = demodulate(wf, taps, sps, delay=len(taps) - 1)[: len(sym)]
        evm_db = 10 * np.log10(np.mean(np.abs(rx - sym) ** 2) / np.mean(np.abs(sym) ** 2))
        assert evm_db < -40.0

    def test_delay_underflow(self):
        taps = rrc_taps(0.1, 16, 4)
        wf = modulate(np.array([1.0]), 4, taps, 50e9)
        with pytest.raises(ParameterError):
            demodulate(wf, taps, 4, delay=10_000)


class TestSsfm:
    def test_dispersion_only_matches_analytic(self):
        fiber = FiberParams(0.0, 17.0, 0.0, 80.0)
        wf = random_qam_waveform(seed=5)
        out = ssfm_span(wf, fiber, step_km=4.0)
        omega = 2 * np.pi * fftfreq(wf.samples.size, 1 / wf.sample_rate_hz)
        phase = 0.5 * fiber.beta2_s2_per_m * omega**2 * fiber.length_km * 1e3
        ref = ifft(fft(wf.samples) * np.exp(1j * phase))
        err = np.linalg.norm(out.samples - ref) / np.linalg.norm(ref)
        assert err < 1e-10
        # spectrum magnitude untouched
        np.testing.assert_allclose(
            np.abs(fft(out.samples)), np.abs(fft(wf.samples)), rtol=1e-9, atol=1e-12
        )

    def test_spm_only_phase(self):
        fiber = FiberParams(0.0, 0.0, 1.3, 50.0)
        n = 1024
        amp = 0.03  # 0.9 mW constant power
        u = np.full(n, amp, dtype=complex)
        wf = Waveform(u, 200e9)
        out = ssfm_span(wf, fiber, step_km=1.0)
        expected = amp * np.exp(1j * 1.3 * amp**2 * 50.0)
        np.testing.assert_allclose(out.samples, np.full(n, expected), rtol=1e-10)

    def test_lossless_energy_conserved(self):
        fiber = FiberParams(0.0, 17.0, 1.3, 40.0)
        wf = random_qam_waveform(seed=6)
        wf.samples *= np.sqrt(5e-3 / np.mean(np.abs(wf.samples) ** 2))
        out = ssfm_span(wf, fiber, step_km=0.5)
        e_in = np.sum(np.abs(wf.samples) ** 2)
        e_out = np.sum(np.abs(out.samples) ** 2)
        assert abs(e_out / e_in - 1) < 1e-9

    def test_loss_only(self):
        fiber = FiberParams(0.2, 0.0, 0.0, 100.0)
        wf = random_qam_waveform(seed=7)
        out = ssfm_span(wf, fiber, step_km=10.0)
        ratio = np.sum(np.abs(out.samples) ** 2) / np.sum(np.abs(wf.samples) ** 2)
        assert 10 * np.log10(ratio) == pytest.approx(-20.0, abs=1e-9)

    def test_launch_power_scaling(self):
        fiber = FiberParams(0.0, 0.0, 0.0, 1.0)
        wf = random_qam_waveform(seed=8)
        out = ssfm_span(wf, fiber, step_km=1.0, launch_power_dbm=3.0)
        power = np.mean(np.abs(out.samples) ** 2)
        assert 10 * np.log10(power * 1e3) == pytest.approx(3.0, abs=1e-9)

    def test_nonfinite_aborts(self):
        fiber = FiberParams(0.2, 17.0, 1.3, 10.0)
        wf = random_qam_waveform(seed=9)
        wf.samples[17] = np.inf
        with pytest.raises(NumericalError):
            ssfm_span(wf, fiber, step_km=1.0)

    def test_zero_length_identity(self):
        fiber = FiberParams(0.2, 17.0, 1.3, 0.0)
        wf = random_qam_waveform(seed=10)
        out = ssfm_span(wf, fiber, step_km=1.0)
        np.testing.assert_allclose(out.samples, wf.samples, atol=1e-15)


class TestEdfa:
    def test_unity_gain_passthrough(self):
        wf = random_qam_waveform(seed=11)
        out = edfa(wf, gain_db=0.0, nf_db=5.0, seed=1)
        np.testing.assert_array_equal(out.samples, wf.samples)

    def test_noise_variance(self):
        n = 1_000_000
        rate = 800e9
        wf = Waveform(np.zeros(n, dtype=complex), rate)
        gain_db, nf_db = 20.0, 5.0
        out = edfa(wf, gain_db, nf_db, seed=2)
        g = 10 ** (gain_db / 10)
        n_sp = 10 ** (nf_db / 10) / 2
        nu = 299792458.0 / 1550e-9
        s_ase = n_sp * (g - 1) * 6.62607015e-34 * nu
        want = s_ase * rate
        got = np.mean(np.abs(out.samples) ** 2)
        assert got == pytest.approx(want, rel=0.01)

    def test_same_seed_identical(self):
        wf = random_qam_waveform(seed=12)
        a = edfa(wf, 10.0, 5.0, seed=3)
        b = edfa(wf, 10.0, 5.0, seed=3)
        np.testing.assert_array_equal(a.samples, b.samples)

    def test_negative_gain_rejected(self):
        wf = random_qam_waveform(seed=13)
        with pytest.raises(ParameterError):
            edfa(wf, -1.0, 5.0, seed=0)


class TestCdCompensate:
    def test_inverts_dispersion(self):
        fiber = FiberParams(0.0, 17.0, 0.0, 205.0)
        wf = random_qam_waveform(seed=14)
        out = cd_compensate(ssfm_span(wf, fiber, step_km=205.0), fiber)
        err = np.linalg.norm(out.samples - wf.samples) / np.linalg.norm(wf.samples)
        assert err < 1e-9

    def test_not_idempotent(self):
        fiber = FiberParams(0.0, 17.0, 0.0, 205.0)
        wf = random_qam_waveform(seed=15)
        once = cd_compensate(wf, fiber)
        twice = cd_compensate(once, fiber)
        assert not np.allclose(twice.samples, wf.samples, atol=1e-6)

    def test_zero_length_identity(self):
        fiber = FiberParams(0.2, 17.0, 1.3, 0.0)
        wf = random_qam_waveform(seed=16)
        out = cd_compensate(wf, fiber)
        np.testing.assert_allclose(out.samples, wf.samples, atol=1e-12)


class TestEffectiveSnr:
    def _qpsk(self, n, seed=17):
        rng = np.random.default_rng(seed)
        return (rng.choice([-1.0, 1.0], n) + 1j * rng.choice([-1.0, 1.0], n)) / np.sqrt(2)

    def test_perfect_capped(self):
        tx = self._qpsk(2000)
        assert effective_snr(tx, tx.copy()) == 60.0

    def test_awgn_matches(self):
        tx = self._qpsk(100_000)
        sigma2 = 0.01
        rng = np.random.default_rng(18)
        noise = np.sqrt(sigma2 / 2) * (rng.normal(size=tx.size) + 1j * rng.normal(size=tx.size))
        got = effective_snr(tx, tx + noise)
        assert got == pytest.approx(10 * np.log10(1 / sigma2), abs=0.1)

    def test_phase_rotation_invariant(self):
        tx = self._qpsk(2000)
        assert effective_snr(tx, np.exp(1j * np.pi / 4) * tx) == 60.0

    def test_gain_invariant(self):
        tx = self._qpsk(2000)
        assert effective_snr(tx, 3.7 * tx) == 60.0

    def test_short_input_rejected(self):
        tx = self._qpsk(100)
        with pytest.raises(ParameterError):
            effective_snr(tx, tx)

    def test_zero_power_rejected(self):
        z = np.zeros(2000, dtype=complex)
        with pytest.raises(ParameterError):
            effective_snr(z, z)


def small_link(**kw):
    defaults = dict(
        baud_rate_gbd=50.0, rrc_rolloff=0.1, edfa_nf_db=5.0,
        launch_power_dbm=2.0, sps=4, step_km=205.0, seed=0,
        burst_symbols=4096, filter_span_symbols=64, guard_symbols=256,
    )
    defaults.update(kw)
    return LinkParams(**defaults)


def uniform_rails(n, seed=0):
    rng = np.random.default_rng(seed)
    return rng.choice([1, 3, 5, 7], n), rng.choice([1, 3, 5, 7], n)


class TestRunLink:
    def test_ase_limited_snr(self):
        # gamma=0: effective SNR must match the analytic ASE-limited value
        link = small_link()
        fiber = FiberParams(0.2, 17.0, 0.0, 205.0)
        i_rail, q_rail = uniform_rails(link.burst_symbols)
        res = run_link(i_rail, q_rail, link, fiber)
        g = 10 ** (0.2 * 205.0 / 10)
        n_sp = 10 ** (5.0 / 10) / 2
        nu = 299792458.0 / 1550e-9
        s_ase = n_sp * (g - 1) * 6.62607015e-34 * nu
        p_w = 10 ** ((link.launch_power_dbm - 30) / 10)
        analytic = 10 * np.log10(p_w / (s_ase * 50e9))
        assert res["effective_snr_db"] == pytest.approx(analytic, abs=0.15)

    def test_linear_power_step(self):
        fiber = FiberParams(0.2, 17.0, 0.0, 205.0)
        i_rail, q_rail = uniform_rails(4096)
        lo = run_link(i_rail, q_rail, small_link(launch_power_dbm=0.0), fiber)
        hi = run_link(i_rail, q_rail, small_link(launch_power_dbm=3.0), fiber)
        delta = hi["effective_snr_db"] - lo["effective_snr_db"]
        assert delta == pytest.approx(3.0, abs=0.2)

    def test_deterministic(self):
        fiber = SPAN_FIBER
        link = small_link(step_km=5.0)
        i_rail, q_rail = uniform_rails(4096, seed=1)
        a = run_link(i_rail, q_rail, link, fiber)
        b = run_link(i_rail, q_rail, link, fiber)
        assert a == b

    def test_insufficient_amplitudes(self):
        with pytest.raises(ParameterError):
            run_link([1, 3], [1, 3], small_link(), SPAN_FIBER)


class TestRunSweep:
    def test_grid_shape_and_determinism(self):
        trellis = build_full_trellis(TrellisParams(12, Alphabet((1, 3, 5, 7)), 236))
        link = small_link(burst_symbols=2048, guard_symbols=128, step_km=41.0)
        fiber = SPAN_FIBER
        rows = run_sweep({"ess": trellis}, powers=[0.0, 3.0], seeds=2,
                         link=link, fiber=fiber)
        assert len(rows) == 4
        assert [r["launch_power_dbm"] for r in rows] == [0.0, 0.0, 3.0, 3.0]
        again = run_sweep({"ess": trellis}, powers=[0.0, 3.0], seeds=2,
                          link=link, fiber=fiber)
        assert rows == again
        for r in rows:
            assert set(r) == {"scheme", "launch_power_dbm", "snr_db", "seed",
                              "step_km", "sps", "burst_symbols"}


class TestShapingInvariance:
    def test_linear_regime_schemes_indistinguishable(self):
        # gamma=0 at equal launch power: shaping is invisible to effective SNR
        from bandshape.trellis import BandParams, build_band_trellis

        params = TrellisParams(12, Alphabet((1, 3, 5, 7)), 236)
        full = build_full_trellis(params)
        band = build_band_trellis(TrellisParams(12, Alphabet((1, 3, 5, 7)), 260),
                                  BandParams(4, 1))
        fiber = FiberParams(0.2, 17.0, 0.0, 205.0)
        link = small_link(launch_power_dbm=4.0)
        snrs = {}
        for name, trellis in (("full", full), ("band", band)):
            rows = run_sweep({name: trellis}, powers=[4.0], seeds=1,
                             link=link, fiber=fiber)
            snrs[name] = rows[0]["snr_db"]
        assert abs(snrs["full"] - snrs["band"]) < 0.05

    def test_step_size_convergence(self):
        # halving the step moves the reported SNR by < 0.05 dB
        trellis = build_full_trellis(TrellisParams(12, Alphabet((1, 3, 5, 7)), 236))
        fiber = SPAN_FIBER
        out = {}
        for step in (0.1, 0.05):
            link = LinkParams(
                baud_rate_gbd=50.0, rrc_rolloff=0.1, edfa_nf_db=5.0,
                launch_power_dbm=8.0, sps=8, step_km=step, seed=5,
                burst_symbols=16384, filter_span_symbols=64, guard_symbols=512,
            )
            rows = run_sweep({"x": trellis}, powers=[8.0], seeds=1,
                             link=link, fiber=fiber)
            out[step] = rows[0]["snr_db"]
        assert abs(out[0.1] - out[0.05]) < 0.05


class TestParamValidation:
    def test_link_invariants(self):
        with pytest.raises(ParameterError):
            small_link(sps=2)
        with pytest.raises(ParameterError):
            small_link(rrc_rolloff=0.0)
        with pytest.raises(ParameterError):
            small_link(step_km=0.0)
        with pytest.raises(ParameterError):
            small_link(guard_symbols=3000)  # 2*guard >= burst

    def test_fiber_invariants(self):
        with pytest.raises(ParameterError):
            FiberParams(-0.1, 17.0, 1.3, 10.0)
        with pytest.raises(ParameterError):
            FiberParams(0.2, 17.0, 1.3, -1.0)

    def test_waveform_finite(self):
        with pytest.raises(NumericalError):
            Waveform(np.array([1.0, np.nan], dtype=complex), 1e9)
