"""Strategy pipeline, metric, and experiment-runner tests."""

import math
from dataclasses import FrozenInstanceError

import numpy as np
import pytest

from cfaisp.cfa import CfaPattern, mosaic_from_rgb
from cfaisp.demosaic import DemosaickerConfig, demosaic, demosaic_joint_bilateral
from cfaisp.denoise import DenoiserConfig
from cfaisp.imageio import DimensionError, Plane, RgbImage
from cfaisp.noise import NoiseSpec
from cfaisp.pipeline import (
    METRIC_CROP,
    ExperimentGrid,
    ExperimentRecord,
    Strategy,
    cpsnr,
    derive_run_seed,
    fnv1a64,
    mse,
    psnr,
    run_experiment,
    run_pipeline,
)


def _ramp_image(size=32):
    yy, xx = np.mgrid[0:size, 0:size].astype(float)
    ramp = 0.2 + 0.5 * xx / (size - 1) + 0.2 * yy / (size - 1)
    return RgbImage(Plane(ramp), Plane(ramp), Plane(ramp))


def _textured_image(size=48, seed=40):
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size] / (size - 1)
    base = 0.3 + 0.25 * np.sin(2 * np.pi * (2 * xx + yy)) * np.cos(2 * np.pi * yy)
    base = 0.5 + 0.4 * (base - base.mean())
    r = np.clip(base + 0.05 * rng.standard_normal((size, size)) * 0, 0, 1)
    return RgbImage(Plane(r), Plane(np.clip(base, 0, 1)), Plane(np.clip(base * 0.9 + 0.05, 0, 1)))


WAVELET = DenoiserConfig(kind="wavelet", levels=2)
BILINEAR = DemosaickerConfig(kind="bilinear")
GRADIENT = DemosaickerConfig(kind="gradient")
JOINT = DemosaickerConfig(kind="joint-bilateral")
NONE = DenoiserConfig(kind="none")


class TestMse:
    def test_identical_is_zero(self):
        plane = Plane(np.random.default_rng(1).random((8, 8)))
        assert mse(plane, plane) == 0.0

    def test_constant_offset(self):
        a = Plane(np.zeros((6, 6)))
        b = Plane(np.full((6, 6), 0.1))
        assert mse(a, b) == pytest.approx(0.01, rel=1e-12)

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(2)
        x, y = rng.random((7, 9)), rng.random((7, 9))
        total = 0.0
        for i in range(7):
            for j in range(9):
                total += (x[i, j] - y[i, j]) ** 2
        assert mse(Plane(x), Plane(y)) == pytest.approx(total / 63, rel=1e-12)

    def test_crop_equals_manual_slice(self):
        rng = np.random.default_rng(3)
        x, y = rng.random((12, 10)), rng.random((12, 10))
        inner = mse(Plane(x[2:-2, 2:-2]), Plane(y[2:-2, 2:-2]))
        assert mse(Plane(x), Plane(y), crop=2) == pytest.approx(inner, rel=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            mse(Plane(np.zeros((4, 4))), Plane(np.zeros((4, 5))))

    def test_overlarge_crop(self):
        with pytest.raises(DimensionError):
            mse(Plane(np.zeros((8, 8))), Plane(np.zeros((8, 8))), crop=4)

    def test_negative_crop(self):
        with pytest.raises(ValueError):
            mse(Plane(np.zeros((8, 8))), Plane(np.zeros((8, 8))), crop=-1)


class TestPsnr:
    def test_reference_points(self):
        assert psnr(0.01) == pytest.approx(20.0, abs=1e-12)
        assert psnr(1e-4) == pytest.approx(40.0, abs=1e-12)
        assert psnr(1.0) == pytest.approx(0.0, abs=1e-12)

    def test_peak_scaling(self):
        assert psnr(1.0, peak=10.0) == pytest.approx(20.0, abs=1e-12)

    def test_zero_is_infinite(self):
        assert psnr(0.0) == math.inf

    def test_negative_mse_rejected(self):
        with pytest.raises(ValueError):
            psnr(-1e-9)

    def test_bad_peak(self):
        with pytest.raises(ValueError):
            psnr(0.1, peak=0.0)


class TestCpsnr:
    def test_identical_is_infinite(self):
        image = _ramp_image(16)
        assert cpsnr(image, image) == math.inf

    def test_single_channel_error(self):
        base = np.zeros((8, 8))
        truth = RgbImage(Plane(base), Plane(base), Plane(base))
        test = RgbImage(Plane(base + 0.1), Plane(base), Plane(base))
        # channel MSEs are (0.01, 0, 0) so the mean is 0.01/3
        assert cpsnr(truth, test) == pytest.approx(10 * math.log10(3 / 0.01), abs=1e-12)
        assert cpsnr(truth, test) == pytest.approx(24.771212547196624, abs=1e-9)

    def test_composition_from_channel_mses(self):
        rng = np.random.default_rng(4)
        truth = RgbImage(*(Plane(rng.random((10, 10))) for _ in range(3)))
        test = RgbImage(*(Plane(rng.random((10, 10))) for _ in range(3)))
        mean_mse = np.mean([mse(a, b, 1) for a, b in zip(truth.planes, test.planes)])
        assert cpsnr(truth, test, crop=1) == pytest.approx(psnr(float(mean_mse)), abs=1e-9)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            cpsnr(_ramp_image(16), _ramp_image(18))


class TestRunPipeline:
    def test_joint_strategy_requires_joint_demosaicker(self):
        truth = _ramp_image(16)
        noise = NoiseSpec.uniform(0.05, 1)
        with pytest.raises(ValueError, match="joint"):
            run_pipeline(truth, CfaPattern.GBRG, noise, Strategy.JOINT, NONE, BILINEAR)

    def test_nonjoint_strategy_rejects_joint_demosaicker(self):
        truth = _ramp_image(16)
        noise = NoiseSpec.uniform(0.05, 1)
        for strategy in (Strategy.AFTER, Strategy.BEFORE):
            with pytest.raises(ValueError, match="non-joint"):
                run_pipeline(truth, CfaPattern.GBRG, noise, strategy, NONE, JOINT)

    @pytest.mark.parametrize("dm", [BILINEAR, GRADIENT])
    @pytest.mark.parametrize("dn", [DenoiserConfig(kind="wavelet", levels=2, sigma_n=0.0), NONE])
    def test_zero_noise_collapses_strategies(self, dm, dn):
        # With sigma 0 and an identity denoiser, After and Before both reduce
        # to plain demosaicking of the clean mosaic, bit for bit.
        truth = _textured_image(32)
        noise = NoiseSpec.uniform(0.0, 9)
        reference = demosaic(mosaic_from_rgb(truth, CfaPattern.GBRG), dm)
        for strategy in (Strategy.AFTER, Strategy.BEFORE):
            result, _ = run_pipeline(truth, CfaPattern.GBRG, noise, strategy, dn, dm)
            for got, want in zip(result.planes, reference.planes):
                assert np.array_equal(got.data, want.data)

    def test_joint_zero_noise_matches_direct_call(self):
        truth = _textured_image(32)
        noise = NoiseSpec.uniform(0.0, 9)
        result, record = run_pipeline(truth, CfaPattern.GBRG, noise, Strategy.JOINT, WAVELET, JOINT)
        want = demosaic_joint_bilateral(mosaic_from_rgb(truth, CfaPattern.GBRG), JOINT.sigma_s, JOINT.sigma_r)
        for got, expected in zip(result.planes, want.planes):
            assert np.array_equal(got.data, expected.data)
        assert record.denoiser == "none"

    def test_constant_image_scores_infinite(self):
        flat = np.full((32, 32), 0.5)
        truth = RgbImage(Plane(flat), Plane(flat), Plane(flat))
        noise = NoiseSpec.uniform(0.0, 5)
        _, record = run_pipeline(truth, CfaPattern.GBRG, noise, Strategy.AFTER, NONE, BILINEAR)
        assert record.cpsnr_db == math.inf
        assert record.mse_r == 0.0 and record.mse_g == 0.0 and record.mse_b == 0.0

    def test_gradient_on_clean_ramp_scores_near_machine_precision(self):
        truth = _ramp_image(32)
        noise = NoiseSpec.uniform(0.0, 5)
        _, record = run_pipeline(truth, CfaPattern.GBRG, noise, Strategy.AFTER, NONE, GRADIENT)
        assert record.cpsnr_db > 200.0

    def test_record_fields(self):
        truth = _textured_image(32)
        noise = NoiseSpec(sigma_r=0.02, sigma_g=0.03, sigma_b=0.04, seed=77)
        _, record = run_pipeline(
            truth, CfaPattern.RGGB, noise, Strategy.BEFORE, WAVELET, BILINEAR, image_id="tex"
        )
        assert record.image == "tex"
        assert record.pattern == "rggb"
        assert record.strategy == "before"
        assert record.denoiser == WAVELET.describe()
        assert record.demosaicker == "bilinear"
        assert (record.sigma_r, record.sigma_g, record.sigma_b) == (0.02, 0.03, 0.04)
        assert record.seed == 77
        assert record.wall_ms > 0.0

    def test_record_metrics_recomputable(self):
        truth = _textured_image(32)
        noise = NoiseSpec.uniform(0.05, 13)
        result, record = run_pipeline(truth, CfaPattern.GBRG, noise, Strategy.AFTER, WAVELET, BILINEAR)
        expected = [mse(a, b, METRIC_CROP) for a, b in zip(truth.planes, result.planes)]
        assert (record.mse_r, record.mse_g, record.mse_b) == tuple(expected)
        assert record.psnr_g_db == pytest.approx(psnr(expected[1]), abs=1e-12)
        assert record.cpsnr_db == pytest.approx(cpsnr(truth, result, METRIC_CROP), abs=1e-12)

    def test_denoising_before_demosaicking_beats_no_denoising(self, corpus):
        name, truth = corpus[0]
        noise = NoiseSpec.uniform(0.05, 99)
        _, treated = run_pipeline(truth, CfaPattern.GBRG, noise, Strategy.BEFORE, WAVELET, BILINEAR)
        _, baseline = run_pipeline(truth, CfaPattern.GBRG, noise, Strategy.BEFORE, NONE, BILINEAR)
        assert treated.cpsnr_db > baseline.cpsnr_db

    def test_records_are_frozen(self):
        truth = _ramp_image(16)
        _, record = run_pipeline(
            truth, CfaPattern.GBRG, NoiseSpec.uniform(0.0, 0), Strategy.AFTER, NONE, BILINEAR
        )
        with pytest.raises(FrozenInstanceError):
            record.cpsnr_db = 0.0


class TestSeedDerivation:
    def test_fnv_published_vectors(self):
        assert fnv1a64(b"") == 0xCBF29CE484222325
        assert fnv1a64(b"a") == 0xAF63DC4C8601EC8C
        assert fnv1a64(b"foobar") == 0x85944171F73967E8

    def test_derive_matches_definition(self):
        assert derive_run_seed(0, "img", 0) == fnv1a64(b"img|0")
        assert derive_run_seed(12345, "img", 2) == (12345 ^ fnv1a64(b"img|2"))

    def test_stays_in_64_bits(self):
        seed = derive_run_seed(0xFFFFFFFFFFFFFFFF, "x", 1)
        assert 0 <= seed < 2**64

    def test_varies_by_image_and_repeat(self):
        seeds = {
            derive_run_seed(0, image, repeat)
            for image in ("a", "b", "c")
            for repeat in range(4)
        }
        assert len(seeds) == 12

    def test_independent_of_grid_point(self):
        # Same image and repeat must mean same noise, whatever else varies.
        truth = _textured_image(32)
        grid = ExperimentGrid(
            strategies=(Strategy.AFTER, Strategy.BEFORE, Strategy.JOINT),
            sigmas=(0.05,),
            denoisers=(WAVELET, NONE),
        )
        records = run_experiment([("t", truth)], grid, master_seed=7)
        assert len({r.seed for r in records}) == 1


class TestExperimentGrid:
    def test_default_grid_is_valid(self):
        grid = ExperimentGrid()
        assert grid.repeats == 1

    def test_empty_axis_rejected(self):
        with pytest.raises(ValueError):
            ExperimentGrid(strategies=())
        with pytest.raises(ValueError):
            ExperimentGrid(sigmas=())

    def test_bad_sigma_rejected(self):
        with pytest.raises(ValueError):
            ExperimentGrid(sigmas=(0.05, -0.1))
        with pytest.raises(ValueError):
            ExperimentGrid(sigmas=(math.nan,))

    def test_joint_on_demosaicker_axis_rejected(self):
        with pytest.raises(ValueError):
            ExperimentGrid(demosaickers=(JOINT,))

    def test_nonjoint_joint_demosaicker_rejected(self):
        with pytest.raises(ValueError):
            ExperimentGrid(joint_demosaicker=BILINEAR)

    def test_bad_repeats(self):
        with pytest.raises(ValueError):
            ExperimentGrid(repeats=0)

    def test_points_order(self):
        grid = ExperimentGrid(
            strategies=(Strategy.AFTER, Strategy.BEFORE),
            sigmas=(0.02, 0.1),
            denoisers=(WAVELET,),
            demosaickers=(BILINEAR, GRADIENT),
            repeats=2,
        )
        points = list(grid.points())
        assert len(points) == 2 * 2 * 1 * 2 * 2
        assert points[0] == (Strategy.AFTER, 0.02, WAVELET, BILINEAR, 0)
        assert points[1] == (Strategy.AFTER, 0.02, WAVELET, BILINEAR, 1)
        assert points[2] == (Strategy.AFTER, 0.02, WAVELET, GRADIENT, 0)
        assert points[4] == (Strategy.AFTER, 0.1, WAVELET, BILINEAR, 0)
        assert points[8] == (Strategy.BEFORE, 0.02, WAVELET, BILINEAR, 0)

    def test_joint_strategy_collapses_axes(self):
        grid = ExperimentGrid(
            strategies=(Strategy.JOINT,),
            sigmas=(0.05,),
            denoisers=(WAVELET, NONE),
            demosaickers=(BILINEAR, GRADIENT),
        )
        points = list(grid.points())
        assert len(points) == 1
        strategy, sigma, dn, dm = points[0][:4]
        assert strategy is Strategy.JOINT
        assert dn.kind == "none"
        assert dm.is_joint

    def test_two_images_three_strategies_three_sigmas(self):
        # The canonical small sweep: 2 x 3 x 3 = 18 records.
        grid = ExperimentGrid(
            strategies=(Strategy.AFTER, Strategy.JOINT, Strategy.BEFORE),
            sigmas=(0.02, 0.05, 0.1),
        )
        corpus = [("a", _textured_image(32)), ("b", _ramp_image(32))]
        records = run_experiment(corpus, grid)
        assert len(records) == 18


class TestRunExperiment:
    def test_single_point(self):
        grid = ExperimentGrid(strategies=(Strategy.AFTER,), sigmas=(0.05,))
        records = run_experiment([("one", _textured_image(32))], grid, master_seed=3)
        assert len(records) == 1
        assert records[0].image == "one"
        assert records[0].seed == derive_run_seed(3, "one", 0)

    def test_image_major_order(self):
        grid = ExperimentGrid(strategies=(Strategy.AFTER,), sigmas=(0.02, 0.05))
        corpus = [("first", _textured_image(32)), ("second", _ramp_image(32))]
        records = run_experiment(corpus, grid)
        assert [r.image for r in records] == ["first", "first", "second", "second"]
        assert [r.sigma_g for r in records] == [0.02, 0.05, 0.02, 0.05]

    def test_deterministic_across_calls(self):
        grid = ExperimentGrid(sigmas=(0.05,), repeats=2)
        corpus = [("t", _textured_image(32))]
        first = run_experiment(corpus, grid, master_seed=11)
        second = run_experiment(corpus, grid, master_seed=11)
        assert first == second

    def test_jobs_do_not_change_results(self):
        grid = ExperimentGrid(sigmas=(0.02, 0.05), repeats=2)
        corpus = [("a", _textured_image(32)), ("b", _ramp_image(32))]
        serial = run_experiment(corpus, grid, master_seed=5, jobs=1)
        parallel = run_experiment(corpus, grid, master_seed=5, jobs=2)
        assert serial == parallel

    def test_wall_time_zeroed_unless_kept(self):
        grid = ExperimentGrid(strategies=(Strategy.AFTER,), sigmas=(0.05,))
        corpus = [("t", _textured_image(32))]
        plain = run_experiment(corpus, grid)
        timed = run_experiment(corpus, grid, keep_timing=True)
        assert plain[0].wall_ms == 0.0
        assert timed[0].wall_ms > 0.0

    def test_failure_names_grid_point(self):
        # 10x10 sub-images are 5x5: not divisible for a 3-level transform.
        grid = ExperimentGrid(
            strategies=(Strategy.BEFORE,),
            sigmas=(0.05,),
            denoisers=(DenoiserConfig(kind="wavelet", levels=3),),
        )
        yy, xx = np.mgrid[0:10, 0:10] / 9.0
        tiny = RgbImage(Plane(xx), Plane(yy), Plane(xx * yy))
        with pytest.raises(RuntimeError, match="image=tiny") as excinfo:
            run_experiment([("tiny", tiny)], grid, jobs=1)
        assert "strategy=before" in str(excinfo.value)
        assert "sigma=0.05" in str(excinfo.value)

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            run_experiment([], ExperimentGrid())


class TestStrategyParse:
    def test_parse_values(self):
        assert Strategy.parse("after") is Strategy.AFTER
        assert Strategy.parse(" JOINT ") is Strategy.JOINT
        assert Strategy.parse("Before") is Strategy.BEFORE

    def test_parse_unknown(self):
        with pytest.raises(ValueError, match="unknown strategy"):
            Strategy.parse("during")


class TestRecordOrder:
    def test_field_order_matches_csv_header(self):
        from cfaisp.imageio import CSV_HEADER

        fields = [f.name for f in __import__("dataclasses").fields(ExperimentRecord)]
        assert fields == CSV_HEADER.split(",")
