import numpy as np
import pytest

from rarecast.errors import InputError
from rarecast.synth import SynthConfig, generate


class TestGenerate:
    def test_defaults(self):
        sensors, failures = generate(SynthConfig())
        assert len(sensors) == 1
        assert len(sensors[0]) == 10080
        assert len(failures) == 30

    def test_episode_layout(self):
        cfg = SynthConfig(seed=4, failure_duration_steps=7)
        _, failures = generate(cfg)
        starts, ends = failures.starts, failures.ends
        assert np.all(ends - starts + 1 == 7)
        assert np.all(np.diff(starts) >= cfg.min_spacing)
        assert starts[0] >= cfg.precursor_window_steps
        assert ends[-1] < cfg.duration_steps

    @pytest.mark.parametrize("placement", ["uniform", "renewal"])
    def test_seed_reproducible(self, placement):
        a = generate(SynthConfig(seed=11, placement=placement))
        b = generate(SynthConfig(seed=11, placement=placement))
        np.testing.assert_array_equal(a[0][0].values, b[0][0].values)
        assert a[1] == b[1]
        c = generate(SynthConfig(seed=12, placement=placement))
        assert not np.array_equal(a[0][0].values, c[0][0].values)

    def test_precursor_raises_sensor(self):
        cfg = SynthConfig(seed=2)
        sensors, failures = generate(cfg)
        x = sensors[0].values
        w = cfg.precursor_window_steps
        pre = np.concatenate([x[s - w : s] for s in failures.starts])
        quiet = np.ones(len(x), bool)
        for s, e in failures.episodes:
            quiet[s - w : e + 1] = False
        assert pre.mean() - x[quiet].mean() > cfg.precursor_strength

    def test_multi_sensor_names(self):
        sensors, _ = generate(SynthConfig(sensor_count=3, duration_steps=3000, failure_count=5))
        assert [s.name for s in sensors] == ["sensor_0", "sensor_1", "sensor_2"]

    def test_renewal_gaps_regular(self):
        # increasing hazard gives inter-failure gaps far less dispersed than uniform placement
        def cv(placement):
            out = []
            for seed in range(5):
                _, f = generate(SynthConfig(seed=seed, placement=placement))
                g = np.diff(f.starts)
                out.append(g.std() / g.mean())
            return np.mean(out)

        assert cv("renewal") < 0.5 * cv("uniform")

    def test_cannot_pack(self):
        with pytest.raises(InputError):
            generate(SynthConfig(duration_steps=1000, failure_count=30))

    @pytest.mark.parametrize(
        "kwargs", [{"failure_count": 0}, {"ar_coefficient": 1.0}, {"noise_std": -1.0}, {"placement": "x"}]
    )
    def test_invalid_config(self, kwargs):
        with pytest.raises(InputError):
            SynthConfig(**kwargs)
