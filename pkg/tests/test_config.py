# pylint: skip-file
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path

import numpy as np
import pytest

from privnet_cpd import DEPENDENCE, MECHANISM, METHOD, TAURULE, ConfigError, load_experiment, load_model_spec
from privnet_cpd.config import dump_model_spec, experiment_from_dict, load_toml, model_spec_from_dict

from .mock_constants import BAD_EXPERIMENT_TOML, BIPARTITE_TOML, EXPERIMENT_TOML, MIDDLE_CSV, MODEL_TOML

CONFIGS = Path(__file__).parents[1] / 'configs'


def model_dict(**changes):
    data = tomllib.loads(MODEL_TOML)
    data.update(changes)
    return data


def experiment_dict(section=None, **changes):
    data = tomllib.loads(EXPERIMENT_TOML)
    (data[section] if section else data).update(changes)
    return data


def key_path_of(func, *args):
    with pytest.raises(ConfigError) as excinfo:
        func(*args)
    return excinfo.value.key_path


def test_load_symmetric_model(tmp_path):
    path = tmp_path / 'model.toml'
    path.write_text(MODEL_TOML)

    spec = load_model_spec(path)

    assert spec.T == 20
    assert (spec.n1, spec.n2) == (3, 3)
    assert spec.symmetric
    assert spec.change_points == (11,)
    assert spec.split_points == (10,)
    assert spec.segment_thetas[1].max_entry == pytest.approx(0.4)


def test_load_bipartite_model_with_csv(tmp_path):
    (tmp_path / 'model.toml').write_text(BIPARTITE_TOML)
    (tmp_path / 'middle.csv').write_text(MIDDLE_CSV)

    spec = load_model_spec(tmp_path / 'model.toml')

    assert spec.dependence is DEPENDENCE.identical_rows
    assert not spec.symmetric
    assert spec.change_points == (5, 9)
    assert np.allclose(spec.segment_thetas[1].values, [[0.7] * 3, [0.1] * 3])


def test_dump_and_reload(tmp_path):
    (tmp_path / 'model.toml').write_text(BIPARTITE_TOML)
    (tmp_path / 'middle.csv').write_text(MIDDLE_CSV)
    spec = load_model_spec(tmp_path / 'model.toml')

    target = dump_model_spec(spec, tmp_path / 'out' / 'copy.toml')

    assert (tmp_path / 'out' / 'copy_theta1.csv').is_file()
    assert load_toml(target)['theta'][0] == pytest.approx(0.2)
    assert load_model_spec(target) == spec


@pytest.mark.parametrize('changes, key_path', [
    ({'colour': 'red'}, 'colour'),
    ({'T': True}, 'T'),
    ({'n1': 0}, 'n1'),
    ({'n2': 4}, 'n2'),
    ({'change_points': [1]}, 'change_points[0]'),
    ({'change_points': [5, 5], 'theta': [0.1, 0.2, 0.3]}, 'change_points[1]'),
    ({'change_points': [5, 'x']}, 'change_points[1]'),
    ({'theta': [0.1]}, 'theta'),
    ({'theta': [0.1, 1.5]}, 'theta[1]'),
    ({'theta': [0.1, 0.1]}, 'theta'),
    ({'theta': [0.1, 'absent.csv']}, 'theta[1]'),
    ({'dependence': 'identical_rows'}, 'dependence'),
    ({'dependence': 'clustered'}, 'dependence'),
])
def test_model_key_paths(changes, key_path, tmp_path):
    assert key_path_of(model_spec_from_dict, model_dict(**changes), tmp_path) == key_path


def test_missing_model_key():
    data = model_dict()
    del data['theta']

    with pytest.raises(ConfigError, match='theta: missing required key'):
        model_spec_from_dict(data)


def test_wrong_csv_shape(tmp_path):
    (tmp_path / 'post.csv').write_text('0.5,0.5\n0.5,0.5\n')

    with pytest.raises(ConfigError, match=r'theta\[1\]: .*expected \(3, 3\)'):
        model_spec_from_dict(model_dict(theta=[0.1, 'post.csv']), tmp_path)


def test_invalid_toml(tmp_path):
    path = tmp_path / 'broken.toml'
    path.write_text('T = [1,\n')

    with pytest.raises(ConfigError, match='invalid TOML') as excinfo:
        load_model_spec(path)
    assert excinfo.value.key_path == str(path)


def test_experiment_fields(tmp_path):
    cfg = experiment_from_dict(tomllib.loads(EXPERIMENT_TOML), tmp_path)

    assert cfg.seed == 11
    assert (cfg.n1, cfg.n2) == (10, 10)
    assert cfg.symmetric
    assert cfg.scenarios == (MECHANISM.none, MECHANISM.edge)
    assert cfg.alphas == (1.0,)
    assert cfg.deltas == (10, 14)
    assert cfg.repetitions == 4
    assert cfg.method is METHOD.nbs
    assert cfg.intervals == 20
    assert cfg.cap == 2.0
    assert cfg.tau_rules[MECHANISM.none] is TAURULE.paper_none
    assert cfg.tau_rules[MECHANISM.edge] == 3.5
    assert cfg.tau_rules[MECHANISM.node] is TAURULE.paper_node
    assert cfg.tau_for(MECHANISM.edge, 10) == 3.5
    assert cfg.raw_csv == tmp_path / 'out' / 'raw.csv'
    assert cfg.plot_dir == tmp_path / 'out' / 'plots'
    assert not cfg.record_runtime
    assert list(cfg.cells()) == [(MECHANISM.none, float('inf'), 10), (MECHANISM.none, float('inf'), 14),
                                 (MECHANISM.edge, 1.0, 10), (MECHANISM.edge, 1.0, 14)]


def test_experiment_defaults():
    cfg = experiment_from_dict({'grid': {'deltas': [4]}})

    assert cfg.scenarios == (MECHANISM.none,)
    assert (cfg.n1, cfg.n2) == (50, 50)
    assert cfg.method is METHOD.bs
    assert cfg.repetitions == 100
    assert cfg.raw_csv is None


def test_uncapped_intervals():
    cfg = experiment_from_dict(experiment_dict('detector', cap=False))

    assert cfg.cap is None


def test_short_cap_is_rejected_for_nbs():
    data = experiment_dict('detector', cap=1.0)
    data['grid']['deltas'] = [3, 6]

    with pytest.raises(ConfigError, match=r'cap \* min\(deltas\) / 2 >= 2') as excinfo:
        experiment_from_dict(data)
    assert excinfo.value.key_path == 'detector.cap'

    data['detector']['method'] = 'bs'
    assert experiment_from_dict(data).cap == 1.0


def test_bad_experiment_file(tmp_path):
    path = tmp_path / 'bad.toml'
    path.write_text(BAD_EXPERIMENT_TOML)

    with pytest.raises(ConfigError, match='must be at least 2') as excinfo:
        load_experiment(path)
    assert excinfo.value.key_path == 'grid.deltas[1]'


@pytest.mark.parametrize('section, changes, key_path', [
    (None, {'seed': -1}, 'seed'),
    (None, {'colour': 1}, 'colour'),
    ('model', {'n1': 10}, 'model.n'),
    ('model', {'theta_post': 1.2}, 'model.theta_post'),
    ('grid', {'alphas': []}, 'grid.alphas'),
    ('grid', {'alphas': [1.0, 0.0]}, 'grid.alphas[1]'),
    ('grid', {'deltas': []}, 'grid.deltas'),
    ('grid', {'scenarios': ['none', 'vertex']}, 'grid.scenarios[1]'),
    ('grid', {'scenarios': ['node']}, 'model.symmetric'),
    ('grid', {'repetitions': 0}, 'grid.repetitions'),
    ('detector', {'method': 'wbs'}, 'detector.method'),
    ('detector', {'cap': True}, 'detector.cap'),
    ('detector', {'cap': -1.0}, 'detector.cap'),
    ('detector', {'shrink': 0.5}, 'detector.shrink'),
    ('detector', {'tau_rule': {'edgy': 1.0}}, 'detector.tau_rule.edgy'),
    ('detector', {'tau_rule': {'edge': 'paper-magic'}}, 'detector.tau_rule.edge'),
    ('detector', {'tau_rule': {'edge': 0}}, 'detector.tau_rule.edge'),
    ('output', {'raw_csv': 3}, 'output.raw_csv'),
])
def test_experiment_key_paths(section, changes, key_path):
    assert key_path_of(experiment_from_dict, experiment_dict(section, **changes)) == key_path


def test_shipped_configs():
    edge = load_experiment(CONFIGS / 'balanced.toml')
    node = load_experiment(CONFIGS / 'balanced_node.toml')

    assert edge.scenarios == (MECHANISM.none, MECHANISM.edge)
    assert all(delta % 2 == 0 or delta < 10 for delta in edge.deltas)
    assert node.scenarios == (MECHANISM.node,)
    assert not node.symmetric
    assert edge.raw_csv == CONFIGS / 'out' / 'balanced' / 'raw.csv'
