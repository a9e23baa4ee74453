import pytest

from prodcredit.config import Scenario
from prodcredit.credit import LoanKind
from prodcredit.errors import ConfigError


def test_scenario_parsing(scenario_data, write_scenario):
    path = write_scenario(scenario_data)
    cfg = Scenario(path)
    assert cfg.seed == 42
    assert cfg.paths == 2000
    assert cfg.steps_per_year == 50
    assert cfg.threads == 1
    assert cfg.log_level == 'WARNING'
    assert set(cfg.processes) == {'output', 'price', 'unit', 'salary'}
    assert cfg.processes['price'].name == 'price'
    # loans
    assert [l.terms.loan_id for l in cfg.loans] == ['plant', 'shop', 'wage']
    plant, shop, wage = cfg.loans
    assert plant.terms.interest_period == 0.5
    assert plant.terms.interest_ratio == 0.1
    assert shop.terms.kind is LoanKind.SERVICE
    assert shop.default['decision'] == 'dismantle'
    assert wage.income == 'salary'
    assert wage.fraction == 0.2
    assert wage.default['decision'] is None
    # the rest
    assert cfg.bonds[0].maturities == [1.0, 2.0, 3.0, 4.0, 5.0]
    assert cfg.gamma.samples_per_point == 1000
    assert cfg.hjm['ho_lee'].observe == [0.0, 0.5, 1.0]
    assert cfg.hjm['ho_lee_shifted'].params['alpha_shift'] == 0.0001
    assert cfg.hjm['reverting'].growth['family'] == 'mean_reversion'
    assert [b['id'] for b in cfg.banksim.banks] == ['a', 'b']
    assert cfg.banksim.events[1]['to'] == 'a'
    assert cfg.output_dir == path.parent / 'out'


def test_sampling_and_overrides(scenario_data, write_scenario, tmp_path):
    cfg = Scenario(write_scenario(scenario_data)).override(seed=7, paths=10, threads=3, out=tmp_path / 'x')
    sampling = cfg.sampling()
    assert (sampling.seed, sampling.n_paths, sampling.threads, sampling.steps_per_year) == (7, 10, 3, 50)
    assert cfg.output_dir == tmp_path / 'x'
    with pytest.raises(ConfigError):
        cfg.override(paths=0)


def test_paths_override_reaches_every_table(scenario_data, write_scenario):
    cfg = Scenario(write_scenario(scenario_data))
    assert cfg.paths_for(cfg.gamma.samples_per_point) == 1000
    assert cfg.paths_for(cfg.hjm['ho_lee'].paths) == 500
    assert cfg.paths_for(cfg.hjm['ho_lee_shifted'].paths) == 2000
    cfg.override(paths=300)
    assert cfg.paths_for(cfg.gamma.samples_per_point) == 300
    assert cfg.paths_for(cfg.hjm['ho_lee'].paths) == 300


def test_gamma_samples_default_to_scenario_paths(scenario_data, write_scenario):
    del scenario_data['gamma']['samples_per_point']
    cfg = Scenario(write_scenario(scenario_data))
    assert cfg.gamma.samples_per_point is None
    assert cfg.paths_for(cfg.gamma.samples_per_point) == 2000
    assert cfg.override(paths=40).paths_for(cfg.gamma.samples_per_point) == 40


def test_initial_growth_names_a_bond(scenario_data, write_scenario):
    scenario_data['hjm']['ho_lee_shifted']['initial_growth'] = 'flat'
    assert Scenario(write_scenario(scenario_data)).hjm['ho_lee_shifted'].initial_growth == 'flat'
    scenario_data['hjm']['ho_lee_shifted']['initial_growth'] = 'steep'
    with pytest.raises(ConfigError, match='initial_growth: unknown bond'):
        Scenario(write_scenario(scenario_data))


def test_initial_rate_and_growth_are_exclusive(scenario_data, write_scenario):
    scenario_data['hjm']['ho_lee']['initial_growth'] = 'flat'
    with pytest.raises(ConfigError, match='at most one'):
        Scenario(write_scenario(scenario_data))


@pytest.mark.parametrize('time', [1.0, 1.5])
def test_default_time_must_fall_within_the_loan(scenario_data, write_scenario, time):
    scenario_data['loans'][1]['default']['time'] = time
    with pytest.raises(ConfigError, match="loans\\[1\\].default.time must lie within the loan's life"):
        Scenario(write_scenario(scenario_data))


def test_minimal_scenario_uses_defaults(write_scenario):
    cfg = Scenario(write_scenario({}))
    assert cfg.seed == 0
    assert cfg.paths == 10_000
    assert cfg.threads >= 1
    assert cfg.loans == []
    assert cfg.gamma is None
    assert cfg.banksim is None


@pytest.mark.parametrize('mutate, message', [
    (lambda d: d.update(extra={}), 'unknown key extra'),
    (lambda d: d['scenario'].update(sed=1), 'unknown key scenario.sed'),
    (lambda d: d['loans'][0].update(principle=10.0), 'unknown key loans[0].principle'),
    (lambda d: d['loans'][1]['default'].update(salvage=1.0), 'unknown key loans[1].default.salvage'),
    (lambda d: d['hjm']['ho_lee'].update(sigma=0.01), 'unknown key hjm.ho_lee.sigma'),
    (lambda d: d['banksim']['events'][0].update(amout=1.0), 'banksim.events[0].amout'),
])
def test_misspelled_keys_are_rejected(scenario_data, write_scenario, mutate, message):
    mutate(scenario_data)
    with pytest.raises(ConfigError) as exc:
        Scenario(write_scenario(scenario_data))
    assert message in str(exc.value)


def test_unknown_process_reference(scenario_data, write_scenario):
    scenario_data['loans'][0]['price_ratio'] = 'missing'
    with pytest.raises(ConfigError, match='unknown process'):
        Scenario(write_scenario(scenario_data))


def test_income_events_only_for_income_loans(scenario_data, write_scenario):
    scenario_data['loans'][1]['default']['failure'] = 'job_loss'
    with pytest.raises(ConfigError, match='does not apply'):
        Scenario(write_scenario(scenario_data))


def test_duplicate_loan_ids(scenario_data, write_scenario):
    scenario_data['loans'][1]['id'] = 'plant'
    with pytest.raises(ConfigError, match='duplicate'):
        Scenario(write_scenario(scenario_data))


def test_interest_ratio_out_of_range(scenario_data, write_scenario):
    scenario_data['loans'][0]['interest_ratio'] = 1.5
    with pytest.raises(ConfigError, match='interest_ratio'):
        Scenario(write_scenario(scenario_data))


def test_events_must_be_in_time_order(scenario_data, write_scenario):
    scenario_data['banksim']['events'][2]['time'] = 0.5
    with pytest.raises(ConfigError, match='time order'):
        Scenario(write_scenario(scenario_data))


def test_events_must_name_known_banks(scenario_data, write_scenario):
    scenario_data['banksim']['events'][1]['to'] = 'zz'
    with pytest.raises(ConfigError, match='unknown bank'):
        Scenario(write_scenario(scenario_data))


def test_booleans_are_not_numbers(scenario_data, write_scenario):
    scenario_data['scenario']['paths'] = True
    with pytest.raises(ConfigError, match='scenario.paths'):
        Scenario(write_scenario(scenario_data))


def test_gamma_needs_three_times(scenario_data, write_scenario):
    scenario_data['gamma']['times'] = [0.0, 1.0]
    with pytest.raises(ConfigError, match='gamma.times'):
        Scenario(write_scenario(scenario_data))


def test_bond_needs_one_tax_source(scenario_data, write_scenario):
    scenario_data['bonds'][0]['tax_csv'] = 'tax.csv'
    with pytest.raises(ConfigError, match='exactly one'):
        Scenario(write_scenario(scenario_data))


def test_invalid_toml_is_a_config_error(tmp_path):
    p = tmp_path / 'broken.toml'
    p.write_text('[scenario\nseed = 1\n')
    with pytest.raises(ConfigError):
        Scenario(p)


def test_missing_file_is_a_config_error(tmp_path):
    with pytest.raises(ConfigError, match='does not exist'):
        Scenario(tmp_path / 'nope.toml')
