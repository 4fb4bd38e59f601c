import math
import os

import pytest

import bellcert

DATA = os.environ.get("BELLCERT_DATA", "data")


def test_version():
    assert bellcert.__version__ == "0.1.0"


def test_binomial_tail():
    assert bellcert.binom_tail(2, 1, 0.5) == pytest.approx(0.75, rel=1e-15)
    assert bellcert.binom_tail(10, 0, 0.3) == 1.0
    assert math.exp(bellcert.log_binom_tail(245, 196, 0.75)) == pytest.approx(
        bellcert.binom_tail(245, 196, 0.75), rel=1e-12
    )


def test_delft_pvalue():
    beta = bellcert.chsh_beta_win(1.08e-5, 1.08e-5)
    assert beta == pytest.approx(0.7500107999, abs=1e-10)
    report = bellcert.winlose_pvalue(245, 196, beta)
    assert 0.038 <= report["p_value"] <= 0.040


def test_fisher():
    p, statistic, dof = bellcert.fisher_combine([0.1, 0.1])
    assert p == pytest.approx(0.0560517, abs=1e-7)
    assert dof == 4
    assert statistic == pytest.approx(-4 * math.log(0.1))
    assert bellcert.fisher_combine([0.039])[0] == 0.039


def test_games_from_files():
    chsh = bellcert.Game.load(os.path.join(DATA, "games", "chsh.json"))
    assert chsh.name == "chsh"
    assert chsh.win_lose
    assert chsh.inputs == [2, 2]
    assert bellcert.beta_win(chsh) == pytest.approx(0.75)
    mermin = bellcert.Game.load(os.path.join(DATA, "games", "mermin.json"))
    assert bellcert.classical_bound(mermin)[0] == 0.75
    again = bellcert.Game.from_json(chsh.to_json())
    assert again.to_json() == chsh.to_json()


def test_general_bounds_ordered():
    args = dict(s_min=-4.0, s_max=4.0, beta_max=2.0, beta_min=-4.0)
    b = bellcert.bentkus_pvalue(scores=[2.5] * 500, **args)["p_value"]
    m = bellcert.mcdiarmid_pvalue(total=1250.0, n=500, **args)["p_value"]
    a = bellcert.azuma_pvalue(total=1250.0, n=500, **args)["p_value"]
    assert b <= m <= a


def test_errors_map_to_python_exceptions():
    with pytest.raises(ValueError):
        bellcert.fisher_combine([])
    with pytest.raises(bellcert.InputError):
        bellcert.Game.from_json("{not json")
    with pytest.raises(ValueError):
        bellcert.binom_tail(5, 2, 1.5)
