import numpy as np
import pytest

from etk.io import FormatError, dump, load_channel, load_matrix, load_state, matrix_from_dict, matrix_to_dict, state_to_dict
from etk.quantum import depolarizing_channel, max_entangled
from etk.io import matrix_to_dict as m2d


def test_matrix_round_trip(rng):
    M = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
    assert np.abs(matrix_from_dict(matrix_to_dict(M)) - M).max() == 0


def test_state_round_trip(tmp_path):
    rho = max_entangled(3)
    dump(state_to_dict(rho), tmp_path / "s.json")
    back = load_state(tmp_path / "s.json")
    assert back.dims == (3, 3) and np.abs(back.operator - rho.operator).max() == 0


def test_channel_round_trip(tmp_path):
    ch = depolarizing_channel(2)
    d = m2d(ch.choi)
    d.update(d_in=2, d_out=2)
    dump(d, tmp_path / "c.json")
    assert np.abs(load_channel(tmp_path / "c.json").choi - ch.choi).max() == 0


def test_parse_error_has_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "rows": 2,\n  "cols": 2\n  "data": []\n}\n')
    with pytest.raises(FormatError, match="line 4"):
        load_matrix(p)


@pytest.mark.parametrize("obj,msg", [
    ({"rows": 2, "cols": 2, "data": [[1, 0]]}, "expected 2 x 2"),
    ({"rows": 1, "cols": 1, "data": [1.0]}, "entry 0"),
    ({"rows": 1}, "needs integer"),
])
def test_matrix_errors(obj, msg):
    with pytest.raises(FormatError, match=msg):
        matrix_from_dict(obj)


def test_state_needs_dims(tmp_path):
    dump(matrix_to_dict(np.eye(4) / 4), tmp_path / "s.json")
    with pytest.raises(FormatError, match="dims"):
        load_state(tmp_path / "s.json")


def test_state_not_psd(tmp_path):
    d = matrix_to_dict(np.diag([1.5, -0.5, 0, 0]))
    d["dims"] = [2, 2]
    dump(d, tmp_path / "s.json")
    with pytest.raises(FormatError):
        load_state(tmp_path / "s.json")
