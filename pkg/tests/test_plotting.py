import hashlib

import pytest

from qme_sim.cycle import p_range, sweep
from qme_sim.errors import NothingToPlot, QmeError
from qme_sim.plotting import PLOT_KINDS, emit_plot
from qme_sim.tables import report_row


def table():
    return sweep(p_range(0.55, 1.0, 0.05), [1.88, 2.98])


@pytest.mark.parametrize("kind", sorted(PLOT_KINDS))
def test_deterministic_bytes(kind):
    a = emit_plot(table(), kind)
    b = emit_plot(table(), kind)
    assert hashlib.sha256(a.encode()).hexdigest() == hashlib.sha256(b.encode()).hexdigest()
    assert a.startswith("<svg") and a.rstrip().endswith("</svg>")


def test_ideal_curves_dashed_one_per_temperature():
    svg = emit_plot(table())
    assert svg.count("<polyline") == 4  # two panels x two temperatures
    assert svg.count('stroke-dasharray="6,4"') == 4 + 2  # curves plus legend


def test_pulse_curves_have_markers():
    rows = sweep([0.75, 1.0], [2.98], backend="pulse")
    svg = emit_plot(rows)
    assert "stroke-dasharray" not in svg
    assert svg.count("<rect x=") >= 4


def test_single_row_marker():
    svg = emit_plot(sweep([0.8], [2.98]))
    assert "<polyline" not in svg
    assert svg.count("<rect x=") >= 2


def test_accepts_row_dicts():
    rows = [report_row(r) for r in table()]
    assert emit_plot(rows) == emit_plot(table())


def test_errors():
    with pytest.raises(NothingToPlot):
        emit_plot([])
    with pytest.raises(QmeError):
        emit_plot(table(), "pie")
