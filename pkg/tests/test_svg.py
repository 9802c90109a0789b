import xml.etree.ElementTree as ET

import numpy as np

from randpoly.svg import Figure, nice_ticks, ramp_color


def test_nice_ticks():
    assert nice_ticks(0, 1) == [0, 0.2, 0.4, 0.6, 0.8, 1.0]
    assert nice_ticks(-2.3, 3.7)[0] == -2


def test_ramp_endpoints():
    assert ramp_color(0) == "#440154" and ramp_color(1) == "#fde725"


def test_figure_is_valid_svg(tmp_path):
    fig = Figure((-1, 1, -1, 1), title="t")
    fig.scatter(np.array([0, 0.5j]))
    fig.polyline(np.exp(1j * np.linspace(0, 3, 10)))
    fig.ring(0, 0.5)
    fig.label(0.1, "x")
    path = fig.save(tmp_path / "f.svg")
    root = ET.parse(path).getroot()
    assert root.get("version") == "1.1"
    ns = "{http://www.w3.org/2000/svg}"
    assert len(root.findall(f".//{ns}polyline")) == 1
    circles = root.findall(f".//{ns}g[@class='scatter']/{ns}circle")
    assert len(circles) == 2


def test_pixel_mapping_flips_y():
    fig = Figure((0, 2, 0, 1), width=250, margin=25)
    x, y = fig.px(np.array([0j, 2 + 1j]))
    assert (x[0], y[0]) == (25, 25 + 100) and (x[1], y[1]) == (225, 25)
