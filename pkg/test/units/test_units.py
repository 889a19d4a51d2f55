import pytest
from reconsched.units import (readDuration, readLength, readData, readEnergy,
    readVelocity, readAngle, readPercents, UnitError)
from copy import deepcopy

def test_readDuration():
    assert readDuration("100s") == 100
    assert readDuration("100 s") == 100
    assert readDuration("2min") == 120
    assert readDuration("6h") == 6 * 3600
    assert readDuration("14d") == 14 * 86400
    assert readDuration("7.25d") == pytest.approx(626400)

def test_readLength():
    assert readLength("709km") == 709
    assert readLength("500m") == pytest.approx(0.5)
    assert readLength(600) == 600

def test_readData():
    assert readData("102.5MB") == pytest.approx(102.5)
    assert readData("128GB") == 128000
    assert readData("128GB", gigabyte=1024) == 128 * 1024
    assert readData("1TB") == 1000 * 1000

def test_readEnergy():
    assert readEnergy("1647kJ") == 1647
    assert readEnergy("500J") == pytest.approx(0.5)
    assert readEnergy("1.2MJ") == pytest.approx(1200)

def test_readVelocity():
    assert readVelocity("750m/s") == 750
    assert readVelocity("7.5km/s") == 7500

def test_readAngle():
    assert readAngle("45deg") == 45
    assert readAngle("-80deg") == -80
    assert readAngle("98.18°") == pytest.approx(98.18)

def test_readPercents():
    assert readPercents("75%") == pytest.approx(0.75)

def test_unknownUnit():
    with pytest.raises(UnitError):
        readLength("4mm")
    with pytest.raises(UnitError):
        readDuration("fortnight")
    with pytest.raises(UnitError):
        readEnergy(None)

def test_originalStringIsKept():
    assert str(readData("128GB")) == "128GB"
    assert str(readVelocity("750m/s")) == "750m/s"

def test_baseValue_deepcopy():
    a = readLength("709km")
    b = deepcopy(a)

    assert a.__dict__ == b.__dict__
    assert a == b
