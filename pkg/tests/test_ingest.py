import io

import pytest

from dca.core import AntigenEvent, SignalSnapshot
from dca.errors import ConfigError, IngestionError
from dca.ingest import (
    Category,
    ColumnMapping,
    SignalMapping,
    parse_antigen_stream,
    parse_ground_truth,
    parse_mapping,
    parse_signal_stream,
    write_antigen_stream,
    write_presentation_log,
    write_report,
)
from dca.core import Presentation
from dca.scoring import Label, McavReport


def mapping(*cols):
    return SignalMapping(tuple(ColumnMapping(n, Category(c), m) for n, c, m in cols))


def text(s):
    return io.StringIO(s)


def test_identity_scale():
    m = mapping(("pamp1", "PAMP", 100.0))
    assert parse_signal_stream(text("time,pamp1\n0,50\n"), m) == [SignalSnapshot(pamp=[50.0], time=0.0)]


def test_clamp_before_scaling():
    m = mapping(("pamp1", "PAMP", 100.0), ("d", "DANGER", 20.0))
    [snap] = parse_signal_stream(text("time,pamp1,d\n0,250,5\n"), m)
    assert snap.pamp == (100.0,)
    assert snap.danger == (25.0,)


def test_inflammation_scales_to_unit_interval():
    m = mapping(("root", "INFLAMMATION", 1.0), ("s", "SAFE", 100.0))
    [snap] = parse_signal_stream(text("time,root,s\n3,1,7\n"), m)
    assert snap.inflammation == 1.0
    m = mapping(("root", "INFLAMMATION", 4.0), ("s", "SAFE", 100.0))
    [snap] = parse_signal_stream(text("time,root,s\n3,2,7\n"), m)
    assert snap.inflammation == 0.5


def test_categories_follow_file_order():
    m = mapping(("s2", "SAFE", 100.0), ("p", "PAMP", 100.0), ("s1", "SAFE", 100.0))
    [snap] = parse_signal_stream(text("time,s1,p,s2\n0,1,2,3\n"), m)
    assert snap.safe == (1.0, 3.0) and snap.pamp == (2.0,) and snap.danger == ()


@pytest.mark.parametrize("body,err,fragment", [
    ("time,p\n0,abc\n", IngestionError, "row 2, column 'p'"),
    ("time,p\n1,1\n0,1\n", IngestionError, "row 3, column 'time'"),
    ("time,p\n0,-1\n", IngestionError, "row 2, column 'p'"),
    ("time,p\n0,1,2\n", IngestionError, "row 2"),
    ("time\n0\n", IngestionError, "missing"),
    ("time,p,extra\n0,1,2\n", ConfigError, "unknown"),
    ("t,p\n0,1\n", IngestionError, "time"),
    ("time,p\n0,nan\n", IngestionError, "non-finite"),
])
def test_signal_errors(body, err, fragment):
    with pytest.raises(err, match=fragment):
        parse_signal_stream(text(body), mapping(("p", "PAMP", 10.0)))


def test_row_count_preserved():
    m = mapping(("p", "PAMP", 10.0))
    rows = "".join(f"{t},{t % 10}\n" for t in range(57))
    assert len(parse_signal_stream(text("time,p\n" + rows), m)) == 57


def test_antigen_stream():
    events = parse_antigen_stream(text("time,antigen_type\n0,pid-1234\n0,pid-1234\n1.5,x\n"))
    assert events == [AntigenEvent(0.0, "pid-1234"), AntigenEvent(0.0, "pid-1234"), AntigenEvent(1.5, "x")]


@pytest.mark.parametrize("body", ["", "time,antigen_type\n"])
def test_empty_antigen_stream(body):
    assert parse_antigen_stream(text(body)) == []


@pytest.mark.parametrize("body,fragment", [
    ("time,antigen_type\n2,a\n1,a\n", "row 3"),
    ("time,antigen_type\n0,\n", "empty antigen"),
    ("time,type\n0,a\n", "header"),
])
def test_antigen_errors(body, fragment):
    with pytest.raises(IngestionError, match=fragment):
        parse_antigen_stream(text(body))


def test_antigen_roundtrip():
    events = [AntigenEvent(0.1 + i / 7, f"pid-{i % 3}") for i in range(20)]
    buf = io.StringIO()
    write_antigen_stream(buf, events)
    buf.seek(0)
    assert parse_antigen_stream(buf) == events


def test_mapping_file():
    m = parse_mapping(text("column,category,max\np,PAMP,10\nroot,inflammation,1\n"))
    assert m.names == ["p", "root"]
    assert m["root"].category is Category.INFLAMMATION


@pytest.mark.parametrize("body,err", [
    ("column,category,max\np,PAMP,10\nq,INFLAMMATION,1\nr,INFLAMMATION,1\n", ConfigError),
    ("column,category,max\np,PAMP,10\np,SAFE,10\n", ConfigError),
    ("column,category,max\np,MAGIC,10\n", ConfigError),
    ("column,category,max\np,PAMP,0\n", ConfigError),
    ("column,category,max\np,PAMP,ten\n", IngestionError),
    ("col,cat,max\np,PAMP,10\n", IngestionError),
    ("", IngestionError),
])
def test_mapping_errors(body, err):
    with pytest.raises(err):
        parse_mapping(text(body))


def test_missing_file(tmp_path):
    with pytest.raises(IngestionError, match="cannot open"):
        parse_mapping(tmp_path / "nope.csv")


def test_ground_truth():
    assert parse_ground_truth(text("antigen_type,label\na,normal\nb,anomalous\n")) == {
        "a": "normal", "b": "anomalous"}


def test_report_format():
    buf = io.StringIO()
    write_report(buf, [McavReport("a", 3, 1, 0.75, Label.ANOMALOUS),
                       McavReport("b", 0, 0, None, Label.NO_DATA)])
    assert buf.getvalue() == (
        "antigen_type,mature_count,semi_count,total,mcav,label\n"
        "a,3,1,4,0.75,anomalous\n"
        "b,0,0,0,,nodata\n")


def test_segmented_report_format():
    buf = io.StringIO()
    seg = [[McavReport("a", 1, 0, 1.0, Label.ANOMALOUS)], [McavReport("a", 0, 1, 0.0, Label.NORMAL)]]
    write_report(buf, [], seg)
    assert buf.getvalue().splitlines() == [
        "segment,antigen_type,mature_count,semi_count,total,mcav,label",
        "0,a,1,0,1,1.0,anomalous",
        "1,a,0,1,1,0.0,normal",
    ]


def test_presentation_log_format():
    buf = io.StringIO()
    write_presentation_log(buf, [Presentation(2, 1, ("a", "b"), 5), Presentation(3, 0, (), 5)])
    assert buf.getvalue() == "migration_time,cell_id,context,antigen\n5,2,1,a;b\n5,3,0,\n"
