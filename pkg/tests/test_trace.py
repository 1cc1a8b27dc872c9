import pytest

from hypernat.addrspace import AddressSpaces, ExternalSpace
from hypernat.errors import ParseError, SpaceTooSmall, ValidationError
from hypernat.simnet.trace import TRACE_HEADER, format_us, gen_trace, load_trace, write_trace

from conftest import EXTERNAL_BASE


@pytest.fixture
def spaces():
    return AddressSpaces("10.0.0.0/16", "198.51.100.0/24", ExternalSpace(EXTERNAL_BASE, 4, 1024, 65535))


def write(tmp_path, *lines):
    path = tmp_path / "trace.csv"
    path.write_text("\n".join([",".join(TRACE_HEADER), *lines]) + "\n", encoding="utf-8")
    return path


def test_load_assigns_flow_ids_by_first_appearance(tmp_path, spaces):
    path = write(
        tmp_path,
        "0,10.0.0.5,1234,198.51.100.9,80,6,64",
        "10,10.0.0.5,1234,198.51.100.9,80,6,64",
        "20.5,10.0.0.6,1234,198.51.100.9,80,6,1500",
    )
    records = load_trace(path, spaces)
    assert [r.flow_id for r in records] == [1, 1, 2]
    assert [r.t_ns for r in records] == [0, 10_000, 20_500]
    assert records[2].size_bytes == 1500


def test_unsorted_timestamps_rejected(tmp_path, spaces):
    path = write(tmp_path, "10,10.0.0.5,1234,198.51.100.9,80,6,64", "5,10.0.0.5,1234,198.51.100.9,80,6,64")
    with pytest.raises(ValidationError) as err:
        load_trace(path, spaces)
    assert err.value.rule == "sorted"


def test_misplaced_addresses_rejected(tmp_path, spaces):
    path = write(tmp_path, "0,198.51.100.9,80,10.0.0.5,1234,6,64")
    with pytest.raises(ValidationError) as err:
        load_trace(path, spaces)
    assert err.value.rule == "src_internal"


def test_malformed_ip_reports_line(tmp_path, spaces):
    path = write(tmp_path, "0,10.0.0.5,1234,198.51.100.9,80,6,64", "1,10.0.0.999,1234,198.51.100.9,80,6,64")
    with pytest.raises(ParseError) as err:
        load_trace(path, spaces)
    assert err.value.line == 3
    assert "line 3" in str(err.value)


@pytest.mark.parametrize("row", ["x,10.0.0.5,1,198.51.100.9,80,6,64", "0,10.0.0.5,70000,198.51.100.9,80,6,64", "0,10.0.0.5,1"])
def test_bad_fields_are_parse_errors(tmp_path, spaces, row):
    with pytest.raises(ParseError):
        load_trace(write(tmp_path, row), spaces)


def test_wrong_header(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("time,src\n", encoding="utf-8")
    with pytest.raises(ParseError):
        load_trace(path)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_trace(tmp_path / "nope.csv")


def test_format_us():
    assert format_us(1_000_000) == "1000"
    assert format_us(1_382) == "1.382"
    assert format_us(5) == "0.005"


def test_gen_trace_single_flow_spacing(spaces):
    records = gen_trace(1, 5, 1000, 7, spaces)
    assert len(records) == 5
    assert len({r.tuple for r in records}) == 1
    assert [r.t_ns for r in records] == [k * 1_000_000 for k in range(5)]


def test_gen_trace_round_robin_and_membership(spaces):
    records = gen_trace(10_000, 10, 800_000, 1, spaces)
    assert len(records) == 100_000
    assert len({r.tuple for r in records}) == 10_000
    assert [r.flow_id for r in records[:3]] == [1, 2, 3]
    assert records[10_000].tuple == records[0].tuple
    assert all(spaces.is_internal(r.tuple.src) and spaces.is_remote(r.tuple.dst) for r in records[:10_000])


def test_gen_trace_same_seed_identical_files(tmp_path, spaces):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_trace(a, gen_trace(50, 3, 1000, 99, spaces))
    write_trace(b, gen_trace(50, 3, 1000, 99, spaces))
    assert a.read_bytes() == b.read_bytes()
    assert gen_trace(50, 3, 1000, 99, spaces) != gen_trace(50, 3, 1000, 100, spaces)


def test_written_trace_loads_back(tmp_path, spaces):
    records = gen_trace(20, 2, 3000, 5, spaces)
    path = tmp_path / "t.csv"
    assert write_trace(path, records) == 40
    assert load_trace(path, spaces) == records


def test_gen_trace_space_too_small():
    tiny = AddressSpaces("10.0.0.0/31", "198.51.100.0/31", ExternalSpace(EXTERNAL_BASE, 1, 1, 1))
    with pytest.raises(SpaceTooSmall):
        gen_trace(5, 1, 100, 1, tiny, internal_ports=(1, 1), remote_ports=(80, 80))
    assert len(gen_trace(4, 1, 100, 1, tiny, internal_ports=(1, 1), remote_ports=(80, 80))) == 4


def test_gen_trace_rejects_non_positive(spaces):
    with pytest.raises(ValueError):
        gen_trace(0, 1, 100, 1, spaces)
