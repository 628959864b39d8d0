import re
import struct

import pytest

ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    m = re.search(r"test_criterion_(\d+)_(\w+)", report.nodeid)
    if not m:
        return
    key = (int(m.group(1)), m.group(2))
    if report.when == "call" or report.outcome != "passed":
        # informational criteria record a "warn" property instead of failing
        warn = dict(report.user_properties).get("warn")
        ACCEPTANCE[key] = (report.outcome, warn)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for (num, name), (outcome, warn) in sorted(ACCEPTANCE.items()):
        if outcome != "passed":
            status = "FAIL"
        elif warn:
            status = "WARN"
        else:
            status = "PASS"
        line = f"criterion {num:2d}  {status}  {name}"
        terminalreporter.write_line(line + (f"  ({warn})" if warn else ""))


def wav_bytes(payload: bytes, *, fmt_code=1, channels=1, rate=22050, bits=16,
              block_align=None, data_size=None, extensible_sub=None):
    """Hand-built RIFF/WAVE bytes, independent of the package writer."""
    block_align = channels * bits // 8 if block_align is None else block_align
    if extensible_sub is not None:
        fmt = struct.pack("<HHIIHH", 0xFFFE, channels, rate, rate * block_align, block_align, bits)
        fmt += struct.pack("<HHI", 22, bits, 0) + struct.pack("<H", extensible_sub) + b"\x00" * 14
    else:
        fmt = struct.pack("<HHIIHH", fmt_code, channels, rate, rate * block_align, block_align, bits)
    size = len(payload) if data_size is None else data_size
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt + b"data" + struct.pack("<I", size) + payload
    if len(payload) & 1:
        body += b"\x00"
    return b"RIFF" + struct.pack("<I", len(body)) + body


@pytest.fixture
def make_wav(tmp_path):
    counter = iter(range(10**6))

    def _make(payload: bytes, **kw):
        path = tmp_path / f"clip{next(counter)}.wav"
        path.write_bytes(wav_bytes(payload, **kw))
        return path

    return _make
