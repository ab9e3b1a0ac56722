import io

from catrust import verify


def test_all_oracle_checks_pass():
    results = verify.run_all()
    assert [r.name for r in results if not r.passed] == []


def test_main_reports_and_exits_zero():
    buf = io.StringIO()
    assert verify.main(buf) == 0
    assert "7/7 checks passed" in buf.getvalue()
