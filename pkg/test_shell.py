"""Shell: output formats, script runs, the interactive loop and the command line."""

import pytest
from click.testing import CliRunner

from catalog.registry import has_class
from main import cli
from oracle import SCRIPTS, query, stored_objects
from shell.formatting import format_relation
from shell.session import Session, repl, run_script, run_text
from store.snapshot import load_snapshot, save_snapshot


class Captured:
    """Echo stand-in that keeps normal and error output apart."""

    def __init__(self):
        self.out = []
        self.err = []

    def __call__(self, text="", err=False):
        (self.err if err else self.out).append(text)

    @property
    def text(self):
        return "\n".join(self.out)


def test_tsv_output_is_sorted(d0):
    rel = query(d0, "SELECT .Name FROM CONTRACTORS;")
    assert format_relation(rel, "tsv") == ".Name\nOtherCo\nTheShop"


def test_tsv_marks_nulls(d0):
    rel = query(d0, 'SELECT .DocN, .Date FROM DOCS[.DocN="D1"];')
    assert format_relation(rel, "tsv") == ".DocN\t.Date\nD1\t\\N"


def test_table_output_has_a_row_count(d0):
    rel = query(d0, "SELECT .Comment FROM DOCS;")
    text = format_relation(rel)
    assert "NULL" in text
    assert text.endswith("3 rows")
    empty = query(d0, 'SELECT .Name FROM CONTRACTORS[.ID="nobody"];')
    assert format_relation(empty).endswith("0 rows")


def test_unknown_output_format(d0):
    with pytest.raises(ValueError):
        format_relation(query(d0, "SELECT .Name FROM BANKS;"), "xml")


def test_run_text_stops_at_the_first_error(d0):
    session = Session(None, d0)
    echo = Captured()
    ok = run_text(session, 'NEW BANKS WITH SET .Name:="Second"; SELECT .Nope FROM BANKS; NEW BANKS;', echo)
    assert not ok
    assert len(echo.err) == 1 and "line 1" in echo.err[0]
    assert len(stored_objects(session.db, "BANKS")) == 2


def test_script_error_keeps_the_prefix(tmp_path):
    script = tmp_path / "broken.rxo"
    script.write_text(
        "CREATE CLASS BANKS (Name STRING);\n"
        "ALTER BANKS REALIZE Name AS STORED;\n"
        "SELECT .Name BANKS;\n"
    )
    db_path = tmp_path / "db.rxo"
    echo = Captured()
    assert run_script(Session.open(db_path, autosave=True), script, echo) == 1
    assert "line 3" in echo.err[0]
    assert has_class(load_snapshot(db_path), "BANKS")


def test_missing_script_is_reported(empty_db, tmp_path):
    echo = Captured()
    assert run_script(Session(None, empty_db), tmp_path / "absent.rxo", echo) == 1
    assert echo.err and "cannot read" in echo.err[0]


def test_repl_reads_multi_line_statements(d0):
    lines = iter(["\\classes", "SELECT .Name", "FROM BANKS;", "", "\\describe DOCS", "\\q", "NEW BANKS;"])
    echo = Captured()
    session = Session(None, d0, autosave=False)
    assert repl(session, lambda prompt: next(lines), echo) == 0
    assert echo.out[:4] == ["BANKS", "CONTRACTORS", "GOODS", "DOCS"]
    assert "TheBank" in echo.text and "1 row" in echo.text
    assert "procedure" in echo.text
    assert len(stored_objects(session.db, "BANKS")) == 1
    assert not echo.err


def test_repl_ends_at_end_of_input(d0):
    def read_line(prompt):
        raise EOFError

    echo = Captured()
    assert repl(Session(None, d0), read_line, echo) == 0


def test_repl_reports_unknown_commands(d0):
    lines = iter(["\\describe NOSUCH", "\\frobnicate", "\\q"])
    echo = Captured()
    repl(Session(None, d0), lambda prompt: next(lines), echo)
    assert len(echo.err) == 2


def test_repl_save_writes_the_file(d0, tmp_path):
    db_path = tmp_path / "db.rxo"
    lines = iter(['NEW BANKS WITH SET .Name:="Second";', "\\save", "\\q"])
    echo = Captured()
    repl(Session(db_path, d0, autosave=False), lambda prompt: next(lines), echo)
    assert f"saved {db_path}" in echo.out
    assert len(stored_objects(load_snapshot(db_path), "BANKS")) == 2


def test_cli_query_in_tsv(d0, tmp_path):
    db_path = tmp_path / "db.rxo"
    save_snapshot(d0, db_path)
    result = CliRunner().invoke(cli, ["query", "--db", str(db_path), "--format", "tsv", "SELECT .Name FROM CONTRACTORS;"])
    assert result.exit_code == 0
    assert ".Name\nOtherCo\nTheShop" in result.output


def test_cli_query_failure_exits_non_zero(tmp_path):
    result = CliRunner().invoke(cli, ["query", "--db", str(tmp_path / "db.rxo"), "SELECT .Name FROM NOSUCH;"])
    assert result.exit_code == 1


def test_cli_run_saves_the_database(tmp_path):
    db_path = tmp_path / "db.rxo"
    result = CliRunner().invoke(cli, ["run", str(SCRIPTS / "d0_fixture.rxo"), "--db", str(db_path)])
    assert result.exit_code == 0
    loaded = load_snapshot(db_path)
    assert set(query(loaded, "SELECT .Art, .Pieces FROM GOODS;").body) == {("A1", 12), ("A2", 3)}


def test_run_help_mentions_the_saved_prefix():
    result = CliRunner().invoke(cli, ["run", "--help"])
    assert result.exit_code == 0
    assert "are still saved" in " ".join(result.output.split())
