import json
from pathlib import Path

from webprefetch.cli import main

FIXTURES = Path(__file__).parent / "fixtures"


def run(*argv):
    return main([str(a) for a in argv])


def test_ingest_fixture_yields_three_sessions(tmp_path, capsys):
    out = tmp_path / "sessions.tsv"
    assert run("ingest", "--log", FIXTURES / "ingest12.log", "--out", out) == 0
    dump = out.read_text()
    assert len(dump.splitlines()) == 3
    err = capsys.readouterr().err
    assert "12 records" in err and "3 sessions" in err


def test_ingest_empty_file(tmp_path):
    log = tmp_path / "empty.log"
    log.write_text("")
    out = tmp_path / "sessions.tsv"
    assert run("ingest", "--log", log, "--out", out) == 0
    assert out.read_text() == ""


def test_ingest_missing_file_exits_one(tmp_path):
    assert run("ingest", "--log", tmp_path / "nope.log") == 1


def test_bad_config_exits_two(tmp_path):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("no_such_key = 1\n")
    assert run("ingest", "--log", FIXTURES / "ingest12.log", "--config", cfg) == 2
    cfg.write_text("target_quantile = 3.0\n")
    assert run("ingest", "--log", FIXTURES / "ingest12.log", "--config", cfg) == 2


def test_mine_is_byte_stable(tmp_path):
    out1, out2 = tmp_path / "r1.rules", tmp_path / "r2.rules"
    assert run("mine", "--log", FIXTURES / "table2_shaped.log", "--out", out1) == 0
    assert run("mine", "--log", FIXTURES / "table2_shaped.log", "--out", out2) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_mine_table2_shaped_fixture_yields_exactly_four_rules(tmp_path):
    out = tmp_path / "rules.txt"
    assert run("mine", "--log", FIXTURES / "table2_shaped.log", "--out", out) == 0
    lines = out.read_text().splitlines()
    assert sorted(lines) == lines
    assert lines == ["/u17|/u21|4|1/1",
                     "/u1|/u23|4|1/1",
                     "/u2|/u12|4|1/1",
                     "/u3|/u37|4|1/1"]


def test_mine_higher_cutoff_yields_subset(tmp_path):
    trace = tmp_path / "trace.log"
    assert run("gen", "--out", trace, "--seed", 5, "--requests", 800,
               "--clients", 40) == 0
    loose, strict = tmp_path / "loose.rules", tmp_path / "strict.rules"
    assert run("mine", "--log", trace, "--out", loose, "--t-c", "0.5") == 0
    assert run("mine", "--log", trace, "--out", strict, "--t-c", "1.0") == 0
    assert set(strict.read_text().splitlines()) <= set(loose.read_text().splitlines())


def test_mine_from_session_dump_matches_mine_from_log(tmp_path):
    sessions = tmp_path / "sessions.tsv"
    assert run("ingest", "--log", FIXTURES / "table2_shaped.log",
               "--out", sessions) == 0
    via_dump = tmp_path / "a.rules"
    via_log = tmp_path / "b.rules"
    assert run("mine", "--sessions", sessions, "--out", via_dump) == 0
    assert run("mine", "--log", FIXTURES / "table2_shaped.log",
               "--out", via_log) == 0
    assert via_dump.read_bytes() == via_log.read_bytes()


def test_simulate_deterministic_and_off_mode(tmp_path):
    trace = tmp_path / "trace.log"
    rules = tmp_path / "rules.txt"
    assert run("gen", "--out", trace, "--seed", 3, "--requests", 600,
               "--clients", 30) == 0
    assert run("mine", "--log", trace, "--out", rules) == 0

    r1, r2, r_off = (tmp_path / n for n in ("p1.json", "p2.json", "off.json"))
    for out in (r1, r2):
        assert run("simulate", "--trace", trace, "--rules", rules,
                   "--prefetch", "on", "--out", out) == 0
    assert r1.read_bytes() == r2.read_bytes()

    assert run("simulate", "--trace", trace, "--rules", rules,
               "--prefetch", "off", "--out", r_off) == 0
    off = json.loads(r_off.read_text())
    assert off["prefetch_issued"] == 0
    assert off["prefetch_enabled"] is False
    on = json.loads(r1.read_text())
    assert on["requests"] == off["requests"]


def test_simulate_bad_rules_file_exits_one(tmp_path):
    trace = tmp_path / "trace.log"
    assert run("gen", "--out", trace, "--seed", 1, "--requests", 50,
               "--clients", 5) == 0
    bad = tmp_path / "bad.rules"
    bad.write_text("gibberish\n")
    assert run("simulate", "--trace", trace, "--rules", bad,
               "--prefetch", "on", "--out", tmp_path / "r.json") == 1


def test_simulate_csv_output(tmp_path):
    trace = tmp_path / "trace.log"
    assert run("gen", "--out", trace, "--seed", 2, "--requests", 100,
               "--clients", 10) == 0
    rules = tmp_path / "rules.txt"
    assert run("mine", "--log", trace, "--out", rules) == 0
    csv = tmp_path / "report.csv"
    assert run("simulate", "--trace", trace, "--rules", rules,
               "--prefetch", "on", "--out", tmp_path / "r.json",
               "--csv", csv) == 0
    assert csv.read_text().splitlines()[0] == "metric,value"


def test_self_training_never_loses_to_baseline_with_ample_cache(tmp_path):
    # Mining the trace and replaying the same trace with a cache at least
    # as large as the page alphabet can only add hits over plain LRU.
    trace = tmp_path / "trace.log"
    assert run("gen", "--out", trace, "--seed", 11, "--requests", 1200,
               "--clients", 60) == 0
    rules = tmp_path / "rules.txt"
    assert run("mine", "--log", trace, "--out", rules) == 0
    on_p, off_p = tmp_path / "on.json", tmp_path / "off.json"
    for mode, out in (("on", on_p), ("off", off_p)):
        assert run("simulate", "--trace", trace, "--rules", rules,
                   "--prefetch", mode, "--out", out,
                   "--cache-capacity", "64") == 0
    on = json.loads(on_p.read_text())
    off = json.loads(off_p.read_text())
    assert on["hits"] >= off["hits"]


def test_report_renders_comparison(tmp_path, capsys):
    trace = tmp_path / "trace.log"
    rules = tmp_path / "rules.txt"
    assert run("gen", "--out", trace, "--seed", 7, "--requests", 400,
               "--clients", 20) == 0
    assert run("mine", "--log", trace, "--out", rules) == 0
    on_p, off_p = tmp_path / "on.json", tmp_path / "off.json"
    for mode, out in (("on", on_p), ("off", off_p)):
        assert run("simulate", "--trace", trace, "--rules", rules,
                   "--prefetch", mode, "--out", out) == 0
    assert run("report", "--baseline", off_p, "--prefetch", on_p) == 0
    text = capsys.readouterr().out
    assert "hit_rate" in text and "baseline" in text and "prefetch" in text


def test_gen_is_seed_deterministic(tmp_path):
    a, b, c = (tmp_path / n for n in ("a.log", "b.log", "c.log"))
    assert run("gen", "--out", a, "--seed", 9, "--requests", 200, "--clients", 10) == 0
    assert run("gen", "--out", b, "--seed", 9, "--requests", 200, "--clients", 10) == 0
    assert run("gen", "--out", c, "--seed", 10, "--requests", 200, "--clients", 10) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() != c.read_bytes()


def test_config_file_with_groups_drives_simulation(tmp_path):
    cfg = tmp_path / "pipeline.toml"
    cfg.write_text(
        "cache_capacity = 16\n"
        "session_gap_seconds = 1800\n"
        '[[group]]\n'
        'id = "lab"\n'
        'cidrs = ["10.0.0.0/16"]\n')
    trace = tmp_path / "trace.log"
    rules = tmp_path / "rules.txt"
    assert run("gen", "--out", trace, "--seed", 4, "--requests", 300,
               "--clients", 15) == 0
    assert run("mine", "--log", trace, "--out", rules, "--config", cfg) == 0
    out = tmp_path / "r.json"
    assert run("simulate", "--trace", trace, "--rules", rules,
               "--prefetch", "on", "--out", out, "--config", cfg) == 0
    assert json.loads(out.read_text())["prefetch_issued"] > 0


def test_overlapping_group_config_is_config_error(tmp_path):
    cfg = tmp_path / "pipeline.toml"
    cfg.write_text('[[group]]\nid = "a"\ncidrs = ["10.0.0.0/8"]\n'
                   '[[group]]\nid = "b"\ncidrs = ["10.1.0.0/16"]\n')
    assert run("ingest", "--log", FIXTURES / "ingest12.log", "--config", cfg) == 2
