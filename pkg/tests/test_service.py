import json

import pytest

from strata.cli import main
from strata.errors import (
    DependencyError,
    InternalError,
    ParseError,
    PendingDecisionsError,
    UnknownIdError,
    UserError,
)
from strata.project import Project

from conftest import fixture_text, make_project

# Three sibling-ish tables sharing one Widget column; gadget and doohickey are
# incomparable siblings, contraption subsumes both. Cell values are
# identifier-shaped so they never become annotation terms.
SIBLING_LEXICON = """\
C 13 noun - a contraption
C 10 noun 13 a gadget
C 11 noun 13 a doohickey
C 12 noun 13 a widget
S 13 en contraption
S 10 en gadget
S 11 en doohickey
S 12 en widget
"""

SIBLING_TABLES = [
    ("Gadget", "Widget\nXK9Q7\n"),
    ("Doohickey", "Widget\nXK9Q7\n"),
    ("Contraption", "Widget\nXK9Q7\n"),
]


def sibling_project(root):
    project = Project.create(root / "lab", "lab", SIBLING_LEXICON)
    for name, csv in SIBLING_TABLES:
        project.import_dataset(csv, f"name={name}\nlanguage=en\nidentifying.0=true\n")
    return project


# -- creation and inputs ---------------------------------------------------------


def test_create_rejects_bad_names(tmp_path):
    for name in ("", "has space", "slash/y"):
        with pytest.raises(UserError):
            Project.create(tmp_path / "p", name, SIBLING_LEXICON)


def test_create_refuses_existing_directory(tmp_path):
    Project.create(tmp_path / "p", "p", SIBLING_LEXICON)
    with pytest.raises(UserError, match="already exists"):
        Project.create(tmp_path / "p", "p", SIBLING_LEXICON)


def test_create_validates_lexicon_before_writing(tmp_path):
    with pytest.raises(ParseError):
        Project.create(tmp_path / "p", "p", "C broken\n")
    assert not (tmp_path / "p").exists()


def test_open_requires_project_json(tmp_path):
    with pytest.raises(UserError, match="project.json"):
        Project(tmp_path)


def test_import_assigns_sequential_ids(project):
    assert [d["id"] for d in project.summary()["datasets"]] == ["d1", "d2", "d3"]
    assert [d.name for d in project.datasets()] == ["Car", "Vettura", "Vehicle"]


def test_import_rejects_duplicate_names(project):
    with pytest.raises(UserError, match="already imported"):
        project.import_dataset(fixture_text("car.csv"), fixture_text("car.meta"))


def test_summary_shape(project):
    s = project.summary()
    assert s["id"] == "vehicles" and s["name"] == "vehicles"
    assert s["phases"] == {"leg": False, "etg": False, "eg": False}
    assert s["config"]["match_floor"] == 0.7


# -- golden replay ------------------------------------------------------------------


def test_golden_replay_runs_clean(golden_project):
    p = golden_project
    leg = p.run_phase("leg")
    assert leg.complete and leg.pending == []
    assert leg.counts == {"terms": 18, "auto": 16, "resolved": 18, "pending": 0}

    etg = p.run_phase("etg")
    assert etg.complete
    assert etg.counts == {
        "matches": 10, "auto": 8, "accepted": 10, "pending": 0,
        "etypes": 2, "properties": 7,
    }

    eg = p.run_phase("eg")
    assert eg.complete
    assert eg.counts == {
        "merges": 2, "auto": 2, "accepted": 2, "pending": 0, "entities": 1,
    }
    assert p.summary()["phases"] == {"leg": True, "etg": True, "eg": True}


def test_log_grows_monotonically(golden_project):
    p = golden_project
    for phase in ("leg", "etg", "eg"):
        p.run_phase(phase)
    log = p.log_entries()
    assert [e["seq"] for e in log] == list(range(1, 31))
    kinds = [e["kind"] for e in log]
    assert kinds.count("sense") == 18 and kinds.count("match") == 10
    assert kinds.count("merge") == 2
    actors = [e["actor"] for e in log]
    assert actors.count("user") == 4 and actors.count("auto") == 26


def test_rerun_is_idempotent(golden_project):
    p = golden_project
    for phase in ("leg", "etg", "eg"):
        p.run_phase(phase)
    before = {w: p.export(w, f) for w, f in
              (("leg", "tsv"), ("etg", "ttl"), ("eg", "jsonld"))}
    log_len = len(p.log_entries())
    for phase in ("leg", "etg", "eg"):
        assert p.run_phase(phase).complete
    assert len(p.log_entries()) == log_len  # autos logged exactly once
    for what, fmt in (("leg", "tsv"), ("etg", "ttl"), ("eg", "jsonld")):
        assert p.export(what, fmt) == before[what]


def test_unchanged_leg_rerun_keeps_downstream(golden_project):
    p = golden_project
    for phase in ("leg", "etg", "eg"):
        p.run_phase(phase)
    p.run_phase("leg")  # same bytes: must not invalidate etg/eg
    assert p.phase_complete("etg") and p.phase_complete("eg")


def test_stale_log_entries_are_ignored(golden_project, tmp_path):
    p = golden_project
    with open(p.root / "decisions.log", "a", encoding="utf-8") as fh:
        fh.write(json.dumps({
            "seq": 5, "timestamp": "2026-08-20T10:00:00+00:00", "kind": "sense",
            "id": "sense:d9:col:0",
            "resolution": {"action": "choose", "concept": 12}, "actor": "user",
        }) + "\n")
    for phase in ("leg", "etg", "eg"):
        assert p.run_phase(phase).complete
    clean = make_project(tmp_path / "clean", seed_golden_log=True)
    for phase in ("leg", "etg", "eg"):
        clean.run_phase(phase)
    for what, fmt in (("leg", "tsv"), ("etg", "ttl"), ("eg", "jsonld")):
        assert p.export(what, fmt) == clean.export(what, fmt)


def test_corrupt_log_is_an_internal_error(golden_project):
    with open(golden_project.root / "decisions.log", "a", encoding="utf-8") as fh:
        fh.write("{not json\n")
    with pytest.raises(InternalError, match="line 5"):
        golden_project.log_entries()


def test_enrichment_replay_mismatch_detected(golden_project):
    # Enriching on a lexicon that already has the logged id must fail loudly.
    lex = golden_project.root / "lexicon.lex"
    lex.write_text(
        lex.read_text(encoding="utf-8") + "C 27 noun 20 an interloper\nS 27 en interloper\n",
        encoding="utf-8",
    )
    with pytest.raises(InternalError, match="replay mismatch"):
        golden_project.run_phase("leg")


# -- phase gating and invalidation -----------------------------------------------------


def test_phase_order_is_enforced(project):
    with pytest.raises(DependencyError):
        project.run_phase("etg")
    with pytest.raises(DependencyError):
        project.run_phase("eg")
    with pytest.raises(DependencyError):
        project.export("leg", "tsv")
    with pytest.raises(DependencyError):
        project.render("en")


def test_unknown_phase_rejected(project):
    with pytest.raises(UserError):
        project.run_phase("ontology")


def test_blocked_leg_reports_pending(project):
    report = project.run_phase("leg")
    assert not report.complete
    assert report.pending == ["sense:d2:col:0", "sense:d2:col:2"]
    assert report.counts["pending"] == 2
    assert not project.phase_complete("leg")


def test_etg_run_needs_leg_artifact(project):
    project.run_phase("leg")  # blocked: no artifact is written
    with pytest.raises(DependencyError):
        project.run_phase("etg")


def test_match_submission_blocked_by_leg_pending(project):
    with pytest.raises(PendingDecisionsError) as err:
        project.submit_decision("match:d1:table|d3:table", {"action": "accept"})
    assert err.value.pending == ["sense:d2:col:0", "sense:d2:col:2"]


def test_import_invalidates_everything(golden_project):
    p = golden_project
    for phase in ("leg", "etg", "eg"):
        p.run_phase(phase)
    p.import_dataset("Colonna\nvalore\n", "name=Extra\nlanguage=it\n")
    assert p.summary()["phases"] == {"leg": False, "etg": False, "eg": False}


def test_override_decision_invalidates(golden_project):
    p = golden_project
    for phase in ("leg", "etg", "eg"):
        p.run_phase(phase)
    view = p.submit_decision(
        "sense:d1:col:1", {"action": "choose", "concept": 14, "override": True}
    )
    assert view["status"] == "overridden" and view["chosen"] == 14
    assert p.summary()["phases"] == {"leg": False, "etg": False, "eg": False}


# -- decision submission ----------------------------------------------------------------


def test_interactive_flow_matches_golden(project, tmp_path):
    p = project
    p.run_phase("leg")
    p.submit_decision("sense:d2:col:0", {"action": "choose", "concept": 22})
    view = p.submit_decision(
        "sense:d2:col:2",
        {"action": "enrich",
         "new_concept": {"gloss": "body style of a car", "pos": "noun",
                         "parent": 20, "lemma": "tipo di corpo", "language": "it"}},
    )
    assert view["chosen"] == 27
    assert p.run_phase("leg").complete

    report = p.run_phase("etg")
    assert report.pending == ["match:d1:table|d3:table", "match:d2:table|d3:table"]
    for mid in report.pending:
        p.submit_decision(mid, {"action": "accept"})
    assert p.run_phase("etg").complete
    assert p.run_phase("eg").complete

    g = make_project(tmp_path / "golden", seed_golden_log=True)
    for phase in ("leg", "etg", "eg"):
        g.run_phase(phase)
    for what, fmt in (("leg", "tsv"), ("etg", "ttl"), ("eg", "jsonld")):
        assert p.export(what, fmt) == g.export(what, fmt)


def test_submit_unknown_ids(golden_project):
    p = golden_project
    for phase in ("leg", "etg"):
        p.run_phase(phase)
    with pytest.raises(UnknownIdError):
        p.submit_decision("sense:d9:col:9", {"action": "choose", "concept": 22})
    with pytest.raises(UnknownIdError):
        p.submit_decision("match:d1:table|d9:table", {"action": "accept"})
    with pytest.raises(UnknownIdError):
        p.submit_decision("merge:d1:9|d2:9", {"action": "accept"})
    with pytest.raises(UnknownIdError):
        p.submit_decision("bogus:id", {"action": "accept"})


def test_submit_validates_resolutions(project):
    with pytest.raises(UserError, match="integer 'concept'"):
        project.submit_decision("sense:d2:col:0", {"action": "choose", "concept": "22"})
    with pytest.raises(UserError, match="action"):
        project.submit_decision("sense:d2:col:0", {"action": "shrug"})
    with pytest.raises(UserError, match="not a candidate"):
        project.submit_decision("sense:d2:col:0", {"action": "choose", "concept": 14})


def test_choose_is_idempotent_but_not_mutable(project):
    project.submit_decision("sense:d2:col:0", {"action": "choose", "concept": 22})
    log_len = len(project.log_entries())
    again = project.submit_decision("sense:d2:col:0", {"action": "choose", "concept": 22})
    assert again["status"] == "confirmed" and again["chosen"] == 22
    assert len(project.log_entries()) == log_len  # nothing new logged
    with pytest.raises(UserError, match="already resolved"):
        project.submit_decision("sense:d2:col:0", {"action": "choose", "concept": 15})


def test_decision_views_carry_candidates(project):
    pending = project.list_decisions(pending_only=True)
    assert [d["id"] for d in pending] == ["sense:d2:col:0", "sense:d2:col:2"]
    targa = pending[0]
    assert targa["kind"] == "sense" and targa["phase"] == "leg"
    assert targa["subject"]["surface"] == "Targa"
    assert [c["concept"] for c in targa["candidates"]] == [15, 22]
    assert targa["candidates"][0]["score"] == pytest.approx(0.772222)
    assert pending[1]["status"] == "new-concept-requested"
    assert pending[1]["candidates"] == []


def test_list_decisions_grows_with_phases(golden_project):
    p = golden_project
    assert {d["phase"] for d in p.list_decisions()} == {"leg"}
    p.run_phase("leg")  # matches become computable once the artifact exists
    assert {d["phase"] for d in p.list_decisions()} == {"leg", "etg"}
    p.run_phase("etg")
    assert {d["phase"] for d in p.list_decisions()} == {"leg", "etg", "eg"}
    assert p.list_decisions(pending_only=True) == []


# -- the sibling scenario: suggested matches and merges ---------------------------------


def test_sibling_flow(tmp_path):
    p = sibling_project(tmp_path)
    assert p.run_phase("leg").complete  # every term disambiguates in context

    report = p.run_phase("etg")
    assert report.pending == [
        "match:d1:table|d2:table",
        "match:d1:table|d3:table",
        "match:d2:table|d3:table",
    ]
    assert report.counts["auto"] == 3  # the three equal widget columns

    # gadget and doohickey are siblings: the engine refuses the accept
    with pytest.raises(UserError, match="not lexicon-comparable"):
        p.submit_decision("match:d1:table|d2:table", {"action": "accept"})
    p.submit_decision("match:d1:table|d2:table", {"action": "reject"})
    p.submit_decision("match:d1:table|d3:table", {"action": "accept"})
    p.submit_decision("match:d2:table|d3:table", {"action": "accept"})

    report = p.run_phase("etg")
    assert report.complete
    assert report.counts["etypes"] == 3
    assert report.counts["properties"] == 1  # shared domain: contraption

    report = p.run_phase("eg")
    assert not report.complete
    assert report.pending == ["merge:d1:0|d2:0"]  # incomparable etypes: never auto
    assert report.counts["auto"] == 1  # d2:0|d3:0 chain neighbour is comparable

    with pytest.raises(UserError):  # entity would have no etype
        p.submit_decision("merge:d1:0|d2:0", {"action": "accept"})
    p.submit_decision("merge:d1:0|d2:0", {"action": "reject"})
    report = p.run_phase("eg")
    assert report.complete and report.counts["entities"] == 2

    doc = json.loads(p.export("eg", "jsonld"))
    members = sorted(
        tuple(sorted(f"{m['dataset']}:{m['row']}" for m in n["sm:members"]))
        for n in doc["@graph"]
    )
    assert members == [("d1:0",), ("d2:0", "d3:0")]


def test_match_reject_then_resubmit_conflicts(tmp_path):
    p = sibling_project(tmp_path)
    p.run_phase("leg")
    p.run_phase("etg")
    p.submit_decision("match:d1:table|d2:table", {"action": "reject"})
    # same action again: no-op; flipping a resolved match is refused
    log_len = len(p.log_entries())
    p.submit_decision("match:d1:table|d2:table", {"action": "reject"})
    assert len(p.log_entries()) == log_len
    with pytest.raises(UserError, match="already rejected"):
        p.submit_decision("match:d1:table|d2:table", {"action": "accept"})


# -- order independence -------------------------------------------------------------------


def test_import_order_does_not_change_the_graph(tmp_path, golden_project):
    g = golden_project
    for phase in ("leg", "etg", "eg"):
        g.run_phase(phase)

    # same inputs, reversed import order, decisions keyed by the new ids
    p = Project.create(tmp_path / "rev", "rev", fixture_text("lexicon.lex"),
                       g.config)
    for name in ("vehicle", "vettura", "car"):
        p.import_dataset(fixture_text(f"{name}.csv"), fixture_text(f"{name}.meta"))
    p.run_phase("leg")
    p.submit_decision("sense:d2:col:0", {"action": "choose", "concept": 22})
    p.submit_decision(
        "sense:d2:col:2",
        {"action": "enrich",
         "new_concept": {"gloss": "body style of a car", "pos": "noun",
                         "parent": 20, "lemma": "tipo di corpo", "language": "it"}},
    )
    p.run_phase("leg")
    for mid in p.run_phase("etg").pending:
        p.submit_decision(mid, {"action": "accept"})
    p.run_phase("etg")
    assert p.run_phase("eg").counts["entities"] == 1

    # dataset ids, property ids and value order all track import order; the
    # graphs must still be isomorphic once those are canonicalized away
    def canon(proj):
        names = {d["id"]: d["name"] for d in proj.summary()["datasets"]}
        doc = json.loads(proj.export("eg", "jsonld"))
        ctx = doc["@context"]
        nodes = []
        for n in doc["@graph"]:
            values = {}
            for key, vals in n.items():
                if not key.startswith("p:"):
                    continue
                values[ctx[key]] = sorted(
                    (v["@value"], v.get("@type", ""),
                     tuple(sorted((names[s["dataset"]], s["row"], s["column"])
                                  for s in v["sm:provenance"])))
                    for v in vals
                )
            members = tuple(sorted((names[m["dataset"]], m["row"])
                                   for m in n["sm:members"]))
            nodes.append((ctx[n["@type"]], members, tuple(sorted(values.items()))))
        return sorted(nodes)

    assert canon(p) == canon(g)


# -- exports and rendering ------------------------------------------------------------------


def test_export_validates_what_and_format(golden_project):
    p = golden_project
    p.run_phase("leg")
    with pytest.raises(UserError, match="unknown artifact"):
        p.export("ontology", "ttl")
    with pytest.raises(UserError, match="exports as 'tsv'"):
        p.export("leg", "ttl")
    assert p.export("leg", "tsv").startswith("concept\t")


def test_render_requires_complete_eg(golden_project):
    p = golden_project
    p.run_phase("leg")
    p.run_phase("etg")
    with pytest.raises(DependencyError):
        p.render("en")
    p.run_phase("eg")
    with pytest.raises(UserError, match="no lexeme"):
        p.render("de")
    assert p.render("en").startswith("#1 a car\n")


# -- CLI ----------------------------------------------------------------------------------


def run_cli(*argv):
    return main([str(a) for a in argv])


def test_cli_full_pipeline(tmp_path, capsys):
    lex = tmp_path / "lex.lex"
    lex.write_text(SIBLING_LEXICON, encoding="utf-8")
    assert run_cli("init", "lab", "--lexicon", lex, "--root", tmp_path) == 0
    root = tmp_path / "lab"
    assert capsys.readouterr().out.startswith("initialized project lab")

    for name, csv in SIBLING_TABLES:
        csv_path = tmp_path / f"{name}.csv"
        meta_path = tmp_path / f"{name}.meta"
        csv_path.write_text(csv, encoding="utf-8")
        meta_path.write_text(f"name={name}\nlanguage=en\nidentifying.0=true\n",
                             encoding="utf-8")
        assert run_cli("import", csv_path, "--meta", meta_path, "--project", root) == 0
    assert capsys.readouterr().out.splitlines() == ["d1", "d2", "d3"]

    assert run_cli("run", "leg", "--project", root) == 0
    assert "phase leg: complete" in capsys.readouterr().out

    assert run_cli("run", "etg", "--project", root) == 0
    out = capsys.readouterr().out
    assert "phase etg: blocked" in out
    assert "pending match:d1:table|d2:table" in out

    assert run_cli("decide", "match:d1:table|d2:table", "--reject", "--project", root) == 0
    assert run_cli("decide", "match:d1:table|d3:table", "--accept", "--project", root) == 0
    assert run_cli("decide", "match:d2:table|d3:table", "--accept", "--project", root) == 0
    capsys.readouterr()

    assert run_cli("run", "etg", "--project", root) == 0
    assert run_cli("run", "eg", "--project", root) == 0
    capsys.readouterr()
    assert run_cli("decide", "merge:d1:0|d2:0", "--reject", "--project", root) == 0
    assert run_cli("run", "eg", "--project", root) == 0
    capsys.readouterr()

    assert run_cli("export", "--what", "eg", "--format", "jsonld", "--project", root) == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["@graph"]) == 2

    assert run_cli("render", "--lang", "en", "--project", root) == 0
    # merged entity takes the most specific etype of its members
    assert capsys.readouterr().out == (
        "#1 a gadget\n  widget: XK9Q7\n#2 a doohickey\n  widget: XK9Q7\n"
    )


def test_cli_decide_choose_and_enrich(tmp_path, capsys):
    p = make_project(tmp_path)
    run_cli("run", "leg", "--project", p.root)
    capsys.readouterr()
    assert run_cli("decide", "sense:d2:col:0", "--choose", "22", "--project", p.root) == 0
    assert capsys.readouterr().out == "sense:d2:col:0 confirmed chosen=22\n"
    enrich = json.dumps({"new_concept": {"gloss": "body style of a car", "pos": "noun",
                                         "parent": 20, "lemma": "tipo di corpo",
                                         "language": "it"}})
    assert run_cli("decide", "sense:d2:col:2", "--enrich", enrich, "--project", p.root) == 0
    assert "chosen=27" in capsys.readouterr().out
    assert run_cli("run", "leg", "--project", p.root) == 0


def test_cli_decisions_listing(tmp_path, capsys):
    p = make_project(tmp_path)
    assert run_cli("decisions", "--pending", "--json", "--project", p.root) == 0
    listed = json.loads(capsys.readouterr().out)
    assert [d["id"] for d in listed] == ["sense:d2:col:0", "sense:d2:col:2"]
    assert run_cli("decisions", "--pending", "--project", p.root) == 0
    plain = capsys.readouterr().out
    assert "sense:d2:col:0\tpending" in plain
    assert "\t0.7722\t" in plain  # candidate score line


def test_cli_error_exit_codes(tmp_path, capsys):
    p = make_project(tmp_path)
    # user errors: exit 1 with a message on stderr
    assert run_cli("export", "--what", "leg", "--format", "tsv", "--project", p.root) == 1
    assert capsys.readouterr().err.startswith("error:")
    assert run_cli("decide", "sense:d9:col:0", "--choose", "22", "--project", p.root) == 1
    assert run_cli("decide", "sense:d2:col:0", "--enrich", "{oops", "--project", p.root) == 1
    assert run_cli("import", tmp_path / "missing.csv", "--meta", tmp_path / "missing.meta",
                   "--project", p.root) == 1
    lex = tmp_path / "lex.lex"
    lex.write_text(SIBLING_LEXICON, encoding="utf-8")
    assert run_cli("init", "vehicles", "--lexicon", lex, "--root", tmp_path) == 1
    capsys.readouterr()
    # broken invariants: exit 2
    with open(p.root / "decisions.log", "a", encoding="utf-8") as fh:
        fh.write("{not json\n")
    assert run_cli("run", "leg", "--project", p.root) == 2
    assert capsys.readouterr().err.startswith("internal error:")
