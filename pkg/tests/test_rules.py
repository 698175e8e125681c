import random

import pytest

from edrkit.predicates import Predicate, RuleError
from edrkit.rules import (
    CorrelationRule, Detection, Engine, Severity, SignatureRule, build_ruleset,
    match_signatures,
)

from conftest import make_event


def test_mimikatz_image_tagged_credential_dumping(ruleset):
    e = make_event(image="C:\\Users\\a\\AppData\\Local\\Temp\\mimikatz.exe",
                   cmdline="mimikatz.exe", obj="C:\\Users\\a\\AppData\\Local\\Temp\\mimikatz.exe")
    detections = match_signatures(e, ruleset.signatures)
    assert any("T1003" in d.technique_ids for d in detections)
    assert all(d.engine is Engine.SIGNATURE and d.score == 1.0 for d in detections)


def test_shadow_delete_tagged_inhibit_recovery(ruleset):
    e = make_event(image="C:\\Windows\\System32\\cmd.exe",
                   cmdline="cmd.exe /c vssadmin delete shadows /all /quiet")
    detections = match_signatures(e, ruleset.signatures)
    assert any("T1490" in d.technique_ids for d in detections)


def test_benign_notepad_matches_nothing(ruleset):
    e = make_event()  # plain signed notepad process create
    assert match_signatures(e, ruleset.signatures) == []


def test_detection_carries_rule_severity(ruleset):
    e = make_event(image="C:\\tools\\mimikatz.exe")
    det = next(d for d in match_signatures(e, ruleset.signatures)
               if "T1003" in d.technique_ids)
    assert det.severity is Severity.CRITICAL
    assert det.evidence == (e.id,)


def test_signature_matching_equals_bruteforce_oracle(ruleset):
    """The engine must agree with naive predicate evaluation on random events."""
    rng = random.Random(99)
    images = ["C:\\Windows\\notepad.exe", "C:\\tools\\mimikatz.exe",
              "C:\\Windows\\System32\\rundll32.exe", "C:\\temp\\psexec.exe",
              "C:\\Windows\\System32\\WindowsPowerShell\\v1.0\\powershell.exe"]
    cmdlines = ["notepad.exe x.txt", "powershell.exe -nop -w hidden -enc QQBC",
                "cmd.exe /c vssadmin delete shadows /all", "rundll32.exe http://x/p",
                "certutil -urlcache -f http://x", "schtasks /create /tn x"]
    objects = ["C:\\Users\\a\\file.docx", "C:\\Users\\a\\file.docx.locked",
               "C:\\Users\\a\\README_DECRYPT.txt", "10.0.0.5:443",
               "HKLM\\SOFTWARE\\Microsoft\\Windows\\CurrentVersion\\Run\\x",
               "HKLM\\SYSTEM\\CurrentControlSet\\Services\\x"]
    categories = [("process", "create"), ("file", "create"), ("file", "modify"),
                  ("network", "connect"), ("registry", "set_value"),
                  ("user", "user_create"), ("user", "logon")]

    def oracle_match(e, rule):
        # independent predicate interpreter
        def field_value(path):
            if path.startswith("subject."):
                return str(getattr(e.subject, path[8:]))
            return str(getattr(e, path))
        for term in rule.match:
            value = field_value(term["field"]).lower()
            needle = str(term["value"]).lower()
            op = term["op"]
            if op == "equals" and value != needle:
                return False
            if op == "prefix" and not value.startswith(needle):
                return False
            if op == "suffix" and not value.endswith(needle):
                return False
            if op == "contains" and needle not in value:
                return False
        return True

    for _ in range(1000):
        category, action = rng.choice(categories)
        e = make_event(
            offset=rng.uniform(0, 300), category=category, action=action,
            image=rng.choice(images), cmdline=rng.choice(cmdlines),
            obj=rng.choice(objects), signed=rng.random() < 0.8,
        )
        got = {d.technique_ids[0] for d in match_signatures(e, ruleset.signatures)}
        expected = {r.technique_id for r in ruleset.signatures if oracle_match(e, r)}
        assert got == expected


def test_predicate_ops():
    e = make_event(image="C:\\Tools\\MimiKatz.EXE")
    assert Predicate("subject.image", "contains", "mimikatz").compile()(e)
    assert Predicate("subject.image", "suffix", ".exe").compile()(e)
    assert Predicate("subject.image", "prefix", "c:\\tools").compile()(e)
    assert Predicate("subject.image", "regex", r"mimi.atz").compile()(e)
    assert not Predicate("subject.image", "equals", "mimikatz.exe").compile()(e)


def test_unknown_field_and_op_rejected():
    with pytest.raises(RuleError):
        Predicate("nope", "equals", "x").compile()
    with pytest.raises(RuleError):
        Predicate("object", "globs", "x").compile()
    with pytest.raises(RuleError):
        Predicate("object", "regex", "(unclosed").compile()


def test_ruleset_validates_technique_ids(taxonomy):
    doc = {"signatures": [{"id": "s", "name": "s", "match": [],
                           "technique": "T9999", "severity": "low"}],
           "correlations": []}
    with pytest.raises(RuleError, match="T9999"):
        build_ruleset(doc, taxonomy)


def test_correlation_rule_needs_two_steps():
    with pytest.raises(RuleError):
        CorrelationRule(id="c", name="c", steps=(({"field": "category",
                                                   "op": "equals", "value": "file"},),),
                        within=60, technique_id="T1486", severity=Severity.LOW)


def test_detection_invariants():
    import datetime
    ts = datetime.datetime.now(datetime.timezone.utc)
    with pytest.raises(ValueError):
        Detection(engine=Engine.SIGNATURE, score=1.5, technique_ids=("T1003",),
                  evidence=("e",), ts=ts)
    with pytest.raises(ValueError):
        Detection(engine=Engine.SIGNATURE, score=0.5, technique_ids=("T1003",),
                  evidence=(), ts=ts)
