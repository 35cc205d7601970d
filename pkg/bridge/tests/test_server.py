import io
import json
import subprocess
import sys

import pytest

from cloudbridge import BridgeConfig, constant, identity_completion, serve


def run_session(config, lines):
    stdin = io.StringIO("".join(line + "\n" for line in lines))
    stdout = io.StringIO()
    code = serve(config, stdin, stdout)
    return code, [json.loads(line) for line in stdout.getvalue().splitlines()]


def classify_config(label=2, classes=3):
    handler, c = constant(label, classes)
    return BridgeConfig(classes=c, handler=handler)


class TestProtocol:
    def test_hello_first_and_clean_eof(self):
        code, out = run_session(classify_config(), [])
        assert code == 0
        assert out == [{"type": "hello", "protocol": 1, "classes": 3}]

    def test_id_echo_and_one_response_per_request(self):
        reqs = [
            json.dumps({"type": "predict", "id": i * 17, "points": [[0.1, 0.2, 0.3]]})
            for i in range(50)
        ]
        code, out = run_session(classify_config(), reqs)
        assert code == 0
        assert len(out) == 1 + 50
        for i, resp in enumerate(out[1:]):
            assert resp == {"type": "label", "id": i * 17, "label": 2}

    def test_ten_thousand_requests_no_corruption(self):
        reqs = [
            json.dumps({"type": "predict", "id": i, "points": [[0.0, 0.0, float(i)]]})
            for i in range(10_000)
        ]
        code, out = run_session(classify_config(), reqs)
        assert code == 0
        assert [resp["id"] for resp in out[1:]] == list(range(10_000))
        assert all(resp["type"] == "label" for resp in out[1:])

    def test_malformed_line_recovery(self):
        reqs = [
            json.dumps({"type": "predict", "id": 1, "points": [[0, 0, 0]]}),
            "this is not json {",
            "[1, 2, 3]",
            json.dumps({"type": "predict", "id": 2, "points": [[0, 0, 0]]}),
        ]
        code, out = run_session(classify_config(), reqs)
        assert code == 0
        assert [resp["type"] for resp in out[1:]] == ["label", "error", "error", "label"]
        assert out[-1]["id"] == 2

    def test_unknown_fields_ignored(self):
        req = json.dumps(
            {"type": "predict", "id": 9, "points": [[0, 0, 0]], "extra": {"x": 1}}
        )
        _, out = run_session(classify_config(), [req])
        assert out[1] == {"type": "label", "id": 9, "label": 2}

    def test_unsupported_type_and_missing_points(self):
        reqs = [
            json.dumps({"type": "train", "id": 1}),
            json.dumps({"type": "predict", "id": 2}),
        ]
        _, out = run_session(classify_config(), reqs)
        assert all(resp["type"] == "error" for resp in out[1:])
        assert [resp["id"] for resp in out[1:]] == [1, 2]

    def test_handler_exception_is_scoped_to_its_request(self):
        reqs = [
            json.dumps({"type": "predict", "id": 1, "points": []}),  # handler raises
            json.dumps({"type": "predict", "id": 2, "points": [[0, 0, 0]]}),
        ]
        code, out = run_session(classify_config(), reqs)
        assert code == 0
        assert out[1]["type"] == "error" and out[1]["id"] == 1
        assert out[2] == {"type": "label", "id": 2, "label": 2}

    def test_blank_lines_skipped(self):
        _, out = run_session(classify_config(), ["", "  "])
        assert len(out) == 1  # just the hello


class TestCompletionMode:
    def test_complete_round_trip(self):
        config = BridgeConfig(classes=0, handler=identity_completion(), mode="complete")
        req = json.dumps({"type": "complete", "id": 4, "points": [[0.1, 0.2, 0.3]]})
        _, out = run_session(config, [req])
        assert out[1] == {"type": "points", "id": 4, "points": [[0.1, 0.2, 0.3]]}

    def test_predict_rejected_in_complete_mode(self):
        config = BridgeConfig(classes=0, handler=identity_completion(), mode="complete")
        req = json.dumps({"type": "predict", "id": 1, "points": [[0, 0, 0]]})
        _, out = run_session(config, [req])
        assert out[1]["type"] == "error"

    def test_bad_mode_rejected(self):
        with pytest.raises(ValueError):
            BridgeConfig(classes=2, handler=identity_completion(), mode="serve")


class TestSubprocessEntry:
    def test_spawned_module_speaks_the_protocol(self):
        proc = subprocess.Popen(
            [sys.executable, "-m", "cloudbridge", "--handler", "constant:1", "--classes", "2"],
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
        )
        try:
            hello = json.loads(proc.stdout.readline())
            assert hello == {"type": "hello", "protocol": 1, "classes": 2}
            proc.stdin.write(
                json.dumps({"type": "predict", "id": 0, "points": [[0, 0, 0]]}) + "\n"
            )
            proc.stdin.flush()
            resp = json.loads(proc.stdout.readline())
            assert resp == {"type": "label", "id": 0, "label": 1}
        finally:
            proc.stdin.close()
            assert proc.wait(timeout=10) == 0
