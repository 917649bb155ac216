"""Command-line front end: build vectors, score, decode, serve, attack, plan.

Documents are single-line JSON with string-encoded rationals, so nothing
that crosses a process boundary ever passes through a binary float.  The
oracle protocol is line oriented: one `SCORE <document>` request per line,
one `ESCORE p/q` or `LL <digits> AUC <digits|ND>` response per line, `ERR
<reason>` for a bad request (the server keeps going), `QUIT` to stop.

A vector document either lists its entries or names a construction, e.g.
{"kind":"binary","n":44}.  The named form is what keeps large binary
queries possible at all: entry i of that construction is a 2^(i-1)-bit
integer, so shipping entries stops being an option long before the
closed-form scoring on the serving side breaks a sweat.
"""

from __future__ import annotations

import argparse
import json
import subprocess
import sys
import tempfile
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .core import (
    ClassLabeling,
    ExactScore,
    Labeling,
    PredictionMatrix,
    PredictionVector,
    ScoreKind,
    auc,
    exact_score,
    exact_score_multiclass,
    format_rational,
    logloss_decimal,
    parse_decimal_score,
    parse_rational,
)
from .errors import LossProbeError, OracleProtocolError, ValidationError
from .exact import (
    DEFAULT_LIMITS,
    binary_decimal_response,
    build_binary_vector,
    build_multiclass_matrix,
    build_twin_prime_vector,
    decode_binary,
    decode_multiclass,
    decode_twin_prime,
    decode_twin_prime_value,
)
from .mia import (
    AttackMode,
    AttackReport,
    CandidateSet,
    MembershipVector,
    ScoringView,
    curator_oracle,
    fixed_precision_attack,
    one_query_attack,
    run_demo,
)
from .precision import min_digits_for_separation, plan_batches

DEFAULT_SEED = 7


def _dump(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def _emit(doc: dict, out: str) -> None:
    text = _dump(doc) + "\n"
    if out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _read_text(source: str) -> str:
    if source == "-":
        return sys.stdin.read()
    return Path(source).read_text()


def _parse_doc(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValidationError(f"document does not parse as JSON: {e}") from None
    if not isinstance(doc, dict):
        raise ValidationError("document must be a JSON object")
    return doc


def _entries_vector(doc: dict) -> PredictionVector | PredictionMatrix:
    entries = doc["entries"]
    if not isinstance(entries, list) or not entries:
        raise ValidationError("entries must be a non-empty list")
    if isinstance(entries[0], list):
        rows = tuple(tuple(parse_rational(x) for x in row) for row in entries)
        return PredictionMatrix(rows)
    return PredictionVector(tuple(parse_rational(x) for x in entries))


def _doc_size(doc: dict) -> int:
    """Number of predictions the document stands for."""
    if "entries" in doc:
        entries = doc["entries"]
        if not isinstance(entries, list):
            raise ValidationError("entries must be a list")
        return len(entries)
    n = doc.get("n")
    if not isinstance(n, int) or n < 1:
        raise ValidationError("document needs entries or a positive n")
    return n


def _named_vector(doc: dict, size: int) -> PredictionVector:
    kind = doc.get("kind")
    if kind == "twin":
        return build_twin_prime_vector(size)
    if kind == "binary":
        return build_binary_vector(size)
    raise ValidationError(f"cannot build entries for kind {kind!r}")


# ---------------------------------------------------------------- build


def _cmd_build(args: argparse.Namespace) -> int:
    if args.kind == "multiclass":
        if args.k is None:
            raise ValidationError("multiclass vectors need --k")
        matrix = build_multiclass_matrix(args.n, args.k)
        doc = {
            "kind": "multiclass",
            "n": args.n,
            "K": args.k,
            "entries": [[format_rational(x) for x in row] for row in matrix.rows],
        }
        _emit(doc, args.out)
        return 0
    if args.k is not None:
        raise ValidationError("--k only applies to multiclass vectors")
    if args.kind == "twin":
        vec = build_twin_prime_vector(args.n)
    else:
        if args.n > DEFAULT_LIMITS.binary_wire_max_n:
            raise ValidationError(
                f"binary entries past n = {DEFAULT_LIMITS.binary_wire_max_n} are "
                'walls of digits; score the construction by name instead: '
                '{"kind":"binary","n":...}'
            )
        vec = build_binary_vector(args.n)
    doc = {
        "kind": args.kind,
        "n": args.n,
        "entries": [format_rational(e) for e in vec.entries],
    }
    _emit(doc, args.out)
    return 0


# ---------------------------------------------------------------- score


def _cmd_score(args: argparse.Namespace) -> int:
    doc = _parse_doc(_read_text(args.vector))
    kind = doc.get("kind")
    if kind == "multiclass":
        if args.mode == "decimal":
            raise ValidationError("decimal reporting covers binary labels only")
        k = doc.get("K")
        if not isinstance(k, int):
            raise ValidationError("multiclass document needs K")
        labels = ClassLabeling.from_string(args.labels, k)
        matrix = _entries_vector(doc)
        if not isinstance(matrix, PredictionMatrix):
            raise ValidationError("multiclass document needs a matrix of entries")
        score = exact_score_multiclass(matrix, labels)
        _emit({"escore": format_rational(score.value), "n": score.n}, args.out)
        return 0

    labels = Labeling.from_string(args.labels)
    by_name = "entries" not in doc
    size = _doc_size(doc)
    if len(labels) != size:
        raise ValidationError(f"vector has {size} entries but labels carry {len(labels)}")
    if args.mode == "decimal":
        if by_name and kind == "binary":
            ll, auc_score = binary_decimal_response(labels, args.phi)
        else:
            vec = _named_vector(doc, size) if by_name else _entries_vector(doc)
            assert isinstance(vec, PredictionVector)
            ll = logloss_decimal(vec, labels, args.phi)
            auc_score = auc(vec, labels, args.phi)
        _emit({"ll": ll.wire(), "auc": auc_score.wire(), "phi": args.phi}, args.out)
        return 0
    if by_name and kind == "binary" and size > DEFAULT_LIMITS.binary_wire_max_n:
        raise ValidationError(
            f"an exact binary score past n = {DEFAULT_LIMITS.binary_wire_max_n} "
            "does not fit on a wire; use decimal mode"
        )
    vec = _named_vector(doc, size) if by_name else _entries_vector(doc)
    assert isinstance(vec, PredictionVector)
    score = exact_score(vec, labels)
    _emit({"escore": format_rational(score.value), "n": score.n}, args.out)
    return 0


# ---------------------------------------------------------------- decode


def _cmd_decode(args: argparse.Namespace) -> int:
    raw = args.score
    if raw == "-" or Path(raw).is_file():
        raw_text = _read_text(raw)
    else:
        raw_text = raw
    raw_text = raw_text.strip()
    if raw_text.startswith("{"):
        doc = _parse_doc(raw_text)
        escore = doc.get("escore")
        if not isinstance(escore, str):
            raise ValidationError("score document needs an escore")
        value = parse_rational(escore)
        doc_n = doc.get("n")
    else:
        value = parse_rational(raw_text)
        doc_n = None
    n = args.n
    if n is not None and doc_n is not None and n != doc_n:
        raise ValidationError(f"--n {n} disagrees with the document's n = {doc_n}")
    if n is None:
        n = doc_n

    if args.kind == "twin":
        if n is None:
            labeling = decode_twin_prime_value(value)
        else:
            labeling = decode_twin_prime(ExactScore(value=value, n=n))
        print(labeling.to_string())
        return 0
    if n is None:
        raise ValidationError(f"decoding a {args.kind} score needs n")
    if args.kind == "binary":
        labeling = decode_binary(ExactScore(value=value, n=n), n)
        print(labeling.to_string())
        return 0
    if args.k is None:
        raise ValidationError("decoding a multiclass score needs --k")
    classes = decode_multiclass(ExactScore(value=value, n=n), n, args.k)
    print(classes.to_string())
    return 0


# ---------------------------------------------------------------- serve


class _LengthMismatch(ValidationError):
    """Request length disagrees with the candidate set or its indices."""


def _request_indices(doc: dict) -> list[int] | None:
    indices = doc.get("indices")
    if indices is None:
        return None
    if not isinstance(indices, list) or not all(isinstance(i, int) for i in indices):
        raise ValidationError("indices must be a list of integers")
    return indices


def _serve_one(oracle, doc_text: str, mode: str, phi: int | None) -> str:
    doc = _parse_doc(doc_text)
    indices = _request_indices(doc)
    size = _doc_size(doc)
    expected = len(indices) if indices is not None else oracle.n
    if size != expected:
        raise _LengthMismatch("length")
    by_name = "entries" not in doc
    kind = doc.get("kind")
    if mode == "exact":
        if by_name and kind == "binary" and size > DEFAULT_LIMITS.binary_wire_max_n:
            raise ValidationError(
                f"exact binary responses are capped at n = "
                f"{DEFAULT_LIMITS.binary_wire_max_n} on the wire"
            )
        vec = _named_vector(doc, size) if by_name else _entries_vector(doc)
        if not isinstance(vec, PredictionVector):
            raise ValidationError("the membership oracle scores binary labelings only")
        score = oracle.exact_response(vec.entries, indices)
        return "ESCORE " + format_rational(score.value)
    assert phi is not None
    if by_name and kind == "binary":
        ll, auc_score = oracle.decimal_scores_for_binary(size, phi, indices)
    else:
        vec = _named_vector(doc, size) if by_name else _entries_vector(doc)
        if not isinstance(vec, PredictionVector):
            raise ValidationError("the membership oracle scores binary labelings only")
        ll, auc_score = oracle.decimal_scores(vec.entries, phi, indices)
    return f"LL {ll.wire()} AUC {auc_score.wire()}"


def _cmd_oracle_serve(args: argparse.Namespace) -> int:
    hidden = MembershipVector(Labeling.from_string(_read_text(args.labels).strip()))
    oracle = curator_oracle(hidden)
    for raw in sys.stdin:
        line = raw.strip()
        if not line:
            continue
        if line == "QUIT":
            break
        if not line.startswith("SCORE "):
            print("ERR unknown command", flush=True)
            continue
        try:
            response = _serve_one(oracle, line[6:], args.mode, args.phi)
        except _LengthMismatch:
            response = "ERR length"
        except LossProbeError as e:
            response = "ERR " + " ".join(str(e).split())
        print(response, flush=True)
    return 0


# ---------------------------------------------------------------- attack


class _RemoteCurator:
    """Client half of the oracle protocol, plus local ground truth.

    The attack code only ever receives scoring_view(), whose methods
    serialize requests onto the pipe; the hidden bits stay here, on the
    curator's side of the process boundary, for after-the-fact grading.
    """

    def __init__(self, proc: subprocess.Popen, hidden: MembershipVector, phi: int | None):
        self._proc = proc
        self._hidden = hidden
        self._phi = phi
        self._sent = 0

    @property
    def queries_used(self) -> int:
        return self._sent

    def _ask(self, doc: dict) -> str:
        assert self._proc.stdin is not None and self._proc.stdout is not None
        self._proc.stdin.write("SCORE " + _dump(doc) + "\n")
        self._proc.stdin.flush()
        self._sent += 1
        line = self._proc.stdout.readline()
        if not line:
            raise OracleProtocolError("oracle closed the stream mid-session")
        line = line.rstrip("\n")
        if line.startswith("ERR"):
            raise OracleProtocolError(line[4:] or "unspecified oracle error")
        return line

    def _decimal_pair(self, line: str, phi: int):
        parts = line.split(" ")
        if len(parts) != 4 or parts[0] != "LL" or parts[2] != "AUC":
            raise OracleProtocolError(f"malformed decimal response: {line!r}")
        return (
            parse_decimal_score(parts[1], phi, ScoreKind.LOGLOSS),
            parse_decimal_score(parts[3], phi, ScoreKind.AUC),
        )

    def _check_phi(self, phi: int) -> None:
        if phi != self._phi:
            raise OracleProtocolError(
                f"oracle serves {self._phi} significant digits, not {phi}"
            )

    def exact_response(self, entries, indices=None) -> ExactScore:
        doc: dict = {"entries": [format_rational(Fraction(e)) for e in entries]}
        if indices is not None:
            doc["indices"] = list(indices)
        line = self._ask(doc)
        if not line.startswith("ESCORE "):
            raise OracleProtocolError(f"expected ESCORE, got {line!r}")
        return ExactScore(value=parse_rational(line[7:]), n=len(entries))

    def decimal_scores(self, entries, phi, indices=None):
        self._check_phi(phi)
        doc: dict = {"entries": [format_rational(Fraction(e)) for e in entries]}
        if indices is not None:
            doc["indices"] = list(indices)
        return self._decimal_pair(self._ask(doc), phi)

    def decimal_scores_for_binary(self, n, phi, indices=None):
        self._check_phi(phi)
        doc: dict = {"kind": "binary", "n": n}
        if indices is not None:
            doc["indices"] = list(indices)
        return self._decimal_pair(self._ask(doc), phi)

    def assess(self, claimed: MembershipVector) -> Fraction:
        truth = self._hidden.bits.bits
        if len(claimed) != len(truth):
            raise ValidationError("claimed vector has the wrong length")
        hits = sum(a == b for a, b in zip(claimed.bits.bits, truth))
        return Fraction(hits, len(truth))

    def scoring_view(self) -> ScoringView:
        return ScoringView(
            self.exact_response, self.decimal_scores, self.decimal_scores_for_binary
        )


def _subprocess_demo(
    n: int, mode: AttackMode, seed: int, phi: int | None
) -> AttackReport:
    hidden = MembershipVector.random(n, seed)
    fixed = mode is AttackMode.FIXED_PRECISION
    with tempfile.NamedTemporaryFile("w", suffix=".labels", delete=False) as handle:
        handle.write(hidden.bits.to_string() + "\n")
        labels_path = handle.name
    cmd = [
        sys.executable,
        "-m",
        "lossprobe",
        "oracle-serve",
        "--labels",
        labels_path,
        "--mode",
        "decimal" if fixed else "exact",
    ]
    if fixed:
        cmd += ["--phi", str(phi)]
    proc = subprocess.Popen(
        cmd, stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True
    )
    try:
        curator = _RemoteCurator(proc, hidden, phi if fixed else None)
        candidates = CandidateSet.numbered(n)
        if fixed:
            assert phi is not None
            report = fixed_precision_attack(candidates, curator, phi)
        else:
            report = one_query_attack(candidates, curator, mode)
    finally:
        try:
            if proc.stdin is not None:
                proc.stdin.write("QUIT\n")
                proc.stdin.flush()
            proc.wait(timeout=10)
        except (OSError, subprocess.TimeoutExpired):
            proc.kill()
            proc.wait()
        Path(labels_path).unlink(missing_ok=True)
    return report


def _cmd_attack_demo(args: argparse.Namespace) -> int:
    mode = AttackMode(args.mode)
    fixed = mode is AttackMode.FIXED_PRECISION
    phi = args.phi
    if fixed and phi is None:
        phi = 2
    if args.transport == "subprocess":
        report = _subprocess_demo(args.n, mode, args.seed, phi)
    else:
        report = run_demo(args.n, mode, args.seed, phi)
    accuracy = report.accuracy
    print(f"mode: {report.mode.value}")
    print(f"candidates: {args.n}")
    if report.phi is not None:
        print(f"significant digits: {report.phi}")
    print(f"queries used: {report.queries_used}")
    print(f"recovered: {report.recovered.bits.to_string()}")
    print(
        f"accuracy: {float(accuracy):.4g} "
        f"({accuracy.numerator * args.n // accuracy.denominator}/{args.n})"
    )
    doc = {
        "mode": report.mode.value,
        "n": args.n,
        "seed": args.seed,
        "transport": args.transport,
        "queries_used": report.queries_used,
        "recovered": report.recovered.bits.to_string(),
        "accuracy": f"{accuracy.numerator}/{accuracy.denominator}",
    }
    if report.phi is not None:
        doc["phi"] = report.phi
    if report.plan is not None:
        doc["method"] = report.plan.method
        doc["batch_size"] = report.plan.batch_size
    print(_dump(doc))
    return 0


# ---------------------------------------------------------------- plan


def _cmd_plan(args: argparse.Namespace) -> int:
    if args.delta is not None:
        phi = min_digits_for_separation(args.delta)
        if phi < 1:
            # a gap of 1 or more needs zero digits; one is still the
            # smallest precision an oracle can report
            phi = 1
    else:
        phi = args.phi
    plan = plan_batches(args.n, phi)
    print(f"significant digits: {plan.phi}")
    print(f"pigeonhole batch cap: {plan.pigeonhole_batch}")
    print(f"query bound: {plan.bound}")
    print(f"method: {plan.method}")
    print(f"batch size: {plan.batch_size}")
    print(f"planned queries: {plan.planned_queries}")
    spans = ", ".join(
        f"{b.indices[0]}-{b.indices[-1]}" if len(b.indices) > 1 else f"{b.indices[0]}"
        for b in plan.batches
    )
    print(f"batches: {spans}")
    doc = {
        "n": plan.n,
        "phi": plan.phi,
        "max_unique_batch": plan.pigeonhole_batch,
        "query_bound": plan.bound,
        "method": plan.method,
        "batch_size": plan.batch_size,
        "planned_queries": plan.planned_queries,
        "batches": [
            {"indices": list(b.indices), "fill": list(b.fill)} for b in plan.batches
        ],
    }
    if args.delta is not None:
        doc["delta"] = args.delta
    print(_dump(doc))
    return 0


# ---------------------------------------------------------------- parser


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lossprobe",
        description="Exact and rounded log-loss scores as a label side channel.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    build = sub.add_parser("build", help="emit a construction's prediction document")
    build.add_argument("kind", choices=("twin", "binary", "multiclass"))
    build.add_argument("--n", type=_positive_int, required=True)
    build.add_argument("--k", type=_positive_int, help="classes (multiclass only)")
    build.add_argument("--out", default="-", help="output file, - for stdout")
    build.set_defaults(func=_cmd_build)

    score = sub.add_parser("score", help="score a prediction document against labels")
    score.add_argument("--vector", required=True, help="document file, - for stdin")
    score.add_argument("--labels", required=True, help="bitstring or comma classes")
    score.add_argument("--mode", choices=("exact", "decimal"), default="exact")
    score.add_argument("--phi", type=_positive_int, help="significant digits (decimal)")
    score.add_argument("--out", default="-")
    score.set_defaults(func=_cmd_score)

    decode = sub.add_parser("decode", help="recover labels from an exact score")
    decode.add_argument("--kind", choices=("twin", "binary", "multiclass"), required=True)
    decode.add_argument("--score", required=True, help="document, file, or p/q")
    decode.add_argument("--n", type=_positive_int)
    decode.add_argument("--k", type=_positive_int)
    decode.set_defaults(func=_cmd_decode)

    serve = sub.add_parser("oracle-serve", help="answer SCORE requests on stdin")
    serve.add_argument("--labels", required=True, help="hidden bitstring file")
    serve.add_argument("--mode", choices=("exact", "decimal"), required=True)
    serve.add_argument("--phi", type=_positive_int)
    serve.set_defaults(func=_cmd_oracle_serve)

    demo = sub.add_parser("attack-demo", help="run a full attack against a fresh oracle")
    demo.add_argument("--n", type=_positive_int, required=True)
    demo.add_argument("--mode", choices=("twin", "binary", "fixed"), required=True)
    demo.add_argument("--phi", type=_positive_int)
    demo.add_argument("--seed", type=int, default=DEFAULT_SEED)
    demo.add_argument(
        "--transport", choices=("inproc", "subprocess"), default="inproc"
    )
    demo.set_defaults(func=_cmd_attack_demo)

    plan = sub.add_parser("plan", help="batch schedule for a rounded oracle")
    plan.add_argument("--n", type=_positive_int, required=True)
    which = plan.add_mutually_exclusive_group(required=True)
    which.add_argument("--delta", help="smallest score separation, e.g. 0.002")
    which.add_argument("--phi", type=_positive_int, help="significant digits")
    plan.set_defaults(func=_cmd_plan)
    return parser


def _validate_flag_combos(parser: argparse.ArgumentParser, args: argparse.Namespace) -> None:
    if args.command == "score":
        if args.mode == "decimal" and args.phi is None:
            parser.error("--mode decimal needs --phi")
        if args.mode == "exact" and args.phi is not None:
            parser.error("--phi only applies to --mode decimal")
    if args.command == "oracle-serve":
        if args.mode == "decimal" and args.phi is None:
            parser.error("--mode decimal needs --phi")
        if args.mode == "exact" and args.phi is not None:
            parser.error("--phi only applies to --mode decimal")
    if args.command == "attack-demo":
        if args.mode != "fixed" and args.phi is not None:
            parser.error("--phi only applies to --mode fixed")


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    _validate_flag_combos(parser, args)
    try:
        return args.func(args)
    except LossProbeError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
