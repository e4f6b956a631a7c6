"""The ten acceptance criteria as runnable checks.

Each ``criterion_N`` returns a :class:`CriterionResult`; ``run_all`` runs
them in order. The CLI ``selfcheck`` command and the test suite both call
into this module, so the numbers they report are the same.
"""

from __future__ import annotations

import contextlib
import io
import json
import math
import statistics
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .codec import PlanChain, PlanStep, decode_step, encode_relation, parse_model_output, serialize_output
from .cogmap import CognitiveMap, DirBin, Landmark, Region, RelationDescriptor, VerticalRel, bearing_bin, bin_of_azimuth, build_cognitive_map
from .cogrs import PerplexityBand, Token, TokenLogProbRecord, filter_band, percentile_band, span_perplexity
from .errors import NoPath
from .evaluation import evaluate_instance, match_landmarks, navigation_error, spl, target_success
from .oracles import brute_band, brute_perplexity, exhaustive_matching_total, reference_bin, ucs_counts
from .planner import shortest_path
from .scene import Box2D, OccupancyGrid, WorldPoint
from .spectral import SpectralRegionClusterer, gaussian_affinity, jacobi_eigh
from .synth import FIXTURE_LAYOUTS, fixture_path, load_fixture
from .tasks import generate_tasks, stratum_of


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] criterion {self.number:>2} {self.title}: {self.detail} ({self.seconds:.2f} s)"


def _timed(number: int, title: str, fn: Callable[[], tuple[bool, str]]) -> CriterionResult:
    t0 = time.perf_counter()
    try:
        passed, detail = fn()
    except Exception as exc:  # noqa: BLE001 - a crash is reported as a failure
        passed, detail = False, f"raised {type(exc).__name__}: {exc}"
    return CriterionResult(number, title, passed, detail, time.perf_counter() - t0)


# -- 1 -----------------------------------------------------------------------


def criterion_1(
    n_grids: int = 100, sources: int | None = 2, targets: int | None = 50, budget: float = 10.0
) -> CriterionResult:
    """A* cost equals uniform-cost search on random 20x20 grids (30% blocked).

    Per grid, seeded sources are each paired with seeded targets; the
    oracle search runs once per source over the whole grid. ``None`` for
    ``sources``/``targets`` means every free cell (exhaustive, minutes).
    """

    def run():
        rng = np.random.default_rng(20240601)
        t0 = time.perf_counter()
        solvable = mismatches = 0
        for _ in range(n_grids):
            nav = rng.random((20, 20)) >= 0.3
            grid = OccupancyGrid(1.0, (0.0, 0.0, 0.0), nav)
            free = [(int(r), int(c)) for r, c in zip(*np.nonzero(nav))]
            src_idx = range(len(free)) if sources is None else rng.choice(len(free), size=min(sources, len(free)), replace=False)
            for si in src_idx:
                src = free[int(si)]
                oracle = ucs_counts(grid, src)
                dst_idx = range(len(free)) if targets is None else rng.choice(len(free), size=min(targets, len(free)), replace=False)
                for ti in dst_idx:
                    dst = free[int(ti)]
                    try:
                        path = shortest_path(grid, src, dst)
                    except NoPath:
                        mismatches += dst in oracle
                        continue
                    solvable += 1
                    mismatches += oracle.get(dst) != (path.axial, path.diagonal)
        elapsed = time.perf_counter() - t0
        ok = mismatches == 0 and elapsed < budget
        return ok, f"{solvable} solvable pairs on {n_grids} grids, {mismatches} mismatches, {elapsed:.2f} s (< {budget:.0f} s)"

    return _timed(1, "planner oracle equivalence", run)


# -- 2 -----------------------------------------------------------------------


def criterion_2(tasks_per_scene: int = 70, seed: int = 0, budget: float = 60.0) -> CriterionResult:
    """Ground-truth map and chain round-trip through parse, decode and execute."""

    def run():
        t0 = time.perf_counter()
        reports = []
        bad_wp = []
        for sid in FIXTURE_LAYOUTS:
            scene = load_fixture(sid)
            cmap = build_cognitive_map(scene)
            for task in generate_tasks(scene, cmap, tasks_per_scene, seed):
                out = parse_model_output(serialize_output(cmap, task.gt_chain))
                r = evaluate_instance(task, out, scene, cmap)
                reports.append(r)
                if r.sr_p and not (r.ne_waypoint is not None and r.ne_waypoint < 1.0):
                    bad_wp.append(task.task_id)
        elapsed = time.perf_counter() - t0
        n = len(reports)
        sr_p = sum(r.sr_p for r in reports) / n
        mean_spl = math.fsum(r.spl for r in reports) / n
        ok = n >= 200 and sr_p >= 0.95 and mean_spl >= 0.85 and not bad_wp and elapsed < budget
        return ok, (
            f"{n} tasks, SR_p {100 * sr_p:.1f}% (>= 95), mean SPL {mean_spl:.3f} (>= 0.85), "
            f"{len(bad_wp)} successes with NE_waypoint >= 1 m, {elapsed:.1f} s (< {budget:.0f} s)"
        )

    return _timed(2, "ground-truth self-consistency", run)


# -- 3 -----------------------------------------------------------------------


def criterion_3() -> CriterionResult:
    def run():
        checks = {
            "spl(1,10,20)=0.5": spl(True, 10.0, 20.0) == 0.5,
            "spl(1,s,s)=1": all(spl(True, s, s) == 1.0 for s in (0.1, 1.0, 3.7, 10.0, 47.9)),
            "sr_t(1.0)=0": target_success(1.0) is False,
            "sr_t(1.0-ulp)=1": target_success(math.nextafter(1.0, 0.0)) is True,
            "ne((0,0),(3,4))=5": navigation_error(WorldPoint(0.0, 0.0, 0.0), WorldPoint(3.0, 0.0, 4.0)) == 5.0,
        }
        failed = [k for k, v in checks.items() if not v]
        return not failed, "all exact" if not failed else f"failed: {', '.join(failed)}"

    return _timed(3, "metric formula exactness", run)


# -- 4 -----------------------------------------------------------------------

_LABELS = ("chair", "table", "sofa")


def _box(x0: float, z0: float, x1: float, z1: float) -> Box2D:
    return Box2D(float(x0), float(x1), float(z0), float(z1))


def random_matching_fixture(rng: np.random.Generator) -> tuple[list[Landmark], list[Landmark]]:
    """Disjoint ground-truth boxes, jittered predictions and spurious boxes."""
    n_gt = int(rng.integers(1, 7))
    slots = rng.permutation(9)[:n_gt]
    gt = []
    for i, slot in enumerate(slots):
        w, d = rng.uniform(0.5, 2.0, size=2)
        x0 = 3.0 * (slot % 3) + rng.uniform(0, 2.5 - w)
        z0 = 3.0 * (slot // 3) + rng.uniform(0, 2.5 - d)
        gt.append(Landmark(f"g{i}", str(rng.choice(_LABELS)), _box(x0, z0, x0 + w, z0 + d)))
    pred = []
    for g in gt:
        if rng.random() < 0.8:
            b = g.bbox
            w, d = b.x_max - b.x_min, b.z_max - b.z_min
            sx, sz = rng.uniform(0.8, 1.2, size=2)
            cx, cz = b.center
            cx += rng.uniform(-0.3, 0.3) * w
            cz += rng.uniform(-0.3, 0.3) * d
            label = g.semantic if rng.random() < 0.9 else str(rng.choice(_LABELS))
            if rng.random() < 0.3:
                label = "  " + label.upper() + " "
            pred.append(Landmark(f"p{len(pred)}", label, _box(cx - sx * w / 2, cz - sz * d / 2, cx + sx * w / 2, cz + sz * d / 2)))
    for _ in range(int(rng.integers(0, 4))):
        w, d = rng.uniform(0.5, 3.0, size=2)
        x0, z0 = rng.uniform(0, 8, size=2)
        pred.append(Landmark(f"p{len(pred)}", str(rng.choice(_LABELS)), _box(x0, z0, x0 + w, z0 + d)))
    order = rng.permutation(len(pred))
    return [pred[i] for i in order], gt


def criterion_4(trials: int = 500) -> CriterionResult:
    def run():
        rng = np.random.default_rng(4242)
        worst = 0.0
        bad = 0
        for _ in range(trials):
            pred, gt = random_matching_fixture(rng)
            greedy = math.fsum(iou for _, _, iou in match_landmarks(pred, gt))
            best = exhaustive_matching_total([(p.semantic, p.bbox) for p in pred], [(g.semantic, g.bbox) for g in gt])
            gap = abs(best - greedy)
            worst = max(worst, gap)
            bad += gap > 1e-9
        return bad == 0, f"{trials} trials, {bad} disagreements, max |greedy - optimal| {worst:.2e} (<= 1e-9)"

    return _timed(4, "matching oracle", run)


# -- 5 -----------------------------------------------------------------------


def _reference_affinity(points: np.ndarray) -> tuple[list[list[float]], float]:
    n = len(points)
    dist = [[math.dist(points[i], points[j]) for j in range(n)] for i in range(n)]
    sigma = statistics.median([dist[i][j] for i in range(n) for j in range(i + 1, n) if dist[i][j] > 0])
    a = [[0.0 if i == j else math.exp(-dist[i][j] ** 2 / (2 * sigma**2)) for j in range(n)] for i in range(n)]
    return a, sigma


def criterion_5(affinity_sets: int = 50, blob_seeds: int = 50, matrices: int = 50) -> CriterionResult:
    def run():
        rng = np.random.default_rng(55)
        aff_err = 0.0
        for _ in range(affinity_sets):
            n = int(rng.integers(2, 16))
            pts = rng.uniform(-10, 10, size=(n, 2))
            if n > 3 and rng.random() < 0.3:
                pts[1] = pts[0]  # duplicate landmark centre
            a, _ = gaussian_affinity(pts)
            ref, _ = _reference_affinity(pts)
            aff_err = max(aff_err, float(np.max(np.abs(a - np.array(ref)))))

        perfect = 0
        for seed in range(blob_seeds):
            brng = np.random.default_rng(seed)
            pts = np.vstack([brng.normal(0.0, 1.0, (10, 2)), brng.normal(0.0, 1.0, (10, 2)) + [20.0, 0.0]])
            labels = SpectralRegionClusterer(n_clusters=2, random_state=seed).fit_predict(pts)
            perfect += len(set(labels[:10])) == 1 and len(set(labels[10:])) == 1 and labels[0] != labels[10]

        resid = 0.0
        for _ in range(matrices):
            m = rng.normal(size=(12, 12))
            m = (m + m.T) / 2
            w, v = jacobi_eigh(m)
            resid = max(resid, float(np.max(np.linalg.norm(m @ v - v * w, axis=0))))

        ok = aff_err <= 1e-12 and perfect == blob_seeds and resid < 1e-8
        return ok, (
            f"affinity max error {aff_err:.1e} (<= 1e-12), blobs perfect {perfect}/{blob_seeds}, "
            f"eigen residual max {resid:.1e} (< 1e-8)"
        )

    return _timed(5, "affinity and clustering", run)


# -- 6 -----------------------------------------------------------------------


def criterion_6(triples: int = 10_000) -> CriterionResult:
    def run():
        sweep_bad = 0
        for k in range(3600):
            theta = k / 10
            ref = reference_bin(theta)
            r = math.radians(theta)
            if bin_of_azimuth(theta).index != ref or bearing_bin(math.sin(r), math.cos(r)).index != ref:
                sweep_bad += 1

        rng = np.random.default_rng(66)
        dirs = list(DirBin)
        dir_bad = 0
        dist_err = 0.0
        for _ in range(triples):
            cx, cz = rng.uniform(-50, 50, size=2)
            hw, hd = rng.uniform(0.1, 2.0, size=2)
            lm = Landmark("lm", "thing", _box(cx - hw, cz - hd, cx + hw, cz + hd))
            cmap = CognitiveMap((Region("region_0", ("lm",)),), (lm,), ())
            d = dirs[int(rng.integers(8))]
            dist = float(rng.uniform(0.01, 30.0))
            wp = decode_step(cmap, PlanStep("lm", "thing", RelationDescriptor(d, VerticalRel.SAME, dist)))
            d2, dist2 = encode_relation(lm.center, (wp.x, wp.z))
            dir_bad += d2 != d
            dist_err = max(dist_err, abs(dist2 - dist))
        ok = sweep_bad == 0 and dir_bad == 0 and dist_err <= 1e-12
        return ok, (
            f"sweep 3600 angles, {sweep_bad} mismatches; {triples} decode/encode triples, "
            f"{dir_bad} bin changes, max |dist error| {dist_err:.1e} m (<= 1e-12)"
        )

    return _timed(6, "bearing algebra", run)


# -- 7 -----------------------------------------------------------------------


def _gt_texts(n_tasks: int = 10) -> list[tuple[str, CognitiveMap, PlanChain]]:
    out = []
    for sid in FIXTURE_LAYOUTS:
        scene = load_fixture(sid)
        cmap = build_cognitive_map(scene)
        for t in generate_tasks(scene, cmap, n_tasks, 7):
            out.append((serialize_output(cmap, t.gt_chain), cmap, t.gt_chain))
    return out


_JUNK_VALUES = (None, -1, 0, 1e308, "x", "", [], {}, [1, 2], {"a": 1}, True, "NaN", [[[]]], -0.0)


def _mutate_json(doc, rng: np.random.Generator):
    # replace or delete one randomly chosen nested value
    node = doc
    for _ in range(int(rng.integers(1, 6))):
        if isinstance(node, dict) and node:
            key = list(node)[int(rng.integers(len(node)))]
            child = node[key]
            if not isinstance(child, (dict, list)) or not child or rng.random() < 0.3:
                if rng.random() < 0.3:
                    del node[key]
                else:
                    node[key] = _JUNK_VALUES[int(rng.integers(len(_JUNK_VALUES)))]
                return doc
            node = child
        elif isinstance(node, list) and node:
            i = int(rng.integers(len(node)))
            child = node[i]
            if not isinstance(child, (dict, list)) or not child or rng.random() < 0.3:
                node[i] = _JUNK_VALUES[int(rng.integers(len(_JUNK_VALUES)))]
                return doc
            node = child
        else:
            break
    return doc


def fuzz_inputs(n: int, seed: int, bases: list[str]) -> list[str | bytes]:
    rng = np.random.default_rng(seed)
    out: list[str | bytes] = []
    for _ in range(n):
        base = bases[int(rng.integers(len(bases)))]
        kind = int(rng.integers(9))
        if kind == 0:  # byte flips
            b = bytearray(base.encode())
            for _ in range(int(rng.integers(1, 8))):
                b[int(rng.integers(len(b)))] = int(rng.integers(256))
            out.append(bytes(b))
        elif kind == 1:  # truncation
            out.append(base[: int(rng.integers(len(base)))])
        elif kind == 2:  # deleted range
            i = int(rng.integers(len(base)))
            out.append(base[:i] + base[i + int(rng.integers(1, 200)) :])
        elif kind == 3:  # bracket and quote noise
            chars = list(base)
            for _ in range(int(rng.integers(1, 10))):
                chars.insert(int(rng.integers(len(chars) + 1)), "{}[]\":,\\"[int(rng.integers(8))])
            out.append("".join(chars))
        elif kind == 4:  # structural mutation
            out.append(json.dumps(_mutate_json(json.loads(base), rng)))
        elif kind == 5:  # prose and fences
            out.append(f"Sure! Here is the plan:\n```json\n{base}\n```\nHope this helps {{not json}}")
        elif kind == 6:  # random bytes
            out.append(rng.integers(0, 256, size=int(rng.integers(0, 400)), dtype=np.uint8).tobytes())
        elif kind == 7:  # deep nesting
            depth = int(rng.integers(100, 20000))
            out.append("{\"map\": " + "[" * depth + "]" * int(rng.integers(depth + 1)))
        else:  # empty, whitespace, scalars
            out.append(["", "   \n", "null", "42", "[]", "{}", "{\"map\": null, \"chain\": 5}"][int(rng.integers(7))])
    return out


def criterion_7(n: int = 10_000) -> CriterionResult:
    def run():
        gt = _gt_texts()
        bases = [text for text, _, _ in gt]
        crashes = 0
        first = ""
        for i, text in enumerate(fuzz_inputs(n, 77, bases)):
            try:
                parse_model_output(text, strict=bool(i % 5 == 0))
            except Exception as exc:  # noqa: BLE001 - counting every escape is the point
                crashes += 1
                first = first or f"{type(exc).__name__}: {exc}"[:120]
        rt_bad = 0
        for text, cmap, chain in gt:
            out = parse_model_output(text, strict=True)
            doc = json.loads(text)
            if out.issues or out.map is None or out.chain is None:
                rt_bad += 1
            elif out.map.to_dict() != doc["map"] or out.chain.to_dict() != doc["chain"]:
                rt_bad += 1
        ok = crashes == 0 and rt_bad == 0
        detail = f"{n} fuzz inputs, {crashes} crashes; {len(gt)} GT round-trips, {rt_bad} with issues or drift"
        return ok, detail + (f"; first crash {first}" if first else "")

    return _timed(7, "parser robustness", run)


# -- 8 -----------------------------------------------------------------------


def random_records(n: int, seed: int) -> list[TokenLogProbRecord]:
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        m = int(rng.integers(6, 60))
        scale = float(rng.uniform(0.05, 2.5))
        tokens = tuple(Token(f"t{j}", -float(rng.exponential(scale))) for j in range(m))
        cuts = sorted(int(v) for v in rng.choice(m + 1, size=2 * int(rng.integers(1, 4)), replace=False))
        spans = tuple((cuts[k], cuts[k + 1]) for k in range(0, len(cuts), 2))
        out.append(TokenLogProbRecord(f"s{i:05d}", tokens, spans))
    return out


def criterion_8(n: int = 1000) -> CriterionResult:
    def run():
        recs = random_records(n, 88)
        ppl = [(r.sample_id, brute_perplexity(r.critical_logprobs())) for r in recs]
        bands = [percentile_band([v for _, v in ppl])]
        rng = np.random.default_rng(8)
        vals = np.array([v for _, v in ppl])
        for _ in range(20):
            lo, hi = sorted(rng.uniform(vals.min() * 0.9, vals.max() * 1.1, size=2))
            bands.append(PerplexityBand(float(lo), float(hi)))
        set_bad = 0
        ppl_err = 0.0
        for band in bands:
            res = filter_band(recs, band)
            set_bad += res.kept != brute_band(ppl, band.tau_min, band.tau_max)
            ppl_err = max(ppl_err, max(abs(res.perplexities[s] - v) / v for s, v in ppl))

        half = math.log(0.5)
        exact_bad = 0
        for m in range(1, 301):
            tokens = tuple(Token("x", half) for _ in range(m + 2))
            spans = ((0, m // 2), (m // 2 + 1, m + 1)) if m > 1 else ((0, 1),)
            exact_bad += span_perplexity(TokenLogProbRecord("u", tokens, spans)) != 2.0

        mono_bad = 0
        for _ in range(100):
            a, b, c, d = sorted(rng.uniform(vals.min(), vals.max(), size=4))
            inner = set(filter_band(recs, PerplexityBand(b, c)).kept)
            outer = set(filter_band(recs, PerplexityBand(a, d)).kept)
            mono_bad += not inner <= outer
        ok = set_bad == 0 and ppl_err < 1e-12 and exact_bad == 0 and mono_bad == 0
        return ok, (
            f"{len(bands)} bands over {n} records, {set_bad} kept-set mismatches (ppl rel err {ppl_err:.1e}); "
            f"ln(0.5) spans non-exact {exact_bad}/300; nested-band violations {mono_bad}/100"
        )

    return _timed(8, "CogRS band filter", run)


# -- 9 -----------------------------------------------------------------------


def criterion_9() -> CriterionResult:
    def run():
        expected = {0.0: "Short", 5.999: "Short", 6.0: "Medium", 9.999: "Medium", 10.0: "Long", 48.0: "Long"}
        got = {v: stratum_of(v).value for v in expected}
        bad = [f"{v}->{got[v]}" for v in expected if got[v] != expected[v]]
        return not bad, "all 6 boundary values binned as expected" if not bad else f"wrong: {bad}"

    return _timed(9, "stratification bins", run)


# -- 10 ----------------------------------------------------------------------


def _snapshot(root: Path) -> dict[str, bytes]:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def criterion_10(n_tasks: int = 15, seed: int = 11) -> CriterionResult:
    from .cli import main

    def run():
        scene = str(fixture_path("synthetic_apartment_02"))
        snaps = []
        codes = []
        for _ in range(2):
            with tempfile.TemporaryDirectory() as tmp:
                root = Path(tmp)
                with contextlib.redirect_stdout(io.StringIO()), contextlib.redirect_stderr(io.StringIO()):
                    codes.append(main(["build-map", scene, "--seed", str(seed), "--out", str(root / "map.json")]))
                    codes.append(main(["gen-tasks", scene, "--seed", str(seed), "-n", str(n_tasks), "--out", str(root / "gen")]))
                snaps.append(_snapshot(root))
        same = snaps[0] == snaps[1]
        ok = same and codes == [0] * 4 and len(snaps[0]) >= n_tasks + 4
        return ok, f"{len(snaps[0])} files per run, exit codes {codes}, byte-identical: {same}"

    return _timed(10, "determinism", run)


CRITERIA: dict[int, Callable[[], CriterionResult]] = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
    10: criterion_10,
}


def run_all(only: set[int] | None = None) -> list[CriterionResult]:
    return [fn() for k, fn in CRITERIA.items() if only is None or k in only]
