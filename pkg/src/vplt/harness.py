"""Instance generators and the experiment runner."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np

from .automata import Relation, Vpa, compose, parse_vpa
from .exact import run_exact
from .tester import TesterConfig, run_tester, to_fraction
from .words import make_rng

CSV_COLUMNS = ("n", "seed", "verdict", "stored_peak", "stack_max", "t", "k", "T", "ms")


class GeneratorError(ValueError):
    pass


# --- Disj -----------------------------------------------------------------------


def _pad(rng, core: list[str], n: int, filler: str = "a") -> list[str]:
    """Insert ``n - len(core)`` filler letters at uniformly random gaps."""
    extra = n - len(core)
    gaps = np.bincount(rng.integers(0, len(core) + 1, size=extra), minlength=len(core) + 1) if extra else None
    out = []
    for i, x in enumerate(core + [None]):
        if gaps is not None:
            out.extend([filler] * int(gaps[i]))
        if x is not None:
            out.append(x)
    return out


@dataclass
class DisjInstance:
    tokens: list[str]
    mode: str
    j: int
    certificate: str | None = None


def disj_core(x, y) -> list[str]:
    """``x`` as pushes followed by ``y`` reversed as pops: ``x(i)`` is matched with ``y(i)``."""
    if len(x) != len(y):
        raise GeneratorError("x and y need the same length")
    return [str(int(b)) for b in x] + [f"{int(b)}'" for b in reversed(y)]


def far_pairs_needed(n: int, epsilon) -> int:
    """Violating pairs for the far family: ``ceil(epsilon n)``, so 2j >= 2 epsilon n > epsilon n."""
    return max(1, math.ceil(to_fraction(epsilon) * n))


def gen_disj(n: int, mode: str = "member", j: int | None = None, seed: int | None = None, epsilon=None) -> DisjInstance:
    """A Disj word of length n.

    member: ``x`` and ``y`` random with no index where both are 1.
    far: ``x = y = 1^j``; every matched pair violates the constraint.
    """
    rng = make_rng(seed)
    if mode not in ("member", "far"):
        raise GeneratorError(f"unknown mode {mode!r}")
    if j is None:
        if mode == "far":
            j = far_pairs_needed(n, epsilon if epsilon is not None else Fraction(1, 5))
        else:
            j = int(rng.integers(1, max(1, n // 2) + 1))
    if j < 1 or n < 2 * j:
        raise GeneratorError(f"need 1 <= j and n >= 2j (n={n}, j={j})")
    if mode == "member":
        x = rng.integers(0, 2, size=j)
        y = np.where(x == 1, 0, rng.integers(0, 2, size=j))
    else:
        x = y = np.ones(j, dtype=np.int64)
    inst = DisjInstance(_pad(rng, disj_core(x, y), n), mode, j)
    if mode == "far":
        inst.certificate = far_certificate(inst.tokens)
    return inst


def far_certificate(tokens: list[str]) -> str:
    """Check the far shape and return the lower-bound argument as text.

    Insertions and deletions keep every surviving pair matched to the same
    partner, so each of the j pairs (1, 1') must be deleted: distance >= 2j.
    """
    core = [t for t in tokens if t != "a"]
    j = len(core) // 2
    if j == 0 or core != ["1"] * j + ["1'"] * j:
        raise GeneratorError("not of the form a* 1^j a* 1'^j a*")
    bound = 2 * j
    return (
        f"word has {j} matched pairs (1, 1'), each violating x(i)y(i) != 1; balanced edits never "
        f"rematch a surviving pair, so all {j} must be deleted: bdist >= {bound} of n = {len(tokens)} "
        f"(ratio {bound / len(tokens):.4f})"
    )


# --- random balanced words ------------------------------------------------------------


def random_dyck(rng, pairs: int) -> np.ndarray:
    """Uniform Dyck path with ``pairs`` up-steps, as +1/-1 steps (cycle lemma)."""
    steps = np.concatenate([np.ones(pairs, dtype=np.int8), -np.ones(pairs + 1, dtype=np.int8)])
    rng.shuffle(steps)
    cut = int(np.argmin(np.cumsum(steps))) + 1
    return np.roll(steps, -cut)[:-1]


def random_balanced(vpa: Vpa, n: int, seed: int | None = None, neutral_rate: float = 1 / 3) -> list[str]:
    """A random balanced word of exactly n symbols (not necessarily a member)."""
    rng = make_rng(seed)
    al = vpa.alphabet
    pushes, pops, neutrals = sorted(al.push_symbols), sorted(al.pop_symbols), sorted(al.neutral_symbols)
    if not neutrals:
        if n % 2:
            raise GeneratorError("odd length needs a neutral symbol")
        q = 0
    else:
        q = int(rng.binomial(n, neutral_rate)) if pushes else n
        if (n - q) % 2:
            q += 1 if q < n else -1
    path = random_dyck(rng, (n - q) // 2)
    kinds = np.zeros(n, dtype=np.int8)
    slots = np.sort(rng.choice(n, size=n - q, replace=False))
    kinds[slots] = path
    out = []
    for kind, r in zip(kinds.tolist(), rng.integers(0, 1 << 30, size=n).tolist()):
        if kind == 1:
            out.append(pushes[r % len(pushes)])
        elif kind == -1:
            out.append(pops[r % len(pops)])
        else:
            out.append(neutrals[r % len(neutrals)])
    return out


def power_law_sizes(rng, count: int, lo: int, hi: int, exponent: float = 1.5) -> np.ndarray:
    """Sizes in [lo, hi] with density proportional to ``n^-exponent``."""
    a = 1.0 - exponent
    u = rng.random(count)
    if a == 0:
        x = lo * (hi / lo) ** u
    else:
        x = (lo**a + u * (hi**a - lo**a)) ** (1.0 / a)
    return np.clip(np.floor(x).astype(np.int64), lo, hi)


def random_machine(rng, m: int, density: float = 0.35) -> Vpa:
    """A random machine with m states over the alphabet ``( ) a b``.

    ``rng`` is a :class:`random.Random`.
    """
    lines = [f"states {m}", "initial 0", f"final {rng.randrange(m)}", "stack g h"]
    for p in range(m):
        for q in range(m):
            for c in ("a", "b"):
                if rng.random() < density:
                    lines.append(f"neutral {c} {p} {q}")
            for g in ("g", "h"):
                if rng.random() < density / 2:
                    lines.append(f"push ( {p} {q} {g}")
                if rng.random() < density / 2:
                    lines.append(f"pop ) {p} {g} {q}")
    # every symbol appears somewhere
    lines += ["neutral a 0 0", "push ( 0 0 g", "pop ) 0 g 0"]
    return parse_vpa("\n".join(lines), f"random{m}")


# --- random members of any VPA -----------------------------------------------------


class LengthTable:
    """``table[L]``: pairs (p, q) joined by a balanced word of exactly L letters.

    Computed exactly up to ``cap`` and extended by the period detected there.
    """

    def __init__(self, vpa: Vpa, cap: int = 160):
        self.vpa = vpa
        m = vpa.m
        neutral = vpa.any_neutral
        table = [Relation.identity(m)]
        wrapped = []
        for L in range(1, cap + 1):
            acc = compose(neutral, table[L - 1])
            if L >= 2:
                wrapped.append(vpa.wrap(None, None, table[L - 2]))
                for inner in range(L - 1):
                    w = wrapped[inner]
                    if w:
                        acc = acc | compose(w, table[L - 2 - inner])
            table.append(acc)
        self.table = table
        self.start, self.period = self._period(table)

    @staticmethod
    def _period(table):
        cap = len(table) - 1
        for period in range(1, cap // 4 + 1):
            start = cap - 2 * period
            while start - period >= 0 and table[start - 1] == table[start - 1 + period]:
                start -= 1
            ok = all(table[L] == table[L - period] for L in range(start + period, cap + 1))
            if ok and cap - start >= 3 * period:
                return start, period
        return cap, 0

    def __getitem__(self, L: int) -> Relation:
        if L < len(self.table):
            return self.table[L]
        if not self.period:
            raise GeneratorError("length table did not stabilise; raise the cap")
        return self.table[self.start + (L - self.start) % self.period]


@lru_cache(maxsize=32)
def _length_table(vpa: Vpa) -> LengthTable:
    return LengthTable(vpa)


def gen_random_member(vpa: Vpa, n: int, seed: int | None = None, check: bool = True) -> list[str]:
    """A random word of L(vpa) with exactly n letters.

    The word is derived top-down: each task asks for a balanced word from p
    to q of given length and picks a neutral letter or a push/pop pair with a
    random inner length, keeping only choices the length table allows.
    """
    rng = make_rng(seed)
    table = _length_table(vpa)
    full = table[n]
    ends = [(p, q) for p in vpa.initial for q in vpa.final if (p, q) in full]
    if not ends:
        raise GeneratorError(f"no member of length {n}")
    p, q = ends[int(rng.integers(len(ends)))]
    neutrals = sorted(vpa.delta_neutral)
    pushes = sorted(vpa.delta_push)
    pops = sorted(vpa.delta_pop)
    out: list[str] = []
    tasks: list = [(p, q, n)]
    while tasks:
        task = tasks.pop()
        if isinstance(task, str):
            out.append(task)
            continue
        p, q, L = task
        if L == 0:
            continue
        rest = table[L - 1]
        options = [(c, p2) for (pp, c, p2) in neutrals if pp == p and (p2, q) in rest]
        use_pair = L >= 2 and (not options or rng.random() < 0.5)
        if use_pair:
            pick = _pick_pair(rng, table, pushes, pops, p, q, L)
            if pick is None and not options:
                raise GeneratorError("inconsistent length table")
            if pick is not None:
                a, p1, b, q1, q2, inner = pick
                out.append(a)
                tasks.append((q2, q, L - 2 - inner))
                tasks.append(b)
                tasks.append((p1, q1, inner))
                continue
        c, p2 = options[int(rng.integers(len(options)))]
        out.append(c)
        tasks.append((p2, q, L - 1))
    if check and not run_exact(vpa, out).accepted:
        raise GeneratorError("generated word failed the membership self-check")
    return out


def _pair_options(table, pushes, pops, p, q, L, inner):
    ins, rest = table[inner], table[L - 2 - inner]
    found = []
    for pp, a, p1, g in pushes:
        if pp != p:
            continue
        for q1, b, gg, q2 in pops:
            if gg == g and (p1, q1) in ins and (q2, q) in rest:
                found.append((a, p1, b, q1, q2, inner))
    return found


def _pick_pair(rng, table, pushes, pops, p, q, L):
    top = L - 2
    for _ in range(24):
        inner = int(rng.integers(0, top + 1))
        found = _pair_options(table, pushes, pops, p, q, L, inner)
        if found:
            return found[int(rng.integers(len(found)))]
    for inner in rng.permutation(top + 1):
        found = _pair_options(table, pushes, pops, p, q, L, int(inner))
        if found:
            return found[int(rng.integers(len(found)))]
    return None


# --- experiments ---------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    vpa: str
    generator: dict
    n: list[int]
    epsilon: float | str = "0.2"
    eta: float | str = "1/3"
    trials: int = 10
    seed: int = 0
    profile: str = "desk"
    T: int | None = None
    k: int | None = None
    output: str | None = None
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if list(self.n) != sorted(self.n):
            raise ValueError("n values must be sorted ascending")
        if self.generator.get("kind") not in ("disj", "member"):
            raise ValueError("generator.kind must be 'disj' or 'member'")

    @classmethod
    def from_json(cls, data: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class TrialRow:
    n: int
    seed: int
    verdict: str
    stored_peak: int
    stack_max: int
    t: int
    k: int
    T: int
    ms: float
    decomposition_max: int = 0
    certificate: str | None = field(default=None, repr=False)


def trial_seed(base: int, n_index: int, trial: int) -> int:
    return int(np.random.SeedSequence([base, n_index, trial]).generate_state(1)[0])


def _run_trial(args) -> TrialRow:
    cfg, vpa, n_index, n, trial = args
    seed = trial_seed(cfg.seed, n_index, trial)
    gen = cfg.generator
    cert = None
    if gen["kind"] == "disj":
        inst = gen_disj(n, gen.get("mode", "member"), gen.get("j"), seed, gen.get("epsilon", cfg.epsilon))
        tokens, cert = inst.tokens, inst.certificate
    else:
        tokens = gen_random_member(vpa, n, seed)
    tc = TesterConfig(cfg.epsilon, cfg.eta, n, seed=seed, profile=cfg.profile, T=cfg.T, k=cfg.k)
    res = run_tester(vpa, tokens, tc)
    return TrialRow(
        n=n,
        seed=seed,
        verdict=res.verdict,
        stored_peak=res.stats.stored_items_peak,
        stack_max=res.stats.max_stack,
        t=res.params.cells,
        k=res.params.k,
        T=res.params.T,
        ms=round(res.ms, 3),
        decomposition_max=res.stats.max_decomposition,
        certificate=cert,
    )


def fit_polylog(ns, values) -> dict:
    """Least-squares fit of ``log value = log c + p log log2 n``."""
    xs = np.log(np.log2(np.asarray(ns, dtype=float)))
    ys = np.log(np.maximum(np.asarray(values, dtype=float), 1.0))
    if len(set(xs.tolist())) < 2:
        return {"c": float(np.exp(ys.mean())) if len(ys) else 0.0, "p": 0.0, "points": len(xs)}
    p, logc = np.polyfit(xs, ys, 1)
    return {"c": float(math.exp(logc)), "p": float(p), "points": int(len(xs))}


def run_experiment(config: ExperimentConfig, vpa: Vpa) -> dict:
    jobs = [(config, vpa, i, n, t) for i, n in enumerate(config.n) for t in range(config.trials)]
    t0 = time.perf_counter()
    rows: list[TrialRow] = []
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            rows.extend(pool.map(_run_trial, jobs))
    else:
        for idx, job in enumerate(jobs):
            try:
                rows.append(_run_trial(job))
            except Exception as exc:
                raise RuntimeError(f"trial {idx} (n={job[3]}, trial={job[4]}) failed: {exc}") from exc
    summary = []
    peaks = []
    for n in config.n:
        sub = [r for r in rows if r.n == n]
        acc = sum(r.verdict == "accept" for r in sub)
        peak = max(r.stored_peak for r in sub)
        peaks.append(peak)
        summary.append({
            "n": n,
            "trials": len(sub),
            "accept_rate": acc / len(sub),
            "reject_rate": 1 - acc / len(sub),
            "stored_peak_max": peak,
            "stack_max": max(r.stack_max for r in sub),
        })
    report = {
        "config": asdict(config),
        "machine": vpa.name,
        "rows": [asdict(r) for r in rows],
        "summary": summary,
        "memory_fit": fit_polylog(config.n, peaks),
        "seconds": round(time.perf_counter() - t0, 3),
    }
    certs = sorted({r.certificate for r in rows if r.certificate})
    if certs:
        report["certificates"] = certs
    if config.output:
        write_report(report, config.output)
    return report


def rows_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r if isinstance(r, dict) else asdict(r))
    return buf.getvalue()


def write_report(report: dict, output: str) -> tuple[Path, Path]:
    base = Path(output)
    base.parent.mkdir(parents=True, exist_ok=True)
    jpath, cpath = base.with_suffix(".json"), base.with_suffix(".csv")
    jpath.write_text(json.dumps(report, indent=2, default=str))
    cpath.write_text(rows_csv(report["rows"]))
    return jpath, cpath
