"""Acceptance gate.

One test per criterion; each prints a single PASS line with its pinned
tolerances once its assertions hold. Run with `-s` (or read the captured
stdout) to see the lines. The heavyweight fixtures (a full default
simulation and its analysis) are shared module-wide.
"""
import math
import random
import time

import pytest

from oracles import (
    friedman_cf_oracle,
    pearson_two_pass,
    perm_p_oracle,
    wilcoxon_enum_oracle,
)

from drillguide.geometry import (
    Pose,
    UnitQuat,
    Vec3,
    compute_error,
    swing_twist,
)
from drillguide.harness import ExperimentConfig, balanced_latin_square, run_experiment
from drillguide.records import records_to_csv
from drillguide.stats import analyze, friedman, pearson, wilcoxon_signed_rank
from drillguide.widget import (
    Area,
    Condition,
    WidgetConfig,
    build_frame,
    classify_area,
    duo_separation,
)

EP, TA, DWEP, DWTA = (Condition.ENTRY_POINT, Condition.TARGET_AXIS,
                      Condition.DWEP, Condition.DWTA)


def ok(name: str, detail: str) -> None:
    print(f"ACCEPTANCE {name}: PASS ({detail})")


# ---------------------------------------------------------------------------
# shared heavyweight fixtures
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def default_run():
    """The default experiment: 35 subjects, 4 conditions, 16 trials, seed 42."""
    config = ExperimentConfig()
    t0 = time.perf_counter()
    dataset = run_experiment(config, workers=1)
    return config, dataset, time.perf_counter() - t0


@pytest.fixture(scope="module")
def default_report(default_run):
    _, dataset, sim_seconds = default_run
    t0 = time.perf_counter()
    report = analyze(dataset)
    return report, sim_seconds + (time.perf_counter() - t0)


def condition_mean(records, condition, value):
    vals = [value(r) for r in records if r.condition is condition]
    return sum(vals) / len(vals)


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------

def test_geometry_suite():
    """10,000 seeded pose pairs: swing-twist recomposition within 1e-9,
    rm vs independent bit-axis angle within 1e-6 deg, twist invariance
    within 1e-6 deg; under 5 s."""
    rng = random.Random(20260822)
    t0 = time.perf_counter()

    def rand_quat():
        while True:
            q = [rng.gauss(0.0, 1.0) for _ in range(4)]
            n = math.sqrt(sum(c * c for c in q))
            if n > 1e-6:
                return UnitQuat.of(*(c / n for c in q))

    def rand_pose():
        return Pose(Vec3(rng.uniform(-50, 50), rng.uniform(-50, 50),
                         rng.uniform(-50, 50)), rand_quat())

    worst_recomp = worst_rm = worst_twist = 0.0
    for _ in range(10_000):
        tool, target = rand_pose(), rand_pose()

        # swing-twist recomposition
        q = rand_quat()
        swing, twist = swing_twist(q, Vec3(0.0, 1.0, 0.0))
        recomposed = swing.multiply(twist).canonical()
        qc = q.canonical()
        worst_recomp = max(worst_recomp,
                           max(abs(a - b) for a, b in zip(recomposed, qc)))

        # rm equals the plain angle between the two bit axes
        err = compute_error(tool, target)
        cosang = max(-1.0, min(1.0, tool.bit_axis().dot(target.bit_axis())))
        worst_rm = max(worst_rm, abs(err.rm - math.degrees(math.acos(cosang))))

        # twisting the tool about its own bit axis changes nothing
        spun = Pose(tool.position, tool.orientation.multiply(
            UnitQuat.from_axis_angle(Vec3(0.0, 1.0, 0.0),
                                     rng.uniform(-180.0, 180.0))))
        err2 = compute_error(spun, target)
        worst_twist = max(worst_twist, abs(err.rm - err2.rm),
                          abs(err.re_x - err2.re_x), abs(err.re_z - err2.re_z))
    elapsed = time.perf_counter() - t0

    assert worst_recomp < 1e-9
    assert worst_rm < 1e-6
    assert worst_twist < 1e-6
    assert elapsed < 5.0
    ok("geometry", f"10000 pairs, recomp {worst_recomp:.2e} < 1e-9, "
                   f"rm dev {worst_rm:.2e} deg < 1e-6, "
                   f"twist dev {worst_twist:.2e} deg < 1e-6, {elapsed:.2f}s < 5s")


def test_widget_suite():
    """Area boundaries exact at tt=1mm/0.5deg and mt=100mm/10deg;
    separation sweep continuous (step 1e-4*mt, max jump < 1e-3*d_max);
    separation(tt)=0 and separation(mt)=d_max exactly; DWEP/DWTA frames
    composed of the static widget plus the same duo set."""
    cfg = WidgetConfig()
    assert (cfg.tt_pos, cfg.tt_rot, cfg.mt_pos, cfg.mt_rot) == (1.0, 0.5, 100.0, 10.0)

    for tt, mt in ((cfg.tt_pos, cfg.mt_pos), (cfg.tt_rot, cfg.mt_rot)):
        assert classify_area(tt, tt, mt) is Area.HIDDEN
        assert classify_area(math.nextafter(tt, math.inf), tt, mt) is Area.DYNAMIC_NONLINEAR
        assert classify_area(math.nextafter(mt, 0.0), tt, mt) is Area.DYNAMIC_NONLINEAR
        assert classify_area(mt, tt, mt) is Area.FROZEN_MAX
        assert duo_separation(tt, tt, mt, cfg.d_max) == 0.0
        assert duo_separation(mt, tt, mt, cfg.d_max) == cfg.d_max

    # continuity sweep over [0, 1.05*mt]
    max_jump = 0.0
    for tt, mt in ((cfg.tt_pos, cfg.mt_pos), (cfg.tt_rot, cfg.mt_rot)):
        step = 1e-4 * mt
        prev = duo_separation(0.0, tt, mt, cfg.d_max)
        e = 0.0
        while e < 1.05 * mt:
            e += step
            cur = duo_separation(e, tt, mt, cfg.d_max)
            max_jump = max(max_jump, abs(cur - prev))
            prev = cur
    assert max_jump < 1e-3 * cfg.d_max

    # composition: each dynamic condition renders its static widget's
    # primitives plus the full duo set, identically posed
    tool = Pose(Vec3(4.0, 30.0, -6.0),
                UnitQuat.from_axis_angle(Vec3(1.0, 0.0, 1.0), 12.0))
    target = Pose(Vec3(0.0, -10.0, 5.0),
                  UnitQuat.from_axis_angle(Vec3(0.0, 0.0, 1.0), 8.0))
    error = compute_error(tool, target)
    frames = {c: build_frame(c, tool, target, error, cfg)
              for c in (EP, TA, DWEP, DWTA)}
    for dynamic, static in ((DWEP, EP), (DWTA, TA)):
        static_prims = frames[static].primitives
        dyn_prims = frames[dynamic].primitives
        # the static widget survives verbatim as a prefix; everything
        # added is a duo glyph pair
        assert dyn_prims[:len(static_prims)] == static_prims
        extras = dyn_prims[len(static_prims):]
        assert all(p.id.startswith("duo_") for p in extras)
        visible = [d for d in frames[dynamic].duos if d.area is not Area.HIDDEN]
        assert len(extras) == 2 * len(visible)
        assert len(frames[dynamic].duos) == 5
    assert frames[DWEP].duos == frames[DWTA].duos
    dwep_glyphs = [p for p in frames[DWEP].primitives if p.id.startswith("duo_")]
    dwta_glyphs = [p for p in frames[DWTA].primitives if p.id.startswith("duo_")]
    assert dwep_glyphs == dwta_glyphs
    assert frames[EP].duos == () and frames[TA].duos == ()
    ok("widget", f"boundaries exact, max separation jump {max_jump:.2e} "
                 f"< {1e-3 * cfg.d_max:.2e}, composition equal")


def test_statistics_oracle_suite():
    """Friedman, Wilcoxon, and Pearson match independent oracles on 20+
    seeded instances each (n <= 10): statistics within 1e-9, exact p within
    1e-12, permutation p within 3 combined MC standard errors at 100k.
    Under 60 s."""
    t0 = time.perf_counter()

    # Friedman vs correction-factor oracle, with and without ties
    for s in range(20):
        rng = random.Random(1000 + s)
        n = rng.randint(2, 10)
        k = rng.randint(3, 5)
        matrix = [[round(rng.uniform(0, 6), rng.choice((0, 1, 3)))
                   for _ in range(k)] for _ in range(n)]
        res = friedman(matrix)
        assert abs(res.statistic - friedman_cf_oracle(matrix)) < 1e-9

    # Wilcoxon signed-rank vs full sign enumeration
    checked = 0
    for s in range(40):
        rng = random.Random(2000 + s)
        n = rng.randint(5, 10)
        a = [round(rng.uniform(0, 4), rng.choice((0, 1))) for _ in range(n)]
        b = [round(rng.uniform(0, 4), rng.choice((0, 1))) for _ in range(n)]
        if sum(x != y for x, y in zip(a, b)) < 5:
            continue
        res = wilcoxon_signed_rank(a, b)
        w_oracle, p_oracle = wilcoxon_enum_oracle(a, b)
        assert res.method == "wilcoxon-exact"
        assert abs(res.statistic - w_oracle) < 1e-9
        assert abs(res.p_value - p_oracle) < 1e-12
        checked += 1
    assert checked >= 20

    # Pearson vs textbook two-pass
    for s in range(20):
        rng = random.Random(3000 + s)
        n = rng.randint(4, 10)
        x = [rng.gauss(0, 2) for _ in range(n)]
        y = [0.6 * v + rng.gauss(0, 1) for v in x]
        res = pearson(x, y)
        assert abs(res.statistic - pearson_two_pass(x, y)) < 1e-9

    # permutation p vs an independent Monte Carlo loop
    b_perm = 100_000
    for s in range(3):
        rng = random.Random(4000 + s)
        n, k = 6, 4
        matrix = [[rng.uniform(0, 3) + (0.4 * j if s == 0 else 0.0)
                   for j in range(k)] for _ in range(n)]
        p_mine = friedman(matrix, p_method="permutation",
                          n_permutations=b_perm, seed=s).p_value
        p_ref = perm_p_oracle(matrix, 20_000, seed=900 + s)
        # both estimates carry MC error; combine their standard errors
        pbar = (p_mine + p_ref) / 2.0
        se = math.sqrt(pbar * (1.0 - pbar) * (1.0 / b_perm + 1.0 / 20_000))
        assert abs(p_mine - p_ref) <= max(3.0 * se, 1e-4)

    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0
    ok("statistics-oracles", f"friedman 20/20 within 1e-9, wilcoxon "
                             f"{checked}/{checked} exact p within 1e-12, "
                             f"pearson 20/20 within 1e-9, permutation within "
                             f"3 SE at {b_perm}, {elapsed:.1f}s < 60s")


def test_latin_square_suite():
    """n=4 square: every row and column a permutation and every ordered
    adjacency occurring exactly once, checked exhaustively."""
    square = balanced_latin_square(4)
    n = 4
    assert len(square) == n
    for row in square:
        assert sorted(row) == list(range(n))
    for col in range(n):
        assert sorted(square[r][col] for r in range(n)) == list(range(n))
    adjacency = {}
    for row in square:
        for a, b in zip(row, row[1:]):
            adjacency[(a, b)] = adjacency.get((a, b), 0) + 1
    # n rows x (n-1) adjacencies = 12 ordered pairs of n(n-1) = 12 possible
    assert all(count == 1 for count in adjacency.values())
    assert len(adjacency) == n * (n - 1)
    ok("latin-square", "n=4: rows, columns, and all 12 ordered adjacencies "
                       "balanced exhaustively")


def test_ordering_reproduction(default_run, default_report):
    """Default 35-subject run reproduces the qualitative condition
    orderings, and the analysis finds the expected Bonferroni-significant
    pairs; simulate+analyze under 120 s."""
    _, dataset, _ = default_run
    records = dataset.records
    report, total_seconds = default_report

    pm = {c: condition_mean(records, c, lambda r: r.error.pm)
          for c in (EP, TA, DWEP, DWTA)}
    rm = {c: condition_mean(records, c, lambda r: r.error.rm)
          for c in (EP, TA, DWEP, DWTA)}
    tt = {c: condition_mean(records, c, lambda r: r.task_time)
          for c in (EP, TA, DWEP, DWTA)}

    assert pm[DWTA] < pm[DWEP] < pm[TA] < pm[EP]
    assert rm[DWTA] <= rm[DWEP] <= rm[TA] < rm[EP]
    assert max(rm, key=rm.get) is EP
    assert tt[EP] < tt[TA] < tt[DWEP] < tt[DWTA]

    def pair(metric: str, a: Condition, b: Condition):
        for pw in report.metrics[metric].posthoc:
            if {pw.condition_a, pw.condition_b} == {a.value, b.value}:
                return pw
        raise AssertionError(f"missing posthoc pair {a.value}/{b.value}")

    alpha = 0.05
    for metric in ("PM", "RM"):
        assert report.metrics[metric].friedman.p_value <= alpha
        for other in (TA, DWEP, DWTA):
            pw = pair(metric, EP, other)
            assert pw.p_bonferroni <= alpha, (metric, other.value, pw.p_bonferroni)
            ep_mean = pw.mean_a if pw.condition_a == EP.value else pw.mean_b
            other_mean = pw.mean_b if pw.condition_a == EP.value else pw.mean_a
            assert ep_mean > other_mean
    assert report.metrics["TT"].friedman.p_value <= alpha
    for fast in (EP, TA):
        for slow in (DWEP, DWTA):
            pw = pair("TT", fast, slow)
            assert pw.p_bonferroni <= alpha, (fast.value, slow.value)
            fast_mean = pw.mean_a if pw.condition_a == fast.value else pw.mean_b
            slow_mean = pw.mean_b if pw.condition_a == fast.value else pw.mean_a
            assert fast_mean < slow_mean

    assert total_seconds < 120.0
    ok("ordering-reproduction",
       f"PM {pm[DWTA]:.2f}<{pm[DWEP]:.2f}<{pm[TA]:.2f}<{pm[EP]:.2f} mm, "
       f"RM {rm[DWTA]:.2f}<={rm[DWEP]:.2f}<={rm[TA]:.2f}<{rm[EP]:.2f} deg, "
       f"TT {tt[EP]:.2f}<{tt[TA]:.2f}<{tt[DWEP]:.2f}<{tt[DWTA]:.2f} s, "
       f"all 9 key pairs p_bonf<=0.05, {total_seconds:.1f}s < 120s")


def test_sample_count(default_run):
    """Default run yields exactly 35 x 4 x 16 = 2240 records."""
    _, dataset, _ = default_run
    assert len(dataset.records) == 2240
    ok("sample-count", "2240 records")


def test_worker_determinism(default_run):
    """Same seed, different worker counts: byte-identical dataset CSV."""
    config, dataset, _ = default_run
    csv_serial = records_to_csv(dataset.records)
    csv_parallel = records_to_csv(run_experiment(config, workers=4).records)
    assert csv_serial == csv_parallel
    ok("worker-determinism",
       f"workers 1 vs 4, {len(csv_serial)} CSV bytes identical")


def test_dwta_precision_time_tradeoff(default_run):
    """Pearson r(PM, TT) over DWTA subject means is negative: subjects who
    spend longer land closer. Sign only."""
    _, dataset, _ = default_run
    by_subject = {}
    for r in dataset.records:
        if r.condition is DWTA:
            by_subject.setdefault(r.subject_id, []).append(r)
    pm_means, tt_means = [], []
    for sid in sorted(by_subject):
        rows = by_subject[sid]
        pm_means.append(sum(r.error.pm for r in rows) / len(rows))
        tt_means.append(sum(r.task_time for r in rows) / len(rows))
    res = pearson(pm_means, tt_means)
    assert res.statistic < 0.0
    ok("pm-tt-tradeoff", f"DWTA r(PM,TT) = {res.statistic:.3f} < 0")
