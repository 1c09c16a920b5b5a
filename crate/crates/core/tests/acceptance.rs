//! One test per acceptance criterion. Each prints a single
//! `criterion N: PASS|FAIL ...` line; run with `--nocapture` to see them.

mod props;

use std::time::{Duration, Instant};

use lifemodel::ca::{hamming, step_grid, Boundary, BuiltinRule, Grid, RuleTable, PATTERN_COUNT};
use lifemodel::experiments::stats::{mann_whitney, mean, median};
use lifemodel::experiments::{
    degradation_sweep, mean_prediction_error, nstep_prediction_test, online_learning_run,
    patterns_needed, recommended_value, run_many, AgentKind, ExperimentSpec, ModelSource,
    RunRecord, TuningSettings,
};
use lifemodel::game::random_start;
use lifemodel::learners::{harvest_transitions, Dataset, LearnerKind};
use lifemodel::seed::{rng_for, TAG_START};

const ALPHA: f64 = 0.05;

fn report(n: u32, pass: bool, detail: String) {
    println!(
        "criterion {n}: {} {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {n} failed: {detail}");
}

fn gol() -> RuleTable {
    BuiltinRule::GameOfLife.table()
}

fn finals(records: &[RunRecord]) -> Vec<f64> {
    records.iter().map(|r| r.final_score() as f64).collect()
}

/// Next state by counting live neighbours directly on the torus.
fn direct_step(grid: &Grid, rule: &dyn Fn(u8, u32) -> u8) -> Grid {
    let (w, h) = (grid.width(), grid.height());
    let mut next = Grid::new(w, h, Boundary::Torus).unwrap();
    for y in 0..h {
        for x in 0..w {
            let mut n = 0;
            for dy in [h - 1, 0, 1] {
                for dx in [w - 1, 0, 1] {
                    if (dx, dy) != (0, 0) {
                        n += grid.get((x + dx) % w, (y + dy) % h) as u32;
                    }
                }
            }
            next.set(x, y, rule(grid.get(x, y), n) == 1).unwrap();
        }
    }
    next
}

fn life(c: u8, n: u32) -> u8 {
    (n == 3 || (c == 1 && n == 2)) as u8
}

fn cave(_centre: u8, n: u32) -> u8 {
    (n > 4) as u8
}

/// Truth table built from bit arithmetic alone, without the library's decoder.
fn brute_table(rule: fn(u8, u32) -> u8) -> Vec<u8> {
    (0..PATTERN_COUNT as u32)
        .map(|code| {
            let centre = ((code >> 4) & 1) as u8;
            rule(centre, code.count_ones() - centre as u32)
        })
        .collect()
}

#[test]
fn criterion_1_rule_tables_match_direct_evaluation() {
    let tables = [
        (gol(), life as fn(u8, u32) -> u8),
        (BuiltinRule::cave(4).unwrap().table(), cave),
    ];
    let grids: Vec<Grid> = (0..1000u64)
        .map(|i| {
            random_start(
                30,
                30,
                Boundary::Torus,
                0.5,
                &mut rng_for(1, &[TAG_START, i]),
            )
            .unwrap()
        })
        .collect();

    let started = Instant::now();
    let stepped: Vec<Vec<Grid>> = tables
        .iter()
        .map(|(t, _)| grids.iter().map(|g| step_grid(g, t)).collect())
        .collect();
    let elapsed = started.elapsed();

    let mut mismatched = 0;
    for ((_, rule), out) in tables.iter().zip(&stepped) {
        for (g, s) in grids.iter().zip(out) {
            mismatched += s.mismatches(&direct_step(g, rule));
        }
    }
    let (life_t, cave_t) = (brute_table(life), brute_table(cave));
    let ones = |v: &[u8]| v.iter().filter(|&&b| b == 1).count();
    let gap = life_t.iter().zip(&cave_t).filter(|(a, b)| a != b).count();
    let tables_agree =
        tables[0].0.outputs()[..] == life_t[..] && tables[1].0.outputs()[..] == cave_t[..];

    let pass = mismatched == 0
        && tables_agree
        && ones(&life_t) == 140
        && ones(&cave_t) == 186
        && gap == 326
        && hamming(&tables[0].0, &tables[1].0) == 326
        && elapsed < Duration::from_secs(1);
    report(
        1,
        pass,
        format!(
            "mismatched cells {mismatched}, ones {}/{}, hamming {gap}, tables agree {tables_agree}, \
             2000 steps in {elapsed:?}",
            ones(&life_t),
            ones(&cave_t)
        ),
    );
}

#[test]
fn criterion_2_exact_learner_needs_twenty_transitions() {
    let truth = gol();
    let started = Instant::now();
    let perfect = (0..50u64)
        .filter(|&seed| {
            let mut data = Dataset::new();
            for i in 0..20 {
                let before = random_start(
                    30,
                    30,
                    Boundary::Torus,
                    0.5,
                    &mut rng_for(seed, &[TAG_START, i]),
                )
                .unwrap();
                data.merge(&harvest_transitions(&before, &step_grid(&before, &truth)).unwrap());
            }
            let mut learner = LearnerKind::Exact.build(seed);
            learner.observe_all(&data);
            learner.refit().unwrap();
            hamming(&learner.compile_to_table(), &truth) == 0
        })
        .count();
    let elapsed = started.elapsed();
    let pass = perfect * 10 >= 50 * 9 && elapsed < Duration::from_secs(10);
    report(
        2,
        pass,
        format!("{perfect}/50 seeds reach hamming 0 in {elapsed:?}"),
    );
}

#[test]
fn criterion_3_decision_tree_generalises() {
    let truth = gol();
    let mut spec = ExperimentSpec::new(truth.clone(), 3);
    spec.repeats = 30;
    let records = online_learning_run(LearnerKind::DecisionTree, &spec).unwrap();

    let dominated = records
        .iter()
        .filter(|r| r.correct.iter().zip(&r.observed).all(|(c, o)| c >= o))
        .count();
    let mut earlier = 0;
    let mut needed = Vec::new();
    for r in &records {
        let tree = patterns_needed(LearnerKind::DecisionTree, &r.stream, &truth, 0).unwrap();
        let exact = patterns_needed(LearnerKind::Exact, &r.stream, &truth, 0).unwrap();
        earlier += match (tree, exact) {
            (Some(t), Some(e)) => t < e,
            (Some(_), None) => true,
            _ => false,
        } as usize;
        needed.push(format!(
            "{}/{}",
            tree.map_or("-".into(), |n| n.to_string()),
            exact.map_or("-".into(), |n| n.to_string())
        ));
    }
    let pass = dominated == 30 && earlier * 10 >= 30 * 8;
    report(
        3,
        pass,
        format!(
            "(a) correct >= observed on {dominated}/30 seeds; (b) tree strictly earlier on {earlier}/30 \
             seeds (tree/exact patterns: {})",
            needed.join(" ")
        ),
    );
}

#[test]
fn criterion_4_nstep_test() {
    let truth = gol();
    let mut spec = ExperimentSpec::new(truth.clone(), 4);
    let starts: Vec<Grid> = (0..100)
        .map(|i| spec.prediction_start(i).unwrap())
        .collect();
    let perfect = nstep_prediction_test(&truth, &truth, &starts, 30).unwrap();

    spec.model = ModelSource::Degraded { known: 480 };
    let degraded = spec.initial_model(0).unwrap();
    let errors = nstep_prediction_test(&degraded, &truth, &starts, 30).unwrap();
    let at5 = errors[4];

    let pass = perfect.iter().all(|&e| e == 0.0) && at5 > 0.0;
    report(
        4,
        pass,
        format!(
            "perfect max divergence {}, 480-known mean error at tick 5 = {at5:.3} cells (tick 30 = {:.3})",
            perfect.iter().cloned().fold(0.0, f64::max),
            errors[29]
        ),
    );
}

#[test]
fn criterion_5_rhea_beats_baselines() {
    let started = Instant::now();
    let mut spec = ExperimentSpec::new(gol(), 5);
    spec.repeats = 30;
    let scores: Vec<Vec<f64>> = [AgentKind::Rhea, AgentKind::Random, AgentKind::Nothing]
        .into_iter()
        .map(|agent| {
            spec.agent = agent;
            finals(&run_many(&spec).unwrap())
        })
        .collect();
    let elapsed = started.elapsed();
    let vs_random = mann_whitney(&scores[0], &scores[1]).p_value;
    let vs_nothing = mann_whitney(&scores[0], &scores[2]).p_value;
    let (rhea, random, nothing) = (mean(&scores[0]), mean(&scores[1]), mean(&scores[2]));
    let pass = rhea > random
        && rhea > nothing
        && vs_random < ALPHA
        && vs_nothing < ALPHA
        && elapsed < Duration::from_secs(600);
    report(
        5,
        pass,
        format!(
            "mean final score RHEA {rhea:.1}, Random {random:.1} (p={vs_random:.2e}), Nothing {nothing:.1} \
             (p={vs_nothing:.2e}), {elapsed:?}"
        ),
    );
}

#[test]
fn criterion_6_scores_degrade_with_model_quality() {
    let mut spec = ExperimentSpec::new(gol(), 6);
    spec.repeats = 25;
    let cells = degradation_sweep(&spec, &[512, 448, 256], &[AgentKind::Rhea]).unwrap();
    let scores: Vec<Vec<f64>> = cells.iter().map(|c| finals(&c.records)).collect();
    let means: Vec<f64> = scores.iter().map(|s| mean(s)).collect();
    let errors: Vec<f64> = cells
        .iter()
        .map(|c| {
            mean(
                &c.records
                    .iter()
                    .map(mean_prediction_error)
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    let p = [
        mann_whitney(&scores[0], &scores[1]).p_value,
        mann_whitney(&scores[1], &scores[2]).p_value,
        mann_whitney(&scores[0], &scores[2]).p_value,
    ];
    let pass = means[0] > means[1]
        && means[1] > means[2]
        && p.iter().all(|&p| p < ALPHA)
        && errors[0] < errors[1]
        && errors[1] < errors[2];
    report(
        6,
        pass,
        format!(
            "mean score 512/448/256 = {:.1}/{:.1}/{:.1}, p = {:.2e}/{:.2e}/{:.2e}, \
             prediction error = {:.2}/{:.2}/{:.2}",
            means[0], means[1], means[2], p[0], p[1], p[2], errors[0], errors[1], errors[2]
        ),
    );
}

#[test]
fn criterion_7_tuning_prefers_short_sequences_under_model_error() {
    let spec = ExperimentSpec::new(gol(), 7);
    let mut fitness = Vec::new();
    let mut lengths = Vec::new();
    for known in [512, 480] {
        let settings = TuningSettings::new(known, 20);
        assert_eq!(
            (
                settings.ntbea.budget,
                settings.ntbea.k,
                settings.ntbea.epsilon
            ),
            (100, 300.0, 0.5)
        );
        let runs = lifemodel::experiments::tuning_experiment(&spec, &settings).unwrap();
        fitness.push(runs.iter().map(|r| r.fitness).collect::<Vec<_>>());
        lengths.push(median(
            &runs
                .iter()
                .map(|r| recommended_value(r, 2))
                .collect::<Vec<_>>(),
        ));
    }
    let p = mann_whitney(&fitness[0], &fitness[1]).p_value;
    let (perfect, degraded) = (mean(&fitness[0]), mean(&fitness[1]));
    let pass = perfect > degraded && p < ALPHA && lengths[1] <= lengths[0];
    report(
        7,
        pass,
        format!(
            "(a) fitness perfect {perfect:.1} vs 480-known {degraded:.1}, p={p:.2e}; \
             (b) median sequenceLength 480-known {} vs perfect {}",
            lengths[1], lengths[0]
        ),
    );
}

#[test]
fn criterion_8_property_suites() {
    const _: () = assert!(props::CASES >= 1000);
    let failures: Vec<String> = props::ALL
        .iter()
        .filter_map(|(name, prop)| prop().err().map(|e| format!("{name}: {e}")))
        .collect();
    report(
        8,
        failures.is_empty(),
        format!(
            "{}/{} properties hold at {} cases each{}",
            props::ALL.len() - failures.len(),
            props::ALL.len(),
            props::CASES,
            failures
                .iter()
                .map(|f| format!("; {f}"))
                .collect::<String>()
        ),
    );
}
