//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

mod common;

use std::io::Write;
use std::time::Instant;

use cmseq::classify::{full_report, verify_composition, Classifier};
use cmseq::models::{
    assemble_precision, build, check_markov, check_reciprocity, random_law, BoundaryCondition, Direction, LawClass,
};
use cmseq::oracle::{
    oracle_cm_interval, oracle_cm_interval_reverse, oracle_markov, oracle_markov_reverse, oracle_reciprocal,
};
use cmseq::simulate::{sample, sample_covariance};
use cmseq::structure::{detect, PatternKind, PatternSpec};
use cmseq::{ConditioningSide, IndexInterval, Mat, SequenceLaw, Tolerance};
use common::{cmseq, fixture, golden, path_str, read_json, same_report};

const PER_CLASS: usize = 200;

const VARIANTS: [(Direction, ConditioningSide, BoundaryCondition); 6] = [
    (Direction::Forward, ConditioningSide::Last, BoundaryCondition::Bc1),
    (Direction::Forward, ConditioningSide::Last, BoundaryCondition::Bc2),
    (Direction::Forward, ConditioningSide::First, BoundaryCondition::Bc1),
    (Direction::Backward, ConditioningSide::First, BoundaryCondition::Bc1),
    (Direction::Backward, ConditioningSide::First, BoundaryCondition::Bc2),
    (Direction::Backward, ConditioningSide::Last, BoundaryCondition::Bc1),
];

struct Case {
    class: LawClass,
    seed: u64,
    law: SequenceLaw,
}

/// 200 laws per class with `N` cycling through 3..=6 and `d` through 1..=2.
fn corpus() -> Vec<Case> {
    let mut out = Vec::new();
    for (ci, class) in LawClass::ALL.into_iter().enumerate() {
        for i in 0..PER_CLASS {
            let last = 3 + i % 4;
            let dim = 1 + (i / 4) % 2;
            let seed = 10_000 * ci as u64 + i as u64;
            out.push(Case {
                class,
                seed,
                law: random_law(class, last, dim, seed).unwrap(),
            });
        }
    }
    out
}

fn verdict(criterion: &str, failures: &[String]) {
    let line = if failures.is_empty() {
        format!("criterion {criterion}: PASS\n")
    } else {
        format!(
            "criterion {criterion}: FAIL ({} failures; first: {})\n",
            failures.len(),
            failures[0]
        )
    };
    // Written to the raw handle so the line shows up even when output is captured.
    std::io::stdout().write_all(line.as_bytes()).unwrap();
    assert!(failures.is_empty(), "{line}");
}

fn describe(case: &Case) -> String {
    format!(
        "{} seed={} N={} d={}",
        case.class.as_str(),
        case.seed,
        case.law.last(),
        case.law.dim()
    )
}

fn rel(a: &Mat, b: &Mat) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn criterion_1_classifier_matches_oracle() {
    let tol = Tolerance::new(1e-9, 1e-8).unwrap();
    let start = Instant::now();
    let mut failures = Vec::new();
    for case in corpus() {
        let law = &case.law;
        let r = full_report(law, &tol).unwrap();
        let mut check = |flag: &str, ours: bool, oracle: bool| {
            if ours != oracle {
                failures.push(format!("{}: {flag} classifier={ours} oracle={oracle}", describe(&case)));
            }
        };
        check("markov", r.markov.holds, oracle_markov(law, &tol).unwrap().holds);
        check(
            "markov (reverse form)",
            r.markov.holds,
            oracle_markov_reverse(law, &tol).unwrap().holds,
        );
        check(
            "reciprocal",
            r.reciprocal.holds,
            oracle_reciprocal(law, &tol).unwrap().holds,
        );
        let full = IndexInterval::full(law.last());
        for (flag, v, side) in [
            ("cm_l", &r.cm_l, ConditioningSide::Last),
            ("cm_f", &r.cm_f, ConditioningSide::First),
        ] {
            check(flag, v.holds, oracle_cm_interval(law, full, side, &tol).unwrap().holds);
            check(
                flag,
                v.holds,
                oracle_cm_interval_reverse(law, full, side, &tol).unwrap().holds,
            );
        }
        for iv in &r.interval_cm {
            let flag = format!("[{},{}]-{}", iv.interval.lo, iv.interval.hi, iv.side.as_str());
            let o = oracle_cm_interval(law, iv.interval, iv.side, &tol).unwrap().holds;
            let o2 = oracle_cm_interval_reverse(law, iv.interval, iv.side, &tol)
                .unwrap()
                .holds;
            check(&flag, iv.verdict.holds, o);
            check(&flag, iv.verdict.holds, o2);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 60.0 {
        failures.push(format!("took {secs:.1} s"));
    }
    verdict("1 (classifier vs oracle)", &failures);
}

#[test]
fn criterion_2_reciprocal_iff_both_cm_and_composition() {
    let tol = Tolerance::default();
    let mut failures = Vec::new();
    for case in corpus() {
        let r = full_report(&case.law, &tol).unwrap();
        if r.reciprocal.holds != (r.cm_l.holds && r.cm_f.holds) {
            failures.push(format!("{}: reciprocal != cm_l && cm_f", describe(&case)));
        }
        if !verify_composition(&case.law, &tol).unwrap() {
            failures.push(format!("{}: composition", describe(&case)));
        }
    }
    verdict("2 (reciprocal iff CM_L and CM_F; composition)", &failures);
}

struct RoundTrip {
    failures: Vec<String>,
    cmc_failures: Vec<String>,
    worst: f64,
}

fn round_trips() -> RoundTrip {
    let mut out = RoundTrip {
        failures: Vec::new(),
        cmc_failures: Vec::new(),
        worst: 0.0,
    };
    let tol = Tolerance::default();
    for case in corpus() {
        let c = case.law.covariance().data();
        let cls = Classifier::new(&case.law, tol).unwrap();
        let mut assembled = Vec::new();
        for (dir, side, bc) in VARIANTS {
            let m = build(&case.law, dir, side, bc).unwrap();
            let a = assemble_precision(&m).unwrap();
            let cov = SequenceLaw::from_precision(&a).unwrap();
            let err = rel(cov.covariance().data(), c);
            out.worst = out.worst.max(err);
            let cmc = cls.cmc(side).unwrap().holds;
            if err >= 1e-8 {
                let msg = format!(
                    "{}: {} c={} {} error {err:.2e}",
                    describe(&case),
                    dir.as_str(),
                    side.as_str(),
                    bc.as_str()
                );
                if cmc {
                    out.cmc_failures.push(msg.clone());
                }
                out.failures.push(msg);
            }
            assembled.push((dir, side, bc, cmc, a));
        }
        for pair in assembled.windows(2) {
            let ((d1, s1, b1, cmc, a1), (d2, s2, b2, _, a2)) = (&pair[0], &pair[1]);
            if (d1, s1) != (d2, s2) || b1 == b2 {
                continue;
            }
            let err = rel(a1.data(), a2.data());
            if err > 1e-9 {
                let msg = format!(
                    "{}: {} c={} bc1 vs bc2 {err:.2e}",
                    describe(&case),
                    d1.as_str(),
                    s1.as_str()
                );
                if *cmc {
                    out.cmc_failures.push(msg.clone());
                }
                out.failures.push(msg);
            }
        }
    }
    out
}

/// The literal criterion: every corpus law and every model variant. A CM_c
/// model can only represent CM_c laws, so laws that are not CM_c for a side
/// cannot round-trip through that side's models.
#[test]
fn criterion_3_model_round_trip() {
    let r = round_trips();
    let mut by_kind = std::collections::BTreeMap::<String, usize>::new();
    for f in &r.failures {
        let class = f.split(' ').next().unwrap_or("");
        let kind = if f.contains("bc1 vs bc2") {
            "bc1/bc2"
        } else {
            "round trip"
        };
        *by_kind.entry(format!("{class} {kind}")).or_default() += 1;
    }
    let line = format!(
        "criterion 3 breakdown: {by_kind:?}, worst relative error {:.3e}\n",
        r.worst
    );
    std::io::stdout().write_all(line.as_bytes()).unwrap();
    verdict("3 (model round trip, all laws and variants)", &r.failures);
}

/// Round trip restricted to the (law, side) pairs where the law is CM_c.
#[test]
fn criterion_3_model_round_trip_cmc_laws() {
    let r = round_trips();
    verdict("3 (model round trip, CM_c laws only)", &r.cmc_failures);
}

#[test]
fn criterion_4_parameter_conditions() {
    let tol = Tolerance::default();
    let mut failures = Vec::new();
    for case in corpus() {
        let rec = cmseq::classify::classify_reciprocal(&case.law, &tol).unwrap().holds;
        let mar = cmseq::classify::classify_markov(&case.law, &tol).unwrap().holds;
        let n = case.law.last();
        for (dir, side, bc) in VARIANTS {
            let m = build(&case.law, dir, side, bc).unwrap();
            let a = assemble_precision(&m).unwrap();
            let r = check_reciprocity(&m, tol.residual_tol).unwrap().holds;
            let mk = r && check_markov(&m, tol.residual_tol).unwrap().holds;
            let cyc = detect(&a, PatternSpec::new(PatternKind::CyclicTridiagonal, n), &tol)
                .unwrap()
                .conforms;
            let tri = detect(&a, PatternSpec::new(PatternKind::Tridiagonal, n), &tol)
                .unwrap()
                .conforms;
            let tag = format!(
                "{} {} c={} {}",
                describe(&case),
                dir.as_str(),
                side.as_str(),
                bc.as_str()
            );
            if r != rec || r != cyc {
                failures.push(format!("{tag}: reciprocity params={r} law={rec} pattern={cyc}"));
            }
            if mk != mar || mk != tri {
                failures.push(format!("{tag}: markov params={mk} law={mar} pattern={tri}"));
            }
        }
    }
    verdict("4 (parameter conditions vs classification)", &failures);
}

#[test]
fn criterion_5_ar1_worked_example() {
    // Direct conditioning arithmetic on C_ij = 0.5^|i-j|.
    let c = |i: i32, j: i32| 0.5f64.powi((i - j).abs());
    let (s00, s02, s22) = (c(0, 0), c(0, 2), c(2, 2));
    let det = s00 * s22 - s02 * s02;
    let g10 = (s22 * c(1, 0) - s02 * c(1, 2)) / det;
    let g12 = (s00 * c(1, 2) - s02 * c(1, 0)) / det;
    let g1 = c(1, 1) - g10 * c(0, 1) - g12 * c(2, 1);
    let g20 = c(2, 0) / c(0, 0);
    let g2 = c(2, 2) - g20 * c(0, 2);
    let oracle = [g10, g12, g1, g20, g2];
    let printed = [0.4, 0.4, 0.6, 0.25, 0.9375];

    let law = SequenceLaw::ar1(0.5, 2).unwrap();
    let m = build(&law, Direction::Forward, ConditioningSide::Last, BoundaryCondition::Bc1).unwrap();
    let ours = [
        m.transition[&1][(0, 0)],
        m.conditioning[&1][(0, 0)],
        m.noise[1][(0, 0)],
        m.boundary_gain.as_ref().unwrap()[(0, 0)],
        m.noise[2][(0, 0)],
    ];
    let names = ["G_{1,0}", "G_{1,2}", "G_1", "G_{2,0}", "G_2"];
    let mut failures = Vec::new();
    for i in 0..5 {
        if (ours[i] - oracle[i]).abs() > 1e-12 || (ours[i] - printed[i]).abs() > 1e-12 {
            failures.push(format!(
                "{} = {} (oracle {}, printed {})",
                names[i], ours[i], oracle[i], printed[i]
            ));
        }
    }
    verdict("5 (AR(1) worked example)", &failures);
}

#[test]
fn criterion_6_monte_carlo() {
    let law = SequenceLaw::ar1(0.5, 4).unwrap();
    let model = build(&law, Direction::Forward, ConditioningSide::Last, BoundaryCondition::Bc1).unwrap();
    let (m, seed) = (100_000, 20_240_601);
    let mut failures = Vec::new();

    let start = Instant::now();
    let batch = sample(&model, m, seed).unwrap();
    let est = sample_covariance(&batch).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let dev = (est.data() - law.covariance().data()).amax();
    if dev >= 0.02 {
        failures.push(format!("max deviation {dev:.4}"));
    }
    if secs >= 10.0 {
        failures.push(format!("took {secs:.1} s"));
    }

    let text = |b: &cmseq::simulate::SampleBatch| cmseq_cli::commands::batch_csv(b).unwrap();
    let reference = text(&batch);
    if text(&sample(&model, m, seed).unwrap()) != reference {
        failures.push("rerun differs".into());
    }
    for threads in [1, 4] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let b = pool.install(|| sample(&model, m, seed).unwrap());
        if text(&b) != reference {
            failures.push(format!("{threads}-thread run differs"));
        }
        let c = pool.install(|| sample_covariance(&b).unwrap());
        if c.data()
            .as_slice()
            .iter()
            .map(|x| x.to_bits())
            .ne(est.data().as_slice().iter().map(|x| x.to_bits()))
        {
            failures.push(format!("{threads}-thread covariance differs"));
        }
    }

    let dir = tempfile::tempdir().unwrap();
    let model_path = dir.path().join("model.json");
    std::fs::write(
        &model_path,
        cmseq_cli::json::to_string(&cmseq_cli::files::ModelFile::from_model(&model)),
    )
    .unwrap();
    let outs: Vec<Vec<u8>> = (0..2)
        .map(|i| {
            let out = dir.path().join(format!("run{i}.csv"));
            let seed = seed.to_string();
            let r = cmseq(&[
                "simulate",
                path_str(&model_path),
                "--samples",
                "100000",
                "--seed",
                &seed,
                "--out",
                path_str(&out),
            ]);
            assert_eq!(r.code, 0, "{}", r.stderr);
            std::fs::read(out).unwrap()
        })
        .collect();
    if outs[0] != outs[1] || outs[0] != reference.as_bytes() {
        failures.push("CLI output not byte-identical".into());
    }
    verdict(
        &format!("6 (Monte Carlo, max deviation {dev:.4}, {secs:.2} s)"),
        &failures,
    );
}

#[test]
fn criterion_7_cli_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut failures = Vec::new();
    let mut exact = 0;
    let mut total = 0;
    let mut compare = |out: &std::path::Path, g: &std::path::Path, failures: &mut Vec<String>| {
        total += 1;
        let (a, b) = (std::fs::read(out).unwrap(), std::fs::read(g).unwrap());
        if a == b {
            exact += 1;
        } else if let Err(e) = same_report(&read_json(out), &read_json(g), &g.display().to_string()) {
            failures.push(e);
        }
    };
    for name in ["identity", "ar1", "a_cyc", "a_cml"] {
        let law = fixture(&format!("{name}.json"));
        let mut first: Option<Vec<Vec<u8>>> = None;
        for run in 0..2 {
            let mut produced = Vec::new();
            let report = dir.path().join(format!("classify_{name}_{run}.json"));
            let r = cmseq(&["classify", path_str(&law), "--out", path_str(&report)]);
            if r.code != 0 {
                failures.push(format!("classify {name} exited {}", r.code));
                continue;
            }
            compare(&report, &golden(&format!("classify_{name}.json")), &mut failures);
            produced.push(std::fs::read(&report).unwrap());
            for (tag, args) in [
                ("forward_last_bc1", ["forward", "last", "bc1"]),
                ("backward_first_bc2", ["backward", "first", "bc2"]),
            ] {
                let model = dir.path().join(format!("model_{name}_{tag}_{run}.json"));
                let verify = dir.path().join(format!("verify_{name}_{tag}_{run}.json"));
                let r = cmseq(&[
                    "convert",
                    path_str(&law),
                    "--direction",
                    args[0],
                    "--c",
                    args[1],
                    "--bc",
                    args[2],
                    "--out",
                    path_str(&model),
                ]);
                let v = cmseq(&["verify", path_str(&model), "--out", path_str(&verify)]);
                if r.code != 0 || v.code != 0 {
                    failures.push(format!("convert/verify {name} {tag} exited {}/{}", r.code, v.code));
                    continue;
                }
                compare(&verify, &golden(&format!("verify_{name}_{tag}.json")), &mut failures);
                produced.push(std::fs::read(&verify).unwrap());
            }
            match &first {
                None => first = Some(produced),
                Some(f) if *f != produced => failures.push(format!("{name}: reports differ between runs")),
                _ => {}
            }
        }
    }
    let out = dir.path().join("never.json");
    let cases = [
        ("classify", "malformed/truncated.json", 2),
        ("classify", "malformed/missing_covariance.json", 2),
        ("classify", "malformed/wrong_version.json", 2),
        ("classify", "malformed/ragged.json", 2),
        ("classify", "malformed/not_spd.json", 3),
        ("classify", "malformed/asymmetric.json", 3),
        ("verify", "malformed/model_bad_kind.json", 2),
        ("verify", "malformed/model_first_bc2.json", 2),
        ("verify", "malformed/model_negative_noise.json", 3),
    ];
    for (cmd, file, code) in cases {
        let r = cmseq(&[cmd, path_str(&fixture(file)), "--out", path_str(&out)]);
        if r.code != code {
            failures.push(format!("{cmd} {file}: exit {} (expected {code})", r.code));
        }
    }
    let ar1 = fixture("ar1.json");
    let r = cmseq(&[
        "convert",
        path_str(&ar1),
        "--direction",
        "forward",
        "--c",
        "first",
        "--bc",
        "bc2",
        "--out",
        path_str(&out),
    ]);
    if r.code != 2 {
        failures.push(format!("convert c=first bc2: exit {}", r.code));
    }
    if out.exists() {
        failures.push("output written on failure".into());
    }
    verdict(
        &format!("7 (CLI golden files, {exact}/{total} byte-identical to shipped goldens)"),
        &failures,
    );
}
