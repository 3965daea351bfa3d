//! Rewrites the shipped law fixtures and the golden reports.
//!
//! Run with `cargo run -p cmseq-cli --example regen_fixtures` from the
//! workspace root after an intentional change to a report format.

use std::path::Path;

use cmseq::models::build;
use cmseq::{fixtures, BoundaryCondition, ConditioningSide, Direction, SequenceLaw, Tolerance};
use cmseq_cli::commands::{classify_text, verify_model};
use cmseq_cli::files::{LawFile, ModelFile};
use cmseq_cli::json;

const VARIANTS: [(&str, Direction, ConditioningSide, BoundaryCondition); 2] = [
    (
        "forward_last_bc1",
        Direction::Forward,
        ConditioningSide::Last,
        BoundaryCondition::Bc1,
    ),
    (
        "backward_first_bc2",
        Direction::Backward,
        ConditioningSide::First,
        BoundaryCondition::Bc2,
    ),
];

fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let fixture_dir = root.join("fixtures");
    let golden_dir = root.join("tests/golden");
    let laws: Vec<(&str, SequenceLaw)> = vec![
        ("identity", SequenceLaw::white(4, 2)),
        ("ar1", SequenceLaw::ar1(0.5, 2).unwrap()),
        ("a_cyc", fixtures::a_cyc_law()),
        ("a_cml", fixtures::a_cml_law()),
    ];
    let tol = Tolerance::default();
    for (name, law) in &laws {
        let write = |path: std::path::PathBuf, text: &str| std::fs::write(&path, text).unwrap();
        write(
            fixture_dir.join(format!("{name}.json")),
            &json::to_string(&LawFile::from_law(law)),
        );
        let (report, _) = classify_text(law, tol).unwrap();
        write(golden_dir.join(format!("classify_{name}.json")), &report);
        for (tag, dir, side, bc) in VARIANTS {
            let model = build(law, dir, side, bc).unwrap();
            let model_text = json::to_string(&ModelFile::from_model(&model));
            write(golden_dir.join(format!("model_{name}_{tag}.json")), &model_text);
            let verify = json::to_string(&verify_model(&model, tol).unwrap());
            write(golden_dir.join(format!("verify_{name}_{tag}.json")), &verify);
        }
    }
}
