//! The entropy penalty must shrink the per-class gate: with the penalty on,
//! strictly fewer concepts clear the 0.5 gate threshold than without it.

use entropy_lens_core::dataset::synth_toy;
use entropy_lens_core::train::{train, EntropyNetwork, RegularizerKind, TrainConfig};

fn run(lambda: f64, kind: RegularizerKind) -> (usize, f64) {
    let toy = synth_toy(20);
    let config = TrainConfig {
        lambda,
        tau: 0.3,
        learning_rate: 5e-3,
        max_epochs: 4000,
        regularizer: kind,
        seed: 1,
        early_stopping: false,
        hidden: vec![10, 6],
        ..TrainConfig::default()
    };
    let network = EntropyNetwork::new(toy.concept_count(), toy.class_count(), &config).unwrap();
    let (net, history) = train(network, &toy, &toy, &config).unwrap();
    let scores = net.scores();
    let class_y_open_gates = scores[0].gate.iter().filter(|&&g| g >= 0.5).count();
    (
        class_y_open_gates,
        history.epochs.last().unwrap().train_accuracy,
    )
}

#[test]
fn entropy_penalty_shrinks_the_gate() {
    let (open_without, acc_without) = run(0.0, RegularizerKind::None);
    let (open_with, acc_with) = run(1e-3, RegularizerKind::Entropy);
    assert_eq!(acc_without, 1.0);
    assert_eq!(acc_with, 1.0);
    assert!(
        open_with < open_without,
        "regularized gate kept {open_with} concepts, unregularized {open_without}"
    );
}
