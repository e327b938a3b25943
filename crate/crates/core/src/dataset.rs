//! Concept datasets: validated activation matrices with named concepts and
//! binary multi-class targets, plus synthetic generators and stratified
//! fold assignment.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::math::Matrix;
use crate::rng;

/// Matrix of concept activations in `[0, 1]` with concept names and binary
/// multi-class targets.
///
/// Single-label tasks carry one-hot target rows; paired-complement tasks
/// (such as the XOR/OR toy problem) legitimately carry several true bits per
/// row, so only "at least one true target" is enforced here.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptDataset {
    pub concepts: Matrix,
    pub concept_names: Vec<String>,
    /// `n x classes` boolean membership matrix.
    pub targets: Vec<Vec<bool>>,
    pub class_names: Vec<String>,
    /// Free-form source descriptor ("toy", "parity(n=..)", or a file path).
    pub provenance: String,
}

impl ConceptDataset {
    pub fn new(
        concepts: Matrix,
        concept_names: Vec<String>,
        targets: Vec<Vec<bool>>,
        class_names: Vec<String>,
        provenance: String,
    ) -> Result<Self> {
        if concepts.rows() == 0 {
            return Err(Error::InvalidDataset("no samples".to_string()));
        }
        if concept_names.len() != concepts.cols() {
            return Err(Error::InvalidDataset(format!(
                "{} concept names for {} columns",
                concept_names.len(),
                concepts.cols()
            )));
        }
        if targets.len() != concepts.rows() {
            return Err(Error::InvalidDataset(format!(
                "{} target rows for {} samples",
                targets.len(),
                concepts.rows()
            )));
        }
        let r = class_names.len();
        if r == 0 {
            return Err(Error::InvalidDataset("no target classes".to_string()));
        }
        for (i, row) in targets.iter().enumerate() {
            if row.len() != r {
                return Err(Error::InvalidDataset(format!(
                    "target row {i} has {} entries, expected {r}",
                    row.len()
                )));
            }
            if !row.iter().any(|&t| t) {
                return Err(Error::InvalidDataset(format!(
                    "target row {i} has no true class"
                )));
            }
        }
        let mut seen = BTreeMap::new();
        for (j, name) in concept_names.iter().enumerate() {
            if let Some(prev) = seen.insert(name.clone(), j) {
                return Err(Error::InvalidDataset(format!(
                    "duplicate concept name '{name}' at columns {prev} and {j}"
                )));
            }
        }
        for s in 0..concepts.rows() {
            for (j, &v) in concepts.row(s).iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidDataset(format!(
                        "concept value {v} at (row {s}, column '{}') outside [0, 1]",
                        concept_names[j]
                    )));
                }
            }
        }
        Ok(Self {
            concepts,
            concept_names,
            targets,
            class_names,
            provenance,
        })
    }

    pub fn samples(&self) -> usize {
        self.concepts.rows()
    }

    pub fn concept_count(&self) -> usize {
        self.concepts.cols()
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    /// New dataset holding the given sample indices, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidDataset("empty subset".to_string()));
        }
        let k = self.concept_count();
        let mut data = Vec::with_capacity(indices.len() * k);
        let mut targets = Vec::with_capacity(indices.len());
        for &i in indices {
            assert!(i < self.samples(), "subset index {i} out of range");
            data.extend_from_slice(self.concepts.row(i));
            targets.push(self.targets[i].clone());
        }
        Ok(Self {
            concepts: Matrix::new(indices.len(), k, data)?,
            concept_names: self.concept_names.clone(),
            targets,
            class_names: self.class_names.clone(),
            provenance: self.provenance.clone(),
        })
    }

    /// The target pattern of a row, used as the stratification key.
    fn stratum_key(&self, row: usize) -> Vec<bool> {
        self.targets[row].clone()
    }
}

/// The eight-row XOR/OR toy problem over concepts `x1..x4`, padded with
/// `n_pad` always-zero concepts.
///
/// Class `y` is `x1 XOR x2`, class `z` is `x3 OR x4`, and `not_y`/`not_z`
/// are their complements.
pub fn synth_toy(n_pad: usize) -> ConceptDataset {
    const ROWS: [[f64; 4]; 8] = [
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
        [1.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0, 1.0],
    ];
    let k = 4 + n_pad;
    let mut data = Vec::with_capacity(8 * k);
    let mut targets = Vec::with_capacity(8);
    for row in ROWS {
        data.extend_from_slice(&row);
        data.extend(core::iter::repeat_n(0.0, n_pad));
        let y = (row[0] >= 0.5) != (row[1] >= 0.5);
        let z = (row[2] >= 0.5) || (row[3] >= 0.5);
        targets.push(vec![y, !y, z, !z]);
    }
    let mut concept_names: Vec<String> =
        ["x1", "x2", "x3", "x4"].iter().map(|s| s.to_string()).collect();
    for p in 0..n_pad {
        concept_names.push(format!("pad{}", p + 1));
    }
    let class_names = ["y", "not_y", "z", "not_z"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    ConceptDataset::new(
        Matrix::new(8, k, data).expect("toy rows are finite"),
        concept_names,
        targets,
        class_names,
        format!("toy(pad={n_pad})"),
    )
    .expect("toy dataset is well-formed")
}

/// Digit names used as parity concepts, index = digit value.
pub const DIGIT_NAMES: [&str; 10] = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine",
];

/// Parity dataset: a uniformly sampled digit 0-9 encoded as a one-hot
/// ten-concept vector, each bit independently flipped with probability
/// `noise`; the target is (even, odd).
pub fn synth_parity(n: usize, noise: f64, seed: u64) -> Result<ConceptDataset> {
    if n < 10 {
        return Err(Error::InvalidDataset(format!(
            "parity needs at least 10 samples, got {n}"
        )));
    }
    if !(0.0..0.5).contains(&noise) {
        return Err(Error::InvalidDataset(format!(
            "noise must lie in [0, 0.5), got {noise}"
        )));
    }
    let mut rng = rng::seeded(seed);
    let mut data = Vec::with_capacity(n * 10);
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        let digit = rng.gen_range(0..10usize);
        for j in 0..10 {
            let mut bit = (j == digit) as u8 as f64;
            // Noise draws are consumed unconditionally so the sampled digit
            // sequence is identical across noise settings for a given seed.
            if rng.gen::<f64>() < noise {
                bit = 1.0 - bit;
            }
            data.push(bit);
        }
        let even = digit % 2 == 0;
        targets.push(vec![even, !even]);
    }
    let concept_names = DIGIT_NAMES.iter().map(|s| s.to_string()).collect();
    let class_names = vec!["even".to_string(), "odd".to_string()];
    ConceptDataset::new(
        Matrix::new(n, 10, data)?,
        concept_names,
        targets,
        class_names,
        format!("parity(n={n}, noise={noise})"),
    )
}

/// Assigns every sample to exactly one test fold.
///
/// With `stratified` set, samples are grouped by their full target pattern,
/// each group is shuffled and dealt round-robin, and the dealing position
/// carries over between groups so total fold sizes stay balanced. Without
/// stratification the whole index range is shuffled and dealt.
pub fn assign_folds(
    dataset: &ConceptDataset,
    folds: usize,
    seed: u64,
    stratified: bool,
) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::InvalidConfig(format!(
            "cross-validation needs at least 2 folds, got {folds}"
        )));
    }
    if folds > dataset.samples() {
        return Err(Error::InvalidConfig(format!(
            "{folds} folds for {} samples",
            dataset.samples()
        )));
    }
    let mut rng = rng::seeded(seed);
    let mut assignment = vec![Vec::new(); folds];
    let mut cursor = 0usize;

    let groups: Vec<Vec<usize>> = if stratified {
        let mut by_pattern: BTreeMap<Vec<bool>, Vec<usize>> = BTreeMap::new();
        for i in 0..dataset.samples() {
            by_pattern.entry(dataset.stratum_key(i)).or_default().push(i);
        }
        by_pattern.into_values().collect()
    } else {
        vec![(0..dataset.samples()).collect()]
    };

    for mut group in groups {
        rng::shuffle(&mut rng, &mut group);
        for idx in group {
            assignment[cursor % folds].push(idx);
            cursor += 1;
        }
    }
    for fold in &mut assignment {
        fold.sort_unstable();
    }
    Ok(assignment)
}

/// Splits indices into (train, validation) with roughly `1/denominator` of
/// each stratum going to validation. Tiny strata round to zero and stay in
/// the training portion; the caller decides what to do when the validation
/// side comes back empty.
pub fn split_validation(
    dataset: &ConceptDataset,
    indices: &[usize],
    denominator: usize,
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    assert!(denominator >= 2, "validation fraction denominator must be >= 2");
    let mut by_pattern: BTreeMap<Vec<bool>, Vec<usize>> = BTreeMap::new();
    for &i in indices {
        by_pattern.entry(dataset.stratum_key(i)).or_default().push(i);
    }
    let mut rng = rng::seeded(seed);
    let mut train = Vec::new();
    let mut val = Vec::new();
    for (_, mut group) in by_pattern {
        rng::shuffle(&mut rng, &mut group);
        // Round n/denominator to nearest, half away from zero.
        let take = (2 * group.len() + denominator) / (2 * denominator);
        for (pos, idx) in group.into_iter().enumerate() {
            if pos < take {
                val.push(idx);
            } else {
                train.push(idx);
            }
        }
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_rows_match_the_reference_table() {
        let d = synth_toy(0);
        assert_eq!(d.samples(), 8);
        assert_eq!(d.concept_count(), 4);
        assert_eq!(d.class_count(), 4);
        // Row 2 (0,1,0,0): y holds, z does not.
        assert_eq!(d.targets[1], vec![true, false, false, true]);
        // Row 3 (1,0,0,0): y holds.
        assert_eq!(d.targets[2], vec![true, false, false, true]);
        // Row 8 (0,0,1,1): z holds, y does not.
        assert_eq!(d.targets[7], vec![false, true, true, false]);
    }

    #[test]
    fn toy_padding_adds_zero_concepts() {
        let d = synth_toy(100);
        assert_eq!(d.concept_count(), 104);
        for s in 0..8 {
            for j in 4..104 {
                assert_eq!(d.concepts.get(s, j), 0.0);
            }
        }
        assert_eq!(d.concept_names[4], "pad1");
        assert_eq!(d.concept_names[103], "pad100");
    }

    #[test]
    fn parity_clean_samples_are_one_hot() {
        let d = synth_parity(200, 0.0, 7).unwrap();
        assert_eq!(d.concept_count(), 10);
        for s in 0..d.samples() {
            let ones: Vec<usize> = (0..10).filter(|&j| d.concepts.get(s, j) == 1.0).collect();
            assert_eq!(ones.len(), 1);
            let digit = ones[0];
            assert_eq!(d.targets[s][0], digit % 2 == 0);
            assert_eq!(d.targets[s][1], digit % 2 == 1);
        }
    }

    #[test]
    fn parity_noise_flips_expected_bit_fraction() {
        // Monte Carlo count: each of the n*10 bits flips with p = 0.05.
        // The generator consumes noise draws unconditionally, so the same
        // seed yields the same digit sequence with and without noise and the
        // flips are directly countable.
        let n = 10_000usize;
        let noise = 0.05;
        let clean = synth_parity(n, 0.0, 99).unwrap();
        let noisy = synth_parity(n, noise, 99).unwrap();
        assert_eq!(clean.targets, noisy.targets);
        let mut flipped = 0usize;
        for s in 0..n {
            for j in 0..10 {
                if clean.concepts.get(s, j) != noisy.concepts.get(s, j) {
                    flipped += 1;
                }
            }
        }
        let total = (n * 10) as f64;
        let expected = noise * total;
        let sigma = (total * noise * (1.0 - noise)).sqrt();
        let diff = flipped as f64 - expected;
        assert!(
            diff.abs() <= 3.0 * sigma,
            "flipped {flipped} vs expected {expected} (sigma {sigma})"
        );
    }

    #[test]
    fn parity_rejects_bad_params() {
        assert!(synth_parity(5, 0.0, 1).is_err());
        assert!(synth_parity(100, 0.5, 1).is_err());
        assert!(synth_parity(100, -0.1, 1).is_err());
    }

    #[test]
    fn folds_partition_the_dataset() {
        let d = synth_parity(103, 0.0, 3).unwrap();
        let folds = assign_folds(&d, 5, 42, true).unwrap();
        let mut seen = vec![false; d.samples()];
        for fold in &folds {
            for &i in fold {
                assert!(!seen[i], "sample {i} in two folds");
                seen[i] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn stratified_folds_balance_class_counts() {
        let d = synth_parity(100, 0.0, 11).unwrap();
        let folds = assign_folds(&d, 5, 7, true).unwrap();
        for class in 0..2 {
            let total = (0..d.samples()).filter(|&i| d.targets[i][class]).count();
            let ideal = total as f64 / 5.0;
            for fold in &folds {
                let got = fold.iter().filter(|&&i| d.targets[i][class]).count();
                assert!(
                    (got as f64 - ideal).abs() <= 1.0,
                    "class {class}: fold has {got}, ideal {ideal}"
                );
            }
        }
    }

    #[test]
    fn two_folds_on_eight_samples_split_evenly() {
        let d = synth_toy(0);
        let folds = assign_folds(&d, 2, 5, true).unwrap();
        assert_eq!(folds[0].len(), 4);
        assert_eq!(folds[1].len(), 4);
    }

    #[test]
    fn validation_split_respects_strata() {
        let d = synth_parity(200, 0.0, 21).unwrap();
        let all: Vec<usize> = (0..d.samples()).collect();
        let (train, val) = split_validation(&d, &all, 5, 9);
        assert_eq!(train.len() + val.len(), 200);
        // Roughly 20 percent overall.
        assert!((30..=50).contains(&val.len()), "val has {}", val.len());
        // Disjoint.
        for i in &val {
            assert!(!train.contains(i));
        }
    }

    #[test]
    fn validation_split_keeps_tiny_strata_in_train() {
        let d = synth_toy(0);
        let all: Vec<usize> = (0..8).collect();
        let (train, val) = split_validation(&d, &all, 5, 9);
        // Strata have 2-3 samples; 2/5 rounds to 0, 3/5 rounds to 1.
        assert!(val.len() <= 2);
        assert_eq!(train.len() + val.len(), 8);
    }

    #[test]
    fn dataset_validation_errors() {
        let m = Matrix::new(1, 1, vec![0.5]).unwrap();
        // Out-of-range concept.
        let bad = Matrix::new(1, 1, vec![1.2]);
        assert!(bad.is_ok()); // finite, so matrix construction passes...
        let err = ConceptDataset::new(
            bad.unwrap(),
            vec!["a".to_string()],
            vec![vec![true]],
            vec!["c".to_string()],
            String::new(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidDataset(_)));

        // Duplicate concept names.
        let m2 = Matrix::new(1, 2, vec![0.1, 0.2]).unwrap();
        let err = ConceptDataset::new(
            m2,
            vec!["a".to_string(), "a".to_string()],
            vec![vec![true]],
            vec!["c".to_string()],
            String::new(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidDataset(_)));

        // Row with no true targets.
        let err = ConceptDataset::new(
            m,
            vec!["a".to_string()],
            vec![vec![false]],
            vec!["c".to_string()],
            String::new(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidDataset(_)));
    }
}
