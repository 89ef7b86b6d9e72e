//! Cross-validation fold construction: stratified k-fold for corpora
//! with few speakers, grouped leave-speakers-out folds otherwise. Each
//! fold's complement carries a recorded 70/30 train/validation
//! sub-split for early stopping, so the held-out fold is never touched
//! before testing.

use super::EvalError;
use crate::audio::{DatasetManifest, Emotion};
use crate::seeded::{derive_seed, rng_from_seed};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldKind {
    Stratified,
    BySpeaker,
}

/// Train/validation/test index lists of one fold.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldSplit {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldPlan {
    pub kind: FoldKind,
    pub k: usize,
    pub seed: u64,
    /// sample index -> fold id
    pub assignments: Vec<usize>,
    /// per fold: (train indices, val indices) over the complement
    subsplits: Vec<(Vec<usize>, Vec<usize>)>,
}

impl FoldPlan {
    pub fn split(&self, fold: usize) -> FoldSplit {
        assert!(fold < self.k, "fold {fold} out of range");
        let test = self
            .assignments
            .iter()
            .enumerate()
            .filter(|(_, &f)| f == fold)
            .map(|(i, _)| i)
            .collect();
        let (train, val) = &self.subsplits[fold];
        FoldSplit {
            train: train.clone(),
            val: val.clone(),
            test,
        }
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Per-class 70/30 split: at least one sample lands in train, and
/// classes with two or more members keep one in val. `tag` namespaces
/// the per-class shuffle seeds.
pub(crate) fn seventy_thirty(
    by_class: &[Vec<usize>],
    seed: u64,
    tag: &str,
) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut val = Vec::new();
    for (class, members) in by_class.iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let mut order = members.clone();
        let mut rng = rng_from_seed(derive_seed(seed, &format!("{tag}/{class}")));
        order.shuffle(&mut rng);
        let n = order.len();
        let n_train = if n < 2 {
            n
        } else {
            (((0.7 * n as f64) + 0.5).floor() as usize).clamp(1, n - 1)
        };
        train.extend_from_slice(&order[..n_train]);
        val.extend_from_slice(&order[n_train..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

/// Groups sample indices by class index; with `assignments` given,
/// samples of the named fold are left out.
pub(crate) fn group_by_class(
    manifest: &DatasetManifest,
    assignments: Option<(&[usize], usize)>,
) -> Vec<Vec<usize>> {
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); Emotion::ALL.len()];
    for (i, sample) in manifest.samples.iter().enumerate() {
        if let Some((folds, excluded)) = assignments {
            if folds[i] == excluded {
                continue;
            }
        }
        by_class[sample.label.index()].push(i);
    }
    by_class
}

/// Build a deterministic fold plan. Stratified plans spread each class
/// across folds with counts differing by at most one; speaker plans
/// never split a speaker across folds.
pub fn make_folds(
    manifest: &DatasetManifest,
    kind: FoldKind,
    k: usize,
    seed: u64,
) -> Result<FoldPlan, EvalError> {
    assert!(k >= 2, "cross-validation needs at least 2 folds");
    let n = manifest.samples.len();
    let mut assignments = vec![0usize; n];

    match kind {
        FoldKind::Stratified => {
            for emotion in Emotion::ALL {
                let members: Vec<usize> = manifest
                    .samples
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| s.label == emotion)
                    .map(|(i, _)| i)
                    .collect();
                if members.is_empty() {
                    continue;
                }
                if members.len() < 2 {
                    return Err(EvalError::TooFewSamplesPerClass {
                        label: emotion.name().to_string(),
                        count: members.len(),
                    });
                }
                let mut order = members;
                let mut rng = rng_from_seed(derive_seed(
                    seed,
                    &format!("folds/class/{}", emotion.name()),
                ));
                order.shuffle(&mut rng);
                // rotating offset so remainders do not pile onto fold 0
                let offset = emotion.index() % k;
                for (pos, idx) in order.into_iter().enumerate() {
                    assignments[idx] = (offset + pos) % k;
                }
            }
        }
        FoldKind::BySpeaker => {
            let speakers = manifest.speakers();
            if speakers.len() < k {
                return Err(EvalError::TooFewSpeakers {
                    found: speakers.len(),
                    needed: k,
                });
            }
            let mut order = speakers;
            let mut rng = rng_from_seed(derive_seed(seed, "folds/speakers"));
            order.shuffle(&mut rng);
            let fold_of: std::collections::HashMap<&str, usize> = order
                .iter()
                .enumerate()
                .map(|(pos, &s)| (s, pos % k))
                .collect();
            for (i, sample) in manifest.samples.iter().enumerate() {
                assignments[i] = fold_of[sample.speaker_id.as_str()];
            }
        }
    }

    let mut subsplits = Vec::with_capacity(k);
    for fold in 0..k {
        let by_class = group_by_class(manifest, Some((&assignments, fold)));
        subsplits.push(seventy_thirty(
            &by_class,
            seed,
            &format!("folds/subsplit/{fold}"),
        ));
    }

    Ok(FoldPlan {
        kind,
        k,
        seed,
        assignments,
        subsplits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::{LabeledSample, Style};
    use std::collections::HashSet;

    fn manifest(samples: Vec<LabeledSample>) -> DatasetManifest {
        DatasetManifest {
            name: "test".into(),
            root: "/tmp".into(),
            samples,
        }
    }

    fn sample(path: &str, label: Emotion, speaker: &str) -> LabeledSample {
        LabeledSample {
            path: path.into(),
            label,
            speaker_id: speaker.into(),
            style: None,
        }
    }

    fn balanced(classes: usize, per_class: usize, speakers: usize) -> DatasetManifest {
        let mut samples = Vec::new();
        for c in 0..classes {
            for i in 0..per_class {
                samples.push(sample(
                    &format!("c{c}_{i}.wav"),
                    Emotion::ALL[c],
                    &format!("S{:02}", (c * per_class + i) % speakers),
                ));
            }
        }
        manifest(samples)
    }

    #[test]
    fn fifty_speakers_ten_folds_gives_five_each() {
        let mut samples = Vec::new();
        for s in 0..50 {
            for i in 0..3 {
                samples.push(sample(
                    &format!("s{s}_{i}.wav"),
                    Emotion::ALL[i % 7],
                    &format!("S{s:02}"),
                ));
            }
        }
        let m = manifest(samples);
        let plan = make_folds(&m, FoldKind::BySpeaker, 10, 4).unwrap();
        let mut speaker_folds: Vec<HashSet<usize>> = vec![HashSet::new(); 10];
        for (i, s) in m.samples.iter().enumerate() {
            let speaker: usize = s.speaker_id[1..].parse().unwrap();
            speaker_folds[plan.assignments[i]].insert(speaker);
        }
        let mut seen = HashSet::new();
        for fold in &speaker_folds {
            assert_eq!(fold.len(), 5);
            for s in fold {
                assert!(seen.insert(*s), "speaker {s} in two folds");
            }
        }
        assert_eq!(seen.len(), 50);
    }

    #[test]
    fn balanced_seventy_samples_stratify_one_per_class_per_fold() {
        let m = balanced(7, 10, 7);
        let plan = make_folds(&m, FoldKind::Stratified, 10, 9).unwrap();
        for fold in 0..10 {
            let split = plan.split(fold);
            assert_eq!(split.test.len(), 7);
            let mut counts = [0usize; 7];
            for &i in &split.test {
                counts[m.samples[i].label.index()] += 1;
            }
            assert_eq!(counts, [1; 7]);
        }
    }

    #[test]
    fn stratified_counts_differ_by_at_most_one() {
        let m = balanced(4, 13, 5);
        let plan = make_folds(&m, FoldKind::Stratified, 5, 2).unwrap();
        for emotion in Emotion::ALL.iter().take(4) {
            let mut counts = vec![0usize; 5];
            for (i, s) in m.samples.iter().enumerate() {
                if s.label == *emotion {
                    counts[plan.assignments[i]] += 1;
                }
            }
            let min = counts.iter().min().unwrap();
            let max = counts.iter().max().unwrap();
            assert!(max - min <= 1, "{emotion:?}: {counts:?}");
        }
    }

    #[test]
    fn folds_partition_the_sample_set() {
        let m = balanced(3, 8, 4);
        let plan = make_folds(&m, FoldKind::Stratified, 4, 11).unwrap();
        let mut seen = vec![false; m.samples.len()];
        for fold in 0..4 {
            for i in plan.split(fold).test {
                assert!(!seen[i], "sample {i} in two folds");
                seen[i] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn subsplit_is_disjoint_and_covers_the_complement() {
        let m = balanced(3, 10, 5);
        let plan = make_folds(&m, FoldKind::Stratified, 5, 3).unwrap();
        for fold in 0..5 {
            let split = plan.split(fold);
            let test: HashSet<usize> = split.test.iter().copied().collect();
            let train: HashSet<usize> = split.train.iter().copied().collect();
            let val: HashSet<usize> = split.val.iter().copied().collect();
            assert!(train.is_disjoint(&val));
            assert!(train.is_disjoint(&test));
            assert!(val.is_disjoint(&test));
            assert_eq!(train.len() + val.len() + test.len(), m.samples.len());
            assert!(!val.is_empty());
            // 70/30 within each class, rounded
            for emotion in Emotion::ALL.iter().take(3) {
                let in_train = split.train.iter().filter(|&&i| m.samples[i].label == *emotion).count();
                let total = in_train
                    + split.val.iter().filter(|&&i| m.samples[i].label == *emotion).count();
                let expected = ((0.7 * total as f64 + 0.5).floor() as usize).clamp(1, total - 1);
                assert_eq!(in_train, expected);
            }
        }
    }

    #[test]
    fn same_seed_reproduces_the_plan() {
        let m = balanced(5, 9, 6);
        let a = make_folds(&m, FoldKind::Stratified, 3, 21).unwrap();
        let b = make_folds(&m, FoldKind::Stratified, 3, 21).unwrap();
        assert_eq!(a, b);
        let c = make_folds(&m, FoldKind::Stratified, 3, 22).unwrap();
        assert_ne!(a.assignments, c.assignments);
    }

    #[test]
    fn too_few_speakers_is_rejected() {
        let m = balanced(3, 4, 2);
        match make_folds(&m, FoldKind::BySpeaker, 10, 0) {
            Err(EvalError::TooFewSpeakers { found: 2, needed: 10 }) => {}
            other => panic!("expected TooFewSpeakers, got {other:?}"),
        }
    }

    #[test]
    fn singleton_class_is_rejected_for_stratification() {
        let samples = vec![
            sample("a.wav", Emotion::Anger, "S0"),
            sample("b.wav", Emotion::Anger, "S1"),
            sample("c.wav", Emotion::Joy, "S0"),
        ];
        let m = manifest(samples);
        match make_folds(&m, FoldKind::Stratified, 2, 0) {
            Err(EvalError::TooFewSamplesPerClass { label, count: 1 }) => {
                assert_eq!(label, "joy");
            }
            other => panic!("expected TooFewSamplesPerClass, got {other:?}"),
        }
    }

    #[test]
    fn speaker_plan_keeps_styles_and_labels_unconstrained() {
        let mut samples = Vec::new();
        for s in 0..6 {
            for i in 0..2 {
                let mut smp = sample(
                    &format!("x{s}_{i}.wav"),
                    if i == 0 { Emotion::Neutral } else { Emotion::Joy },
                    &format!("S{s}"),
                );
                if i == 0 {
                    smp.style = Some(Style::Fast);
                }
                samples.push(smp);
            }
        }
        let m = manifest(samples);
        let plan = make_folds(&m, FoldKind::BySpeaker, 3, 7).unwrap();
        assert_eq!(plan.fold_sizes().iter().sum::<usize>(), 12);
    }
}
